#include "hsco/cli.hpp"

int main(int argc, char** argv) { return hsco::cli::run_cli(argc, argv); }
