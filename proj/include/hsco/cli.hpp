#pragma once
// hsco command line: svm, cs1bit, verify, gen, bench.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hsco/dataio.hpp"
#include "hsco/error.hpp"
#include "hsco/json_io.hpp"
#include "hsco/metrics.hpp"
#include "hsco/model.hpp"
#include "hsco/solver.hpp"
#include "hsco/stationarity.hpp"

namespace hsco::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitSolverFailure = 1;
inline constexpr int kExitInputError = 2;

enum class Format { Json, Csv };

struct GeneratorArgs {
  std::optional<Index> n;
  std::optional<Index> m;
  std::optional<Index> k;
  double flip = 0.05;
  std::string cov = "ind";
  std::uint64_t seed = 1;
};

struct CsTrial {
  TrialResult metrics;
  SolveReport report;
};

/// NHST from the CS starting point; metrics use the unit-normalized solution.
inline CsTrial run_cs_trial(const CsInstance& inst, const SolverConfig& config) {
  const ConstraintMatrix a0(inst.A0);
  const Problem p = build_cs_problem(a0, inst.c, 1);
  const Iterate w0 = starting_point(ProblemKind::Cs, a0, inst.c);
  CsTrial t;
  t.report = nhst_solve(p, w0, config);
  const double nrm = t.report.x.norm();
  const Vector x = nrm > 0.0 ? Vector(t.report.x / nrm) : t.report.x;
  const RecoveryMetrics r = recovery_metrics(x, inst.x_true, a0, inst.c_clean, inst.c);
  t.metrics = {r.snr, r.hd, r.he, classification_accuracy(a0, x, inst.c), t.report.wall_time,
               static_cast<double>(t.report.iterations)};
  return t;
}

namespace detail {

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open input file '" + path + "'");
  return in;
}

inline Dataset load_libsvm(const std::string& path) {
  auto in = open_input(path);
  return parse_libsvm(in, path);
}

inline io::Json load_json(const std::string& path) {
  auto in = open_input(path);
  try {
    return io::Json::parse(in);
  } catch (const io::Json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, "'" + path + "' is not valid JSON: " + e.what());
  }
}

/// Small sample matrices are faster dense.
inline ConstraintMatrix prefer_dense(const ConstraintMatrix& a) {
  if (a.is_sparse() && a.rows() * a.cols() <= 4'000'000) return ConstraintMatrix(a.to_dense());
  return a;
}

inline unsigned worker_count(std::size_t jobs) {
  unsigned w = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("HSCO_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) w = static_cast<unsigned>(v);
  }
  return static_cast<unsigned>(std::min<std::size_t>(w, std::max<std::size_t>(jobs, 1)));
}

/// Runs job(i) for i in [0, count) on the workers; results land by index.
template <typename T, typename Job>
std::vector<T> parallel_map(std::size_t count, Job job) {
  std::vector<T> out(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      try {
        out[i] = job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned nw = worker_count(count);
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < nw; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

inline std::string csv_real(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

inline void write_trace(const std::string& path, const SolveReport& r) {
  if (path.empty()) return;
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::Io, "cannot write trace file '" + path + "'");
  io::write_trace_csv(f, r.trace);
}

inline CsInstance generate(const GeneratorArgs& g) {
  require(g.n.has_value(), ErrorCode::InvalidArgument, "--n is required when no --instance is given");
  const Index n = *g.n;
  require(n >= 1, ErrorCode::BadDimensions, "--n must be positive");
  const Index m = g.m.value_or(static_cast<Index>(std::ceil(0.25 * static_cast<double>(n))));
  const Index k = g.k.value_or(static_cast<Index>(std::ceil(0.01 * static_cast<double>(n))));
  return generate_cs_instance(n, m, k, g.flip, parse_covariance(g.cov), g.seed);
}

inline void add_generator_options(CLI::App* app, GeneratorArgs& g) {
  app->add_option("--n", g.n, "signal length");
  app->add_option("--m", g.m, "number of measurements (default ceil(0.25 n))");
  app->add_option("--k", g.k, "sparsity of the true signal (default ceil(0.01 n))");
  app->add_option("--flip", g.flip, "sign flip ratio r")->capture_default_str();
  app->add_option("--cov", g.cov, "covariance: ind or cor")->capture_default_str();
  app->add_option("--seed", g.seed, "generator seed")->capture_default_str();
}

inline void add_solver_options(CLI::App* app, SolverConfig& c) {
  app->add_option("--tau0", c.tau0, "initial tau")->capture_default_str();
  app->add_option("--tau-decay", c.tau_decay, "tau divisor applied every period (1 keeps tau fixed)")
      ->capture_default_str();
  app->add_option("--tau-period", c.tau_decay_period, "iterations between tau updates")->capture_default_str();
  app->add_option("--rho0", c.rho0, "initial budget fraction")->capture_default_str();
  app->add_option("--rho1", c.rho1, "budget shrink factor")->capture_default_str();
  app->add_option("--rho2", c.rho2, "budget fraction of current violations")->capture_default_str();
  app->add_option("--rho3", c.rho3, "final budget fraction of m")->capture_default_str();
  app->add_option("--tol-scale", c.tol_scale, "stop when residual <= tol-scale * sqrt(n)")->capture_default_str();
  app->add_option("--maxit", c.max_iterations, "iteration cap")->capture_default_str();
}

}  // namespace detail

class Runner {
 public:
  Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int run(int argc, const char* const* argv) {
    CLI::App app{"Newton solvers for Heaviside set constrained optimization"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "hsco 0.1.0");

    std::string format = "json";
    auto common = [&](CLI::App* sub) {
      sub->add_option("--format", format, "json or csv (bench defaults to csv)")
          ->check(CLI::IsMember({"json", "csv"}));
      sub->add_option("--out", out_path_, "write the result here instead of stdout");
      sub->add_flag("--no-timing", no_timing_, "leave wall-clock fields out");
    };

    auto* svm = app.add_subcommand("svm", "train a 0/1-loss SVM on libsvm data");
    svm->add_option("--train", train_, "training file (libsvm format)")->required();
    svm->add_option("--test", test_, "test file scaled with the training divisors");
    svm->add_option("--d-last", d_last_, "bias weight in the objective")->capture_default_str();
    svm->add_option("--trace", trace_, "write the iteration trace as CSV");
    common(svm);
    detail::add_solver_options(svm, config_);

    auto* cs = app.add_subcommand("cs1bit", "recover a signal from sign measurements");
    cs->add_option("--instance", instance_, "instance JSON written by gen");
    cs->add_option("--trace", trace_, "write the iteration trace as CSV");
    detail::add_generator_options(cs, gen_);
    common(cs);
    detail::add_solver_options(cs, config_);

    auto* verify = app.add_subcommand("verify", "check stationarity of a candidate point");
    verify->add_option("--problem", problem_, "problem JSON")->required();
    verify->add_option("--point", point_, "point JSON with x, lambda, tau")->required();
    verify->add_option("--tol", verify_tol_, "relative tolerance")->capture_default_str();
    verify->add_option("--out", out_path_, "write the report here instead of stdout");

    auto* gen = app.add_subcommand("gen", "write a generated 1-bit CS instance as JSON");
    detail::add_generator_options(gen, gen_);
    gen->add_option("--out", out_path_, "write the instance here instead of stdout");

    auto* bench = app.add_subcommand("bench", "seeded 1-bit CS sweep with aggregated rows");
    bench->add_option("--grid", grid_, "parameter grid, e.g. n=256,512")->required();
    bench->add_option("--m-ratio", m_ratio_, "m = ceil(m-ratio * n)")->capture_default_str();
    bench->add_option("--k-ratio", k_ratio_, "k = ceil(k-ratio * n)")->capture_default_str();
    bench->add_option("--flip", gen_.flip, "sign flip ratio r")->capture_default_str();
    bench->add_option("--trials", trials_, "trials per grid point")->check(CLI::PositiveNumber)->capture_default_str();
    bench->add_option("--cov", gen_.cov, "covariance: ind or cor")->capture_default_str();
    bench->add_option("--seed", gen_.seed, "seed of trial 0; trial i uses seed + i")->capture_default_str();
    common(bench);
    detail::add_solver_options(bench, config_);

    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out_, err_);
      return code == 0 ? kExitOk : kExitInputError;
    }
    // bench defaults to CSV, the solve commands to JSON, unless --format was given.
    const bool explicit_format = [&] {
      for (auto* s : {svm, cs, bench})
        if (s->parsed() && s->count("--format") > 0) return true;
      return false;
    }();
    if (explicit_format)
      format_ = format == "csv" ? Format::Csv : Format::Json;
    else
      format_ = bench->parsed() ? Format::Csv : Format::Json;

    try {
      if (svm->parsed()) return run_svm();
      if (cs->parsed()) return run_cs();
      if (verify->parsed()) return run_verify();
      if (gen->parsed()) return run_gen();
      if (bench->parsed()) return run_bench();
    } catch (const Error& e) {
      err_ << "error: " << e.what() << '\n';
      return kExitInputError;
    } catch (const std::exception& e) {
      err_ << "error: " << e.what() << '\n';
      return kExitInputError;
    }
    return kExitInputError;
  }

 private:
  void emit(const std::string& text) {
    if (out_path_.empty()) {
      out_ << text;
      return;
    }
    std::ofstream f(out_path_);
    if (!f) throw Error(ErrorCode::Io, "cannot write output file '" + out_path_ + "'");
    f << text;
  }

  void emit_json(const io::Json& j) { emit(j.dump(2) + "\n"); }

  int status(const SolveReport& r) {
    if (r.termination == Termination::DirectionFailure) {
      err_ << "solver failure: " << r.failure_message << '\n';
      return kExitSolverFailure;
    }
    return kExitOk;
  }

  io::Json solve_fields(const SolveReport& r) const {
    io::Json j;
    j["termination"] = std::string(to_string(r.termination));
    j["iterations"] = r.iterations;
    j["final_residual"] = io::real(r.final_residual);
    j["final_s"] = r.final_s;
    if (!no_timing_) j["time"] = r.wall_time;
    return j;
  }

  int run_svm() {
    validate(config_);
    const Dataset raw = detail::load_libsvm(train_);
    const Vector divisors = column_divisors(raw);
    const Dataset train = scale_and_augment(raw, divisors);
    const ConstraintMatrix a0 = detail::prefer_dense(train.samples);
    const Problem p = build_svm_problem(a0, train.labels, 1, d_last_);
    const Iterate w0 = starting_point(ProblemKind::Svm, a0, train.labels);
    const SolveReport r = nhst_solve(p, w0, config_);
    detail::write_trace(trace_, r);

    const double acc = classification_accuracy(a0, r.x, train.labels);
    std::optional<double> tacc;
    if (!test_.empty()) {
      const Dataset test = scale_and_augment(detail::load_libsvm(test_), divisors);
      tacc = classification_accuracy(test.samples, r.x, test.labels);
    }

    if (format_ == Format::Csv) {
      std::string s = "method,m,n,Acc,TAcc,Time,Iter\n";
      s += "NHST," + std::to_string(p.m()) + ',' + std::to_string(p.n()) + ',' + detail::csv_real(acc) + ',' +
           (tacc ? detail::csv_real(*tacc) : "NA") + ',' + (no_timing_ ? "NA" : detail::csv_real(r.wall_time)) +
           ',' + std::to_string(r.iterations) + '\n';
      emit(s);
    } else {
      io::Json j;
      j["method"] = "NHST";
      j["problem"] = "svm";
      j["train"] = train_;
      j["m"] = p.m();
      j["n"] = p.n();
      j["acc"] = acc;
      if (tacc) j["tacc"] = *tacc;
      j.update(solve_fields(r));
      j["x"] = io::vector(r.x);
      emit_json(j);
    }
    return status(r);
  }

  int run_cs() {
    validate(config_);
    const CsInstance inst =
        instance_.empty() ? detail::generate(gen_) : io::read_instance(detail::load_json(instance_));
    const CsTrial t = run_cs_trial(inst, config_);
    detail::write_trace(trace_, t.report);
    if (format_ == Format::Csv) {
      emit(std::string(kCsvHeader) + csv_row(inst.n, inst.m, inst.k_star, inst.flip_ratio, t.metrics));
    } else {
      io::Json j;
      j["method"] = "NHST";
      j["problem"] = "cs1bit";
      j["n"] = inst.n;
      j["m"] = inst.m;
      j["k"] = inst.k_star;
      j["flip"] = inst.flip_ratio;
      j["cov"] = std::string(to_string(inst.covariance));
      j["seed"] = inst.seed;
      j["snr"] = io::real(t.metrics.snr);
      j["hd"] = t.metrics.hd;
      j["he"] = t.metrics.he;
      j.update(solve_fields(t.report));
      emit_json(j);
    }
    return status(t.report);
  }

  int run_verify() {
    const Problem p = io::read_problem(detail::load_json(problem_));
    const Iterate w = io::read_point(detail::load_json(point_));
    require(verify_tol_ > 0.0, ErrorCode::InvalidArgument, "--tol must be positive");
    emit_json(io::report(verify_stationary(p, w, verify_tol_)));
    return kExitOk;
  }

  int run_gen() {
    emit(io::instance(detail::generate(gen_)).dump() + "\n");
    return kExitOk;
  }

  std::vector<Index> grid_sizes() const {
    std::vector<Index> sizes;
    for (const auto& g : grid_) {
      const auto eq = g.find('=');
      if (eq == std::string::npos || g.substr(0, eq) != "n")
        throw Error(ErrorCode::InvalidArgument, "--grid expects n=<list>, got '" + g + "'");
      std::stringstream ss(g.substr(eq + 1));
      std::string item;
      while (std::getline(ss, item, ',')) {
        Index v = 0;
        if (!hsco::detail::parse_number(std::string_view(item), v) || v < 1)
          throw Error(ErrorCode::InvalidArgument, "--grid: bad size '" + item + "'");
        sizes.push_back(v);
      }
    }
    require(!sizes.empty(), ErrorCode::InvalidArgument, "--grid lists no sizes");
    return sizes;
  }

  int run_bench() {
    validate(config_);
    require(m_ratio_ > 0.0 && k_ratio_ > 0.0, ErrorCode::InvalidArgument, "--m-ratio and --k-ratio must be positive");
    const Covariance cov = parse_covariance(gen_.cov);
    std::string csv(kCsvHeader);
    io::Json rows = io::Json::array();
    int code = kExitOk;
    for (Index n : grid_sizes()) {
      const auto m = static_cast<Index>(std::ceil(m_ratio_ * static_cast<double>(n)));
      const auto k = static_cast<Index>(std::ceil(k_ratio_ * static_cast<double>(n)));
      const auto flip = gen_.flip;
      const auto base = gen_.seed;
      const auto trials = detail::parallel_map<CsTrial>(static_cast<std::size_t>(trials_), [&](std::size_t i) {
        return run_cs_trial(generate_cs_instance(n, m, k, flip, cov, base + i), config_);
      });
      std::vector<TrialResult> results;
      Index failures = 0;
      Index unmet = 0;
      for (const auto& t : trials) {
        results.push_back(t.metrics);
        if (t.report.termination == Termination::DirectionFailure) ++failures;
        if (t.report.termination != Termination::ResidualMet) ++unmet;
      }
      if (failures > 0) {
        err_ << "n=" << n << ": " << failures << " of " << trials_ << " trials stopped on a direction failure\n";
        code = kExitSolverFailure;
      }
      const Aggregate a = aggregate(results);
      csv += csv_row(n, m, k, flip, a.mean);
      io::Json r;
      r["method"] = "NHST";
      r["n"] = n;
      r["m"] = m;
      r["k"] = k;
      r["flip"] = flip;
      r["cov"] = std::string(to_string(cov));
      r["trials"] = a.count;
      r["snr_excluded"] = a.snr_excluded;
      r["not_converged"] = unmet;
      r["mean"] = trial_json(a.mean);
      r["stddev"] = trial_json(a.stddev);
      rows.push_back(r);
    }
    if (format_ == Format::Csv)
      emit(csv);
    else
      emit_json(rows);
    return code;
  }

  static constexpr const char* kCsvHeader = "method,n,m,k,flip,SNR,HD,HE,Time,Iter\n";

  std::string csv_row(Index n, Index m, Index k, double flip, const TrialResult& t) const {
    return "NHST," + std::to_string(n) + ',' + std::to_string(m) + ',' + std::to_string(k) + ',' +
           detail::csv_real(flip) + ',' + detail::csv_real(t.snr) + ',' + detail::csv_real(t.hd) + ',' +
           detail::csv_real(t.he) + ',' + (no_timing_ ? "NA" : detail::csv_real(t.time)) + ',' +
           detail::csv_real(t.iterations) + '\n';
  }

  io::Json trial_json(const TrialResult& t) const {
    io::Json j;
    j["snr"] = io::real(t.snr);
    j["hd"] = t.hd;
    j["he"] = t.he;
    j["acc"] = t.acc;
    if (!no_timing_) j["time"] = t.time;
    j["iterations"] = t.iterations;
    return j;
  }

  std::ostream& out_;
  std::ostream& err_;
  Format format_ = Format::Json;
  std::string out_path_;
  bool no_timing_ = false;
  SolverConfig config_;
  GeneratorArgs gen_;
  std::string train_, test_, trace_, instance_, problem_, point_;
  double d_last_ = kDefaultDLast;
  double verify_tol_ = kRelativeZeroTol;
  std::vector<std::string> grid_;
  double m_ratio_ = 0.25;
  double k_ratio_ = 0.01;
  Index trials_ = 1;
};

/// Exit codes: 0 success, 1 solver failure, 2 input error.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return Runner(out, err).run(argc, argv);
}

}  // namespace hsco::cli
