// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hsco/cli.hpp"
#include "support/oracles.hpp"

using namespace hsco;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// Benchmark runs kept for the termination check.
std::vector<std::pair<std::string, SolveReport>> g_runs;

Outcome projection_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1001);
  std::normal_distribution<double> nd;
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    Vector z(6);
    for (Index i = 0; i < 6; ++i) z(i) = nd(rng);
    for (Index s = 1; s <= 5; ++s) {
      const double lib = (project(z, HeavisideBudget(6, s)) - z).norm();
      worst = std::max(worst, std::abs(lib - oracle::brute_projection(z, s).distance));
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-12 && secs < 5.0, fmt("max distance gap %.2e", worst) + fmt(", %.2f s", secs)};
}

Outcome worked_example() {
  const Vector z = vec({3, 2, 2, 0, -2});
  bool ok = partition(z, HeavisideBudget(5, 3)).working_set == IndexSet{3};
  ok = ok && project(z, HeavisideBudget(5, 3)) == z;
  const auto all = project_all(z, HeavisideBudget(5, 2));
  const Vector a = vec({3, 0, 2, 0, -2}), b = vec({3, 2, 0, 0, -2});
  ok = ok && all.size() == 2 && ((all[0] == a && all[1] == b) || (all[0] == b && all[1] == a));
  ok = ok && project(z, HeavisideBudget(5, 2)) == b;
  return {ok, "z = (3,2,2,0,-2), s = 3 and s = 2"};
}

Outcome cone_example() {
  const HeavisideBudget budget(2, 1);
  const Vector z1 = vec({0, 1}), z2 = vec({-1, 0}), z3 = vec({0, 0});
  const double grid[] = {-2, -1, -0.5, -0.1, 0, 0.1, 0.5, 1, 2, 3};
  int disagreements = 0, checked = 0;
  for (double d1 : grid) {
    for (double d2 : grid) {
      const Vector d = vec({d1, d2});
      const bool t1 = d1 <= 0, n1 = d1 >= 0 && d2 == 0;
      const bool t2 = true, n2 = d1 == 0 && d2 == 0;
      const bool t3 = d1 <= 0 || d2 <= 0, n3 = n2;
      disagreements += tangent_cone_contains(z1, d, budget) != t1;
      disagreements += normal_cone_contains(z1, d, budget) != n1;
      disagreements += tangent_cone_contains(z2, d, budget) != t2;
      disagreements += normal_cone_contains(z2, d, budget) != n2;
      disagreements += tangent_cone_contains(z3, d, budget) != t3;
      disagreements += normal_cone_contains(z3, d, budget) != n3;
      checked += 6;
    }
  }
  return {disagreements == 0, std::to_string(disagreements) + " disagreements in " + std::to_string(checked)};
}

Outcome fixed_points() {
  std::mt19937_64 rng(2002);
  const double taus[] = {0.25, 0.5, 1.0, 2.0};
  int disagreements = 0, members = 0;
  for (int t = 0; t < 500; ++t) {
    const Index m = 1 + static_cast<Index>(rng() % 6);
    const Index s = 1 + static_cast<Index>(rng() % m);
    const double tau = taus[rng() % 4];
    Vector y, lambda;
    if (rng() % 2 == 0) {
      const Vector z = oracle::grid_vector(rng, m);
      const auto mins = oracle::brute_projection(z, s).minimizers;
      y = mins[rng() % mins.size()];
      lambda = (z - y) / tau;
    } else {
      y = oracle::grid_vector(rng, m);
      lambda = oracle::grid_vector(rng, m);
    }
    const bool ref = oracle::fixed_point_by_projection(y, lambda, tau, s);
    disagreements += fixed_point_check(y, lambda, tau, HeavisideBudget(m, s)) != ref;
    members += ref;
  }
  return {disagreements == 0,
          std::to_string(disagreements) + " disagreements, " + std::to_string(members) + " fixed points"};
}

Outcome jacobian_fd() {
  std::mt19937_64 rng(3003);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const Index n = 2 + static_cast<Index>(rng() % 9);
    const Index m = 1 + static_cast<Index>(rng() % 8);
    std::shared_ptr<Objective> f;
    if (t % 2 == 0)
      f = std::make_shared<SmoothedLqObjective>(n, 0.9, 0.5, 0.07);
    else
      f = std::make_shared<oracle::QuarticObjective>(oracle::random_spd(rng, n), oracle::random_vector(rng, n), 0.3);
    const Problem p(f, ConstraintMatrix(oracle::random_matrix(rng, m, n)), oracle::random_vector(rng, m),
                    HeavisideBudget(m, 1));
    const Iterate w{oracle::random_vector(rng, n), oracle::random_vector(rng, m), 0.5};
    IndexSet tset;
    for (Index i = 0; i < m; ++i)
      if (rng() % 2) tset.push_back(i);
    Vector w0(n + m);
    w0 << w.x, w.lambda;
    const DenseMatrix natural = oracle::fd_jacobian(
        [&](const Vector& v) { return residual(p, Iterate{v.head(n), v.tail(m), w.tau}, tset); }, w0, 1e-6);
    std::vector<Index> order;
    for (Index i = 0; i < n; ++i) order.push_back(i);
    for (Index i : tset) order.push_back(n + i);
    for (Index i : detail::complement_of(tset, m)) order.push_back(n + i);
    DenseMatrix fd(natural.rows(), natural.cols());
    for (Index k = 0; k < n + m; ++k) fd.col(k) = natural.col(order[static_cast<std::size_t>(k)]);
    const DenseMatrix j = jacobian(p, w, tset);
    worst = std::max(worst, (j - fd).norm() / std::max(1.0, j.norm()));
  }
  return {worst <= 1e-6, fmt("max relative error %.2e", worst)};
}

Outcome hand_instance() {
  auto f = std::make_shared<QuadraticObjective>(DenseMatrix::Identity(2, 2), vec({-1, -1}));
  const Problem p(f, ConstraintMatrix(DenseMatrix::Identity(2, 2)), Vector::Zero(2), HeavisideBudget(2, 1));
  SolverConfig c;
  c.fixed_s = 1;
  const SolveReport r = nhs_solve(p, Iterate{Vector::Zero(2), Vector::Zero(2), 0.5}, c);
  const bool ok = r.termination == Termination::ResidualMet && r.iterations <= 2 && r.final_residual <= 1e-10;
  return {ok, std::to_string(r.iterations) + " iterations, residual " + fmt("%.1e", r.final_residual)};
}

Outcome quadratic_rate() {
  std::mt19937_64 rng(4004);
  double worst_final = 0.0, worst_ratio = 0.0;
  bool ok = true;
  for (int t = 0; t < 20; ++t) {
    const auto inst = oracle::make_stationary_instance(rng, 8, 7, 2, 3, 0.5);
    const Problem& p = *inst.problem;
    ok = ok && verify_stationary(p, Iterate{inst.x, inst.lambda, inst.tau}).is_tau_stationary;
    Vector dir(15);
    dir << oracle::random_vector(rng, 8), oracle::random_vector(rng, 7);
    dir *= 0.9e-2 / dir.norm();
    SolverConfig c;
    c.fixed_s = 2;
    c.tau0 = inst.tau;
    c.tau_decay = 1.0;
    c.tol_scale = 1e-300;
    c.max_iterations = 6;
    c.record_iterates = true;
    const SolveReport r = nhs_solve(p, Iterate{inst.x + dir.head(8), inst.lambda + dir.tail(7), inst.tau}, c);
    std::vector<double> e;
    for (const auto& w : r.iterates) {
      Vector diff(15);
      diff << w.x - inst.x, w.lambda - inst.lambda;
      e.push_back(diff.norm());
    }
    worst_final = std::max(worst_final, e.back());
    for (std::size_t k = 0; k + 1 < e.size(); ++k)
      if (e[k] > 1e-9) worst_ratio = std::max(worst_ratio, e[k + 1] / (e[k] * e[k]));
  }
  ok = ok && worst_final < 1e-12 && worst_ratio <= 1e3;
  return {ok, fmt("max final error %.1e", worst_final) + fmt(", max e_{k+1}/e_k^2 %.2f", worst_ratio)};
}

struct BenchSummary {
  Aggregate agg;
  double max_trial_time = 0.0;
  double total_time = 0.0;
};

BenchSummary bench(Index n, Index m, Index k, Covariance cov, int trials, std::uint64_t seed0, const std::string& tag) {
  BenchSummary s;
  std::vector<TrialResult> results;
  const auto t0 = Clock::now();
  for (int i = 0; i < trials; ++i) {
    const CsInstance inst = generate_cs_instance(n, m, k, 0.05, cov, seed0 + static_cast<std::uint64_t>(i));
    const cli::CsTrial t = cli::run_cs_trial(inst, SolverConfig{});
    results.push_back(t.metrics);
    s.max_trial_time = std::max(s.max_trial_time, t.report.wall_time);
    g_runs.emplace_back(tag, t.report);
  }
  s.total_time = seconds_since(t0);
  s.agg = aggregate(results);
  return s;
}

Outcome large_scale() {
  const BenchSummary ind = bench(5000, 1250, 50, Covariance::Independent, 20, 1, "n=5000 ind");
  const BenchSummary cor = bench(5000, 1250, 50, Covariance::Correlated, 20, 1, "n=5000 cor");
  auto bands = [](const BenchSummary& b, double snr_min) {
    return b.agg.mean.snr >= snr_min && b.agg.mean.hd <= 0.06 && b.agg.mean.he <= 0.07 && b.max_trial_time <= 5.0;
  };
  const bool ok = bands(ind, 4.5) && bands(cor, 4.2);
  auto line = [](const char* name, const BenchSummary& b) {
    return std::string(name) + fmt(" SNR %.3f", b.agg.mean.snr) + fmt(" HD %.4f", b.agg.mean.hd) +
           fmt(" HE %.4f", b.agg.mean.he) + fmt(" max %.2f s", b.max_trial_time);
  };
  return {ok, line("ind", ind) + "; " + line("cor", cor)};
}

Outcome small_scale() {
  const BenchSummary b = bench(256, 64, 3, Covariance::Independent, 100, 1, "n=256 ind");
  const bool ok = b.agg.mean.hd <= 0.10 && b.agg.mean.he <= 0.12 && b.total_time < 60.0;
  return {ok, fmt("HD %.4f", b.agg.mean.hd) + fmt(" HE %.4f", b.agg.mean.he) + fmt(", %.2f s", b.total_time)};
}

Outcome separable_svm() {
  const auto t0 = Clock::now();
  std::ifstream in(std::string(HSCO_TEST_DATA) + "/separable.libsvm");
  if (!in) return {false, "separable.libsvm not found"};
  const Dataset train = scale_and_augment(parse_libsvm(in, "separable.libsvm"));
  const ConstraintMatrix a0 = cli::detail::prefer_dense(train.samples);
  const Problem p = build_svm_problem(a0, train.labels, 1);
  const SolveReport r = nhst_solve(p, starting_point(ProblemKind::Svm, a0, train.labels), SolverConfig{});
  const double acc = classification_accuracy(a0, r.x, train.labels);
  const double secs = seconds_since(t0);
  g_runs.emplace_back("svm separable", r);
  return {acc == 1.0 && secs < 1.0, fmt("Acc %.4f", acc) + fmt(", %.3f s", secs)};
}

Outcome termination_contract() {
  int violations = 0;
  for (const auto& [tag, r] : g_runs) {
    const auto m = static_cast<double>(r.lambda.size());
    const auto cap = static_cast<Index>(std::ceil(0.001 * m));
    if (!(r.final_s <= cap || r.termination == Termination::MaxIterations)) ++violations;
  }
  return {violations == 0 && !g_runs.empty(),
          std::to_string(violations) + " violations in " + std::to_string(g_runs.size()) + " runs"};
}

Outcome feasibility() {
  std::mt19937_64 rng(5005);
  int disagreements = 0, checks = 0;
  for (int t = 0; t < 100; ++t) {
    const Index m = 2 + static_cast<Index>(rng() % 7);
    const Index n = 1 + static_cast<Index>(rng() % 9);
    const Index r = static_cast<Index>(rng() % (std::min(m, n) + 1));
    const DenseMatrix a = oracle::matrix_with_rank(rng, m, n, r);
    for (Index s = 1; s <= m; ++s) {
      disagreements += feasibility_rank_check(a, s) != (r >= m - s);
      ++checks;
    }
  }
  return {disagreements == 0, std::to_string(disagreements) + " disagreements in " + std::to_string(checks)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"projection matches brute force", projection_oracle},
      {"worked projection example", worked_example},
      {"cone membership in R^2", cone_example},
      {"fixed-point characterization", fixed_points},
      {"Jacobian against finite differences", jacobian_fd},
      {"hand quadratic in two iterations", hand_instance},
      {"local quadratic rate", quadratic_rate},
      {"1-bit CS at n = 5000", large_scale},
      {"1-bit CS at n = 256", small_scale},
      {"separable SVM accuracy", separable_svm},
      {"NHST termination contract", termination_contract},
      {"feasibility rank test", feasibility},
  };
  int failed = 0;
  int id = 0;
  for (const auto& [name, run] : criteria) {
    ++id;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("[%s] %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
