#pragma once
// Newton steps on the stationary equations, NHS (fixed s) and NHST (shrinking s).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hsco/error.hpp"
#include "hsco/heaviside.hpp"
#include "hsco/linalg.hpp"
#include "hsco/model.hpp"
#include "hsco/stationarity.hpp"

namespace hsco {

struct SolverConfig {
  Index max_iterations = 1000;
  double tol_scale = 1e-6;  // stop at tol_scale * sqrt(n)
  double tau0 = 0.5;
  double tau_decay = 1.1;  // 1 keeps tau fixed
  Index tau_decay_period = 10;
  double rho0 = 0.5;
  double rho1 = 0.5;
  double rho2 = 0.5;
  double rho3 = 0.001;
  double damping0 = 1e-8;
  std::optional<Index> fixed_s;  // NHS when set
  bool record_iterates = false;
};

inline void validate(const SolverConfig& c) {
  auto unit = [](double r) { return r > 0.0 && r < 1.0; };
  require(c.max_iterations >= 0, ErrorCode::InvalidArgument, "config: max_iterations must be non-negative");
  require(c.tol_scale > 0.0, ErrorCode::InvalidArgument, "config: tol_scale must be positive");
  require(c.tau0 > 0.0, ErrorCode::NonPositiveTau, "config: tau0 must be positive");
  require(c.tau_decay >= 1.0, ErrorCode::InvalidArgument, "config: tau_decay must be >= 1");
  require(c.tau_decay_period >= 1, ErrorCode::InvalidArgument, "config: tau_decay_period must be positive");
  require(unit(c.rho0) && unit(c.rho1) && unit(c.rho2) && unit(c.rho3), ErrorCode::InvalidArgument,
          "config: rho0..rho3 must lie in (0,1)");
  require(c.damping0 > 0.0, ErrorCode::InvalidArgument, "config: damping0 must be positive");
}

enum class Termination { ResidualMet, MaxIterations, DirectionFailure };

constexpr std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::ResidualMet: return "ResidualMet";
    case Termination::MaxIterations: return "MaxIterations";
    case Termination::DirectionFailure: return "DirectionFailure";
  }
  return "Unknown";
}

struct TraceEntry {
  Index iter = 0;
  double residual = 0.0;
  Index s = 0;
  double tau = 0.0;
  Index working_set_size = 0;
  Index positives = 0;  // |Gamma_+| of z^k
  Index zeros = 0;      // |Gamma_0| of z^k
};

struct SolveReport {
  Vector x;
  Vector lambda;
  double tau = 0.0;
  Index iterations = 0;
  double final_residual = 0.0;
  Index final_s = 0;
  Termination termination = Termination::MaxIterations;
  std::string failure_message;
  std::vector<TraceEntry> trace;
  std::vector<Iterate> iterates;  // only with record_iterates
  double wall_time = 0.0;         // seconds
};

struct Direction {
  Vector u;  // length n
  Vector v;  // length m
  double damping = 0.0;  // 0 when the undamped solve succeeded
  bool modified_hessian = false;  // curvature majorant stood in for a non-PD diagonal
};

inline constexpr int kMaxDampingRetries = 6;
inline constexpr double kDiagonalFloor = 1e-12;
/// Below this fraction of the majorant a positive entry still gives wild steps.
inline constexpr double kMajorantRatio = 0.1;

namespace detail {

/// Schur complement solve for a positive diagonal Hessian.
inline Direction schur_direction(const Problem& p, const IndexSet& t, const Vector& theta, const Vector& g,
                                 const Vector& r2, double damping) {
  const Vector theta_inv = (theta.array() + damping).inverse().matrix();
  const auto nt = static_cast<Index>(t.size());
  Direction d;
  d.v = Vector::Zero(p.m());
  if (nt == 0) {
    d.u = -theta_inv.cwiseProduct(g);
    return d;
  }
  DenseMatrix schur = p.A.weighted_gram(t, theta_inv);
  if (damping > 0.0) schur.diagonal().array() += damping;
  const Vector rhs = r2 - p.A.rows_times(t, theta_inv.cwiseProduct(g));
  const Vector vt = linalg::solve_spd(schur, rhs);
  d.u = -theta_inv.cwiseProduct(g + p.A.rows_transpose_times(t, vt));
  for (Index k = 0; k < nt; ++k) d.v(t[static_cast<std::size_t>(k)]) = vt(k);
  return d;
}

inline Direction kkt_direction(const Problem& p, const IndexSet& t, DenseMatrix h, const Vector& g, const Vector& r2,
                               double damping) {
  const auto nt = static_cast<Index>(t.size());
  if (nt > p.n() && damping == 0.0) throw Error(ErrorCode::SingularKKT, "more working rows than variables");
  if (damping > 0.0) h.diagonal().array() += damping;
  const DenseMatrix at = p.A.rows_dense(t);
  Direction d;
  d.v = Vector::Zero(p.m());
  if (nt > p.n()) {
    // Regularized system is quasi-definite; eliminate the multiplier block.
    DenseMatrix m = h + at.transpose() * at / damping;
    const Vector rhs = -g - at.transpose() * r2 / damping;
    Eigen::PartialPivLU<DenseMatrix> lu(m);
    d.u = lu.solve(rhs);
    const Vector vt = (at * d.u + r2) / damping;
    if (!d.u.allFinite() || !vt.allFinite()) throw Error(ErrorCode::SingularKKT, "regularized solve failed");
    for (Index k = 0; k < nt; ++k) d.v(t[static_cast<std::size_t>(k)]) = vt(k);
    return d;
  }
  auto [u, vt] = linalg::solve_kkt(h, at, -g, -r2, damping);
  d.u = std::move(u);
  for (Index k = 0; k < nt; ++k) d.v(t[static_cast<std::size_t>(k)]) = vt(k);
  return d;
}

}  // namespace detail

/// Solves J(w; T) d = -F(w; T). damping is the first regularization tried
/// after an undamped failure; each further retry multiplies it by 10.
/// Throws DirectionFailure once all retries fail.
///
/// A diagonal Hessian with an entry below the floor, or below kMajorantRatio
/// times the majorant, is replaced by the objective's curvature majorant when
/// it has one; otherwise the step goes through the saddle-point LU.
inline Direction newton_direction(const Problem& p, const Iterate& w, const IndexSet& t, double damping) {
  check_iterate(p, w);
  detail::check_working_set(t, p.m());
  require(damping > 0.0, ErrorCode::InvalidArgument, "newton_direction: damping must be positive");

  const Objective& f = *p.objective;
  const Vector lt = detail::gather(w.lambda, t);
  const Vector g = f.gradient(w.x) + p.A.rows_transpose_times(t, lt);
  const Vector r2 = p.A.rows_times(t, w.x) - detail::gather(p.b, t);

  bool use_schur = false;
  bool modified = false;
  Vector theta;
  DenseMatrix h;
  if (f.hessian_is_diagonal()) {
    theta = f.hessian_diagonal(w.x);
    double floor = kDiagonalFloor * std::max(1.0, theta.cwiseAbs().maxCoeff());
    if (f.has_curvature_majorant()) {
      const Vector major = f.curvature_majorant(w.x);
      if (theta.minCoeff() < floor || (theta.array() < kMajorantRatio * major.array()).any()) {
        theta = major;
        modified = true;
        floor = kDiagonalFloor * std::max(1.0, theta.cwiseAbs().maxCoeff());
      }
    }
    use_schur = theta.minCoeff() >= floor;
    if (!use_schur) h = theta.asDiagonal();
  } else {
    h = f.hessian(w.x);
  }

  std::string last_error;
  for (int attempt = 0; attempt <= kMaxDampingRetries; ++attempt) {
    const double delta = attempt == 0 ? 0.0 : damping * std::pow(10.0, attempt - 1);
    try {
      Direction d = use_schur ? detail::schur_direction(p, t, theta, g, r2, delta)
                              : detail::kkt_direction(p, t, h, g, r2, delta);
      if (!d.u.allFinite() || !d.v.allFinite()) throw Error(ErrorCode::Singular, "non-finite direction");
      // Multipliers off the working set are driven straight to zero.
      const auto tc = detail::complement_of(t, p.m());
      for (Index i : tc) d.v(i) = -w.lambda(i);
      d.damping = delta;
      d.modified_hessian = modified;
      return d;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Singular && e.code() != ErrorCode::SingularKKT) throw;
      last_error = e.what();
    }
  }
  throw Error(ErrorCode::DirectionFailure, "newton_direction: damping retries exhausted (" + last_error + ")");
}

namespace detail {

inline Index ceil_index(double v) { return static_cast<Index>(std::ceil(v)); }

inline Index clamp_budget(Index s, Index m) { return std::clamp<Index>(s, 1, std::max<Index>(1, m - 1)); }

/// s_{k+1} = max(1, min(ceil(rho1 s_k), ceil(rho2 |Gamma_+|))).
inline Index next_budget(Index s, Index positives, const SolverConfig& c) {
  return std::max<Index>(1, std::min(ceil_index(c.rho1 * static_cast<double>(s)),
                                     ceil_index(c.rho2 * static_cast<double>(positives))));
}

inline double tau_at(const SolverConfig& c, Index k) {
  return c.tau0 / std::pow(c.tau_decay, static_cast<double>(k / c.tau_decay_period));
}

inline SolveReport run_newton(const Problem& p, const Iterate& w0, const SolverConfig& c) {
  validate(c);
  check_iterate(p, w0);
  const auto start = std::chrono::steady_clock::now();
  const Index m = p.m();
  const double tol = c.tol_scale * std::sqrt(static_cast<double>(p.n()));
  const bool tuning = !c.fixed_s.has_value();
  const Index s_target = ceil_index(c.rho3 * static_cast<double>(m));

  Iterate w{w0.x, w0.lambda, c.tau0};
  Index s = 0;
  if (tuning) {
    const Vector z0 = shifted(p, w);
    s = clamp_budget(ceil_index(c.rho0 * static_cast<double>(count_positive(z0, default_zero_tol(z0)))), m);
  } else {
    s = *c.fixed_s;
    require(s >= 1 && s < std::max<Index>(m, 2), ErrorCode::InvalidArgument, "nhs: fixed_s must satisfy 1 <= s < m");
  }

  SolveReport r;
  Index k = 0;
  for (;; ++k) {
    w.tau = tau_at(c, k);
    const HeavisideBudget budget(m, std::min(s, m));
    const Vector z = shifted(p, w);
    const IndexPartition part = partition(z, budget);
    const double res = residual(p, w, part.working_set).norm();

    r.trace.push_back({k, res, s, w.tau, static_cast<Index>(part.working_set.size()),
                       static_cast<Index>(part.gamma_plus.size()), static_cast<Index>(part.gamma_zero.size())});
    if (c.record_iterates) r.iterates.push_back(w);
    r.final_residual = res;
    r.final_s = s;

    if (res <= tol && (!tuning || s <= s_target)) {
      r.termination = Termination::ResidualMet;
      break;
    }
    if (k >= c.max_iterations) {
      r.termination = Termination::MaxIterations;
      break;
    }

    Direction d;
    try {
      d = newton_direction(p, w, part.working_set, c.damping0);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DirectionFailure) throw;
      r.termination = Termination::DirectionFailure;
      r.failure_message = e.what();
      break;
    }
    w.x += d.u;
    w.lambda += d.v;

    if (tuning) s = next_budget(s, static_cast<Index>(part.gamma_plus.size()), c);
  }

  r.x = std::move(w.x);
  r.lambda = std::move(w.lambda);
  r.tau = w.tau;
  r.iterations = k;
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace detail

/// Newton method at a fixed budget (config.fixed_s must be set). Tau follows
/// the config schedule starting from tau0; w0.tau is not used.
inline SolveReport nhs_solve(const Problem& p, const Iterate& w0, const SolverConfig& c) {
  require(c.fixed_s.has_value(), ErrorCode::InvalidArgument, "nhs_solve: config.fixed_s must be set");
  return detail::run_newton(p, w0, c);
}

/// Newton method with the budget shrunk each iteration from
/// s0 = ceil(rho0 |Gamma_+(z0)|). A set fixed_s is ignored.
inline SolveReport nhst_solve(const Problem& p, const Iterate& w0, SolverConfig c) {
  c.fixed_s.reset();
  return detail::run_newton(p, w0, c);
}

}  // namespace hsco
