#pragma once
// Stationary equations F(w; T), their Jacobian, and the point verifiers.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "hsco/error.hpp"
#include "hsco/heaviside.hpp"
#include "hsco/linalg.hpp"
#include "hsco/model.hpp"

namespace hsco {

/// Primal-dual pair w = (x; lambda) with its shift parameter tau.
struct Iterate {
  Vector x;
  Vector lambda;
  double tau = 0.5;
};

inline void check_iterate(const Problem& p, const Iterate& w) {
  require(w.x.size() == p.n(), ErrorCode::DimensionMismatch, "iterate: x has wrong length");
  require(w.lambda.size() == p.m(), ErrorCode::DimensionMismatch, "iterate: lambda has wrong length");
  require(w.x.allFinite() && w.lambda.allFinite(), ErrorCode::InvalidArgument, "iterate: non-finite entries");
}

/// Ax - b
inline Vector constraint_value(const Problem& p, const Vector& x) { return p.A.times(x) - p.b; }

/// z = Ax - b + tau lambda
inline Vector shifted(const Problem& p, const Iterate& w) {
  require(w.tau > 0.0, ErrorCode::NonPositiveTau, "shifted: tau must be positive");
  return constraint_value(p, w.x) + w.tau * w.lambda;
}

namespace detail {

inline void check_working_set(const IndexSet& t, Index m) {
  for (std::size_t k = 0; k < t.size(); ++k) {
    require(t[k] >= 0 && t[k] < m, ErrorCode::DimensionMismatch, "working set index out of range");
    require(k == 0 || t[k] > t[k - 1], ErrorCode::InvalidArgument, "working set must be sorted and unique");
  }
}

inline IndexSet complement_of(const IndexSet& t, Index m) {
  IndexSet out;
  out.reserve(static_cast<std::size_t>(m) - t.size());
  std::size_t k = 0;
  for (Index i = 0; i < m; ++i) {
    if (k < t.size() && t[k] == i)
      ++k;
    else
      out.push_back(i);
  }
  return out;
}

inline Vector gather(const Vector& v, const IndexSet& idx) {
  Vector out(static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out(static_cast<Index>(k)) = v(idx[k]);
  return out;
}

}  // namespace detail

/// F(w; T) = [grad f + A_T^T lambda_T ; A_T x - b_T ; lambda_Tbar], length n + m.
inline Vector residual(const Problem& p, const Iterate& w, const IndexSet& t) {
  check_iterate(p, w);
  detail::check_working_set(t, p.m());
  const Index n = p.n();
  const auto tc = detail::complement_of(t, p.m());
  const auto nt = static_cast<Index>(t.size());

  Vector f(n + p.m());
  f.head(n) = p.objective->gradient(w.x) + p.A.rows_transpose_times(t, detail::gather(w.lambda, t));
  f.segment(n, nt) = p.A.rows_times(t, w.x) - detail::gather(p.b, t);
  f.tail(p.m() - nt) = detail::gather(w.lambda, tc);
  return f;
}

/// Jacobian of F in the variable order (x; lambda_T; lambda_Tbar).
inline DenseMatrix jacobian(const Problem& p, const Iterate& w, const IndexSet& t) {
  check_iterate(p, w);
  detail::check_working_set(t, p.m());
  const Index n = p.n();
  const Index m = p.m();
  const auto nt = static_cast<Index>(t.size());
  DenseMatrix j = DenseMatrix::Zero(n + m, n + m);
  j.topLeftCorner(n, n) = p.objective->hessian(w.x);
  if (nt > 0) {
    const DenseMatrix at = p.A.rows_dense(t);
    j.block(0, n, n, nt) = at.transpose();
    j.block(n, 0, nt, n) = at;
  }
  j.bottomRightCorner(m - nt, m - nt).setIdentity();
  return j;
}

struct StationarityReport {
  double residual_norm = 0.0;  // ||F(w; T)|| at the canonical T of z
  double gradient_norm = 0.0;  // ||grad f + A^T lambda||
  bool is_tau_stationary = false;
  bool is_kkt = false;
  bool feasible = false;
  IndexSet active_set;
  IndexSet working_set;
  double y_zero_tol = 0.0;  // tolerance on Ax - b
  double z_zero_tol = 0.0;  // tolerance on Ax - b + tau lambda

  // Diagnostics; unset when A_J is rank deficient.
  bool diagnostics_available = false;
  std::string diagnostics_note;
  double tau_star = std::numeric_limits<double>::infinity();
  double tau_star_pi = std::numeric_limits<double>::infinity();
  double sigma_min_HJ = 0.0;
  std::optional<double> c_star;  // min over subsets of J, only for |J| <= 12
  double C_star = 0.0;
};

struct Diagnostics {
  IndexSet active_set;
  double tau_star = std::numeric_limits<double>::infinity();
  double tau_star_pi = std::numeric_limits<double>::infinity();
  double sigma_min_HJ = 0.0;
  std::optional<double> c_star;
  double C_star = 0.0;
};

inline constexpr Index kMaxExhaustiveActiveSet = 12;

/// Active set J = { i : |(Ax - b)_i| <= zero_tol } (absolute tolerance).
inline IndexSet active_set(const Vector& y, double zero_tol) {
  IndexSet j;
  for (Index i = 0; i < y.size(); ++i)
    if (std::abs(y(i)) <= zero_tol) j.push_back(i);
  return j;
}

namespace detail {

inline DenseMatrix saddle_matrix(const DenseMatrix& h, const DenseMatrix& aj) { return linalg::assemble_saddle(h, aj); }

inline double sigma_min(const DenseMatrix& m) {
  const Vector sv = linalg::singular_values(m);
  return sv.size() == 0 ? 0.0 : sv.minCoeff();
}

}  // namespace detail

/// tau_* by the multiplier formula and by the projected-gradient formula,
/// plus sigma_min(H(J)) and the constants built from it. rel_tol scales the
/// active-set tolerance as rel_tol (1 + ||Ax - b||_inf).
inline Diagnostics diagnostics(const Problem& p, const Iterate& w, double rel_tol = kRelativeZeroTol) {
  check_iterate(p, w);
  const Vector y = constraint_value(p, w.x);
  Diagnostics d;
  d.active_set = active_set(y, default_zero_tol(y, rel_tol));
  const auto& j = d.active_set;

  const DenseMatrix h = p.objective->hessian(w.x);
  const DenseMatrix aj = p.A.rows_dense(j);
  if (!j.empty() && linalg::row_rank(aj) < static_cast<Index>(j.size()))
    throw Error(ErrorCode::RankDeficientActiveSet, "diagnostics: A_J is not full row rank");

  const double ys = sth_largest_positive(y, p.s());
  const double lmax = w.lambda.size() == 0 ? 0.0 : w.lambda.maxCoeff();
  if (!w.lambda.isZero(0.0) && lmax > 0.0) d.tau_star = ys / lmax;

  if (!j.empty()) {
    const DenseMatrix gram = aj * aj.transpose();
    const Vector pig = linalg::solve_spd(gram, aj * p.objective->gradient(w.x));
    const double pmax = pig.cwiseAbs().maxCoeff();
    if (pmax > 0.0) d.tau_star_pi = ys / pmax;
  }

  const DenseMatrix hj = detail::saddle_matrix(h, aj);
  d.sigma_min_HJ = detail::sigma_min(hj);
  const Vector sv = linalg::singular_values(hj);
  d.C_star = 2.0 * std::max(sv.size() == 0 ? 0.0 : sv.maxCoeff(), 1.0);

  if (static_cast<Index>(j.size()) <= kMaxExhaustiveActiveSet) {
    double best = std::numeric_limits<double>::infinity();
    const unsigned total = 1u << j.size();
    for (unsigned mask = 0; mask < total; ++mask) {
      IndexSet sub;
      for (std::size_t k = 0; k < j.size(); ++k)
        if (mask & (1u << k)) sub.push_back(j[k]);
      best = std::min(best, detail::sigma_min(detail::saddle_matrix(h, p.A.rows_dense(sub))));
    }
    d.c_star = best;
  }
  return d;
}

/// tau-stationarity and KKT tests at w. rel_tol sets the gradient test
/// ||grad f + A^T lambda|| <= rel_tol (1 + ||grad f||) and both zero
/// tolerances: rel_tol (1 + ||y||_inf) on y = Ax - b and
/// rel_tol (1 + ||y + tau lambda||_inf) on the shifted vector.
inline StationarityReport verify_stationary(const Problem& p, const Iterate& w, double rel_tol = kRelativeZeroTol) {
  check_iterate(p, w);
  require(w.tau > 0.0, ErrorCode::NonPositiveTau, "verify_stationary: tau must be positive");
  StationarityReport r;
  const Vector y = constraint_value(p, w.x);
  const Vector z = y + w.tau * w.lambda;
  const Vector grad = p.objective->gradient(w.x);

  r.y_zero_tol = default_zero_tol(y, rel_tol);
  r.z_zero_tol = default_zero_tol(z, rel_tol);
  r.gradient_norm = (grad + p.A.transpose_times(w.lambda)).norm();
  const bool grad_ok = r.gradient_norm <= rel_tol * (1.0 + grad.norm());

  r.working_set = partition(z, p.budget, r.z_zero_tol).working_set;
  r.residual_norm = residual(p, w, r.working_set).norm();
  r.active_set = active_set(y, r.y_zero_tol);
  r.feasible = detail::count_positive(y, r.y_zero_tol) <= p.s();

  r.is_tau_stationary = grad_ok && fixed_point_check(y, w.lambda, w.tau, p.budget, r.z_zero_tol);
  r.is_kkt = grad_ok && r.feasible && normal_cone_contains(y, w.lambda, p.budget, r.y_zero_tol);

  try {
    const Diagnostics d = diagnostics(p, w, rel_tol);
    r.diagnostics_available = true;
    r.tau_star = d.tau_star;
    r.tau_star_pi = d.tau_star_pi;
    r.sigma_min_HJ = d.sigma_min_HJ;
    r.c_star = d.c_star;
    r.C_star = d.C_star;
  } catch (const Error& e) {
    r.diagnostics_note = e.what();
  }
  return r;
}

/// A feasible point exists when rank(A) >= m - s.
inline bool feasibility_rank_check(const DenseMatrix& a, Index s, double tol = linalg::kDefaultRankTol) {
  const Index m = a.rows();
  if (s >= m) return true;
  if (a.cols() == 0) return false;
  return linalg::row_rank(a, tol) >= m - s;
}

inline bool feasibility_rank_check(const ConstraintMatrix& a, Index s, double tol = linalg::kDefaultRankTol) {
  return feasibility_rank_check(a.to_dense(), s, tol);
}

}  // namespace hsco
