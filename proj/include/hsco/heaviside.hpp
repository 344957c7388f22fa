#pragma once
// Set-level machinery for S = { z : ||z_+||_0 <= s }.
//
// All index sets are 0-based and sorted ascending. Zero classification uses
// an absolute tolerance zeta; default_zero_tol(z) = 1e-10 (1 + ||z||_inf).

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "hsco/error.hpp"
#include "hsco/linalg.hpp"

namespace hsco {

inline constexpr double kRelativeZeroTol = 1e-10;

inline double default_zero_tol(const Vector& z, double rel = kRelativeZeroTol) {
  const double inf_norm = z.size() == 0 ? 0.0 : z.cwiseAbs().maxCoeff();
  return rel * (1.0 + inf_norm);
}

/// Ambient dimension m and sparsity budget s.
///
/// s == m is accepted as the degenerate (vacuous) budget; everything the
/// solver builds uses 1 <= s < m.
class HeavisideBudget {
 public:
  HeavisideBudget(Index m, Index s) : m_(m), s_(s) {
    require(m >= 1, ErrorCode::InvalidArgument, "budget: m must be positive");
    require(s >= 1 && s <= m, ErrorCode::InvalidArgument,
            "budget: s must satisfy 1 <= s <= m (got s=" + std::to_string(s) + ", m=" + std::to_string(m) + ")");
  }
  Index m() const { return m_; }
  Index s() const { return s_; }

 private:
  Index m_;
  Index s_;
};

struct IndexPartition {
  IndexSet gamma_plus;
  IndexSet gamma_zero;
  IndexSet gamma_minus;
  IndexSet gamma_s;
  IndexSet working_set;  // T = (gamma_plus \ gamma_s) U gamma_zero
  IndexSet complement;   // gamma_s U gamma_minus
  double zero_tol = 0.0;
};

namespace detail {

inline IndexSet sorted_union(const IndexSet& a, const IndexSet& b) {
  IndexSet out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline IndexSet sorted_difference(const IndexSet& a, const IndexSet& b) {
  IndexSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline Index count_positive(const Vector& z, double zero_tol) {
  return static_cast<Index>((z.array() > zero_tol).count());
}

}  // namespace detail

/// Canonical member of the working-set family for z at budget s.
///
/// Positives are ranked by value descending, ties by smaller index first;
/// gamma_s takes the first min(s, |gamma_plus|) of them.
inline IndexPartition partition(const Vector& z, const HeavisideBudget& budget, double zero_tol) {
  require(z.size() == budget.m(), ErrorCode::DimensionMismatch, "partition: z has wrong length");
  require(zero_tol >= 0.0, ErrorCode::InvalidArgument, "partition: zero_tol must be non-negative");
  IndexPartition p;
  p.zero_tol = zero_tol;
  for (Index i = 0; i < z.size(); ++i) {
    if (z(i) > zero_tol)
      p.gamma_plus.push_back(i);
    else if (z(i) < -zero_tol)
      p.gamma_minus.push_back(i);
    else
      p.gamma_zero.push_back(i);
  }

  const auto keep = static_cast<std::size_t>(std::min<Index>(budget.s(), static_cast<Index>(p.gamma_plus.size())));
  IndexSet ranked = p.gamma_plus;
  auto by_value = [&z](Index a, Index b) { return z(a) > z(b) || (z(a) == z(b) && a < b); };
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep), ranked.end(), by_value);
  p.gamma_s.assign(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep));
  std::sort(p.gamma_s.begin(), p.gamma_s.end());

  p.working_set = detail::sorted_union(detail::sorted_difference(p.gamma_plus, p.gamma_s), p.gamma_zero);
  p.complement = detail::sorted_union(p.gamma_s, p.gamma_minus);
  return p;
}

inline IndexPartition partition(const Vector& z, const HeavisideBudget& budget) {
  return partition(z, budget, default_zero_tol(z));
}

/// s-th largest entry of z_+ (1-based s); zero when fewer than s positives.
inline double sth_largest_positive(const Vector& z, Index s) {
  require(s >= 1 && s <= z.size(), ErrorCode::InvalidArgument, "sth_largest_positive: s out of range");
  std::vector<double> pos;
  for (Index i = 0; i < z.size(); ++i)
    if (z(i) > 0.0) pos.push_back(z(i));
  if (static_cast<Index>(pos.size()) < s) return 0.0;
  auto nth = pos.begin() + (s - 1);
  std::nth_element(pos.begin(), nth, pos.end(), std::greater<>());
  return *nth;
}

/// Zeroes z on T, keeps it on the complement.
inline Vector apply_projection(const Vector& z, const IndexSet& working_set) {
  Vector out = z;
  for (Index i : working_set) out(i) = 0.0;
  return out;
}

/// Canonical projection onto S.
inline Vector project(const Vector& z, const HeavisideBudget& budget) {
  return apply_projection(z, partition(z, budget).working_set);
}

/// Every element of the (set-valued) projection, for m <= 20.
///
/// Enumerates all gamma_s subsets of gamma_plus of size min(s, |gamma_plus|)
/// whose entries dominate every remaining non-negative entry. Exact zero
/// classification.
inline std::vector<Vector> project_all(const Vector& z, const HeavisideBudget& budget) {
  require(z.size() == budget.m(), ErrorCode::DimensionMismatch, "project_all: z has wrong length");
  require(z.size() <= 20, ErrorCode::InvalidArgument, "project_all: limited to m <= 20");
  IndexSet plus;
  for (Index i = 0; i < z.size(); ++i)
    if (z(i) > 0.0) plus.push_back(i);
  const auto p = plus.size();
  const auto keep = std::min<std::size_t>(static_cast<std::size_t>(budget.s()), p);

  std::vector<Vector> out;
  for (unsigned mask = 0; mask < (1u << p); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) != keep) continue;
    double min_kept = std::numeric_limits<double>::infinity();
    double max_dropped = 0.0;
    for (std::size_t k = 0; k < p; ++k) {
      const double v = z(plus[k]);
      if (mask & (1u << k))
        min_kept = std::min(min_kept, v);
      else
        max_dropped = std::max(max_dropped, v);
    }
    if (min_kept < max_dropped) continue;
    Vector u = z;
    for (std::size_t k = 0; k < p; ++k)
      if (!(mask & (1u << k))) u(plus[k]) = 0.0;
    if (std::none_of(out.begin(), out.end(), [&u](const Vector& w) { return w == u; })) out.push_back(u);
  }
  return out;
}

/// y in P_S(y + tau lambda), tested through the closed-form conditions:
/// ||y_+||_0 <= s, lambda = 0 on supp(y), and 0 <= tau lambda_i <= y_[s]
/// off the support. zero_tol is absolute on the y + tau lambda scale.
inline bool fixed_point_check(const Vector& y, const Vector& lambda, double tau, const HeavisideBudget& budget,
                              double zero_tol) {
  require(tau > 0.0, ErrorCode::NonPositiveTau, "fixed_point_check: tau must be positive");
  require(y.size() == budget.m() && lambda.size() == budget.m(), ErrorCode::DimensionMismatch,
          "fixed_point_check: length mismatch");
  if (detail::count_positive(y, zero_tol) > budget.s()) return false;

  // s-th largest positive entry of y, with tolerance-aware positivity.
  Vector y_pos = y;
  for (Index i = 0; i < y.size(); ++i)
    if (y(i) <= zero_tol) y_pos(i) = 0.0;
  const double y_s = sth_largest_positive(y_pos, budget.s());

  for (Index i = 0; i < y.size(); ++i) {
    const double scaled = tau * lambda(i);
    if (std::abs(y(i)) > zero_tol) {
      if (std::abs(scaled) > zero_tol) return false;
    } else if (scaled < -zero_tol || scaled > y_s + zero_tol) {
      return false;
    }
  }
  return true;
}

inline bool fixed_point_check(const Vector& y, const Vector& lambda, double tau, const HeavisideBudget& budget) {
  require(tau > 0.0, ErrorCode::NonPositiveTau, "fixed_point_check: tau must be positive");
  require(lambda.size() == y.size(), ErrorCode::DimensionMismatch, "fixed_point_check: length mismatch");
  return fixed_point_check(y, lambda, tau, budget, default_zero_tol(y + tau * lambda));
}

/// Bouligand tangent cone membership at z in S.
inline bool tangent_cone_contains(const Vector& z, const Vector& d, const HeavisideBudget& budget, double zero_tol) {
  require(z.size() == budget.m() && d.size() == budget.m(), ErrorCode::DimensionMismatch,
          "tangent_cone_contains: length mismatch");
  const Index n_plus = detail::count_positive(z, zero_tol);
  require(n_plus <= budget.s(), ErrorCode::InfeasiblePoint, "tangent_cone_contains: z is not in S");
  Index rising = 0;
  for (Index i = 0; i < z.size(); ++i)
    if (std::abs(z(i)) <= zero_tol && d(i) > zero_tol) ++rising;
  return rising <= budget.s() - n_plus;
}

inline bool tangent_cone_contains(const Vector& z, const Vector& d, const HeavisideBudget& budget) {
  return tangent_cone_contains(z, d, budget, default_zero_tol(z));
}

/// Frechet normal cone membership at z in S.
inline bool normal_cone_contains(const Vector& z, const Vector& d, const HeavisideBudget& budget, double zero_tol) {
  require(z.size() == budget.m() && d.size() == budget.m(), ErrorCode::DimensionMismatch,
          "normal_cone_contains: length mismatch");
  const Index n_plus = detail::count_positive(z, zero_tol);
  require(n_plus <= budget.s(), ErrorCode::InfeasiblePoint, "normal_cone_contains: z is not in S");
  if (n_plus < budget.s()) return d.size() == 0 || d.cwiseAbs().maxCoeff() <= zero_tol;
  for (Index i = 0; i < z.size(); ++i) {
    if (std::abs(z(i)) > zero_tol) {
      if (std::abs(d(i)) > zero_tol) return false;
    } else if (d(i) < -zero_tol) {
      return false;
    }
  }
  return true;
}

inline bool normal_cone_contains(const Vector& z, const Vector& d, const HeavisideBudget& budget) {
  return normal_cone_contains(z, d, budget, default_zero_tol(z));
}

}  // namespace hsco
