#pragma once
// Objectives and the problem container: min f(x) s.t. ||(Ax - b)_+||_0 <= s.

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "hsco/error.hpp"
#include "hsco/heaviside.hpp"
#include "hsco/linalg.hpp"

namespace hsco {

class Objective {
 public:
  virtual ~Objective() = default;
  virtual Index n() const = 0;
  virtual double value(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;
  virtual DenseMatrix hessian(const Vector& x) const = 0;
  virtual bool hessian_is_diagonal() const { return false; }
  /// Only meaningful when hessian_is_diagonal().
  virtual Vector hessian_diagonal(const Vector& x) const { return hessian(x).diagonal(); }
  /// Positive diagonal D(x) with f(y) <= f(x) + <grad f(x), y - x> + 0.5 (y-x)^T D(x) (y-x)
  /// when available; the Newton step falls back to it where the Hessian is not positive definite.
  virtual bool has_curvature_majorant() const { return false; }
  virtual Vector curvature_majorant(const Vector& x) const { return hessian_diagonal(x); }

 protected:
  void check(const Vector& x) const {
    require(x.size() == n(), ErrorCode::DimensionMismatch,
            "objective: x has length " + std::to_string(x.size()) + ", expected " + std::to_string(n()));
  }
};

/// ||D x||^2 with D = diag(1, ..., 1, d_last).
class SvmObjective final : public Objective {
 public:
  SvmObjective(Index n, double d_last) : n_(n), d_last_(d_last) {
    require(n >= 1, ErrorCode::InvalidArgument, "SvmObjective: n must be positive");
    require(d_last > 0.0, ErrorCode::InvalidArgument, "SvmObjective: d_last must be positive");
    w_ = Vector::Ones(n);
    w_(n - 1) = d_last * d_last;
  }

  Index n() const override { return n_; }
  double d_last() const { return d_last_; }

  double value(const Vector& x) const override {
    check(x);
    return x.cwiseAbs2().dot(w_);
  }
  Vector gradient(const Vector& x) const override {
    check(x);
    return 2.0 * w_.cwiseProduct(x);
  }
  DenseMatrix hessian(const Vector& x) const override { return DenseMatrix(hessian_diagonal(x).asDiagonal()); }
  bool hessian_is_diagonal() const override { return true; }
  Vector hessian_diagonal(const Vector& x) const override {
    check(x);
    return 2.0 * w_;
  }

 private:
  Index n_;
  double d_last_;
  Vector w_;
};

/// sum_i (x_i^2 + eps)^(q/2) + eta ||x||^2.
class SmoothedLqObjective final : public Objective {
 public:
  SmoothedLqObjective(Index n, double q, double eps_smooth, double eta)
      : n_(n), q_(q), eps_(eps_smooth), eta_(eta) {
    require(n >= 1, ErrorCode::InvalidArgument, "SmoothedLqObjective: n must be positive");
    require(q > 0.0 && q < 1.0, ErrorCode::InvalidArgument, "SmoothedLqObjective: q must lie in (0,1)");
    require(eps_smooth > 0.0, ErrorCode::InvalidArgument, "SmoothedLqObjective: eps_smooth must be positive");
    require(eta >= 0.0, ErrorCode::InvalidArgument, "SmoothedLqObjective: eta must be non-negative");
  }

  Index n() const override { return n_; }
  double q() const { return q_; }
  double eps_smooth() const { return eps_; }
  double eta() const { return eta_; }

  double value(const Vector& x) const override {
    check(x);
    double v = 0.0;
    for (Index i = 0; i < n_; ++i) v += std::pow(x(i) * x(i) + eps_, 0.5 * q_);
    return v + eta_ * x.squaredNorm();
  }
  Vector gradient(const Vector& x) const override {
    check(x);
    Vector g(n_);
    for (Index i = 0; i < n_; ++i)
      g(i) = q_ * x(i) * std::pow(x(i) * x(i) + eps_, 0.5 * q_ - 1.0) + 2.0 * eta_ * x(i);
    return g;
  }
  DenseMatrix hessian(const Vector& x) const override { return DenseMatrix(hessian_diagonal(x).asDiagonal()); }
  bool hessian_is_diagonal() const override { return true; }
  Vector hessian_diagonal(const Vector& x) const override {
    check(x);
    Vector h(n_);
    for (Index i = 0; i < n_; ++i) {
      const double t = x(i) * x(i) + eps_;
      h(i) = q_ * std::pow(t, 0.5 * q_ - 2.0) * ((q_ - 1.0) * x(i) * x(i) + eps_) + 2.0 * eta_;
    }
    return h;
  }
  bool has_curvature_majorant() const override { return true; }
  /// q (x_i^2 + eps)^(q/2 - 1) + 2 eta, the reweighting curvature of the concave-in-x^2 term.
  Vector curvature_majorant(const Vector& x) const override {
    check(x);
    Vector d(n_);
    for (Index i = 0; i < n_; ++i) d(i) = q_ * std::pow(x(i) * x(i) + eps_, 0.5 * q_ - 1.0) + 2.0 * eta_;
    return d;
  }

 private:
  Index n_;
  double q_;
  double eps_;
  double eta_;
};

/// 0.5 x^T Q x + c^T x. Used for hand instances and the local-rate tests.
class QuadraticObjective final : public Objective {
 public:
  QuadraticObjective(DenseMatrix q, Vector c) : q_(std::move(q)), c_(std::move(c)) {
    require(q_.rows() == q_.cols() && q_.rows() == c_.size(), ErrorCode::DimensionMismatch,
            "QuadraticObjective: Q must be n x n and c length n");
    require(linalg::is_symmetric(q_), ErrorCode::NotSymmetric, "QuadraticObjective: Q is not symmetric");
    diagonal_ = q_.isDiagonal(0.0);
  }

  Index n() const override { return c_.size(); }
  double value(const Vector& x) const override {
    check(x);
    return 0.5 * x.dot(q_ * x) + c_.dot(x);
  }
  Vector gradient(const Vector& x) const override {
    check(x);
    return q_ * x + c_;
  }
  DenseMatrix hessian(const Vector& x) const override {
    check(x);
    return q_;
  }
  bool hessian_is_diagonal() const override { return diagonal_; }
  Vector hessian_diagonal(const Vector& x) const override {
    check(x);
    return q_.diagonal();
  }

 private:
  DenseMatrix q_;
  Vector c_;
  bool diagonal_ = false;
};

struct Problem {
  std::shared_ptr<const Objective> objective;
  ConstraintMatrix A;
  Vector b;
  HeavisideBudget budget;

  Problem(std::shared_ptr<const Objective> f, ConstraintMatrix a, Vector b_, HeavisideBudget s)
      : objective(std::move(f)), A(std::move(a)), b(std::move(b_)), budget(s) {
    require(objective != nullptr, ErrorCode::InvalidArgument, "Problem: objective is null");
    require(A.cols() == objective->n(), ErrorCode::DimensionMismatch, "Problem: A has wrong column count");
    require(A.rows() == b.size(), ErrorCode::DimensionMismatch, "Problem: b length differs from rows of A");
    require(A.rows() == budget.m(), ErrorCode::DimensionMismatch, "Problem: budget m differs from rows of A");
    require(b.allFinite(), ErrorCode::InvalidArgument, "Problem: b has non-finite entries");
  }

  Index n() const { return A.cols(); }
  Index m() const { return A.rows(); }
  Index s() const { return budget.s(); }

  /// Same data, different budget.
  Problem with_budget(Index s) const { return Problem(objective, A, b, HeavisideBudget(m(), s)); }
};

namespace detail {

inline void check_signs(const Vector& c, const char* what) {
  for (Index i = 0; i < c.size(); ++i)
    if (c(i) != 1.0 && c(i) != -1.0)
      throw Error(ErrorCode::BadLabel, std::string(what) + ": entry " + std::to_string(i) + " is not +-1");
}

inline bool last_column_is_ones(const ConstraintMatrix& a) {
  const Index n = a.cols();
  if (n == 0) return false;
  if (const auto* d = a.dense_ptr()) return (d->col(n - 1).array() == 1.0).all();
  const auto& s = *a.sparse_ptr();
  for (Index i = 0; i < s.outerSize(); ++i) {
    bool found = false;
    for (SparseMatrix::InnerIterator it(s, i); it; ++it)
      if (it.col() == n - 1) found = it.value() == 1.0;
    if (!found) return false;
  }
  return true;
}

}  // namespace detail

inline constexpr double kDefaultDLast = 1e-4;

/// A = -diag(c) A0, b = -1, f = ||Dx||^2. Samples must carry the bias column.
inline Problem build_svm_problem(const ConstraintMatrix& samples, const Vector& labels, Index s,
                                 double d_last = kDefaultDLast) {
  require(samples.rows() == labels.size(), ErrorCode::DimensionMismatch, "build_svm_problem: label count mismatch");
  detail::check_signs(labels, "build_svm_problem: label");
  if (!detail::last_column_is_ones(samples))
    throw Error(ErrorCode::MissingBiasColumn, "build_svm_problem: last sample column must be all ones");
  const Index m = samples.rows();
  return Problem(std::make_shared<SvmObjective>(samples.cols(), d_last), samples.scale_rows(-labels),
                 Vector::Constant(m, -1.0), HeavisideBudget(m, s));
}

struct CsConstants {
  double epsilon = 1e-3;
  double q = 0.9;
  std::optional<double> eps_smooth;  // 1/n when unset
  double eta = 0.07;
};

/// A = -diag(c) A0, b = -epsilon 1, f = smoothed l_q + ridge.
inline Problem build_cs_problem(const ConstraintMatrix& a0, const Vector& signs, Index s,
                                const CsConstants& k = {}) {
  require(a0.rows() == signs.size(), ErrorCode::DimensionMismatch, "build_cs_problem: sign count mismatch");
  require(k.epsilon > 0.0, ErrorCode::InvalidArgument, "build_cs_problem: epsilon must be positive");
  detail::check_signs(signs, "build_cs_problem: sign");
  const Index n = a0.cols();
  const Index m = a0.rows();
  const double eps_smooth = k.eps_smooth.value_or(1.0 / static_cast<double>(n));
  return Problem(std::make_shared<SmoothedLqObjective>(n, k.q, eps_smooth, k.eta), a0.scale_rows(-signs),
                 Vector::Constant(m, -k.epsilon), HeavisideBudget(m, s));
}

struct Evaluation {
  double value = 0.0;
  Vector gradient;
  bool diagonal = false;
  Vector hessian_diagonal;  // set when diagonal
  DenseMatrix hessian;      // set otherwise
};

inline Evaluation evaluate(const Objective& f, const Vector& x) {
  Evaluation e;
  e.value = f.value(x);
  e.gradient = f.gradient(x);
  e.diagonal = f.hessian_is_diagonal();
  if (e.diagonal)
    e.hessian_diagonal = f.hessian_diagonal(x);
  else
    e.hessian = f.hessian(x);
  return e;
}

}  // namespace hsco
