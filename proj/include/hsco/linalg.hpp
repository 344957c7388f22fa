#pragma once
// Dense/sparse kernels and the direct solvers used by the Newton step.
//
// Storage is Eigen; the factorizations below add the pivot and residual
// checks the solver relies on to decide when to regularize.

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "hsco/error.hpp"

namespace hsco {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using IndexSet = std::vector<Index>;

namespace linalg {

inline constexpr double kSymmetryTol = 1e-10;
inline constexpr double kCholeskyPivotTol = 1e-12;
inline constexpr double kResidualTol = 1e-8;
inline constexpr double kDefaultRankTol = 1e-10;
inline constexpr double kLuPivotTol = 1e-14;

inline bool all_finite(const DenseMatrix& m) { return m.allFinite(); }
inline bool all_finite(const Vector& v) { return v.allFinite(); }

inline bool is_symmetric(const DenseMatrix& m, double rel_tol = kSymmetryTol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = i + 1; j < m.cols(); ++j)
      if (std::abs(m(i, j) - m(j, i)) > rel_tol * scale) return false;
  return true;
}

/// Solves M v = rhs for symmetric positive-definite M.
///
/// Cholesky first; when a pivot drops below 1e-12 of the largest diagonal
/// entry (or goes negative) the solve falls back to a rank-revealing
/// least-squares solve. Throws Singular when that fallback cannot reach
/// ||Mv - rhs|| <= 1e-8 (1 + ||rhs||).
inline Vector solve_spd(const DenseMatrix& m, const Vector& rhs) {
  require(m.rows() == m.cols(), ErrorCode::DimensionMismatch, "solve_spd: matrix is not square");
  require(m.rows() == rhs.size(), ErrorCode::DimensionMismatch, "solve_spd: rhs length mismatch");
  if (m.rows() == 0) return Vector(0);
  require(is_symmetric(m), ErrorCode::NotSymmetric, "solve_spd: matrix is not symmetric");

  const double tol = kResidualTol * (1.0 + rhs.norm());
  const double max_diag = m.diagonal().cwiseAbs().maxCoeff();

  Eigen::LLT<DenseMatrix> llt(m);
  if (llt.info() == Eigen::Success && max_diag > 0.0) {
    const auto diag = llt.matrixLLT().diagonal();
    const double min_pivot = diag.cwiseProduct(diag).minCoeff();
    if (min_pivot >= kCholeskyPivotTol * max_diag) {
      Vector v = llt.solve(rhs);
      if (v.allFinite() && (m * v - rhs).norm() <= tol) return v;
    }
  }

  Eigen::CompleteOrthogonalDecomposition<DenseMatrix> cod(m);
  Vector v = cod.solve(rhs);
  if (!v.allFinite() || (m * v - rhs).norm() > tol)
    throw Error(ErrorCode::Singular, "solve_spd: system is singular and rhs is outside the range");
  return v;
}

/// Numerical rank: singular values above tol * sigma_max.
inline Index row_rank(const DenseMatrix& m, double tol = kDefaultRankTol) {
  require(m.rows() > 0 && m.cols() > 0, ErrorCode::EmptyMatrix, "row_rank: empty matrix");
  require(tol > 0.0, ErrorCode::InvalidArgument, "row_rank: tol must be positive");
  Eigen::BDCSVD<DenseMatrix> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double cut = tol * sv(0);
  return static_cast<Index>(std::count_if(sv.begin(), sv.end(), [cut](double x) { return x > cut; }));
}

inline Vector singular_values(const DenseMatrix& m) {
  if (m.size() == 0) return Vector(0);
  Eigen::BDCSVD<DenseMatrix> svd(m);
  return svd.singularValues();
}

/// Assembles [[H, B^T], [B, -reg I]] of size n + t.
inline DenseMatrix assemble_saddle(const DenseMatrix& h, const DenseMatrix& b, double reg = 0.0) {
  const Index n = h.rows();
  const Index t = b.rows();
  DenseMatrix k = DenseMatrix::Zero(n + t, n + t);
  k.topLeftCorner(n, n) = h;
  if (t > 0) {
    k.topRightCorner(n, t) = b.transpose();
    k.bottomLeftCorner(t, n) = b;
    k.bottomRightCorner(t, t).diagonal().setConstant(-reg);
  }
  return k;
}

/// Solves the saddle-point system [[H, B^T], [B, 0]] (u; v) = (g1; g2).
///
/// LU with partial pivoting on the assembled matrix. Throws SingularKKT when
/// the pivots collapse or the residual misses 1e-8 (1 + ||(g1; g2)||); the
/// caller decides how to regularize.
inline std::pair<Vector, Vector> solve_kkt(const DenseMatrix& h, const DenseMatrix& b, const Vector& g1,
                                           const Vector& g2, double reg = 0.0) {
  const Index n = h.rows();
  const Index t = b.rows();
  require(h.cols() == n, ErrorCode::DimensionMismatch, "solve_kkt: H is not square");
  require(t == 0 || b.cols() == n, ErrorCode::DimensionMismatch, "solve_kkt: B has wrong column count");
  require(t <= n, ErrorCode::DimensionMismatch, "solve_kkt: B has more rows than H");
  require(g1.size() == n && g2.size() == t, ErrorCode::DimensionMismatch, "solve_kkt: rhs length mismatch");

  const DenseMatrix k = assemble_saddle(h, b, reg);
  Vector rhs(n + t);
  rhs << g1, g2;
  if (n + t == 0) return {Vector(0), Vector(0)};

  Eigen::PartialPivLU<DenseMatrix> lu(k);
  const auto udiag = lu.matrixLU().diagonal().cwiseAbs();
  const double scale = std::max(k.cwiseAbs().maxCoeff(), 1e-300);
  if (!(udiag.minCoeff() > kLuPivotTol * scale))
    throw Error(ErrorCode::SingularKKT, "solve_kkt: pivot collapse in saddle system");
  Vector sol = lu.solve(rhs);
  if (!sol.allFinite() || (k * sol - rhs).norm() > kResidualTol * (1.0 + rhs.norm()))
    throw Error(ErrorCode::SingularKKT, "solve_kkt: residual check failed");
  return {sol.head(n), sol.tail(t)};
}

/// Lower Cholesky factor of an SPD matrix; throws Singular if not SPD.
inline DenseMatrix cholesky_factor(const DenseMatrix& m) {
  require(m.rows() == m.cols(), ErrorCode::DimensionMismatch, "cholesky_factor: matrix is not square");
  Eigen::LLT<DenseMatrix> llt(m);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::Singular, "cholesky_factor: matrix is not SPD");
  return llt.matrixL();
}

}  // namespace linalg

/// Row-major constraint matrix, dense or compressed-row sparse.
///
/// Sparse storage supports products and row extraction only; anything that
/// needs a factorization densifies the selected rows first.
class ConstraintMatrix {
 public:
  ConstraintMatrix() = default;
  explicit ConstraintMatrix(const DenseMatrix& dense) : data_(RowMatrix(dense)) { validate(); }
  explicit ConstraintMatrix(RowMatrix dense) : data_(std::move(dense)) { validate(); }
  template <typename Derived>
  explicit ConstraintMatrix(const Eigen::MatrixBase<Derived>& expr) : data_(RowMatrix(expr)) { validate(); }
  explicit ConstraintMatrix(SparseMatrix sparse) : data_(std::move(sparse)) {
    auto& s = std::get<SparseMatrix>(data_);
    s.prune(0.0);
    s.makeCompressed();
    validate();
  }

  Index rows() const {
    return std::visit([](const auto& m) -> Index { return m.rows(); }, data_);
  }
  Index cols() const {
    return std::visit([](const auto& m) -> Index { return m.cols(); }, data_);
  }
  bool is_sparse() const { return std::holds_alternative<SparseMatrix>(data_); }

  const RowMatrix* dense_ptr() const { return std::get_if<RowMatrix>(&data_); }
  const SparseMatrix* sparse_ptr() const { return std::get_if<SparseMatrix>(&data_); }

  Vector times(const Vector& x) const {
    require(x.size() == cols(), ErrorCode::DimensionMismatch, "A x: length mismatch");
    return std::visit([&](const auto& m) -> Vector { return m * x; }, data_);
  }

  Vector transpose_times(const Vector& y) const {
    require(y.size() == rows(), ErrorCode::DimensionMismatch, "A^T y: length mismatch");
    return std::visit([&](const auto& m) -> Vector { return m.transpose() * y; }, data_);
  }

  /// A_T x
  Vector rows_times(std::span<const Index> idx, const Vector& x) const {
    require(x.size() == cols(), ErrorCode::DimensionMismatch, "A_T x: length mismatch");
    Vector out(static_cast<Index>(idx.size()));
    if (const auto* d = dense_ptr()) {
      for (std::size_t k = 0; k < idx.size(); ++k) out(k) = d->row(idx[k]).dot(x);
    } else {
      const auto& s = *sparse_ptr();
      for (std::size_t k = 0; k < idx.size(); ++k) {
        double acc = 0.0;
        for (SparseMatrix::InnerIterator it(s, idx[k]); it; ++it) acc += it.value() * x(it.col());
        out(k) = acc;
      }
    }
    return out;
  }

  /// A_T^T v
  Vector rows_transpose_times(std::span<const Index> idx, const Vector& v) const {
    require(v.size() == static_cast<Index>(idx.size()), ErrorCode::DimensionMismatch,
            "A_T^T v: length mismatch");
    Vector out = Vector::Zero(cols());
    if (const auto* d = dense_ptr()) {
      for (std::size_t k = 0; k < idx.size(); ++k)
        if (v(k) != 0.0) out.noalias() += v(k) * d->row(idx[k]).transpose();
    } else {
      const auto& s = *sparse_ptr();
      for (std::size_t k = 0; k < idx.size(); ++k)
        for (SparseMatrix::InnerIterator it(s, idx[k]); it; ++it) out(it.col()) += it.value() * v(k);
    }
    return out;
  }

  DenseMatrix rows_dense(std::span<const Index> idx) const {
    DenseMatrix out(static_cast<Index>(idx.size()), cols());
    if (const auto* d = dense_ptr()) {
      for (std::size_t k = 0; k < idx.size(); ++k) out.row(k) = d->row(idx[k]);
    } else {
      out.setZero();
      const auto& s = *sparse_ptr();
      for (std::size_t k = 0; k < idx.size(); ++k)
        for (SparseMatrix::InnerIterator it(s, idx[k]); it; ++it) out(k, it.col()) = it.value();
    }
    return out;
  }

  /// A_T diag(w) A_T^T, always dense (|T| x |T|).
  DenseMatrix weighted_gram(std::span<const Index> idx, const Vector& w) const {
    require(w.size() == cols(), ErrorCode::DimensionMismatch, "weighted_gram: weight length mismatch");
    const Index t = static_cast<Index>(idx.size());
    if (const auto* d = dense_ptr()) {
      RowMatrix at(t, cols());
      for (Index k = 0; k < t; ++k) at.row(k) = d->row(idx[static_cast<std::size_t>(k)]);
      if (w.minCoeff() > 0.0) {
        // Symmetric rank-k update on A_T diag(sqrt(w)); half the flops of a general product.
        at = at * w.cwiseSqrt().asDiagonal();
        DenseMatrix g = DenseMatrix::Zero(t, t);
        g.selfadjointView<Eigen::Lower>().rankUpdate(at);
        return g.selfadjointView<Eigen::Lower>();
      }
      RowMatrix scaled = at * w.asDiagonal();
      DenseMatrix g(t, t);
      g.noalias() = scaled * at.transpose();
      return 0.5 * (g + g.transpose());
    }
    const auto& s = *sparse_ptr();
    SparseMatrix at(t, cols());
    std::vector<Eigen::Triplet<double>> trips;
    for (Index k = 0; k < t; ++k)
      for (SparseMatrix::InnerIterator it(s, idx[k]); it; ++it) trips.emplace_back(k, it.col(), it.value());
    at.setFromTriplets(trips.begin(), trips.end());
    SparseMatrix scaled = at * w.asDiagonal();
    DenseMatrix g = DenseMatrix(scaled * SparseMatrix(at.transpose()));
    return 0.5 * (g + g.transpose());
  }

  DenseMatrix to_dense() const {
    if (const auto* d = dense_ptr()) return DenseMatrix(*d);
    return DenseMatrix(*sparse_ptr());
  }

  /// Multiplies row i by factors(i).
  ConstraintMatrix scale_rows(const Vector& factors) const {
    require(factors.size() == rows(), ErrorCode::DimensionMismatch, "scale_rows: length mismatch");
    if (const auto* d = dense_ptr()) return ConstraintMatrix(RowMatrix(factors.asDiagonal() * (*d)));
    return ConstraintMatrix(SparseMatrix(factors.asDiagonal() * (*sparse_ptr())));
  }

 private:
  void validate() const {
    const bool finite = std::visit(
        [](const auto& m) {
          if constexpr (std::is_same_v<std::decay_t<decltype(m)>, RowMatrix>) {
            return m.allFinite();
          } else {
            for (Index k = 0; k < m.nonZeros(); ++k)
              if (!std::isfinite(m.valuePtr()[k])) return false;
            return true;
          }
        },
        data_);
    require(finite, ErrorCode::InvalidArgument, "constraint matrix has non-finite entries");
  }

  std::variant<RowMatrix, SparseMatrix> data_{RowMatrix()};
};

}  // namespace hsco
