#pragma once
// libsvm-format input/output, feature scaling, and the seeded 1-bit CS generators.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hsco/error.hpp"
#include "hsco/linalg.hpp"
#include "hsco/stationarity.hpp"

namespace hsco {

/// Seeded source shared by every generator.
///
/// mt19937_64; uniforms are (next >> 11) * 2^-53 in [0,1); normals come from
/// Box-Muller on (1 - u1, u2), returning the cosine branch first and caching
/// the sine branch for the next call.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    if (cached_) {
      cached_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    cached_ = true;
    return radius * std::cos(angle);
  }

  /// Uniform integer in [0, bound) by multiply-shift on a 53-bit uniform.
  Index below(Index bound) {
    const auto k = static_cast<Index>(uniform() * static_cast<double>(bound));
    return std::min(k, bound - 1);
  }

  /// k distinct indices from [0, n), in draw order (partial Fisher-Yates).
  IndexSet sample(Index n, Index k) {
    require(k >= 0 && k <= n, ErrorCode::InvalidArgument, "Rng::sample: k must lie in [0, n]");
    IndexSet pool(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
    for (Index i = 0; i < k; ++i) {
      const Index j = i + below(n - i);
      std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
    }
    pool.resize(static_cast<std::size_t>(k));
    return pool;
  }

 private:
  std::mt19937_64 engine_;
  bool cached_ = false;
  double spare_ = 0.0;
};

/// sgn with sgn(0) = -1.
inline double sgn(double v) { return v > 0.0 ? 1.0 : -1.0; }

inline Vector sgn(const Vector& v) {
  return v.unaryExpr([](double t) { return sgn(t); });
}

struct Dataset {
  ConstraintMatrix samples;  // m x n, bias column last when has_bias
  Vector labels;             // +-1
  Index feature_count = 0;   // before augmentation
  bool has_bias = false;
  std::string provenance;

  Index rows() const { return samples.rows(); }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
bool parse_number(std::string_view tok, T& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace detail

/// Parses "label idx:val idx:val ..." lines with 1-based, strictly
/// increasing indices. Label 1 maps to +1, every other label to -1.
/// Blank lines and '#' comments are skipped.
inline Dataset parse_libsvm(std::istream& in, const std::string& source = "<stream>") {
  std::vector<Eigen::Triplet<double>> trips;
  std::vector<double> labels;
  Index max_index = 0;
  std::string line;
  std::size_t line_no = 0;

  while (std::getline(in, line)) {
    ++line_no;
    std::string_view body = line;
    if (const auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
    body = detail::trim(body);
    if (body.empty()) continue;

    std::istringstream tokens{std::string(body)};
    std::string tok;
    tokens >> tok;
    double label = 0.0;
    if (!detail::parse_number(tok, label) || !std::isfinite(label))
      throw ParseError(ErrorCode::MalformedLine, line_no, "bad label '" + tok + "'");
    const auto row = static_cast<Index>(labels.size());
    labels.push_back(label == 1.0 ? 1.0 : -1.0);

    Index prev = 0;
    while (tokens >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos)
        throw ParseError(ErrorCode::MalformedLine, line_no, "expected idx:val, got '" + tok + "'");
      long long idx = 0;
      double val = 0.0;
      if (!detail::parse_number(std::string_view(tok).substr(0, colon), idx) || idx < 1)
        throw ParseError(ErrorCode::MalformedLine, line_no, "bad feature index in '" + tok + "'");
      if (!detail::parse_number(std::string_view(tok).substr(colon + 1), val) || !std::isfinite(val))
        throw ParseError(ErrorCode::MalformedLine, line_no, "bad feature value in '" + tok + "'");
      if (idx <= prev)
        throw ParseError(ErrorCode::NonIncreasingIndex, line_no,
                         "index " + std::to_string(idx) + " does not follow " + std::to_string(prev));
      prev = static_cast<Index>(idx);
      max_index = std::max(max_index, prev);
      if (val != 0.0) trips.emplace_back(row, prev - 1, val);
    }
  }
  if (labels.empty()) throw Error(ErrorCode::EmptyFile, source + ": no samples");

  SparseMatrix a(static_cast<Index>(labels.size()), max_index);
  a.setFromTriplets(trips.begin(), trips.end());
  Dataset ds;
  ds.samples = ConstraintMatrix(std::move(a));
  ds.labels = Eigen::Map<const Vector>(labels.data(), static_cast<Index>(labels.size()));
  ds.feature_count = max_index;
  ds.provenance = source;
  return ds;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_libsvm(std::ostream& out, const Dataset& ds) {
  const SparseMatrix a = ds.samples.is_sparse() ? *ds.samples.sparse_ptr() : ds.samples.to_dense().sparseView();
  for (Index i = 0; i < a.rows(); ++i) {
    out << (ds.labels(i) > 0.0 ? "1" : "-1");
    for (SparseMatrix::InnerIterator it(a, i); it; ++it)
      if (it.value() != 0.0) out << ' ' << (it.col() + 1) << ':' << format_double(it.value());
    out << '\n';
  }
}

/// Per-column max |a_ij| over the feature columns; 1 for all-zero columns.
inline Vector column_divisors(const Dataset& ds) {
  Vector div = Vector::Zero(ds.feature_count);
  if (const auto* d = ds.samples.dense_ptr()) {
    for (Index j = 0; j < ds.feature_count; ++j) div(j) = d->col(j).cwiseAbs().maxCoeff();
  } else {
    const auto& s = *ds.samples.sparse_ptr();
    for (Index i = 0; i < s.outerSize(); ++i)
      for (SparseMatrix::InnerIterator it(s, i); it; ++it)
        if (it.col() < ds.feature_count) div(it.col()) = std::max(div(it.col()), std::abs(it.value()));
  }
  for (Index j = 0; j < div.size(); ++j)
    if (div(j) == 0.0) div(j) = 1.0;
  return div;
}

/// Divides feature column j by divisors(j) and appends the constant bias
/// column. Columns beyond divisors.size() are dropped (test data scaled with
/// training divisors). Already-augmented data keeps its bias column.
inline Dataset scale_and_augment(const Dataset& ds, const Vector& divisors) {
  const Index nf = divisors.size();
  std::vector<Eigen::Triplet<double>> trips;
  const SparseMatrix a = ds.samples.is_sparse() ? *ds.samples.sparse_ptr() : ds.samples.to_dense().sparseView();
  for (Index i = 0; i < a.rows(); ++i) {
    for (SparseMatrix::InnerIterator it(a, i); it; ++it)
      if (it.col() < nf && it.col() < ds.feature_count) trips.emplace_back(i, it.col(), it.value() / divisors(it.col()));
    trips.emplace_back(i, nf, 1.0);
  }
  SparseMatrix out(a.rows(), nf + 1);
  out.setFromTriplets(trips.begin(), trips.end());

  Dataset r;
  r.labels = ds.labels;
  r.feature_count = nf;
  r.has_bias = true;
  r.provenance = ds.provenance;
  if (ds.samples.is_sparse())
    r.samples = ConstraintMatrix(std::move(out));
  else
    r.samples = ConstraintMatrix(DenseMatrix(out));
  return r;
}

inline Dataset scale_and_augment(const Dataset& ds) { return scale_and_augment(ds, column_divisors(ds)); }

enum class Covariance { Independent, Correlated };

constexpr std::string_view to_string(Covariance c) { return c == Covariance::Independent ? "ind" : "cor"; }

inline Covariance parse_covariance(std::string_view s) {
  if (s == "ind" || s == "independent") return Covariance::Independent;
  if (s == "cor" || s == "correlated") return Covariance::Correlated;
  throw Error(ErrorCode::InvalidArgument, "covariance must be 'ind' or 'cor', got '" + std::string(s) + "'");
}

struct CsInstance {
  Index n = 0;
  Index m = 0;
  Index k_star = 0;
  double flip_ratio = 0.0;
  Covariance covariance = Covariance::Independent;
  std::uint64_t seed = 0;
  DenseMatrix A0;
  Vector x_true;
  Vector c_clean;  // sgn(A0 x_true)
  Vector c_tilde;  // sgn(A0 x_true + noise)
  Vector c;        // c_tilde with flip_count signs flipped
  Index flip_count = 0;
};

/// Rows of A0 for Sigma_ij = 2^-|i-j| up to this n use the explicit Cholesky
/// factor; larger n uses the equivalent AR(1) recurrence.
inline constexpr Index kExplicitCholeskyMaxN = 1000;

inline DenseMatrix correlated_covariance(Index n) {
  DenseMatrix s(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) s(i, j) = std::pow(2.0, -static_cast<double>(std::abs(i - j)));
  return s;
}

/// Draw order: A0 row-major, support, nonzero values, noise, flip positions.
inline CsInstance generate_cs_instance(Index n, Index m, Index k_star, double flip_ratio, Covariance cov,
                                       std::uint64_t seed, Index explicit_cholesky_max_n = kExplicitCholeskyMaxN) {
  require(n >= 1 && m >= 1, ErrorCode::BadDimensions, "generate: n and m must be positive");
  require(k_star >= 1 && k_star <= n, ErrorCode::BadDimensions, "generate: k_star must lie in [1, n]");
  require(flip_ratio >= 0.0 && flip_ratio < 1.0, ErrorCode::BadDimensions, "generate: flip ratio must lie in [0, 1)");

  CsInstance inst;
  inst.n = n;
  inst.m = m;
  inst.k_star = k_star;
  inst.flip_ratio = flip_ratio;
  inst.covariance = cov;
  inst.seed = seed;
  Rng rng(seed);

  inst.A0.resize(m, n);
  Vector g(n);
  const bool explicit_factor = cov == Covariance::Correlated && n <= explicit_cholesky_max_n;
  DenseMatrix l;
  if (explicit_factor) l = linalg::cholesky_factor(correlated_covariance(n));
  const double innovation = std::sqrt(0.75);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < n; ++j) g(j) = rng.normal();
    if (cov == Covariance::Independent) {
      inst.A0.row(i) = g.transpose();
    } else if (explicit_factor) {
      inst.A0.row(i) = (l.triangularView<Eigen::Lower>() * g).transpose();
    } else {
      double prev = g(0);
      inst.A0(i, 0) = prev;
      for (Index j = 1; j < n; ++j) {
        prev = 0.5 * prev + innovation * g(j);
        inst.A0(i, j) = prev;
      }
    }
  }

  const IndexSet support = rng.sample(n, k_star);
  inst.x_true = Vector::Zero(n);
  for (Index j : support) inst.x_true(j) = rng.normal();
  inst.x_true /= inst.x_true.norm();

  const Vector clean = inst.A0 * inst.x_true;
  inst.c_clean = sgn(clean);
  Vector noisy = clean;
  for (Index i = 0; i < m; ++i) noisy(i) += 0.1 * rng.normal();
  inst.c_tilde = sgn(noisy);

  inst.flip_count = static_cast<Index>(std::ceil(flip_ratio * static_cast<double>(m)));
  inst.c = inst.c_tilde;
  for (Index i : rng.sample(m, inst.flip_count)) inst.c(i) = -inst.c(i);
  return inst;
}

enum class ProblemKind { Svm, Cs };

/// SVM: (0, 1). CS: (A0^T c / ||A0^T c||, 1).
inline Iterate starting_point(ProblemKind kind, const ConstraintMatrix& a0, const Vector& c, double tau = 0.5) {
  require(a0.rows() == c.size(), ErrorCode::DimensionMismatch, "starting_point: label count mismatch");
  Iterate w;
  w.tau = tau;
  w.lambda = Vector::Ones(a0.rows());
  if (kind == ProblemKind::Svm) {
    w.x = Vector::Zero(a0.cols());
    return w;
  }
  const Vector x = a0.transpose_times(c);
  const double nrm = x.norm();
  if (nrm == 0.0) throw Error(ErrorCode::ZeroStartVector, "starting_point: A0^T c is zero");
  w.x = x / nrm;
  return w;
}

}  // namespace hsco
