#pragma once
// JSON containers for reports, generated instances, and verify inputs; trace CSV.

#include <cmath>
#include <limits>
#include <memory>
#include <ostream>
#include <string>

#include "json.hpp"

#include "hsco/dataio.hpp"
#include "hsco/error.hpp"
#include "hsco/linalg.hpp"
#include "hsco/model.hpp"
#include "hsco/solver.hpp"
#include "hsco/stationarity.hpp"

namespace hsco::io {

using Json = nlohmann::ordered_json;

/// Non-finite reals go out as the strings "inf", "-inf", "nan".
inline Json real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline double read_real(const Json& j, const std::string& what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw Error(ErrorCode::InvalidArgument, what + ": expected a number");
}

inline Json vector(const Vector& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(real(v(i)));
  return a;
}

inline Json matrix(const DenseMatrix& m) {
  Json a = Json::array();
  for (Index i = 0; i < m.rows(); ++i) a.push_back(vector(m.row(i).transpose()));
  return a;
}

inline Json index_set(const IndexSet& s) {
  Json a = Json::array();
  for (Index i : s) a.push_back(i);
  return a;
}

inline Vector read_vector(const Json& j, const std::string& what) {
  require(j.is_array(), ErrorCode::InvalidArgument, what + ": expected an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = read_real(j[i], what);
  return v;
}

inline DenseMatrix read_matrix(const Json& j, const std::string& what) {
  require(j.is_array(), ErrorCode::InvalidArgument, what + ": expected an array of rows");
  const auto rows = static_cast<Index>(j.size());
  const Index cols = rows == 0 ? 0 : static_cast<Index>(j[0].size());
  DenseMatrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const Vector r = read_vector(j[static_cast<std::size_t>(i)], what);
    require(r.size() == cols, ErrorCode::DimensionMismatch, what + ": ragged rows");
    m.row(i) = r.transpose();
  }
  return m;
}

inline const Json& field(const Json& j, const char* key, const std::string& what) {
  if (!j.is_object() || !j.contains(key))
    throw Error(ErrorCode::InvalidArgument, what + ": missing field '" + key + "'");
  return j.at(key);
}

inline Json report(const SolveReport& r, bool timing) {
  Json j;
  j["termination"] = std::string(to_string(r.termination));
  j["iterations"] = r.iterations;
  j["final_residual"] = real(r.final_residual);
  j["final_s"] = r.final_s;
  j["tau"] = real(r.tau);
  if (!r.failure_message.empty()) j["failure_message"] = r.failure_message;
  if (timing) j["wall_time"] = r.wall_time;
  j["x"] = vector(r.x);
  j["lambda"] = vector(r.lambda);
  return j;
}

inline Json report(const StationarityReport& r) {
  Json j;
  j["residual_norm"] = real(r.residual_norm);
  j["gradient_norm"] = real(r.gradient_norm);
  j["is_tau_stationary"] = r.is_tau_stationary;
  j["is_kkt"] = r.is_kkt;
  j["feasible"] = r.feasible;
  j["active_set"] = index_set(r.active_set);
  j["working_set"] = index_set(r.working_set);
  j["y_zero_tol"] = real(r.y_zero_tol);
  j["z_zero_tol"] = real(r.z_zero_tol);
  j["diagnostics_available"] = r.diagnostics_available;
  if (r.diagnostics_available) {
    j["tau_star"] = real(r.tau_star);
    j["tau_star_pi"] = real(r.tau_star_pi);
    j["sigma_min_HJ"] = real(r.sigma_min_HJ);
    j["c_star"] = r.c_star ? real(*r.c_star) : Json(nullptr);
    j["C_star"] = real(r.C_star);
  } else {
    j["diagnostics_note"] = r.diagnostics_note;
  }
  return j;
}

inline Json instance(const CsInstance& c) {
  Json j;
  j["n"] = c.n;
  j["m"] = c.m;
  j["k_star"] = c.k_star;
  j["flip_ratio"] = c.flip_ratio;
  j["covariance"] = std::string(to_string(c.covariance));
  j["seed"] = c.seed;
  j["flip_count"] = c.flip_count;
  j["A0"] = matrix(c.A0);
  j["x_true"] = vector(c.x_true);
  j["c_clean"] = vector(c.c_clean);
  j["c_tilde"] = vector(c.c_tilde);
  j["c"] = vector(c.c);
  return j;
}

inline CsInstance read_instance(const Json& j) {
  const std::string w = "instance";
  CsInstance c;
  c.n = field(j, "n", w).get<Index>();
  c.m = field(j, "m", w).get<Index>();
  c.k_star = field(j, "k_star", w).get<Index>();
  c.flip_ratio = read_real(field(j, "flip_ratio", w), w);
  c.covariance = parse_covariance(field(j, "covariance", w).get<std::string>());
  c.seed = field(j, "seed", w).get<std::uint64_t>();
  c.flip_count = field(j, "flip_count", w).get<Index>();
  c.A0 = read_matrix(field(j, "A0", w), "instance A0");
  c.x_true = read_vector(field(j, "x_true", w), "instance x_true");
  c.c_clean = read_vector(field(j, "c_clean", w), "instance c_clean");
  c.c_tilde = read_vector(field(j, "c_tilde", w), "instance c_tilde");
  c.c = read_vector(field(j, "c", w), "instance c");
  require(c.A0.rows() == c.m && c.A0.cols() == c.n && c.x_true.size() == c.n && c.c.size() == c.m &&
              c.c_clean.size() == c.m && c.c_tilde.size() == c.m,
          ErrorCode::DimensionMismatch, "instance: array sizes disagree with n and m");
  return c;
}

/// {"objective": {"type": "quadratic", "Q": [[..]], "c": [..]}
///             | {"type": "svm", "d_last": 1e-4}
///             | {"type": "smoothed_lq", "q": 0.9, "eps_smooth": .., "eta": 0.07},
///  "A": [[..]], "b": [..], "s": 1}
inline Problem read_problem(const Json& j) {
  const std::string w = "problem";
  const DenseMatrix a = read_matrix(field(j, "A", w), "problem A");
  const Vector b = read_vector(field(j, "b", w), "problem b");
  const auto s = field(j, "s", w).get<Index>();
  const Json& o = field(j, "objective", w);
  const auto type = field(o, "type", "objective").get<std::string>();
  const Index n = a.cols();
  std::shared_ptr<const Objective> f;
  if (type == "quadratic") {
    f = std::make_shared<QuadraticObjective>(read_matrix(field(o, "Q", "objective"), "objective Q"),
                                             read_vector(field(o, "c", "objective"), "objective c"));
  } else if (type == "svm") {
    f = std::make_shared<SvmObjective>(n, o.contains("d_last") ? read_real(o["d_last"], "d_last") : kDefaultDLast);
  } else if (type == "smoothed_lq") {
    const CsConstants k;
    f = std::make_shared<SmoothedLqObjective>(
        n, o.contains("q") ? read_real(o["q"], "q") : k.q,
        o.contains("eps_smooth") ? read_real(o["eps_smooth"], "eps_smooth") : 1.0 / static_cast<double>(n),
        o.contains("eta") ? read_real(o["eta"], "eta") : k.eta);
  } else {
    throw Error(ErrorCode::InvalidArgument, "objective: unknown type '" + type + "'");
  }
  return Problem(f, ConstraintMatrix(a), b, HeavisideBudget(a.rows(), s));
}

/// {"x": [..], "lambda": [..], "tau": 0.5}; tau defaults to 0.5.
inline Iterate read_point(const Json& j) {
  Iterate w;
  w.x = read_vector(field(j, "x", "point"), "point x");
  w.lambda = read_vector(field(j, "lambda", "point"), "point lambda");
  if (j.contains("tau")) w.tau = read_real(j["tau"], "point tau");
  return w;
}

inline void write_trace_csv(std::ostream& out, const std::vector<TraceEntry>& trace) {
  out << "iter,residual,s_k,tau_k,T_size\n";
  for (const auto& t : trace)
    out << t.iter << ',' << format_double(t.residual) << ',' << t.s << ',' << format_double(t.tau) << ','
        << t.working_set_size << '\n';
}

}  // namespace hsco::io
