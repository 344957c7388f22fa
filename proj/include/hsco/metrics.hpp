#pragma once
// Classification accuracy, 1-bit recovery metrics and trial aggregation.

#include <cmath>
#include <limits>
#include <vector>

#include "hsco/dataio.hpp"
#include "hsco/error.hpp"
#include "hsco/linalg.hpp"

namespace hsco {

namespace detail {

inline Index sign_mismatches(const Vector& scores, const Vector& c) {
  Index bad = 0;
  for (Index i = 0; i < scores.size(); ++i)
    if (sgn(scores(i)) != c(i)) ++bad;
  return bad;
}

}  // namespace detail

/// 1 - ||sgn(A0 x) - c||_0 / m_eff, sgn(0) = -1. m_eff must equal the row count.
inline double classification_accuracy(const ConstraintMatrix& a0, const Vector& x, const Vector& c, Index m_eff) {
  require(a0.rows() == c.size(), ErrorCode::DimensionMismatch, "accuracy: label count mismatch");
  require(m_eff == a0.rows() && m_eff > 0, ErrorCode::DimensionMismatch, "accuracy: m_eff must equal the row count");
  const Vector scores = a0.times(x);
  return 1.0 - static_cast<double>(detail::sign_mismatches(scores, c)) / static_cast<double>(m_eff);
}

inline double classification_accuracy(const ConstraintMatrix& a0, const Vector& x, const Vector& c) {
  return classification_accuracy(a0, x, c, a0.rows());
}

struct RecoveryMetrics {
  double snr = 0.0;
  double hd = 0.0;
  double he = 0.0;
};

/// x is expected to be unit length already.
inline RecoveryMetrics recovery_metrics(const Vector& x, const Vector& x_true, const ConstraintMatrix& a0,
                                        const Vector& c_clean, const Vector& c_observed) {
  require(x.size() == x_true.size() && x.size() == a0.cols(), ErrorCode::DimensionMismatch,
          "recovery_metrics: signal length mismatch");
  require(c_clean.size() == a0.rows() && c_observed.size() == a0.rows(), ErrorCode::DimensionMismatch,
          "recovery_metrics: sign vector length mismatch");
  RecoveryMetrics r;
  const double err = (x - x_true).norm();
  r.snr = err == 0.0 ? std::numeric_limits<double>::infinity() : -20.0 * std::log10(err);
  const Vector scores = a0.times(x);
  const auto m = static_cast<double>(a0.rows());
  r.hd = static_cast<double>(detail::sign_mismatches(scores, c_observed)) / m;
  r.he = static_cast<double>(detail::sign_mismatches(scores, c_clean)) / m;
  return r;
}

struct TrialResult {
  double snr = 0.0;
  double hd = 0.0;
  double he = 0.0;
  double acc = 0.0;
  double time = 0.0;
  double iterations = 0.0;
};

struct Aggregate {
  TrialResult mean;
  TrialResult stddev;  // sample standard deviation, 0 for a single trial
  Index count = 0;
  Index snr_excluded = 0;  // +inf SNR values left out of the SNR statistics
};

inline Aggregate aggregate(const std::vector<TrialResult>& trials) {
  if (trials.empty()) throw Error(ErrorCode::EmptyTrialList, "aggregate: no trials");
  Aggregate a;
  a.count = static_cast<Index>(trials.size());

  auto stats = [](const std::vector<double>& v, double& mean, double& sd) {
    if (v.empty()) {
      mean = std::numeric_limits<double>::infinity();
      sd = 0.0;
      return;
    }
    double sum = 0.0;
    for (double x : v) sum += x;
    mean = sum / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  };

  std::vector<double> snr, hd, he, acc, time, iters;
  for (const auto& t : trials) {
    if (std::isinf(t.snr) && t.snr > 0.0)
      ++a.snr_excluded;
    else
      snr.push_back(t.snr);
    hd.push_back(t.hd);
    he.push_back(t.he);
    acc.push_back(t.acc);
    time.push_back(t.time);
    iters.push_back(t.iterations);
  }
  stats(snr, a.mean.snr, a.stddev.snr);
  stats(hd, a.mean.hd, a.stddev.hd);
  stats(he, a.mean.he, a.stddev.he);
  stats(acc, a.mean.acc, a.stddev.acc);
  stats(time, a.mean.time, a.stddev.time);
  stats(iters, a.mean.iterations, a.stddev.iterations);
  return a;
}

}  // namespace hsco
