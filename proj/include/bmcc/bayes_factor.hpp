#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "bmcc/dwr.hpp"
#include "bmcc/errors.hpp"
#include "bmcc/matrix.hpp"

namespace bmcc {

// In-control target error density: y_t - mu ~ N(0, V).
struct TargetSpec {
  Vector mu;
  SpdMatrix V;
  double logdetV;

  TargetSpec(Vector mean, SpdMatrix dispersion)
      : mu(std::move(mean)), V(std::move(dispersion)), logdetV(V.log_det()) {
    if (mu.size() != V.dim()) {
      throw DimensionMismatch("target mean has length " + std::to_string(mu.size()) +
                              ", dispersion has dim " + std::to_string(V.dim()));
    }
  }

  TargetSpec(Vector mean, const Matrix& dispersion)
      : TargetSpec(std::move(mean), SpdMatrix(dispersion)) {}

  Eigen::Index dim() const { return mu.size(); }
};

// The quantities the predictive density at time t depends on:
// e_t ~ N(0, (delta + P) S / delta) with e_t = y_t - mean.
struct Predictive {
  Vector mean;
  double P;
  double delta;
  SpdMatrix S;
};

inline Predictive predictive_from(const FilterState& state) {
  auto S = state.S_spd();
  if (!S) {
    throw CovarianceNotReady("LBF needs a positive definite S, filter is at t = " +
                             std::to_string(state.t));
  }
  return Predictive{state.m, state.P, state.delta, std::move(*S)};
}

/**
 * Log Bayes factor of the one-step predictive error density against the
 * target error density, both evaluated at y:
 *
 *   p/2 log delta + 1/2 log det V - p/2 log(delta + P) - 1/2 log det S
 *     + 1/2 (y - mu)' V^{-1} (y - mu)
 *     - delta (y - m)' S^{-1} (y - m) / (2 (delta + P))
 */
inline double lbf(const Vector& y, const Predictive& pred, const TargetSpec& target) {
  const auto p = static_cast<double>(y.size());
  if (y.size() != target.dim() || y.size() != pred.mean.size() || y.size() != pred.S.dim()) {
    throw DimensionMismatch("LBF operands disagree on dimension");
  }
  const double denom = pred.delta + pred.P;
  const double q_target = target.V.quad_form(y - target.mu);
  const double q_pred = pred.S.quad_form(y - pred.mean);
  return 0.5 * p * std::log(pred.delta) + 0.5 * target.logdetV - 0.5 * p * std::log(denom) -
         0.5 * pred.S.log_det() + 0.5 * q_target - pred.delta * q_pred / (2.0 * denom);
}

// Uses the pre-update quantities m_{t-1}, P_{t-1}, S_{t-1} held by state.
inline double lbf(const Vector& y, const FilterState& state, const TargetSpec& target) {
  return lbf(y, predictive_from(state), target);
}

inline double bf_from_lbf(double log_bf) {
  const double v = std::exp(log_bf);
  if (!std::isfinite(v) || v < std::numeric_limits<double>::min()) {
    throw Overflow("Bayes factor exp(" + std::to_string(log_bf) +
                   ") is outside the double range; use lbf");
  }
  return v;
}

inline double bf(const Vector& y, const Predictive& pred, const TargetSpec& target) {
  return bf_from_lbf(lbf(y, pred, target));
}

inline double bf(const Vector& y, const FilterState& state, const TargetSpec& target) {
  return bf_from_lbf(lbf(y, state, target));
}

// Scores each observation before folding it into the filter.
inline std::vector<double> lbf_series(const Series& data, FilterState& filter,
                                      const TargetSpec& target) {
  std::vector<double> out;
  out.reserve(data.size());
  for (const auto& y : data) {
    out.push_back(lbf(y, filter, target));
    advance(filter, y);
  }
  return out;
}

}  // namespace bmcc
