#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>

#include "bmcc/errors.hpp"
#include "bmcc/matrix.hpp"

namespace bmcc {

/**
 * Multivariate discount-weighted-regression local level filter.
 *
 *   y_t = mu_t + eps_t,  mu_t = mu_{t-1} + omega_t,  eps_t ~ N(0, Sigma)
 *
 * With prior mu_0 | Sigma ~ N(m0, P0 Sigma) the posterior is
 * mu_t | Sigma, y^t ~ N(m_t, P_t Sigma), where
 *
 *   e_t = y_t - m_{t-1}
 *   m_t = (delta m_{t-1} + P_{t-1} y_t) / (delta + P_{t-1})
 *   P_t = 1 / (delta + P_{t-1})
 *   S_t = (1/t) sum_i delta e_i e_i' / (delta + P_{i-1})
 *
 * and the one-step forecast error density is N(0, (delta + P_t) S_t / delta).
 * The evolution covariance is implied by the discount factor and never
 * formed explicitly.
 */
struct DwrConfig {
  Eigen::Index p = 1;
  double delta = 0.9;
  Vector m0;
  double P0 = 1.0 / 1000.0;

  static DwrConfig with_zero_prior(Eigen::Index p, double delta, double P0 = 1.0 / 1000.0) {
    return DwrConfig{p, delta, Vector::Zero(p), P0};
  }
};

inline void validate_delta(double delta) {
  if (!(delta > 0.0 && delta <= 1.0)) {
    throw InvalidConfig("discount factor must lie in (0, 1], got " + std::to_string(delta));
  }
}

inline void validate(const DwrConfig& config) {
  validate_delta(config.delta);
  if (!(config.P0 > 0.0) || !std::isfinite(config.P0)) {
    throw InvalidConfig("prior scale P0 must be positive, got " + std::to_string(config.P0));
  }
  if (config.p < 1) throw InvalidConfig("dimension must be at least 1");
  if (config.m0.size() != config.p) {
    throw DimensionMismatch("prior mean has length " + std::to_string(config.m0.size()) +
                            ", expected " + std::to_string(config.p));
  }
}

struct FilterState {
  long t = 0;
  double delta = 1.0;
  Vector m;
  double P = 1.0;
  Matrix sum_outer;  // running sum of delta e_i e_i' / (delta + P_{i-1})

  Eigen::Index dim() const { return m.size(); }

  // S_t; the zero matrix while t == 0.
  Matrix S() const {
    if (t == 0) return Matrix::Zero(dim(), dim());
    Matrix s = sum_outer / static_cast<double>(t);
    return 0.5 * (s + s.transpose());
  }

  // S_t as a factorized SPD matrix, or nullopt while it is still singular.
  std::optional<SpdMatrix> S_spd() const {
    if (t == 0) return std::nullopt;
    try {
      return SpdMatrix(S());
    } catch (const NotPositiveDefinite&) {
      return std::nullopt;
    }
  }
};

struct ForecastErrorDensity {
  Vector mean;
  SpdMatrix cov;
};

struct StepResult {
  FilterState state;
  Vector error;
};

inline FilterState init(const DwrConfig& config) {
  validate(config);
  FilterState s;
  s.t = 0;
  s.delta = config.delta;
  s.m = config.m0;
  s.P = config.P0;
  s.sum_outer = Matrix::Zero(config.p, config.p);
  return s;
}

// Advances the filter in place and returns the one-step forecast error e_t.
inline Vector advance(FilterState& s, const Vector& y) {
  if (y.size() != s.dim()) {
    throw DimensionMismatch("observation has length " + std::to_string(y.size()) +
                            ", filter dimension is " + std::to_string(s.dim()));
  }
  const double denom = s.delta + s.P;
  Vector e = y - s.m;
  s.m = (s.delta * s.m + s.P * y) / denom;
  s.sum_outer.noalias() += (s.delta / denom) * (e * e.transpose());
  s.sum_outer = 0.5 * (s.sum_outer + s.sum_outer.transpose());
  s.P = 1.0 / denom;
  ++s.t;
  return e;
}

inline StepResult step(FilterState state, const Vector& y) {
  Vector e = advance(state, y);
  return StepResult{std::move(state), std::move(e)};
}

inline double forecast_scale(const FilterState& s) { return (s.delta + s.P) / s.delta; }

inline ForecastErrorDensity forecast_error_density(const FilterState& s) {
  auto S = s.S_spd();
  if (!S) {
    throw CovarianceNotReady("S_t is not positive definite at t = " + std::to_string(s.t));
  }
  return ForecastErrorDensity{Vector::Zero(s.dim()), S->scaled(forecast_scale(s))};
}

// Limit of P_t = 1 / (delta + P_{t-1}); independent of P0.
inline double steady_state_P(double delta) {
  validate_delta(delta);
  return (std::sqrt(delta * delta + 4.0) - delta) / 2.0;
}

// m0 + P/(delta+P) * sum e_i with P at its limit.
inline Vector steady_state_mean(const Vector& m0, const Series& errors, double delta) {
  const double P = steady_state_P(delta);
  Vector sum = Vector::Zero(m0.size());
  for (const auto& e : errors) {
    if (e.size() != m0.size()) throw DimensionMismatch("error vector length differs from m0");
    sum += e;
  }
  return m0 + (P / (delta + P)) * sum;
}

}  // namespace bmcc
