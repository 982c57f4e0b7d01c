#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bmcc/errors.hpp"
#include "bmcc/rng.hpp"

namespace bmcc {

// x_t = intercept + phi x_{t-1} + nu_t,  nu_t ~ N(0, sigma2)
struct Ar1Model {
  double intercept = 0.0;
  double phi = 0.0;
  double sigma2 = 1.0;

  double mean() const { return intercept / (1.0 - phi); }
  double variance() const { return sigma2 / (1.0 - phi * phi); }
};

inline void validate(const Ar1Model& ar) {
  if (!(std::abs(ar.phi) < 1.0)) {
    throw NonStationary("AR(1) coefficient must satisfy |phi| < 1, got " + std::to_string(ar.phi));
  }
  if (!(ar.sigma2 > 0.0) || !std::isfinite(ar.sigma2)) {
    throw InvalidConfig("AR(1) innovation variance must be positive");
  }
}

struct ChartConfig {
  double lambda = 0.05;
  double c = 3.0;
  double mu_z = 0.0;
  double sigma_z = 1.0;
  double ucl = 0.0;
  double lcl = 0.0;

  bool out_of_control(double z) const { return z > ucl || z < lcl; }
};

enum class ChartStatus { in_control, out_of_control };

struct ChartPoint {
  long t = 0;
  double x = 0.0;
  double z = 0.0;
  ChartStatus status = ChartStatus::in_control;
};

inline void validate_lambda(double lambda) {
  if (!(lambda > 0.0 && lambda <= 1.0)) {
    throw InvalidConfig("EWMA smoothing must lie in (0, 1], got " + std::to_string(lambda));
  }
}

inline double ewma_update(double z_prev, double x, double lambda) {
  validate_lambda(lambda);
  return lambda * x + (1.0 - lambda) * z_prev;
}

/**
 * Stationary variance of the EWMA of an AR(1) input:
 *
 *   sigma2 lambda {1 + phi (1 - lambda)}
 *   ------------------------------------------------
 *   (1 - phi^2) (2 - lambda) {1 - phi (1 - lambda)}
 */
inline double asymptotic_sigma_z2(double lambda, const Ar1Model& ar) {
  validate_lambda(lambda);
  if (!(ar.sigma2 > 0.0)) throw InvalidConfig("innovation variance must be positive");
  const double r = ar.phi * (1.0 - lambda);
  if (!(std::abs(r) < 1.0) || !(std::abs(ar.phi) < 1.0)) {
    throw InvalidConfig("asymptotic EWMA variance needs |phi| < 1");
  }
  return ar.sigma2 * lambda * (1.0 + r) / ((1.0 - ar.phi * ar.phi) * (2.0 - lambda) * (1.0 - r));
}

// Ordinary least squares of x_t on (1, x_{t-1}) or on x_{t-1} alone.
inline Ar1Model fit_ar1(std::span<const double> x, bool include_intercept = true) {
  if (x.size() < 10) {
    throw TooShort("AR(1) fit needs at least 10 values, got " + std::to_string(x.size()));
  }
  const std::size_t n = x.size() - 1;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t t = 1; t < x.size(); ++t) {
    sx += x[t - 1];
    sy += x[t];
    sxx += x[t - 1] * x[t - 1];
    sxy += x[t - 1] * x[t];
  }
  const auto nd = static_cast<double>(n);
  Ar1Model ar;
  double dof;
  if (include_intercept) {
    const double cxx = sxx - sx * sx / nd;
    if (!(cxx > 0.0)) throw ZeroVariance("AR(1) regressor has zero variance");
    ar.phi = (sxy - sx * sy / nd) / cxx;
    ar.intercept = (sy - ar.phi * sx) / nd;
    dof = nd - 2.0;
  } else {
    if (!(sxx > 0.0)) throw ZeroVariance("AR(1) regressor is identically zero");
    ar.phi = sxy / sxx;
    ar.intercept = 0.0;
    dof = nd - 1.0;
  }
  if (!(std::abs(ar.phi) < 1.0 - 1e-12)) {
    throw NonStationary("fitted AR(1) coefficient " + std::to_string(ar.phi) +
                        " is outside the stationary region");
  }
  double rss = 0.0;
  for (std::size_t t = 1; t < x.size(); ++t) {
    const double r = x[t] - ar.intercept - ar.phi * x[t - 1];
    rss += r * r;
  }
  ar.sigma2 = rss / dof;
  if (!(ar.sigma2 > 0.0)) throw ZeroVariance("AR(1) residual variance is zero");
  return ar;
}

inline ChartConfig design_chart(const Ar1Model& ar, double lambda, double c, double center) {
  if (!(c > 0.0)) throw InvalidConfig("limit multiplier must be positive");
  ChartConfig cfg;
  cfg.lambda = lambda;
  cfg.c = c;
  cfg.mu_z = center;
  cfg.sigma_z = std::sqrt(asymptotic_sigma_z2(lambda, ar));
  cfg.ucl = center + c * cfg.sigma_z;
  cfg.lcl = center - c * cfg.sigma_z;
  return cfg;
}

inline std::vector<ChartPoint> run_chart(std::span<const double> x, const ChartConfig& config,
                                         double z0, long first_t = 1) {
  validate_lambda(config.lambda);
  std::vector<ChartPoint> out;
  out.reserve(x.size());
  double z = z0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    z = config.lambda * x[i] + (1.0 - config.lambda) * z;
    out.push_back({first_t + static_cast<long>(i), x[i], z,
                   config.out_of_control(z) ? ChartStatus::out_of_control
                                            : ChartStatus::in_control});
  }
  return out;
}

inline std::vector<ChartPoint> run_chart(std::span<const double> x, const ChartConfig& config) {
  return run_chart(x, config, config.mu_z);
}

inline constexpr std::int64_t kRunLengthCap = 10'000'000;

struct RunLength {
  std::int64_t length = 0;
  bool censored = false;
};

// First time the EWMA of a stationary AR(1) stream leaves the limits.
inline RunLength simulate_run_length(const ChartConfig& config, const Ar1Model& ar,
                                     RngStream& rng, std::int64_t cap = kRunLengthCap) {
  validate(ar);
  const double sd = std::sqrt(ar.sigma2);
  const double lam = config.lambda;
  double x = ar.mean() + std::sqrt(ar.variance()) * rng.normal();
  double z = config.mu_z;
  for (std::int64_t t = 1; t <= cap; ++t) {
    x = ar.intercept + ar.phi * x + sd * rng.normal();
    z = lam * x + (1.0 - lam) * z;
    if (z > config.ucl || z < config.lcl) return {t, false};
  }
  return {cap, true};
}

struct ArlEstimate {
  double arl = 0.0;
  double std_error = 0.0;
  std::size_t reps = 0;
  std::size_t censored = 0;
  // Set when evaluation stopped early because the run-length total already
  // exceeded the budget; arl is then a lower bound.
  bool truncated = false;
};

/**
 * Mean of `reps` simulated in-control run lengths. Replication i draws from
 * rng.child(i), so repeated calls with the same stream reuse the same random
 * numbers for every chart (common random numbers).
 *
 * When `budget` > 0 the evaluation stops as soon as the summed run lengths
 * exceed it, which is enough to decide that the ARL exceeds budget / reps.
 */
inline ArlEstimate estimate_arl(const ChartConfig& config, const Ar1Model& ar, std::size_t reps,
                                const RngStream& rng, double budget = 0.0) {
  if (reps == 0) throw InvalidConfig("ARL estimation needs at least one replication");
  ArlEstimate est;
  est.reps = reps;
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t i = 0; i < reps; ++i) {
    RngStream r = rng.child(i);
    std::int64_t cap = kRunLengthCap;
    if (budget > 0.0) {
      cap = std::min<std::int64_t>(cap, static_cast<std::int64_t>(std::ceil(budget - sum)) + 1);
    }
    const RunLength rl = simulate_run_length(config, ar, r, cap);
    const auto len = static_cast<double>(rl.length);
    sum += len;
    sum_sq += len * len;
    if (rl.censored && rl.length == kRunLengthCap) ++est.censored;
    if (budget > 0.0 && sum > budget) {
      est.truncated = true;
      est.arl = budget / static_cast<double>(reps);
      return est;
    }
  }
  const auto n = static_cast<double>(reps);
  est.arl = sum / n;
  est.std_error = reps > 1 ? std::sqrt(std::max(0.0, (sum_sq - n * est.arl * est.arl) / (n - 1.0)) / n)
                           : 0.0;
  return est;
}

struct Calibration {
  double c = 0.0;
  ArlEstimate achieved;
  int iterations = 0;
};

inline constexpr double kCalibrationLow = 0.5;
inline constexpr double kCalibrationHigh = 6.0;

/**
 * Bisection on c over [0.5, 6] for the chart whose in-control ARL matches
 * target_arl. Stops when the Monte-Carlo ARL is within 2% of the target or
 * the bracket is narrower than 1e-3. Every candidate is scored on the same
 * replication streams, so the estimated ARL is monotone in c.
 */
inline Calibration calibrate(double lambda, const Ar1Model& ar, double target_arl,
                             std::size_t reps, const RngStream& rng) {
  validate_lambda(lambda);
  validate(ar);
  if (!(target_arl > 1.0)) throw InvalidConfig("target ARL must exceed 1");
  if (reps == 0) throw InvalidConfig("calibration needs at least one replication");

  const double budget = 1.05 * target_arl * static_cast<double>(reps);
  const auto evaluate = [&](double c) {
    return estimate_arl(design_chart(ar, lambda, c, ar.mean()), ar, reps, rng, budget);
  };

  double lo = kCalibrationLow, hi = kCalibrationHigh;
  if (evaluate(lo).arl >= target_arl) {
    throw BracketFailure("ARL at c = 0.5 already exceeds the target " + std::to_string(target_arl));
  }
  if (evaluate(hi).arl <= target_arl) {
    throw BracketFailure("ARL at c = 6 stays below the target " + std::to_string(target_arl));
  }

  Calibration result;
  while (true) {
    const double mid = 0.5 * (lo + hi);
    const ArlEstimate est = evaluate(mid);
    ++result.iterations;
    result.c = mid;
    result.achieved = est;
    if (!est.truncated && std::abs(est.arl - target_arl) <= 0.02 * target_arl) break;
    if (est.arl < target_arl) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-3) {
      result.c = 0.5 * (lo + hi);
      result.achieved = evaluate(result.c);
      break;
    }
  }
  return result;
}

inline double calibrate_c(double lambda, const Ar1Model& ar, double target_arl, std::size_t reps,
                          const RngStream& rng) {
  return calibrate(lambda, ar, target_arl, reps, rng).c;
}

// Longest run of consecutive z values strictly on one side of the center.
struct SideRun {
  long start_t = 0;
  long end_t = 0;
  int side = 0;  // +1 above center, -1 below
};

inline std::vector<SideRun> one_sided_runs(std::span<const ChartPoint> points, double center,
                                           std::size_t min_length) {
  std::vector<SideRun> runs;
  std::size_t begin = 0;
  int side = 0;
  const auto close = [&](std::size_t end) {
    if (side != 0 && end - begin >= min_length) {
      runs.push_back({points[begin].t, points[end - 1].t, side});
    }
  };
  for (std::size_t i = 0; i < points.size(); ++i) {
    const int s = points[i].z > center ? 1 : (points[i].z < center ? -1 : 0);
    if (s != side) {
      close(i);
      begin = i;
      side = s;
    }
  }
  close(points.size());
  return runs;
}

}  // namespace bmcc
