#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bmcc/bayes_factor.hpp"
#include "bmcc/chart.hpp"
#include "bmcc/dwr.hpp"
#include "bmcc/errors.hpp"
#include "bmcc/matrix.hpp"
#include "bmcc/rng.hpp"

namespace bmcc {

struct Scenario {
  std::string name;
  Vector mu;
  SpdMatrix cov;
};

// In-control N2(mu, V) and the three shifted configurations built from
// mu_d = [0.5, 0] and V_d = [[1, 2.5], [2.5, 8]].
inline std::array<Scenario, 4> study_scenarios() {
  const Vector mu = Vector::Zero(2);
  const Vector mu_d = (Vector(2) << 0.5, 0.0).finished();
  const SpdMatrix V((Matrix(2, 2) << 1.0, 2.0, 2.0, 5.0).finished());
  const SpdMatrix V_d((Matrix(2, 2) << 1.0, 2.5, 2.5, 8.0).finished());
  return {Scenario{"in_control", mu, V}, Scenario{"mean_shift", mu_d, V},
          Scenario{"cov_shift", mu, V_d}, Scenario{"both_shift", mu_d, V_d}};
}

inline std::optional<Scenario> find_scenario(const std::string& name) {
  for (auto& s : study_scenarios()) {
    if (s.name == name) return s;
  }
  return std::nullopt;
}

inline Series gen_iid(const Scenario& s, std::size_t n, RngStream& rng) {
  if (n == 0) throw EmptyInput("gen_iid needs n >= 1");
  return sample_mvn(s.mu, s.cov, n, rng);
}

/**
 * Realization of the local level process
 *
 *   y_t = mu_t + eps_t,  mu_t = mu_{t-1} + omega_t,  mu_0 = m0,
 *   eps_t ~ N(0, Sigma),  omega_t ~ N(0, Omega_t Sigma).
 *
 * By default Omega_t = P_{t-1}/delta - C_{t-1}, where C_0 = 0 and
 * C_t = P_{t-1} P_t, with P_t the filter's own recursion started at P0. This is
 * the evolution under which the discount filter is the exact Kalman filter,
 * so e_t ~ N(0, (delta + P_{t-1}) Sigma / delta) holds at every t.
 * Passing `constant_omega` replaces it by a fixed scale (0 gives i.i.d. data).
 */
inline Series gen_dwr(const DwrConfig& config, const SpdMatrix& sigma, std::size_t n,
                      RngStream& rng, std::optional<double> constant_omega = std::nullopt) {
  validate(config);
  if (sigma.dim() != config.p) throw DimensionMismatch("Sigma dimension differs from config.p");
  if (n == 0) throw EmptyInput("gen_dwr needs n >= 1");
  if (constant_omega && !(*constant_omega >= 0.0)) {
    throw InvalidConfig("evolution scale must be non-negative");
  }
  const Matrix& L = sigma.lower();
  const Eigen::Index p = config.p;
  Vector level = config.m0;
  Vector z(p);
  double P_prev = config.P0;  // P_{t-1}
  double C_prev = 0.0;        // C_{t-1}
  Series out;
  out.reserve(n);
  for (std::size_t t = 1; t <= n; ++t) {
    const double omega =
        constant_omega ? *constant_omega : std::max(0.0, P_prev / config.delta - C_prev);
    for (Eigen::Index j = 0; j < p; ++j) z(j) = rng.normal();
    level += std::sqrt(omega) * (L * z);
    for (Eigen::Index j = 0; j < p; ++j) z(j) = rng.normal();
    out.emplace_back(level + L * z);
    const double P_next = 1.0 / (config.delta + P_prev);
    C_prev = P_prev * P_next;
    P_prev = P_next;
  }
  return out;
}

// Stationary-start AR(1) path.
inline std::vector<double> gen_ar1(const Ar1Model& ar, std::size_t n, RngStream& rng) {
  validate(ar);
  const double sd = std::sqrt(ar.sigma2);
  std::vector<double> out;
  out.reserve(n);
  double x = ar.mean() + std::sqrt(ar.variance()) * rng.normal();
  for (std::size_t t = 0; t < n; ++t) {
    if (t > 0) x = ar.intercept + ar.phi * x + sd * rng.normal();
    out.push_back(x);
  }
  return out;
}

struct LbfStudyOptions {
  std::size_t n = 1000;
  std::size_t warmup = 100;
  double delta = 0.9;
  double P0 = 1.0 / 1000.0;
};

/**
 * LBF values of `n` i.i.d. draws from `s`, scored against the in-control
 * target. The filter is first warmed on `warmup` in-control draws so that
 * m, P and S exist before the first scored point; it keeps updating while
 * scoring.
 */
inline std::vector<double> lbf_study(const Scenario& s, RngStream& rng,
                                     const LbfStudyOptions& opt = {}) {
  const Scenario in_control = study_scenarios()[0];
  const TargetSpec target(in_control.mu, in_control.cov);
  FilterState filter = init(DwrConfig::with_zero_prior(s.mu.size(), opt.delta, opt.P0));
  for (const auto& y : gen_iid(in_control, opt.warmup, rng)) advance(filter, y);
  return lbf_series(gen_iid(s, opt.n, rng), filter, target);
}

struct HistogramBin {
  double lo;
  double hi;
  std::size_t count;
};

inline std::vector<HistogramBin> histogram(std::span<const double> x, std::size_t bins) {
  if (x.empty()) throw EmptyInput("histogram of empty sample");
  if (bins == 0) throw InvalidConfig("histogram needs at least one bin");
  const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
  const double lo = *mn;
  const double width = *mx > *mn ? (*mx - *mn) / static_cast<double>(bins) : 1.0;
  std::vector<HistogramBin> out(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b] = {lo + width * static_cast<double>(b), lo + width * static_cast<double>(b + 1), 0};
  }
  for (double v : x) {
    auto b = static_cast<std::size_t>((v - lo) / width);
    out[std::min(b, bins - 1)].count++;
  }
  return out;
}

}  // namespace bmcc
