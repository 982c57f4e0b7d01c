#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bmcc/errors.hpp"
#include "bmcc/matrix.hpp"

namespace bmcc {

// Model-adequacy summary of one-step forecast errors.
struct FitReport {
  Vector msse;
  Vector mae;
  // Per coordinate; empty when that coordinate is not positive valued.
  std::vector<std::optional<double>> mape;
  std::size_t n = 0;
};

inline Series standardize_errors(const Series& errors, const std::vector<SpdMatrix>& covs) {
  if (errors.size() != covs.size()) {
    throw DimensionMismatch("errors and covariances are not aligned (" +
                            std::to_string(errors.size()) + " vs " +
                            std::to_string(covs.size()) + ")");
  }
  Series out;
  out.reserve(errors.size());
  for (std::size_t t = 0; t < errors.size(); ++t) {
    if (errors[t].size() != covs[t].dim()) {
      throw DimensionMismatch("error and covariance dimension differ at t = " +
                              std::to_string(t));
    }
    out.emplace_back(sym_inv_sqrt(covs[t]) * errors[t]);
  }
  return out;
}

inline Vector msse(const Series& e_star) {
  if (e_star.empty()) throw EmptyInput("MSSE of empty series");
  Vector acc = Vector::Zero(e_star.front().size());
  for (const auto& e : e_star) acc += e.cwiseAbs2();
  return acc / static_cast<double>(e_star.size());
}

inline Vector mae(const Series& errors) {
  if (errors.empty()) throw EmptyInput("MAE of empty series");
  Vector acc = Vector::Zero(errors.front().size());
  for (const auto& e : errors) acc += e.cwiseAbs();
  return acc / static_cast<double>(errors.size());
}

inline std::vector<std::optional<double>> mape(const Series& errors, const Series& ys) {
  if (errors.empty()) throw EmptyInput("MAPE of empty series");
  if (errors.size() != ys.size()) throw DimensionMismatch("MAPE inputs are not aligned");
  const auto p = errors.front().size();
  std::vector<std::optional<double>> out(static_cast<std::size_t>(p));
  for (Eigen::Index i = 0; i < p; ++i) {
    double acc = 0.0;
    bool positive = true;
    for (std::size_t t = 0; t < errors.size() && positive; ++t) {
      const double y = ys[t](i);
      if (!(y > 0.0)) {
        positive = false;
      } else {
        acc += std::abs(errors[t](i)) / y;
      }
    }
    if (positive) out[static_cast<std::size_t>(i)] = acc / static_cast<double>(errors.size());
  }
  return out;
}

namespace detail {

struct Moments {
  double mean;
  double m2;  // biased second central moment
};

inline Moments central_moments(std::span<const double> x) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double m2 = 0.0;
  for (double v : x) m2 += (v - mean) * (v - mean);
  m2 /= static_cast<double>(x.size());
  return {mean, m2};
}

inline void require_spread(std::span<const double> x, const char* what) {
  if (x.size() < 3) throw TooShort(std::string(what) + " needs at least 3 values");
}

}  // namespace detail

inline double lag1_autocorr(std::span<const double> x) {
  detail::require_spread(x, "lag-1 autocorrelation");
  const auto [mean, m2] = detail::central_moments(x);
  if (!(m2 > 0.0)) throw ZeroVariance("lag-1 autocorrelation of a constant series");
  double c1 = 0.0;
  for (std::size_t t = 1; t < x.size(); ++t) c1 += (x[t] - mean) * (x[t - 1] - mean);
  c1 /= static_cast<double>(x.size());
  return c1 / m2;
}

inline double skewness(std::span<const double> x) {
  detail::require_spread(x, "skewness");
  const auto [mean, m2] = detail::central_moments(x);
  if (!(m2 > 0.0)) throw ZeroVariance("skewness of a constant series");
  double m3 = 0.0;
  for (double v : x) m3 += (v - mean) * (v - mean) * (v - mean);
  m3 /= static_cast<double>(x.size());
  return m3 / std::pow(m2, 1.5);
}

inline double mean(std::span<const double> x) {
  if (x.empty()) throw EmptyInput("mean of empty series");
  return detail::central_moments(x).mean;
}

// Unbiased sample variance.
inline double variance(std::span<const double> x) {
  if (x.size() < 2) throw TooShort("variance needs at least 2 values");
  const auto m = detail::central_moments(x);
  return m.m2 * static_cast<double>(x.size()) / static_cast<double>(x.size() - 1);
}

// Extracts coordinate i of a vector series.
inline std::vector<double> coordinate(const Series& xs, Eigen::Index i) {
  std::vector<double> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(x(i));
  return out;
}

}  // namespace bmcc
