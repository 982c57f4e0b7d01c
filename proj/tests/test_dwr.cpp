#include <gtest/gtest.h>

#include <cmath>

#include "bmcc/diagnostics.hpp"
#include "bmcc/dwr.hpp"
#include "bmcc/simulate.hpp"
#include "test_util.hpp"

using namespace bmcc;
using testutil::study_V;
using testutil::rel_frobenius;

namespace {

FilterState scalar_state(double delta, double P, double S) {
  FilterState s = init(DwrConfig::with_zero_prior(1, delta));
  s.P = P;
  s.t = 1;
  s.sum_outer = Matrix::Constant(1, 1, S);
  return s;
}

}  // namespace

TEST(DwrInit, Construction) {
  const FilterState s = init(DwrConfig::with_zero_prior(2, 0.5, 0.001));
  EXPECT_EQ(s.t, 0);
  EXPECT_DOUBLE_EQ(s.P, 0.001);
  EXPECT_EQ(s.m, Vector::Zero(2));
  EXPECT_EQ(s.sum_outer, Matrix::Zero(2, 2));
  EXPECT_FALSE(s.S_spd().has_value());
}

TEST(DwrInit, InvalidConfigs) {
  EXPECT_THROW(init(DwrConfig::with_zero_prior(2, 0.0)), InvalidConfig);
  EXPECT_THROW(init(DwrConfig::with_zero_prior(2, 1.2)), InvalidConfig);
  EXPECT_THROW(init(DwrConfig::with_zero_prior(2, 0.5, 0.0)), InvalidConfig);
  EXPECT_NO_THROW(init(DwrConfig::with_zero_prior(2, 1.0)));
  DwrConfig bad = DwrConfig::with_zero_prior(2, 0.5);
  bad.m0 = Vector::Zero(3);
  EXPECT_THROW(init(bad), DimensionMismatch);
}

TEST(DwrStep, ZeroObservation) {
  const auto r = step(init(DwrConfig{1, 1.0, Vector::Zero(1), 1.0}), Vector::Zero(1));
  EXPECT_EQ(r.error(0), 0.0);
  EXPECT_EQ(r.state.m(0), 0.0);
  EXPECT_DOUBLE_EQ(r.state.P, 0.5);
  EXPECT_EQ(r.state.S()(0, 0), 0.0);
  EXPECT_EQ(r.state.t, 1);
}

TEST(DwrStep, HandEvaluation) {
  const auto r = step(init(DwrConfig{1, 0.5, Vector::Zero(1), 0.001}), Vector::Constant(1, 2.0));
  EXPECT_DOUBLE_EQ(r.error(0), 2.0);
  EXPECT_NEAR(r.state.m(0), 0.002 / 0.501, 1e-15);
  EXPECT_NEAR(r.state.m(0), 0.0039920, 1e-7);
  EXPECT_NEAR(r.state.P, 1.9960080, 1e-7);
  EXPECT_NEAR(r.state.S()(0, 0), 3.9920160, 1e-7);
}

TEST(DwrStep, DimensionMismatch) {
  EXPECT_THROW(step(init(DwrConfig::with_zero_prior(2, 0.5)), Vector::Zero(3)), DimensionMismatch);
}

TEST(DwrStep, ResidualIdentityOnRandomInputs) {
  RngStream rng(3);
  for (int rep = 0; rep < 100; ++rep) {
    const Eigen::Index p = 1 + rep % 4;
    const double delta = 0.05 + 0.95 * rng.uniform();
    FilterState s = init(DwrConfig{p, delta, testutil::random_vector(p, rng), 0.001 + rng.uniform()});
    for (int k = 0; k < rep % 7; ++k) advance(s, testutil::random_vector(p, rng, 3.0));
    const double P_old = s.P;
    const Vector y = testutil::random_vector(p, rng, 3.0);
    const auto r = step(s, y);
    const Vector residual = y - r.state.m;
    EXPECT_LT((residual - delta * r.error / (delta + P_old)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ForecastDensity, HandEvaluation) {
  const auto f = forecast_error_density(scalar_state(0.9, 0.1, 1.0));
  EXPECT_NEAR(f.cov.value()(0, 0), 1.111111, 1e-6);
  EXPECT_EQ(f.mean(0), 0.0);
}

TEST(ForecastDensity, SteadyStateScale) {
  FilterState s = init(DwrConfig::with_zero_prior(2, 1.0));
  s.t = 1;
  s.P = steady_state_P(1.0);
  s.sum_outer = study_V();
  const auto f = forecast_error_density(s);
  EXPECT_LT((f.cov.value() - 1.618034 * study_V()).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(ForecastDensity, NotReadyBeforeFirstStep) {
  EXPECT_THROW(forecast_error_density(init(DwrConfig::with_zero_prior(2, 0.5))), CovarianceNotReady);
  // After one step S has rank one in two dimensions.
  FilterState s = init(DwrConfig::with_zero_prior(2, 0.5));
  advance(s, (Vector(2) << 1, 2).finished());
  EXPECT_THROW(forecast_error_density(s), CovarianceNotReady);
}

TEST(SteadyStateP, ClosedForm) {
  EXPECT_NEAR(steady_state_P(1.0), 0.6180340, 1e-7);
  EXPECT_NEAR(steady_state_P(0.2), 0.9049876, 1e-7);
  for (double d = 0.01; d <= 1.0; d += 0.01) {
    const double P = steady_state_P(d);
    EXPECT_NEAR(P, 1.0 / (d + P), 1e-12);
  }
  EXPECT_THROW(steady_state_P(0.0), InvalidConfig);
  EXPECT_THROW(steady_state_P(1.5), InvalidConfig);
}

TEST(SteadyStateMean, KnownValues) {
  const Vector m0 = (Vector(2) << 1, -1).finished();
  EXPECT_EQ(steady_state_mean(m0, {}, 0.5), m0);
  EXPECT_NEAR(steady_state_mean(Vector::Zero(1), {Vector::Constant(1, 1.0)}, 1.0)(0), 0.381966, 1e-6);
}

TEST(SteadyStateMean, AgreesWithExactRecursionStartedAtTheLimit) {
  // With P0 at the limit every gain equals P/(delta+P), so the closed form is
  // exact; from P0 = 1/1000 the first few gains differ and so does the sum.
  RngStream rng(8);
  const double delta = 0.7;
  const SpdMatrix sigma(study_V());
  DwrConfig cfg{2, delta, Vector::Zero(2), steady_state_P(delta)};
  const Series ys = gen_dwr(cfg, sigma, 100, rng);
  FilterState s = init(cfg);
  Series errors;
  for (const auto& y : ys) errors.push_back(advance(s, y));
  EXPECT_LT((steady_state_mean(cfg.m0, errors, delta) - s.m).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(DwrProperties, PConvergesForEveryGridDelta) {
  for (int k = 1; k <= 9; ++k) {
    const double delta = 0.1 * k;
    FilterState s = init(DwrConfig::with_zero_prior(1, delta));
    const double limit = steady_state_P(delta);
    // The contraction factor near the limit is P^2, slowest at delta = 0.1.
    const int settled = k == 1 ? 214 : 200;
    for (int t = 1; t <= 400; ++t) {
      advance(s, Vector::Zero(1));
      if (t >= settled) {
        ASSERT_LT(std::abs(s.P - limit), 1e-9) << "delta " << delta << " t " << t;
      }
    }
  }
}

TEST(DwrProperties, SlowestConvergenceValue) {
  FilterState s = init(DwrConfig::with_zero_prior(1, 0.1));
  for (int t = 1; t <= 200; ++t) advance(s, Vector::Zero(1));
  EXPECT_NEAR(s.P - steady_state_P(0.1), -3.758517e-9, 1e-14);
}

TEST(DwrProperties, PBelowOneAfterBurnIn) {
  const auto first_all_below_one = [](double delta) {
    FilterState s = init(DwrConfig::with_zero_prior(1, delta));
    int last_at_or_above = 0;
    for (int t = 1; t <= 100; ++t) {
      advance(s, Vector::Zero(1));
      if (s.P >= 1.0) last_at_or_above = t;
    }
    return last_at_or_above;
  };
  EXPECT_LE(first_all_below_one(0.2), 13);
  EXPECT_LE(first_all_below_one(0.9), 1);
}

TEST(DwrProperties, CovarianceEstimatorIsUnbiased) {
  const Matrix sigma = study_V();
  const DwrConfig cfg = DwrConfig::with_zero_prior(2, 0.8);
  const RngStream root(77);
  Matrix acc = Matrix::Zero(2, 2);
  const int reps = 500;
  for (int r = 0; r < reps; ++r) {
    RngStream rng = root.child(r);
    FilterState s = init(cfg);
    for (const auto& y : gen_dwr(cfg, SpdMatrix(sigma), 200, rng)) advance(s, y);
    acc += s.S();
  }
  EXPECT_LT(rel_frobenius(acc / reps, sigma), 0.05);
}

TEST(DwrProperties, ForecastErrorsApproximatelyUncorrelated) {
  RngStream rng(12);
  const DwrConfig cfg = DwrConfig::with_zero_prior(2, 0.9);
  FilterState s = init(cfg);
  Series errors;
  for (const auto& y : gen_dwr(cfg, SpdMatrix(study_V()), 2000, rng)) errors.push_back(advance(s, y));
  const Series tail(errors.begin() + 50, errors.end());
  for (Eigen::Index i = 0; i < 2; ++i) {
    EXPECT_LT(std::abs(lag1_autocorr(coordinate(tail, i))), 0.1);
  }
}

TEST(DwrProperties, SRemainsSymmetric) {
  RngStream rng(4);
  FilterState s = init(DwrConfig::with_zero_prior(3, 0.6));
  for (int t = 0; t < 1000; ++t) advance(s, testutil::random_vector(3, rng, 100.0));
  EXPECT_EQ(s.sum_outer, s.sum_outer.transpose());
  EXPECT_TRUE(s.S_spd().has_value());
}
