#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "bmcc/diagnostics.hpp"
#include "bmcc/simulate.hpp"
#include "bmcc/workflow.hpp"
#include "test_util.hpp"

using namespace bmcc;

TEST(Scenarios, Values) {
  const auto s = study_scenarios();
  ASSERT_EQ(s.size(), 4u);
  EXPECT_EQ(s[0].name, "in_control");
  EXPECT_EQ(s[0].mu, Vector::Zero(2));
  EXPECT_EQ(s[0].cov.value(), testutil::study_V());
  EXPECT_EQ(s[1].name, "mean_shift");
  EXPECT_EQ(s[1].mu, (Vector(2) << 0.5, 0.0).finished());
  EXPECT_EQ(s[1].cov.value(), testutil::study_V());
  EXPECT_EQ(s[2].name, "cov_shift");
  EXPECT_EQ(s[2].mu, Vector::Zero(2));
  EXPECT_EQ(s[3].name, "both_shift");
  EXPECT_EQ(s[3].mu, (Vector(2) << 0.5, 0.0).finished());
  EXPECT_EQ(s[3].cov.value(), (Matrix(2, 2) << 1.0, 2.5, 2.5, 8.0).finished());
  EXPECT_TRUE(find_scenario("cov_shift").has_value());
  EXPECT_FALSE(find_scenario("nope").has_value());
}

TEST(GenIid, MomentsAndDeterminism) {
  const Scenario ic = study_scenarios()[0];
  RngStream rng(41);
  const Vector m = sample_mean(gen_iid(ic, 1000, rng));
  EXPECT_LT(m.cwiseAbs().maxCoeff(), 0.15);

  RngStream a(42), b(42);
  const Series x = gen_iid(ic, 50, a), y = gen_iid(ic, 50, b);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(x[i], y[i]);
  EXPECT_THROW(gen_iid(ic, 0, a), EmptyInput);
}

TEST(GenIid, CovarianceConverges) {
  const Scenario s = study_scenarios()[3];
  RngStream rng(43);
  const Matrix c = sample_covariance(gen_iid(s, 100'000, rng));
  for (Eigen::Index i = 0; i < 2; ++i) EXPECT_NEAR(c(i, i) / s.cov.value()(i, i), 1.0, 0.05);
}

TEST(GenDwr, FilterIsSelfConsistent) {
  RngStream rng(44);
  const DwrConfig cfg = DwrConfig::with_zero_prior(2, 0.9, 1e-3);
  const Series y = gen_dwr(cfg, SpdMatrix::identity(2), 2000, rng);
  const FilterRun run = run_filter(y, cfg, nullptr, warmup_length(2));
  for (Eigen::Index i = 0; i < 2; ++i) {
    EXPECT_GT(run.report.msse(i), 0.8);
    EXPECT_LT(run.report.msse(i), 1.2);
  }
}

TEST(GenDwr, ZeroEvolutionIsIid) {
  DwrConfig cfg = DwrConfig::with_zero_prior(2, 0.7, 1e-3);
  cfg.m0 = (Vector(2) << 3.0, -1.0).finished();
  const SpdMatrix sigma(testutil::study_V());
  RngStream a(45);
  const Series y = gen_dwr(cfg, sigma, 20'000, a, 0.0);
  EXPECT_LT((sample_mean(y) - cfg.m0).cwiseAbs().maxCoeff(), 0.05);
  EXPECT_LT(testutil::rel_frobenius(sample_covariance(y), sigma.value()), 0.05);
  EXPECT_LT(std::abs(lag1_autocorr(coordinate(y, 0))), 0.03);
}

TEST(GenDwr, Determinism) {
  const DwrConfig cfg = DwrConfig::with_zero_prior(3, 0.5, 1e-3);
  RngStream a(46), b(46);
  const Series x = gen_dwr(cfg, SpdMatrix::identity(3), 100, a);
  const Series y = gen_dwr(cfg, SpdMatrix::identity(3), 100, b);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(x[i], y[i]);
  EXPECT_THROW(gen_dwr(cfg, SpdMatrix::identity(2), 10, a), DimensionMismatch);
  EXPECT_THROW(gen_dwr(cfg, SpdMatrix::identity(3), 10, a, -1.0), InvalidConfig);
}

TEST(GenAr1, Moments) {
  RngStream rng(47);
  const auto w = gen_ar1({0.0, 0.0, 2.0}, 100'000, rng);
  EXPECT_NEAR(variance(w) / 2.0, 1.0, 0.05);
  EXPECT_LT(std::abs(lag1_autocorr(w)), 0.02);

  const auto x = gen_ar1({0.0, 0.6, 1.0}, 10'000, rng);
  EXPECT_NEAR(lag1_autocorr(x), 0.6, 0.03);
  const auto big = gen_ar1({1.0, 0.6, 1.0}, 100'000, rng);
  EXPECT_NEAR(variance(big) / (1.0 / (1.0 - 0.36)), 1.0, 0.05);
  EXPECT_NEAR(mean(big), 2.5, 0.05);

  RngStream a(48), b(48);
  EXPECT_EQ(gen_ar1({0.0, 0.3, 1.0}, 100, a), gen_ar1({0.0, 0.3, 1.0}, 100, b));
  EXPECT_THROW(gen_ar1({0.0, 1.0, 1.0}, 10, a), NonStationary);
}

TEST(Histogram, CountsEveryValue) {
  const std::vector<double> x{0.0, 0.1, 0.5, 0.9, 1.0};
  const auto h = histogram(x, 2);
  ASSERT_EQ(h.size(), 2u);
  EXPECT_EQ(h[0].count + h[1].count, x.size());
  EXPECT_EQ(h[0].count, 2u);
  EXPECT_DOUBLE_EQ(h[1].hi, 1.0);
}

// Recorded run: in-control LBF is roughly symmetric and every shifted
// scenario moves the LBF mean upward.
TEST(LbfStudy, ScenarioSeparation) {
  const RngStream root(2024);
  const auto scenarios = study_scenarios();
  std::vector<double> means, ses;
  for (std::size_t k = 0; k < scenarios.size(); ++k) {
    RngStream rng = root.child(k);
    const auto l = lbf_study(scenarios[k], rng);
    ASSERT_EQ(l.size(), 1000u);
    means.push_back(mean(l));
    ses.push_back(std::sqrt(variance(l) / static_cast<double>(l.size())));
    if (k == 0) {
      EXPECT_LT(std::abs(skewness(l)), 0.5);
    }
  }
  for (std::size_t k = 1; k < 4; ++k) {
    const double se = std::hypot(ses[0], ses[k]);
    EXPECT_GT(means[k] - means[0], 3.0 * se) << scenarios[k].name;
  }
}
