#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "bmcc/bayes_factor.hpp"
#include "bmcc/diagnostics.hpp"
#include "bmcc/simulate.hpp"
#include "test_util.hpp"

using namespace bmcc;
using testutil::random_spd;
using testutil::random_vector;

namespace {

// Normal density from the explicit inverse and determinant; shares no code
// with the Cholesky path used by lbf.
double normal_pdf(const Vector& x, const Vector& mean, const Matrix& cov) {
  const auto p = static_cast<double>(x.size());
  const Vector d = x - mean;
  const double q = d.dot(cov.inverse() * d);
  return std::exp(-0.5 * q) / std::sqrt(std::pow(2.0 * std::numbers::pi, p) * cov.determinant());
}

struct Config {
  Vector y;
  Predictive pred;
  TargetSpec target;
};

Config random_config(RngStream& rng) {
  const Eigen::Index p = 1 + static_cast<Eigen::Index>(rng.next_u64() % 4);
  const double delta = 0.1 + 0.9 * rng.uniform();
  Predictive pred{random_vector(p, rng), 0.05 + 2.0 * rng.uniform(), delta,
                  SpdMatrix(random_spd(p, rng) / static_cast<double>(p))};
  TargetSpec target(random_vector(p, rng), random_spd(p, rng) / static_cast<double>(p));
  return {random_vector(p, rng), std::move(pred), std::move(target)};
}

}  // namespace

TEST(Lbf, IdenticalDensitiesGiveZero) {
  RngStream rng(1);
  for (int rep = 0; rep < 100; ++rep) {
    const Eigen::Index p = 1 + rep % 5;
    const double delta = 0.1 + 0.9 * rng.uniform();
    const double P = 0.1 + rng.uniform();
    const Matrix V = random_spd(p, rng);
    const Vector mu = random_vector(p, rng);
    const Predictive pred{mu, P, delta, SpdMatrix(delta / (delta + P) * V)};
    const TargetSpec target(mu, V);
    const Vector y = random_vector(p, rng, 5.0);
    EXPECT_NEAR(lbf(y, pred, target), 0.0, 1e-10);
    EXPECT_NEAR(bf(y, pred, target), 1.0, 1e-10);
  }
}

TEST(Lbf, HandEvaluation) {
  FilterState s = init(DwrConfig::with_zero_prior(1, 0.9));
  s.t = 1;
  s.P = 0.1;
  s.sum_outer = Matrix::Constant(1, 1, 1.0);
  const TargetSpec target(Vector::Zero(1), Matrix::Identity(1, 1));
  const Vector y = Vector::Constant(1, 1.0);
  EXPECT_NEAR(lbf(y, s, target), -0.0026803, 1e-7);
  EXPECT_NEAR(bf(y, s, target), 0.9973233, 1e-7);
}

TEST(Lbf, MatchesDirectDensityRatio) {
  RngStream rng(2);
  for (int rep = 0; rep < 1000; ++rep) {
    const Config c = random_config(rng);
    const Matrix pred_cov = (c.pred.delta + c.pred.P) / c.pred.delta * c.pred.S.value();
    const double ratio = normal_pdf(c.y, c.pred.mean, pred_cov) /
                         normal_pdf(c.y, c.target.mu, c.target.V.value());
    const double value = bf(c.y, c.pred, c.target);
    EXPECT_NEAR(value / ratio, 1.0, 1e-10);
    EXPECT_NEAR(std::exp(lbf(c.y, c.pred, c.target)) / value, 1.0, 1e-10);
  }
}

TEST(Lbf, NotReadyAndMismatchErrors) {
  const TargetSpec target(Vector::Zero(2), Matrix::Identity(2, 2));
  EXPECT_THROW(lbf(Vector::Zero(2), init(DwrConfig::with_zero_prior(2, 0.5)), target),
               CovarianceNotReady);
  FilterState s = init(DwrConfig::with_zero_prior(2, 0.5));
  s.t = 1;
  s.sum_outer = Matrix::Identity(2, 2);
  EXPECT_THROW(lbf(Vector::Zero(3), s, target), DimensionMismatch);
  EXPECT_THROW(TargetSpec(Vector::Zero(3), Matrix::Identity(2, 2)), DimensionMismatch);
}

TEST(Bf, OverflowIsSignalled) {
  const Predictive pred{Vector::Zero(1), 0.5, 0.5, SpdMatrix::identity(1)};
  const TargetSpec target(Vector::Zero(1), Matrix::Identity(1, 1));
  const Vector far = Vector::Constant(1, 100.0);
  EXPECT_GT(lbf(far, pred, target), 709.0);
  EXPECT_THROW(bf(far, pred, target), Overflow);
}

TEST(Lbf, InvariantToCoordinatePermutation) {
  RngStream rng(3);
  for (int rep = 0; rep < 200; ++rep) {
    const Config c = random_config(rng);
    const Eigen::Index p = c.y.size();
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(p);
    perm.setIdentity();
    for (Eigen::Index i = p - 1; i > 0; --i) {
      std::swap(perm.indices()[i], perm.indices()[static_cast<Eigen::Index>(rng.next_u64() % (i + 1))]);
    }
    const Matrix Pm = perm;
    const Predictive pp{Pm * c.pred.mean, c.pred.P, c.pred.delta,
                        SpdMatrix(Pm * c.pred.S.value() * Pm.transpose())};
    const TargetSpec tp(Pm * c.target.mu, Matrix(Pm * c.target.V.value() * Pm.transpose()));
    EXPECT_NEAR(lbf(Pm * c.y, pp, tp), lbf(c.y, c.pred, c.target), 1e-10);
  }
}

TEST(Lbf, PenaltyGrowsAwayFromTargetMean) {
  const double delta = 0.8, P = steady_state_P(0.8);
  const Matrix V = testutil::study_V();
  const Vector mu = (Vector(2) << 1.0, -2.0).finished();
  const Predictive pred{mu, P, delta, SpdMatrix(delta / (delta + P) * V)};
  const TargetSpec target(mu, V);
  const Vector dir = (Vector(2) << 0.6, -0.8).finished();
  double prev_q = -1.0;
  for (double s = 0.0; s <= 10.0; s += 0.5) {
    const Vector y = mu + s * dir;
    const double q = target.V.quad_form(y - mu);
    EXPECT_GT(q, prev_q);
    prev_q = q;
    EXPECT_NEAR(std::exp(lbf(y, pred, target)), bf(y, pred, target), 1e-12);
  }
}

TEST(LbfSeries, AlignmentContract) {
  const TargetSpec target(Vector::Zero(2), testutil::study_V());
  RngStream rng(4);
  FilterState filter = init(DwrConfig::with_zero_prior(2, 0.9));
  const Scenario ic = study_scenarios()[0];
  for (const auto& y : gen_iid(ic, 20, rng)) advance(filter, y);

  FilterState copy = filter;
  EXPECT_TRUE(lbf_series({}, copy, target).empty());
  EXPECT_EQ(copy.t, filter.t);

  const Series data = gen_iid(ic, 37, rng);
  const auto out = lbf_series(data, filter, target);
  EXPECT_EQ(out.size(), data.size());
  EXPECT_EQ(filter.t, 20 + 37);
  // The first value is scored before the filter sees data[0].
  EXPECT_DOUBLE_EQ(out.front(), lbf(data.front(), copy, target));
}

TEST(LbfSeries, InControlStudyIsRoughlySymmetric) {
  RngStream rng(5);
  const auto x = lbf_study(study_scenarios()[0], rng);
  ASSERT_EQ(x.size(), 1000u);
  EXPECT_LT(std::abs(skewness(x)), 0.5);
}
