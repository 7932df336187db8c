#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lnnpinn/mc/mc_checks.hpp"

namespace lnnpinn::mc {
namespace {

const DiscreteMeasure kHalf{{0.5, 0.5}};
// phi = ||r||^2 = (1, 3) with W = I.
const ResidualTable kTwoPoint{{1.0}, {std::sqrt(3.0)}};
const WeightMatrix kIdentity{{1.0}};

DiscreteMeasure random_measure(std::mt19937_64& rng, std::size_t n, bool allow_zero = false) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> p(n);
  long double sum = 0.0L;
  for (auto& v : p) {
    v = allow_zero && u(rng) < 0.25 ? 0.0 : u(rng);
    sum += v;
  }
  if (sum == 0.0L) {
    p[0] = 1.0;
    sum = 1.0L;
  }
  for (auto& v : p) v = static_cast<double>(v / sum);
  // Put the rounding residue on the largest entry.
  long double total = 0.0L;
  for (double v : p) total += v;
  *std::max_element(p.begin(), p.end()) += static_cast<double>(1.0L - total);
  return {p};
}

ResidualTable random_table(std::mt19937_64& rng, std::size_t n, std::size_t comps) {
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  ResidualTable t(n, std::vector<double>(comps));
  for (auto& r : t)
    for (auto& v : r) v = u(rng);
  return t;
}

TEST(Measure, Validation) {
  EXPECT_THROW((DiscreteMeasure{{0.5, 0.6}}.validate()), std::invalid_argument);
  EXPECT_THROW((DiscreteMeasure{{1.5, -0.5}}.validate()), std::invalid_argument);
  EXPECT_THROW(DiscreteMeasure{{}}.validate(), std::invalid_argument);
  EXPECT_NO_THROW(kHalf.validate());
  EXPECT_THROW((WeightMatrix{{1.0, 0.0}}.validate()), std::invalid_argument);
}

TEST(Estimator, TwoPointExample) {
  const EstimatorMoments m = exact_estimator_moments(kHalf, kTwoPoint, kIdentity, 2);
  EXPECT_EQ(m.sequences, 4u);
  EXPECT_NEAR(m.mean, 2.0, 1e-15);
  EXPECT_NEAR(population_objective(kHalf, kTwoPoint, kIdentity), 2.0, 1e-15);
  EXPECT_NEAR(exact_estimator_mean(kHalf, kTwoPoint, kIdentity, 1), 2.0, 1e-15);
}

TEST(Estimator, WeightScalingIsQuadratic) {
  const double c = 3.0;
  EXPECT_NEAR(exact_estimator_mean(kHalf, kTwoPoint, WeightMatrix{{c}}, 3), c * c * 2.0, 1e-14);
}

TEST(Estimator, UnbiasedOnRandomSixPointMeasures) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const auto m = random_measure(rng, 6);
    const auto r = random_table(rng, 6, 3);
    const WeightMatrix w{{1.0, 0.7, 2.0}};
    const double j = population_objective(m, r, w);
    for (int n = 1; n <= 6; ++n) {
      EXPECT_NEAR(exact_estimator_mean(m, r, w, n), j, 1e-15 * std::max(1.0, j)) << "N=" << n;
    }
  }
}

TEST(Estimator, EnumerationLimit) {
  const DiscreteMeasure m{{0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1}};
  const ResidualTable r(10, std::vector<double>{1.0});
  EXPECT_NO_THROW(exact_estimator_mean(m, r, kIdentity, 6));
  EXPECT_THROW(exact_estimator_mean(m, r, kIdentity, 7), std::length_error);
  EXPECT_THROW(exact_estimator_mean(kHalf, kTwoPoint, kIdentity, 0), std::invalid_argument);
}

TEST(Variance, TwoPointExample) {
  const VarianceReport v = variance_bound_check(kHalf, kTwoPoint, kIdentity, 2);
  EXPECT_NEAR(v.variance, 0.5, 1e-15);
  EXPECT_NEAR(v.identity, 0.5, 1e-15);
  EXPECT_NEAR(v.bound, 2.5, 1e-15);
  EXPECT_TRUE(v.holds);
}

TEST(Variance, ConstantResidualHasZeroVariance) {
  const VarianceReport v = variance_bound_check(kHalf, {{2.0}, {2.0}}, kIdentity, 4);
  EXPECT_NEAR(v.variance, 0.0, 1e-15);
  EXPECT_TRUE(v.holds);
}

TEST(Variance, IdentityAndBoundOnRandomMeasures) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto m = random_measure(rng, 5);
    const auto r = random_table(rng, 5, 2);
    const WeightMatrix w{{0.5, 1.25}};
    for (int n = 1; n <= 5; ++n) {
      const VarianceReport v = variance_bound_check(m, r, w, n);
      EXPECT_NEAR(v.variance, v.identity, 1e-15 * std::max(1.0, v.identity));
      EXPECT_TRUE(v.holds);
    }
  }
}

TEST(Variance, HomogeneousInWeightScale) {
  const double c = 2.0;
  const VarianceReport a = variance_bound_check(kHalf, kTwoPoint, kIdentity, 2);
  const VarianceReport b = variance_bound_check(kHalf, kTwoPoint, WeightMatrix{{c}}, 2);
  EXPECT_NEAR(b.variance, std::pow(c, 4) * a.variance, 1e-14);
  EXPECT_NEAR(b.bound, std::pow(c, 4) * a.bound, 1e-14);
}

TEST(ImportanceSampling, WorkedExample) {
  const DiscreteMeasure pi{{0.25, 0.75}};
  EXPECT_NEAR(importance_sampling_mean(kHalf, pi, kTwoPoint, kIdentity, 1), 2.0, 1e-15);
  EXPECT_NEAR(importance_sampling_mean(kHalf, pi, kTwoPoint, kIdentity, 3), 2.0, 1e-15);
  EXPECT_NEAR(importance_sampling_mean(kHalf, kHalf, kTwoPoint, kIdentity, 2),
              exact_estimator_mean(kHalf, kTwoPoint, kIdentity, 2), 1e-15);
}

TEST(ImportanceSampling, AbsoluteContinuityRequired) {
  EXPECT_THROW(importance_sampling_mean(kHalf, DiscreteMeasure{{1.0, 0.0}}, kTwoPoint, kIdentity, 1),
               std::domain_error);
  // A proposal zero where the target is zero too is fine.
  EXPECT_NEAR(importance_sampling_mean(DiscreteMeasure{{1.0, 0.0}}, kHalf, kTwoPoint, kIdentity, 2), 1.0, 1e-15);
}

TEST(ImportanceSampling, UnbiasedOverRandomProposals) {
  std::mt19937_64 rng(99);
  const auto mu = random_measure(rng, 6);
  const auto r = random_table(rng, 6, 2);
  const WeightMatrix w{{1.0, 3.0}};
  const double j = population_objective(mu, r, w);
  for (int trial = 0; trial < 20; ++trial) {
    const auto pi = random_measure(rng, 6);
    EXPECT_NEAR(importance_sampling_mean(mu, pi, r, w, 3), j, 1e-15 * std::max(1.0, j));
  }
}

TEST(Slln, ShrinksAtRootNRate) {
  std::mt19937_64 rng(8);
  const auto m = random_measure(rng, 6);
  const auto r = random_table(rng, 6, 2);
  const TrendReport t = slln_trend(m, r, WeightMatrix{{1.0, 1.0}}, {10, 100, 1000}, 101, 0);
  ASSERT_EQ(t.points.size(), 3u);
  ASSERT_EQ(t.shrink_per_decade.size(), 2u);
  for (double f : t.shrink_per_decade) {
    EXPECT_GE(f, 2.0);
    EXPECT_LE(f, 5.0);
  }
  EXPECT_TRUE(t.non_increasing);
  EXPECT_TRUE(t.rate_ok);
}

TEST(Slln, DegenerateCasesHaveZeroError) {
  const TrendReport constant = slln_trend(kHalf, {{2.0}, {-2.0}}, kIdentity, {10, 100}, 11);
  EXPECT_EQ(constant.points[0].median_error, 0.0);
  EXPECT_EQ(constant.points[1].median_error, 0.0);
  EXPECT_TRUE(constant.rate_ok);
  const TrendReport atom = slln_trend(DiscreteMeasure{{1.0}}, {{0.7}}, kIdentity, {10, 100}, 11);
  EXPECT_EQ(atom.points[1].median_error, 0.0);
  EXPECT_THROW(slln_trend(kHalf, kTwoPoint, kIdentity, {100, 10}, 11), std::invalid_argument);
}

TEST(Slln, Deterministic) {
  const TrendReport a = slln_trend(kHalf, kTwoPoint, kIdentity, {10, 100}, 21, 4);
  const TrendReport b = slln_trend(kHalf, kTwoPoint, kIdentity, {10, 100}, 21, 4);
  EXPECT_EQ(a.points[0].median_error, b.points[0].median_error);
  EXPECT_EQ(a.points[1].median_error, b.points[1].median_error);
}

TEST(Invariance, ZeroResidualParameterIsTheMinimiserForEveryWeight) {
  const ResidualFamily family = [](double x, double theta) { return std::vector<double>{theta * x, 2.0 * theta * x * x}; };
  std::vector<double> thetas;
  for (int k = -10; k <= 10; ++k) thetas.push_back(0.1 * k);
  const std::vector<WeightMatrix> ws{{{1.0, 1.0}}, {{2.0, 0.5}}, {{10.0, 10.0}}};
  const InvarianceReport rep = minimizer_invariance_check(family, {1.0, 2.0}, kHalf, thetas, 0.0, ws);
  ASSERT_EQ(rep.rows.size(), 3u);
  EXPECT_TRUE(rep.holds);
  for (const auto& row : rep.rows) {
    EXPECT_EQ(row.objective_at_zero, 0.0);
    EXPECT_GT(row.min_elsewhere, 0.0);
    EXPECT_EQ(row.argmin, 0.0);
  }
  // Shifting the zero-residual parameter away from the true one breaks it.
  EXPECT_FALSE(minimizer_invariance_check(family, {1.0, 2.0}, kHalf, thetas, 0.5, ws).holds);
}

}  // namespace
}  // namespace lnnpinn::mc
