#include <gtest/gtest.h>

#include <cmath>

#include "lnnpinn/problems/problems.hpp"

namespace lnnpinn::problems {
namespace {

using physics::DerivKey;

double at(const ProblemDef& p, std::vector<double> x, DerivKey key) {
  const std::vector<DerivKey> keys{key};
  return analytic_field(p)({x, {}}, key.order == 0 ? std::span<const DerivKey>{} : keys).get(key);
}

TEST(Advection, AnalyticValuesAtOrigin) {
  const auto p = advection_reaction();
  EXPECT_DOUBLE_EQ(at(p, {0, 0}, {0, 0}), 6.0);
  EXPECT_DOUBLE_EQ(at(p, {0, 0}, {0, 1}), -18.0);
  EXPECT_DOUBLE_EQ(at(p, {0, 0}, {1, 1}), -12.0);
  EXPECT_NEAR(at(p, {2, 0}, {0, 0}), 0.0148725, 1e-7);
}

TEST(Advection, PaperCountsAndSampleBounds) {
  const auto p = advection_reaction();
  EXPECT_EQ(p.sample_counts(), (std::vector<std::size_t>{2000, 1000, 1000}));
  EXPECT_EQ(p.train_iters, 8000);
  const auto terms = draw_terms(p, 0);
  EXPECT_EQ(terms[0].samples.size(), 2000u);
  for (const auto& s : terms[0].samples) {
    EXPECT_GE(s.x[0], 0.0);
    EXPECT_LE(s.x[0], 2.0);
    EXPECT_GE(s.x[1], 0.0);
    EXPECT_LE(s.x[1], 1.0);
  }
  for (const auto& s : terms[1].samples) EXPECT_EQ(s.x[1], 0.0);
  for (const auto& s : terms[2].samples) EXPECT_EQ(s.x[0], 2.0);
  EXPECT_EQ(terms[1].kind, physics::TermKind::kInitial);
  EXPECT_EQ(terms[2].kind, physics::TermKind::kDirichlet);
}

TEST(Laplace, ReferenceSatisfiesEdges) {
  const auto p = laplace_mixed();
  EXPECT_DOUBLE_EQ(at(p, {0.0, 0.4}, {0, 1}), 0.0);
  EXPECT_DOUBLE_EQ(at(p, {0.3, 0.4}, {0, 2}) + at(p, {0.3, 0.4}, {1, 2}), 0.0);
  EXPECT_EQ(p.sample_counts(), (std::vector<std::size_t>(5, 1000)));
  EXPECT_EQ(p.train_iters, 5000);
}

TEST(Heat, NondimensionalGroups) {
  const HeatConstants c = heat_constants();
  EXPECT_NEAR(c.source_nd(), 0.28301887, 1e-8);
  EXPECT_NEAR(c.convection_nd(), 0.04716981, 1e-8);
  EXPECT_NEAR(c.radial_solution(0.0), 3.0707547, 1e-7);
  EXPECT_NEAR(c.source_nd() / 2.0, c.convection_nd() * c.radial_solution(1.0), 1e-14);
}

TEST(Heat, CountsScalesAndNormals) {
  const auto p = disk_heat();
  EXPECT_EQ(p.sample_counts(), (std::vector<std::size_t>{3000, 500}));
  EXPECT_EQ(p.train_iters, 50000);
  EXPECT_NEAR(p.terms[1].term.scale, 1060.0, 1e-9);
  const auto terms = draw_terms(p, 7);
  for (const auto& s : terms[1].samples) {
    EXPECT_NEAR(std::hypot(s.x[0], s.x[1]), 1.0, 1e-15);
    EXPECT_DOUBLE_EQ(s.normal[0], s.x[0]);
  }
}

TEST(Heat, OverridesChangeConstants) {
  const auto p = disk_heat({{"h", 100.0}});
  EXPECT_NEAR(at(p, {0, 0}, {0, 0}), 0.28301887 / 4 + 0.28301887 / (2 * 15.0 / 159.0), 1e-7);
  EXPECT_THROW(disk_heat({{"k", 0.0}}), std::invalid_argument);
  EXPECT_THROW(disk_heat({{"bogus", 1.0}}), std::invalid_argument);
}

TEST(Beam, ReferenceExamples) {
  const auto p = poisson_beam();
  EXPECT_DOUBLE_EQ(at(p, {1, 0}, {0, 2}), 2.0);
  EXPECT_DOUBLE_EQ(at(p, {1, 0}, {1, 4}), 1.0);
  EXPECT_DOUBLE_EQ(at(p, {0.6, 0}, {1, 2}), 0.36);
  EXPECT_DOUBLE_EQ(at(p, {1, 0.7}, {0, 0}), std::exp(-0.7));
  EXPECT_EQ(p.terms.size(), 7u);
}

class ZeroResidual : public ::testing::TestWithParam<std::string> {};

TEST_P(ZeroResidual, AnalyticAdapterHasNegligibleLoss) {
  const auto p = make_problem(GetParam());
  for (std::uint64_t seed : {0u, 17u, 901u}) {
    const auto terms = draw_terms(p, seed);
    for (const auto& t : terms) {
      EXPECT_LT(physics::component_mse(t, analytic_field(p)), 1e-20) << t.name << " seed " << seed;
    }
  }
}

INSTANTIATE_TEST_SUITE_P(AllProblems, ZeroResidual, ::testing::ValuesIn(problem_names()));

TEST(Sampler, DiskIsAreaUniform) {
  const auto pts = sample({Region::kDisk, {}, {}, 2.0, {}, 10000}, 5);
  std::size_t inner = 0;
  for (const auto& s : pts) {
    const double r = std::hypot(s.x[0], s.x[1]);
    EXPECT_LE(r, 2.0);
    inner += r <= 2.0 / std::sqrt(2.0) ? 1 : 0;
  }
  EXPECT_NEAR(static_cast<double>(inner) / 1e4, 0.5, 0.02);
}

TEST(Sampler, DeterministicPerSeed) {
  const Sampler s{Region::kRectangle, {0, 0}, {1, 2}, 1.0, {}, 50};
  const auto a = sample(s, 9);
  const auto b = sample(s, 9);
  const auto c = sample(s, 10);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].x, b[i].x);
  EXPECT_NE(a[0].x, c[0].x);
  EXPECT_THROW(sample({Region::kDisk, {}, {}, 1.0, {}, 0}, 1), std::invalid_argument);
}

TEST(Problems, UnknownNameAndBadOverrides) {
  EXPECT_THROW(make_problem("wave"), std::invalid_argument);
  EXPECT_THROW(laplace_mixed({{"count.pde", 0}}), std::invalid_argument);
  EXPECT_THROW(laplace_mixed({{"count.pde", 2.5}}), std::invalid_argument);
  EXPECT_EQ(laplace_mixed({{"iters", 12}}).train_iters, 12);
}

TEST(EvalGridTest, DiskMaskKeepsInteriorOnly) {
  const auto pts = disk_heat().grid.points();
  for (const auto& x : pts) EXPECT_LE(x[0] * x[0] + x[1] * x[1], 1.0);
  EXPECT_GT(pts.size(), 7800u);
  EXPECT_LT(pts.size(), 8100u);
  EXPECT_EQ(laplace_mixed().grid.points().size(), 101u * 101u);
}

}  // namespace
}  // namespace lnnpinn::problems
