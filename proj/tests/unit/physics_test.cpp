#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "lnnpinn/physics/network_loss.hpp"
#include "lnnpinn/physics/physics.hpp"
#include "lnnpinn/problems/problems.hpp"
#include "../support/oracles.hpp"

namespace lnnpinn::physics {
namespace {

FieldFunction constant_field(double c) {
  return [c](const SamplePoint&, std::span<const DerivKey> keys) {
    FieldEval<double> f;
    f.value = c;
    for (const DerivKey& k : keys) f.derivs.emplace_back(k, 0.0);
    return f;
  };
}

ResidualTerm constant_term(const std::string& name, TermKind kind, double residual_value, double weight = 1.0) {
  ResidualTerm t;
  t.name = name;
  t.kind = kind;
  t.weight = weight;
  t.samples = {{{0.3, 0.4}, {}}, {{0.1, 0.9}, {}}};
  t.components = {{{LinearPart{{0, 0}, 1.0, {}}}, [residual_value](const SamplePoint&) { return -residual_value; }}};
  return t;
}

TEST(Scales, UnitReferencesGiveUnitScales) {
  const CoefficientMagnitude c{1.0, 2, 0};
  const ScaleSet s = compute_scales({1.0, 1.0, 1.0, 1.0}, std::span(&c, 1));
  EXPECT_DOUBLE_EQ(s.interior, 1.0);
  EXPECT_DOUBLE_EQ(s.dirichlet, 1.0);
  EXPECT_DOUBLE_EQ(s.flux, 1.0);
}

TEST(Scales, HeatFluxScale) {
  const CoefficientMagnitude c{159.0, 2, 0};
  const ScaleSet s = compute_scales({0.15, 1.0, 1.0, 159.0}, std::span(&c, 1));
  EXPECT_NEAR(s.flux, 1060.0, 1e-9);
  EXPECT_NEAR(s.interior, 159.0 / 0.0225, 1e-9);
  EXPECT_EQ(s.provenance, ScaleProvenance::kReference);
}

TEST(Scales, NonPositiveReferenceThrows) {
  const CoefficientMagnitude c{1.0, 2, 0};
  EXPECT_THROW(compute_scales({0.0, 1.0, 1.0, 1.0}, std::span(&c, 1)), std::invalid_argument);
  EXPECT_THROW(compute_scales({1.0, 1.0, -1.0, 1.0}, std::span(&c, 1)), std::invalid_argument);
}

TEST(ComponentMse, SingleSampleSquaresResidual) {
  ResidualTerm t = constant_term("c", TermKind::kPde, 3.0);
  t.samples.resize(1);
  EXPECT_DOUBLE_EQ(component_mse(t, constant_field(0.0)), 9.0);
}

TEST(ComponentMse, ZeroNetworkOnLaplaceTopEdge) {
  const auto terms = problems::draw_terms(problems::laplace_mixed(), 3);
  const auto top = std::find_if(terms.begin(), terms.end(), [](const ResidualTerm& t) { return t.name == "top"; });
  ASSERT_NE(top, terms.end());
  EXPECT_DOUBLE_EQ(component_mse(*top, constant_field(0.0)), 1.0);
}

TEST(ComponentMse, EmptySampleSetThrows) {
  ResidualTerm t = constant_term("c", TermKind::kPde, 1.0);
  t.samples.clear();
  EXPECT_THROW(component_mse(t, constant_field(0.0)), std::invalid_argument);
}

TEST(ComponentMse, InvariantUnderSamplePermutation) {
  auto terms = problems::draw_terms(problems::poisson_beam({{"count.pde", 50}}), 11);
  const auto net = net::init(net::Arch::kLnn, 2, 1, 6, 2, 5);
  const auto map = problems::poisson_beam().input_map;
  const FieldFunction f = network_field(net, map);
  const double before = component_mse(terms[0], f);
  std::mt19937 rng(2);
  std::shuffle(terms[0].samples.begin(), terms[0].samples.end(), rng);
  EXPECT_NEAR(component_mse(terms[0], f), before, 1e-14 * std::abs(before));
}

TEST(CompositeLoss, WeightedSum) {
  const std::vector<ResidualTerm> terms{constant_term("a", TermKind::kPde, std::sqrt(2.0), 1.0),
                                        constant_term("b", TermKind::kDirichlet, std::sqrt(3.0), 10.0)};
  const LossBreakdown b = composite_loss(terms, constant_field(0.0));
  EXPECT_NEAR(b.total, 32.0, 1e-12);
  ASSERT_EQ(b.terms.size(), 2u);
  EXPECT_NEAR(b.terms[0].second, 2.0, 1e-14);
  EXPECT_NEAR(b.terms[1].second, 3.0, 1e-14);
}

TEST(CompositeLoss, RequiresPdeTerm) {
  const std::vector<ResidualTerm> terms{constant_term("b", TermKind::kDirichlet, 1.0)};
  EXPECT_THROW(composite_loss(terms, constant_field(0.0)), std::invalid_argument);
  EXPECT_THROW(BatchedLoss{terms}, std::invalid_argument);
}

TEST(CompositeLoss, ZeroResidualIsScaleInvariant) {
  auto terms = problems::draw_terms(problems::advection_reaction(), 4);
  const auto field = problems::analytic_field(problems::advection_reaction());
  for (double s : {1e-3, 1.0, 1e4}) {
    for (auto& t : terms) t.scale = s;
    EXPECT_LT(composite_loss(terms, field).total, 1e-20);
  }
}

TEST(Balance, EqualEnergiesGiveOne) {
  EXPECT_DOUBLE_EQ(balance_from_energies({{"a", 2.0}, {"b", 2.0}, {"c", 2.0}}).kappa, 1.0);
}

TEST(Balance, RatioOfExtremes) {
  const auto r = balance_from_energies({{"a", 1.0}, {"b", 4.0}});
  EXPECT_DOUBLE_EQ(r.kappa, 4.0);
  EXPECT_FALSE(r.degenerate);
}

TEST(Balance, ZeroEnergyIsDegenerate) {
  const auto r = balance_from_energies({{"a", 0.0}, {"b", 4.0}});
  EXPECT_TRUE(std::isinf(r.kappa));
  EXPECT_TRUE(r.degenerate);
}

TEST(Balance, ReportFromTerms) {
  const std::vector<ResidualTerm> terms{constant_term("a", TermKind::kPde, 1.0),
                                        constant_term("b", TermKind::kDirichlet, 3.0)};
  EXPECT_NEAR(balance_report(terms, constant_field(0.0)).kappa, 9.0, 1e-12);
}

struct LossCase {
  std::string problem;
  net::Arch arch;
};

class BatchedLossAgreement : public ::testing::TestWithParam<LossCase> {};

TEST_P(BatchedLossAgreement, MatchesScalarPathsAndFiniteDifferences) {
  const auto& c = GetParam();
  problems::Overrides small;
  const auto full = problems::make_problem(c.problem);
  for (const auto& t : full.terms) small["count." + t.term.name] = 6;
  const auto problem = problems::make_problem(c.problem, small);
  const auto terms = problems::draw_terms(problem, 21);
  net::NetworkParams p = net::init(c.arch, 2, 1, 5, 2, 9);
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (double& v : p.flat) v += u(rng);

  const BatchedLoss batched(terms);
  std::vector<double> grad(p.size());
  const LossBreakdown b = batched.evaluate(p, problem.input_map, grad);
  const LossBreakdown ref = composite_loss(terms, network_field(p, problem.input_map));
  EXPECT_LT(testing::rel_error(b.total, ref.total), 1e-11);
  for (std::size_t i = 0; i < terms.size(); ++i) {
    EXPECT_LT(testing::rel_error(b.terms[i].second, ref.terms[i].second), 1e-11) << terms[i].name;
  }

  ad::Tape tape;
  std::vector<ad::Var> theta;
  for (double v : p.flat) theta.push_back(tape.parameter(v));
  const ad::Var root = tape_loss(tape, theta, p, problem.input_map, terms);
  EXPECT_LT(testing::rel_error(root.value(), ref.total), 1e-11);
  const ad::Grad g = ad::backward(tape, root);

  auto loss_at = [&](std::span<const double> flat) {
    net::NetworkParams q = p;
    q.flat.assign(flat.begin(), flat.end());
    return composite_loss(terms, network_field(q, problem.input_map)).total;
  };
  const double step = c.problem == "heat" ? 1e-6 : 1e-5;
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_LT(testing::rel_error(grad[i], g[i], 1e-10 * std::max(1.0, ref.total)), 1e-9) << "param " << i;
    if (i % 3 == 0) {
      const double fd = testing::central_difference(loss_at, p.flat, i, step);
      EXPECT_LT(testing::rel_error(grad[i], fd, 1e-6 * std::max(1.0, ref.total)), 1e-5) << "param " << i;
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Problems, BatchedLossAgreement,
                         ::testing::Values(LossCase{"advection", net::Arch::kLnn}, LossCase{"laplace", net::Arch::kMlp},
                                           LossCase{"heat", net::Arch::kLnn}, LossCase{"beam", net::Arch::kLnn},
                                           LossCase{"beam", net::Arch::kMlp}),
                         [](const auto& info) { return info.param.problem + "_" + net::to_string(info.param.arch); });

TEST(BatchedLoss, SubsetsRestrictColumns) {
  const auto problem = problems::laplace_mixed({{"count.pde", 8}, {"count.bottom", 4}, {"count.top", 4},
                                                {"count.left", 4}, {"count.right", 4}});
  auto terms = problems::draw_terms(problem, 1);
  const auto p = net::init(net::Arch::kMlp, 2, 1, 4, 1, 3);
  const BatchedLoss full(terms);
  const std::vector<std::vector<int>> subsets{{1, 5}, {0}, {2, 3}, {1}, {0, 1, 2, 3}};
  const LossBreakdown sub = full.evaluate(p, problem.input_map, {}, &subsets);
  for (std::size_t i = 0; i < terms.size(); ++i) {
    std::vector<SamplePoint> keep;
    for (int j : subsets[i]) keep.push_back(terms[i].samples[j]);
    terms[i].samples = keep;
  }
  const LossBreakdown ref = composite_loss(terms, network_field(p, problem.input_map));
  EXPECT_LT(testing::rel_error(sub.total, ref.total), 1e-12);
}

TEST(BatchedLoss, ChunkingDoesNotChangeLossOrGradient) {
  const auto problem = problems::poisson_beam({{"count.pde", 37}, {"count.yy_bottom", 9}, {"count.yy_top", 5},
                                               {"count.bottom", 3}, {"count.top", 4}, {"count.left", 6},
                                               {"count.right", 7}});
  const auto terms = problems::draw_terms(problem, 8);
  const auto p = net::init(net::Arch::kLnn, 2, 1, 8, 3, 12);
  BatchedLoss whole(terms);
  BatchedLoss pieces(terms);
  pieces.set_chunk_size(4);
  std::vector<double> g1(p.size());
  std::vector<double> g2(p.size());
  const double a = whole.evaluate(p, problem.input_map, g1).total;
  const double b = pieces.evaluate(p, problem.input_map, g2).total;
  EXPECT_LT(testing::rel_error(a, b), 1e-13);
  for (std::size_t i = 0; i < g1.size(); ++i) {
    EXPECT_LT(testing::rel_error(g1[i], g2[i], 1e-12), 1e-11) << i;
  }
  EXPECT_THROW(pieces.set_chunk_size(0), std::invalid_argument);
}

}  // namespace
}  // namespace lnnpinn::physics
