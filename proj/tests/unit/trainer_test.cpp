#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "lnnpinn/physics/network_loss.hpp"
#include "lnnpinn/random.hpp"
#include "lnnpinn/trainer/trainer.hpp"

namespace lnnpinn::trainer {
namespace {

problems::ProblemDef tiny_advection() {
  return problems::advection_reaction({{"count.pde", 40}, {"count.ic", 20}, {"count.bc", 20}});
}

TrainConfig tiny_config(net::Arch arch = net::Arch::kLnn) {
  TrainConfig c;
  c.arch = arch;
  c.width = 8;
  c.depth = 2;
  c.iters = 5;
  return c;
}

TEST(Adam, FirstStepWithUnitGradient) {
  std::vector<double> p{0.5, -1.0, 2.0};
  const std::vector<double> g(3, 1.0);
  AdamState s = AdamState::zeros(3);
  adam_step(p, g, s, TrainConfig{});
  const double delta = -1e-3 / (1.0 + 1e-8);
  EXPECT_NEAR(p[0], 0.5 + delta, 1e-16);
  EXPECT_NEAR(p[1], -1.0 + delta, 1e-16);
  EXPECT_NEAR(p[2], 2.0 + delta, 1e-15);
  EXPECT_EQ(s.step, 1);
}

TEST(Adam, ZeroGradientLeavesParamsAndDecaysMoments) {
  std::vector<double> p{0.5, -1.0};
  AdamState s{{0.2, -0.4}, {0.01, 0.04}, 3};
  adam_step(p, std::vector<double>(2, 0.0), s, TrainConfig{});
  EXPECT_NEAR(s.m[0], 0.18, 1e-15);
  EXPECT_NEAR(s.v[1], 0.04 * 0.999, 1e-15);
  // Bias-corrected moments are nonzero, so parameters still move.
  EXPECT_NE(p[0], 0.5);
  std::vector<double> q{0.5, -1.0};
  AdamState fresh = AdamState::zeros(2);
  adam_step(q, std::vector<double>(2, 0.0), fresh, TrainConfig{});
  EXPECT_EQ(q[0], 0.5);
  EXPECT_EQ(q[1], -1.0);
}

TEST(Adam, NonFiniteGradientNamesIndex) {
  std::vector<double> p{0.0, 0.0, 0.0, 0.0};
  std::vector<double> g{1.0, 2.0, 3.0, std::numeric_limits<double>::quiet_NaN()};
  AdamState s = AdamState::zeros(4);
  try {
    adam_step(p, g, s, TrainConfig{});
    FAIL() << "expected domain_error";
  } catch (const std::domain_error& e) {
    EXPECT_NE(std::string(e.what()).find("index 3"), std::string::npos);
  }
  EXPECT_EQ(p[0], 0.0);
  EXPECT_EQ(s.step, 0);
}

TEST(Adam, SizeMismatchRejected) {
  std::vector<double> p{0.0};
  AdamState s = AdamState::zeros(2);
  EXPECT_THROW(adam_step(p, std::vector<double>{1.0}, s, TrainConfig{}), std::invalid_argument);
}

TEST(TrainConfigTest, Validation) {
  TrainConfig c;
  c.learning_rate = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = TrainConfig{};
  c.batch_fraction = 1.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = TrainConfig{};
  c.iters = -1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Train, SingleIterationIsOneAdamStep) {
  const auto problem = tiny_advection();
  TrainConfig c = tiny_config();
  c.iters = 1;
  const RunRecord r = train(problem, c);
  ASSERT_EQ(r.history.size(), 1u);

  // Rebuild the same initial state by hand.
  const auto terms = problems::draw_terms(problem, derive_seed(c.seed, kSampleStream));
  const physics::BatchedLoss loss(terms);
  net::NetworkParams p = net::init(c.arch, 2, 1, c.width, c.depth, derive_seed(c.seed, kNetworkStream));
  std::vector<double> g(p.size());
  const double l0 = loss.evaluate(p, problem.input_map, g).total;
  EXPECT_EQ(l0, r.history[0].total);
  AdamState s = AdamState::zeros(p.size());
  adam_step(p.flat, g, s, c);
  EXPECT_EQ(p.flat, r.params.flat);
}

TEST(Train, BitIdenticalReruns) {
  const auto problem = tiny_advection();
  for (double fraction : {1.0, 0.5}) {
    TrainConfig c = tiny_config();
    c.batch_fraction = fraction;
    const RunRecord a = train(problem, c);
    const RunRecord b = train(problem, c);
    ASSERT_EQ(a.history.size(), b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) {
      EXPECT_EQ(a.history[i].total, b.history[i].total);
      EXPECT_EQ(a.history[i].terms, b.history[i].terms);
    }
    EXPECT_EQ(a.params.flat, b.params.flat);
  }
}

TEST(Train, FractionModeUsesSubsets) {
  const auto problem = tiny_advection();
  TrainConfig full = tiny_config();
  TrainConfig half = full;
  half.batch_fraction = 0.5;
  EXPECT_NE(train(problem, full).history[0].total, train(problem, half).history[0].total);
}

TEST(Train, AdvectionLossDecreases) {
  const auto problem = problems::advection_reaction();
  TrainConfig c;
  c.iters = 150;
  const RunRecord r = train(problem, c);
  ASSERT_EQ(r.history.size(), 150u);
  EXPECT_FALSE(r.diverged);
  EXPECT_LT(r.history.back().total, r.history.front().total);
  EXPECT_EQ(r.term_names, (std::vector<std::string>{"pde", "ic", "bc"}));
}

TEST(Train, NonFiniteLossAbortsWithPartialRecord) {
  auto problem = tiny_advection();
  problem.terms[1].term.components[0].source = [](const physics::SamplePoint&) {
    return std::numeric_limits<double>::infinity();
  };
  const RunRecord r = train(problem, tiny_config());
  EXPECT_TRUE(r.diverged);
  EXPECT_TRUE(r.history.empty());
  EXPECT_NE(r.message.find("non-finite"), std::string::npos);
}

TEST(Train, DefaultIterationsComeFromProblem) {
  auto problem = problems::advection_reaction({{"iters", 3}, {"count.pde", 10}, {"count.ic", 5}, {"count.bc", 5}});
  TrainConfig c = tiny_config();
  c.iters = 0;
  EXPECT_EQ(train(problem, c).history.size(), 3u);
}

TEST(Metrics, ReferenceAgainstItselfIsZero) {
  const auto problem = problems::laplace_mixed();
  std::vector<double> ref;
  for (const auto& p : problem.grid.points()) ref.push_back(problem.reference.value(p));
  const Metrics m = error_metrics(ref, ref);
  EXPECT_EQ(m.rmse, 0.0);
  EXPECT_EQ(m.mae, 0.0);
  EXPECT_EQ(m.points, 101u * 101u);
}

TEST(Metrics, MaeNeverExceedsRmse) {
  const auto problem = problems::disk_heat();
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto p = net::init(net::Arch::kLnn, 2, 1, 8, 2, seed);
    const Metrics m = evaluate(p, problem);
    EXPECT_LE(m.mae, m.rmse);
    EXPECT_GT(m.rmse, 0.0);
  }
  EXPECT_THROW(error_metrics(std::vector<double>{1.0}, std::vector<double>{}), std::invalid_argument);
}

TEST(Metrics, PredictMatchesScalarField) {
  const auto problem = problems::poisson_beam();
  const auto p = net::init(net::Arch::kMlp, 2, 1, 8, 2, 4);
  const std::vector<std::vector<double>> pts{{0.1, 0.2}, {0.9, 0.4}, {0.5, 0.5}};
  const auto pred = predict(p, problem, pts);
  const auto field = physics::network_field(p, problem.input_map);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_NEAR(pred[i], field({pts[i], {}}, {}).value, 1e-14);
  }
}

TEST(Output, LossCsvAndMetricsRoundTrip) {
  RunRecord r;
  r.term_names = {"pde", "bc"};
  r.history = {{0, 3.0, {2.0, 1.0}}, {1, 1.5, {1.0, 0.5}}};
  std::ostringstream csv;
  write_loss_csv(csv, r);
  EXPECT_EQ(csv.str(), "step,total,pde,bc\n0,3,2,1\n1,1.5,1,0.5\n");

  std::stringstream ms;
  write_metrics(ms, {0.25, 0.125, 10});
  EXPECT_EQ(ms.str(), "rmse=0.25\nmae=0.125\n");
  const Metrics back = read_metrics(ms);
  EXPECT_EQ(back.rmse, 0.25);
  EXPECT_EQ(back.mae, 0.125);
  std::istringstream tagged("rmse=1\nstatus=diverged\nmae=0.5\n");
  EXPECT_EQ(read_metrics(tagged).mae, 0.5);
  std::istringstream bad("rmse=1\n");
  EXPECT_THROW(read_metrics(bad), std::runtime_error);
}

}  // namespace
}  // namespace lnnpinn::trainer
