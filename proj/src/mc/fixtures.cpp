#include <algorithm>
#include <cmath>

#include "lnnpinn/mc/mc_checks.hpp"
#include "lnnpinn/random.hpp"

namespace lnnpinn::mc {

namespace {

constexpr double kExact = 1e-15;

bool close(double value, double expected) { return std::abs(value - expected) <= kExact * std::max(1.0, std::abs(expected)); }

CheckRow equality(const std::string& name, double value, double expected) {
  return {name, value, expected, close(value, expected)};
}

DiscreteMeasure random_measure(Rng& rng, std::size_t n) {
  std::vector<double> p(n);
  long double sum = 0.0L;
  for (double& v : p) {
    v = rng.uniform(0.05, 1.0);
    sum += v;
  }
  for (double& v : p) {
    v = static_cast<double>(v / sum);
  }
  long double total = 0.0L;
  for (double v : p) {
    total += v;
  }
  *std::max_element(p.begin(), p.end()) += static_cast<double>(1.0L - total);
  return {p};
}

ResidualTable random_table(Rng& rng, std::size_t n, std::size_t comps) {
  ResidualTable t(n, std::vector<double>(comps));
  for (auto& r : t) {
    for (double& v : r) {
      v = rng.uniform(-1.5, 1.5);
    }
  }
  return t;
}

}  // namespace

bool FixtureSuite::all_pass() const {
  return std::all_of(rows.begin(), rows.end(), [](const CheckRow& r) { return r.pass; });
}

FixtureSuite run_fixture_suite(std::uint64_t seed) {
  FixtureSuite suite;
  auto& rows = suite.rows;
  const DiscreteMeasure half{{0.5, 0.5}};
  const ResidualTable two_point{{1.0}, {std::sqrt(3.0)}};
  const WeightMatrix identity{{1.0}};

  rows.push_back(equality("two_point_mean_n2", exact_estimator_mean(half, two_point, identity, 2), 2.0));
  const VarianceReport v = variance_bound_check(half, two_point, identity, 2);
  rows.push_back(equality("two_point_variance_n2", v.variance, 0.5));
  rows.push_back(equality("two_point_variance_bound_n2", v.bound, 2.5));
  rows.push_back(equality("two_point_is_mean", importance_sampling_mean(half, DiscreteMeasure{{0.25, 0.75}},
                                                                        two_point, identity, 2),
                          2.0));

  Rng rng(derive_seed(seed, 0x6d63));
  double unbiased_gap = 0.0;
  double identity_gap = 0.0;
  bool bound_holds = true;
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t atoms = 2 + static_cast<std::size_t>(trial % 5);
    const DiscreteMeasure m = random_measure(rng, atoms);
    const ResidualTable r = random_table(rng, atoms, 3);
    const WeightMatrix w{{rng.uniform(0.2, 2.0), rng.uniform(0.2, 2.0), rng.uniform(0.2, 2.0)}};
    const double j = population_objective(m, r, w);
    for (int n = 1; n <= 6; ++n) {
      const VarianceReport vr = variance_bound_check(m, r, w, n);
      unbiased_gap = std::max(unbiased_gap, std::abs(exact_estimator_mean(m, r, w, n) - j) / std::max(1.0, j));
      identity_gap = std::max(identity_gap, std::abs(vr.variance - vr.identity) / std::max(1.0, vr.identity));
      bound_holds = bound_holds && vr.holds;
    }
  }
  rows.push_back({"random_unbiasedness_max_gap", unbiased_gap, 0.0, unbiased_gap <= kExact});
  rows.push_back({"random_variance_identity_max_gap", identity_gap, 0.0, identity_gap <= kExact});
  rows.push_back({"random_variance_bound_holds", bound_holds ? 1.0 : 0.0, 1.0, bound_holds});

  const DiscreteMeasure mu = random_measure(rng, 6);
  const ResidualTable r6 = random_table(rng, 6, 2);
  const WeightMatrix w6{{1.0, 3.0}};
  const double j6 = population_objective(mu, r6, w6);
  double is_gap = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const DiscreteMeasure pi = random_measure(rng, 6);
    is_gap = std::max(is_gap, std::abs(importance_sampling_mean(mu, pi, r6, w6, 3) - j6) / std::max(1.0, j6));
  }
  rows.push_back({"importance_sampling_20_proposals_max_gap", is_gap, 0.0, is_gap <= kExact});

  suite.trend = slln_trend(mu, r6, w6, {10, 100, 1000}, 101, seed);
  for (std::size_t k = 0; k < suite.trend.shrink_per_decade.size(); ++k) {
    const double f = suite.trend.shrink_per_decade[k];
    rows.push_back({"slln_shrink_" + std::to_string(suite.trend.points[k].n) + "_to_" +
                        std::to_string(suite.trend.points[k + 1].n),
                    f, std::sqrt(10.0), f >= 2.0 && f <= 5.0});
  }

  const ResidualFamily family = [](double x, double theta) {
    return std::vector<double>{theta * x, 2.0 * theta * x * x};
  };
  std::vector<double> thetas;
  for (int k = -10; k <= 10; ++k) {
    thetas.push_back(0.1 * k);
  }
  const InvarianceReport inv = minimizer_invariance_check(family, {1.0, 2.0}, half, thetas, 0.0,
                                                          {WeightMatrix{{1.0, 1.0}}, WeightMatrix{{2.0, 0.5}},
                                                           WeightMatrix{{10.0, 10.0}}});
  rows.push_back({"minimizer_invariance", inv.holds ? 1.0 : 0.0, 1.0, inv.holds});
  return suite;
}

}  // namespace lnnpinn::mc
