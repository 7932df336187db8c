#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace lnnpinn::mc {

/// Probabilities over a finite support, indexed like the residual table.
struct DiscreteMeasure {
  std::vector<double> probs;

  /// Throws std::invalid_argument unless entries are >= 0 and sum to 1
  /// within 1e-15.
  void validate() const;
  [[nodiscard]] std::size_t size() const { return probs.size(); }
};

/// Positive diagonal weights, one per residual component.
struct WeightMatrix {
  std::vector<double> diag;

  void validate() const;
  [[nodiscard]] double op_norm() const;
};

/// residuals[i] is the residual vector at support point i.
using ResidualTable = std::vector<std::vector<double>>;

/// ||W r_i||^2 at every support point.
std::vector<double> weighted_energy(const ResidualTable& residuals, const WeightMatrix& w);
/// Population objective: sum_i p_i ||W r_i||^2.
double population_objective(const DiscreteMeasure& m, const ResidualTable& residuals, const WeightMatrix& w);

/// Exact law of the sample-mean estimator over all size^N draw sequences.
struct EstimatorMoments {
  double mean = 0.0;
  double variance = 0.0;
  std::size_t sequences = 0;
};

/// Enumeration cap on size^N.
inline constexpr std::size_t kEnumerationLimit = 1'000'000;

EstimatorMoments exact_estimator_moments(const DiscreteMeasure& m, const ResidualTable& residuals,
                                         const WeightMatrix& w, int n);
double exact_estimator_mean(const DiscreteMeasure& m, const ResidualTable& residuals, const WeightMatrix& w, int n);

struct VarianceReport {
  double variance = 0.0;   // exact Var of the estimator
  double identity = 0.0;   // Var(phi) / N
  double bound = 0.0;      // ||W||_op^4 E||r||^4 / N
  bool holds = false;      // variance <= bound + 1e-15
};
VarianceReport variance_bound_check(const DiscreteMeasure& m, const ResidualTable& residuals, const WeightMatrix& w,
                                    int n);

/// Exact mean of (1/N) sum w(xi) phi(xi) with xi drawn from pi and
/// w = d mu / d pi.  Throws std::domain_error when mu is not absolutely
/// continuous with respect to pi.
double importance_sampling_mean(const DiscreteMeasure& mu, const DiscreteMeasure& pi, const ResidualTable& residuals,
                                const WeightMatrix& w, int n);

struct TrendPoint {
  int n = 0;
  double median_error = 0.0;
};

struct TrendReport {
  std::vector<TrendPoint> points;
  std::vector<double> shrink_per_decade;  // between consecutive points
  bool non_increasing = false;            // each median <= 2x the previous one
  bool rate_ok = false;                   // every shrink factor in [2, 5] (or all errors zero)
};

/// Median over `seeds` independent runs of |J_N - J| for every N in the
/// schedule.  Seeds are derived from `base_seed`.
TrendReport slln_trend(const DiscreteMeasure& m, const ResidualTable& residuals, const WeightMatrix& w,
                       const std::vector<int>& schedule, int seeds, std::uint64_t base_seed = 0);

using ResidualFamily = std::function<std::vector<double>(double x, double theta)>;

struct InvarianceRow {
  double objective_at_zero = 0.0;  // J_W at the zero-residual parameter
  double min_elsewhere = 0.0;      // smallest J_W over the other parameters
  double argmin = 0.0;
};

struct InvarianceReport {
  std::vector<InvarianceRow> rows;  // one per weight matrix
  bool holds = false;
};

/// Evaluates J_W over `thetas` for every weight matrix and checks that the
/// zero-residual parameter `theta_star` is the unique minimiser with J = 0.
InvarianceReport minimizer_invariance_check(const ResidualFamily& family, const std::vector<double>& support,
                                            const DiscreteMeasure& m, const std::vector<double>& thetas,
                                            double theta_star, const std::vector<WeightMatrix>& weights);

struct CheckRow {
  std::string name;
  double value = 0.0;
  double expected = 0.0;
  bool pass = false;
};

struct FixtureSuite {
  std::vector<CheckRow> rows;
  TrendReport trend;
  [[nodiscard]] bool all_pass() const;
};

/// Built-in fixtures: the two-point worked examples, randomised measures of
/// at most six atoms, twenty random importance proposals, the SLLN trend
/// over N = 10, 100, 1000 with 101 seeds, and the minimiser invariance family.
FixtureSuite run_fixture_suite(std::uint64_t seed = 0);

}  // namespace lnnpinn::mc
