#include "lnnpinn/mc/mc_checks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "lnnpinn/random.hpp"

namespace lnnpinn::mc {

namespace {

void check_table(const DiscreteMeasure& m, const ResidualTable& residuals, const WeightMatrix& w) {
  m.validate();
  w.validate();
  if (residuals.size() != m.size()) {
    throw std::invalid_argument("residual table and measure have different supports");
  }
  for (const auto& r : residuals) {
    if (r.size() != w.diag.size()) {
      throw std::invalid_argument("residual vector length does not match the weight matrix");
    }
  }
}

std::size_t sequence_count(std::size_t support, int n) {
  if (n < 1) {
    throw std::invalid_argument("sample size must be at least 1");
  }
  std::size_t count = 1;
  for (int k = 0; k < n; ++k) {
    if (count > kEnumerationLimit / std::max<std::size_t>(support, 1)) {
      throw std::length_error("enumeration of " + std::to_string(support) + "^" + std::to_string(n) +
                              " sequences exceeds the limit");
    }
    count *= support;
  }
  return count;
}

// Exact first two moments of (1/N) sum value[xi_k], xi_k i.i.d. from probs.
EstimatorMoments enumerate(const std::vector<double>& probs, const std::vector<double>& value, int n) {
  const std::size_t s = probs.size();
  const std::size_t total = sequence_count(s, n);
  std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
  auto visit = [&](auto&& fn) {
    std::fill(idx.begin(), idx.end(), 0);
    for (std::size_t q = 0; q < total; ++q) {
      long double p = 1.0L;
      long double sum = 0.0L;
      for (std::size_t k : idx) {
        p *= probs[k];
        sum += value[k];
      }
      fn(p, sum / n);
      for (std::size_t d = 0; d < idx.size(); ++d) {
        if (++idx[d] < s) {
          break;
        }
        idx[d] = 0;
      }
    }
  };
  long double mean = 0.0L;
  visit([&](long double p, long double est) { mean += p * est; });
  long double var = 0.0L;
  visit([&](long double p, long double est) { var += p * (est - mean) * (est - mean); });
  return {static_cast<double>(mean), static_cast<double>(var), total};
}

}  // namespace

void DiscreteMeasure::validate() const {
  if (probs.empty()) {
    throw std::invalid_argument("measure has empty support");
  }
  long double sum = 0.0L;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw std::invalid_argument("probabilities must be finite and non-negative");
    }
    sum += p;
  }
  if (std::abs(static_cast<double>(sum) - 1.0) > 1e-15) {
    throw std::invalid_argument("probabilities do not sum to one");
  }
}

void WeightMatrix::validate() const {
  if (diag.empty()) {
    throw std::invalid_argument("weight matrix is empty");
  }
  for (double d : diag) {
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw std::invalid_argument("weight matrix entries must be positive");
    }
  }
}

double WeightMatrix::op_norm() const {
  double m = 0.0;
  for (double d : diag) {
    m = std::max(m, std::abs(d));
  }
  return m;
}

std::vector<double> weighted_energy(const ResidualTable& residuals, const WeightMatrix& w) {
  std::vector<double> phi;
  phi.reserve(residuals.size());
  for (const auto& r : residuals) {
    double s = 0.0;
    for (std::size_t c = 0; c < r.size(); ++c) {
      s += (w.diag[c] * r[c]) * (w.diag[c] * r[c]);
    }
    phi.push_back(s);
  }
  return phi;
}

double population_objective(const DiscreteMeasure& m, const ResidualTable& residuals, const WeightMatrix& w) {
  check_table(m, residuals, w);
  const auto phi = weighted_energy(residuals, w);
  long double j = 0.0L;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    j += static_cast<long double>(m.probs[i]) * phi[i];
  }
  return static_cast<double>(j);
}

EstimatorMoments exact_estimator_moments(const DiscreteMeasure& m, const ResidualTable& residuals,
                                         const WeightMatrix& w, int n) {
  check_table(m, residuals, w);
  return enumerate(m.probs, weighted_energy(residuals, w), n);
}

double exact_estimator_mean(const DiscreteMeasure& m, const ResidualTable& residuals, const WeightMatrix& w, int n) {
  return exact_estimator_moments(m, residuals, w, n).mean;
}

VarianceReport variance_bound_check(const DiscreteMeasure& m, const ResidualTable& residuals, const WeightMatrix& w,
                                    int n) {
  const EstimatorMoments mom = exact_estimator_moments(m, residuals, w, n);
  const auto phi = weighted_energy(residuals, w);
  const double j = population_objective(m, residuals, w);
  long double var_phi = 0.0L;
  long double fourth = 0.0L;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    var_phi += m.probs[i] * (static_cast<long double>(phi[i]) - j) * (static_cast<long double>(phi[i]) - j);
    long double r2 = 0.0L;
    for (double v : residuals[i]) {
      r2 += static_cast<long double>(v) * v;
    }
    fourth += m.probs[i] * r2 * r2;
  }
  VarianceReport rep;
  rep.variance = mom.variance;
  rep.identity = static_cast<double>(var_phi / n);
  rep.bound = static_cast<double>(std::pow(static_cast<long double>(w.op_norm()), 4) * fourth / n);
  rep.holds = rep.variance <= rep.bound + 1e-15;
  return rep;
}

double importance_sampling_mean(const DiscreteMeasure& mu, const DiscreteMeasure& pi, const ResidualTable& residuals,
                                const WeightMatrix& w, int n) {
  check_table(mu, residuals, w);
  pi.validate();
  if (pi.size() != mu.size()) {
    throw std::invalid_argument("proposal and target measures have different supports");
  }
  const auto phi = weighted_energy(residuals, w);
  std::vector<double> weighted(phi.size(), 0.0);
  for (std::size_t i = 0; i < phi.size(); ++i) {
    if (pi.probs[i] == 0.0) {
      if (mu.probs[i] > 0.0) {
        throw std::domain_error("target is not absolutely continuous w.r.t. the proposal at support point " +
                                std::to_string(i));
      }
      continue;
    }
    weighted[i] = mu.probs[i] / pi.probs[i] * phi[i];
  }
  return enumerate(pi.probs, weighted, n).mean;
}

TrendReport slln_trend(const DiscreteMeasure& m, const ResidualTable& residuals, const WeightMatrix& w,
                       const std::vector<int>& schedule, int seeds, std::uint64_t base_seed) {
  check_table(m, residuals, w);
  if (schedule.empty() || seeds < 1) {
    throw std::invalid_argument("trend needs a non-empty schedule and at least one seed");
  }
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    if (schedule[k] < 1 || (k > 0 && schedule[k] <= schedule[k - 1])) {
      throw std::invalid_argument("sample-size schedule must be positive and increasing");
    }
  }
  const auto phi = weighted_energy(residuals, w);
  const double j = population_objective(m, residuals, w);
  std::vector<double> cdf(m.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    acc += m.probs[i];
    cdf[i] = acc;
  }
  cdf.back() = 1.0;

  TrendReport rep;
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    std::vector<double> errors;
    errors.reserve(static_cast<std::size_t>(seeds));
    for (int s = 0; s < seeds; ++s) {
      Rng rng(derive_seed(derive_seed(base_seed, static_cast<std::uint64_t>(schedule[k])), static_cast<std::uint64_t>(s)));
      std::vector<long> counts(phi.size(), 0);
      for (int t = 0; t < schedule[k]; ++t) {
        const double u = rng.uniform();
        const auto i = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        ++counts[std::min(i, phi.size() - 1)];
      }
      long double sum = 0.0L;
      for (std::size_t i = 0; i < phi.size(); ++i) {
        sum += static_cast<long double>(counts[i]) * phi[i];
      }
      errors.push_back(static_cast<double>(std::abs(sum / schedule[k] - j)));
    }
    const auto mid = errors.begin() + static_cast<std::ptrdiff_t>(errors.size() / 2);
    std::nth_element(errors.begin(), mid, errors.end());
    double median = *mid;
    if (errors.size() % 2 == 0) {
      median = 0.5 * (median + *std::max_element(errors.begin(), mid));
    }
    rep.points.push_back({schedule[k], median});
  }

  rep.non_increasing = true;
  bool all_zero = true;
  rep.rate_ok = true;
  for (const auto& p : rep.points) {
    all_zero = all_zero && p.median_error == 0.0;
  }
  for (std::size_t k = 1; k < rep.points.size(); ++k) {
    const double prev = rep.points[k - 1].median_error;
    const double cur = rep.points[k].median_error;
    rep.non_increasing = rep.non_increasing && cur <= 2.0 * prev;
    const double decades = std::log10(static_cast<double>(rep.points[k].n) / rep.points[k - 1].n);
    const double factor = cur > 0.0 ? std::pow(prev / cur, 1.0 / decades) : std::numeric_limits<double>::infinity();
    rep.shrink_per_decade.push_back(factor);
    rep.rate_ok = rep.rate_ok && factor >= 2.0 && factor <= 5.0;
  }
  if (all_zero) {
    rep.rate_ok = true;
  }
  return rep;
}

InvarianceReport minimizer_invariance_check(const ResidualFamily& family, const std::vector<double>& support,
                                            const DiscreteMeasure& m, const std::vector<double>& thetas,
                                            double theta_star, const std::vector<WeightMatrix>& weights) {
  m.validate();
  if (support.size() != m.size()) {
    throw std::invalid_argument("support and measure sizes differ");
  }
  auto table = [&](double theta) {
    ResidualTable t;
    for (double x : support) {
      t.push_back(family(x, theta));
    }
    return t;
  };
  InvarianceReport rep;
  rep.holds = true;
  for (const WeightMatrix& w : weights) {
    InvarianceRow row;
    row.objective_at_zero = population_objective(m, table(theta_star), w);
    row.min_elsewhere = std::numeric_limits<double>::infinity();
    double best = row.objective_at_zero;
    row.argmin = theta_star;
    for (double theta : thetas) {
      if (theta == theta_star) {
        continue;
      }
      const double j = population_objective(m, table(theta), w);
      row.min_elsewhere = std::min(row.min_elsewhere, j);
      if (j < best) {
        best = j;
        row.argmin = theta;
      }
    }
    rep.holds = rep.holds && row.objective_at_zero == 0.0 && row.min_elsewhere > 0.0 && row.argmin == theta_star;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace lnnpinn::mc
