#pragma once

#include <cmath>

namespace lnnpinn {

inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// ln(1 + e^x) without overflow for large |x|.
inline double softplus(double x) { return std::log1p(std::exp(-std::abs(x))) + (x > 0.0 ? x : 0.0); }

inline double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace lnnpinn
