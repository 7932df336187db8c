#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "lnnpinn/autodiff/scalar_math.hpp"
#include "lnnpinn/autodiff/tape.hpp"

namespace lnnpinn::ad {

inline double constant_like(double /*ref*/, double c) { return c; }
inline Var constant_like(Var ref, double c) { return ref.tape()->constant(c); }

inline bool supported_jet_degree(int degree) { return degree == 1 || degree == 2 || degree == 4; }

inline double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) {
    f *= i;
  }
  return f;
}

/// Truncated univariate Taylor polynomial with normalized coefficients:
/// coeffs[k] = f^(k)(x0) / k!.  The scalar type S is double, a scalar tape
/// Var or a batched tensor handle; jets over tape types let reverse mode
/// differentiate through input derivatives.
template <typename S>
class TaylorJet {
 public:
  TaylorJet() = default;

  explicit TaylorJet(std::vector<S> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) {
      throw std::invalid_argument("TaylorJet needs at least one coefficient");
    }
  }

  /// Seed jet for an input coordinate moving along the differentiation axis.
  static TaylorJet lift(const S& point, int degree) {
    require_degree(degree);
    std::vector<S> c;
    c.reserve(degree + 1);
    c.push_back(point);
    c.push_back(constant_like(point, 1.0));
    for (int k = 2; k <= degree; ++k) {
      c.push_back(constant_like(point, 0.0));
    }
    return TaylorJet(std::move(c));
  }

  /// Input coordinate that stays fixed along the differentiation axis.
  static TaylorJet lift_constant(const S& value, int degree) {
    require_degree(degree);
    std::vector<S> c;
    c.reserve(degree + 1);
    c.push_back(value);
    for (int k = 1; k <= degree; ++k) {
      c.push_back(constant_like(value, 0.0));
    }
    return TaylorJet(std::move(c));
  }

  static void require_degree(int degree) {
    if (!supported_jet_degree(degree)) {
      throw std::invalid_argument("jet degree must be 1, 2 or 4");
    }
  }

  [[nodiscard]] int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  [[nodiscard]] const S& operator[](int k) const { return coeffs_[k]; }
  [[nodiscard]] S& operator[](int k) { return coeffs_[k]; }
  [[nodiscard]] const std::vector<S>& coeffs() const { return coeffs_; }

  /// k-th directional derivative, k! * coeffs[k].
  [[nodiscard]] S derivative(int k) const {
    if (k == 0) {
      return coeffs_[0];
    }
    return factorial(k) * coeffs_.at(k);
  }

 private:
  std::vector<S> coeffs_;
};

namespace detail {

template <typename S>
void check_same_degree(const TaylorJet<S>& a, const TaylorJet<S>& b) {
  if (a.degree() != b.degree()) {
    throw std::invalid_argument("jet degree mismatch");
  }
}

// out_k = (1/k) * sum_{j=1..k} j * a_j * g_{k-j}; the shared step of every
// recurrence derived from y' = g * a'.
template <typename S>
S ode_step(const TaylorJet<S>& a, const std::vector<S>& g, int k) {
  S acc = a[1] * g[k - 1];
  for (int j = 2; j <= k; ++j) {
    acc = acc + static_cast<double>(j) * (a[j] * g[k - j]);
  }
  return k == 1 ? acc : acc * (1.0 / k);
}

// Coefficient m of y*y for m >= 1, given y_0..y_m.
template <typename S>
S square_coeff(const std::vector<S>& y, int m) {
  S acc = y[0] * y[m];
  for (int i = 1; i <= m / 2; ++i) {
    if (i == m - i) {
      acc = acc * 2.0 + y[i] * y[i];
      return acc;
    }
    acc = acc + y[i] * y[m - i];
  }
  return acc * 2.0;
}

}  // namespace detail

template <typename S>
TaylorJet<S> operator+(const TaylorJet<S>& a, const TaylorJet<S>& b) {
  detail::check_same_degree(a, b);
  std::vector<S> c;
  c.reserve(a.degree() + 1);
  for (int k = 0; k <= a.degree(); ++k) {
    c.push_back(a[k] + b[k]);
  }
  return TaylorJet<S>(std::move(c));
}

template <typename S>
TaylorJet<S> operator-(const TaylorJet<S>& a, const TaylorJet<S>& b) {
  detail::check_same_degree(a, b);
  std::vector<S> c;
  c.reserve(a.degree() + 1);
  for (int k = 0; k <= a.degree(); ++k) {
    c.push_back(a[k] - b[k]);
  }
  return TaylorJet<S>(std::move(c));
}

/// Cauchy product truncated at the common degree.
template <typename S>
TaylorJet<S> operator*(const TaylorJet<S>& a, const TaylorJet<S>& b) {
  detail::check_same_degree(a, b);
  std::vector<S> c;
  c.reserve(a.degree() + 1);
  for (int k = 0; k <= a.degree(); ++k) {
    S acc = a[0] * b[k];
    for (int i = 1; i <= k; ++i) {
      acc = acc + a[i] * b[k - i];
    }
    c.push_back(acc);
  }
  return TaylorJet<S>(std::move(c));
}

template <typename S, typename F>
TaylorJet<S> scale(const TaylorJet<S>& a, const F& factor) {
  std::vector<S> c;
  c.reserve(a.degree() + 1);
  for (int k = 0; k <= a.degree(); ++k) {
    c.push_back(factor * a[k]);
  }
  return TaylorJet<S>(std::move(c));
}

template <typename S>
TaylorJet<S> add_constant(const TaylorJet<S>& a, double c) {
  TaylorJet<S> r = a;
  r[0] = a[0] + c;
  return r;
}

/// exp via y' = y a'. `y0` is exp(a[0]) when already available.
template <typename S>
TaylorJet<S> jet_exp(const TaylorJet<S>& a, const S& y0) {
  std::vector<S> y{y0};
  for (int k = 1; k <= a.degree(); ++k) {
    y.push_back(detail::ode_step(a, y, k));
  }
  return TaylorJet<S>(std::move(y));
}

template <typename S>
TaylorJet<S> jet_exp(const TaylorJet<S>& a) {
  using std::exp;
  return jet_exp(a, S(exp(a[0])));
}

/// tanh via t' = (1 - t^2) a'.
template <typename S>
TaylorJet<S> jet_tanh(const TaylorJet<S>& a, const S& t0) {
  const int d = a.degree();
  std::vector<S> t{t0};
  std::vector<S> s{1.0 - t0 * t0};
  for (int k = 1; k <= d; ++k) {
    t.push_back(detail::ode_step(a, s, k));
    if (k < d) {
      s.push_back(-detail::square_coeff(t, k));
    }
  }
  return TaylorJet<S>(std::move(t));
}

template <typename S>
TaylorJet<S> jet_tanh(const TaylorJet<S>& a) {
  using std::tanh;
  return jet_tanh(a, S(tanh(a[0])));
}

/// Logistic sigmoid via s' = (s - s^2) a'.
template <typename S>
TaylorJet<S> jet_sigmoid(const TaylorJet<S>& a, const S& s0) {
  const int d = a.degree();
  std::vector<S> s{s0};
  std::vector<S> q{s0 - s0 * s0};
  for (int k = 1; k <= d; ++k) {
    s.push_back(detail::ode_step(a, q, k));
    if (k < d) {
      q.push_back(s[k] - detail::square_coeff(s, k));
    }
  }
  return TaylorJet<S>(std::move(s));
}

template <typename S>
TaylorJet<S> jet_sigmoid(const TaylorJet<S>& a) {
  using lnnpinn::sigmoid;
  return jet_sigmoid(a, S(sigmoid(a[0])));
}

/// softplus via sp' = sigmoid(a) a'.
template <typename S>
TaylorJet<S> jet_softplus(const TaylorJet<S>& a) {
  using lnnpinn::sigmoid;
  using lnnpinn::softplus;
  const TaylorJet<S> sig = jet_sigmoid(a, S(sigmoid(a[0])));
  std::vector<S> y{S(softplus(a[0]))};
  for (int k = 1; k <= a.degree(); ++k) {
    y.push_back(detail::ode_step(a, sig.coeffs(), k));
  }
  return TaylorJet<S>(std::move(y));
}

}  // namespace lnnpinn::ad
