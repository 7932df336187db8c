#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lnnpinn/autodiff/taylor_jet.hpp"

namespace lnnpinn::net {

enum class Arch : std::uint8_t { kMlp = 0, kLnn = 1 };

/// Channel-wise gates carry one (alpha, beta) pair per hidden unit; scalar
/// gates share a single pair across the layer.
enum class GateMode : std::uint8_t { kChannel = 0, kScalar = 1 };

std::string to_string(Arch arch);
Arch parse_arch(const std::string& name);

/// Offsets into the flat parameter vector.  Matrices are stored row-major
/// (rows = outputs).
struct LayerOffsets {
  std::size_t weight = 0;     // MLP: W_l.  LNN: W_h
  std::size_t input_mix = 0;  // LNN only: U_l
  std::size_t bias = 0;
  std::size_t raw_alpha = 0;  // LNN only
  std::size_t raw_beta = 0;   // LNN only
};

struct Layout {
  std::size_t w_in = 0;
  std::size_t b_in = 0;
  std::vector<LayerOffsets> layers;
  std::size_t w_out = 0;
  std::size_t b_out = 0;
  std::size_t gate_size = 0;  // entries per gate vector (width or 1)
  std::size_t total = 0;
};

Layout compute_layout(Arch arch, GateMode gates, int in_dim, int out_dim, int width, int depth);

/// Initial gate activations: sigmoid(raw_beta) and sigmoid(raw_alpha).
inline constexpr double kInitialBeta = 0.88;
inline constexpr double kInitialAlpha = 0.5;

struct NetworkParams {
  Arch arch = Arch::kMlp;
  GateMode gates = GateMode::kChannel;
  int in_dim = 0;
  int out_dim = 0;
  int width = 0;
  int depth = 0;
  std::uint64_t seed = 0;
  Layout layout;
  std::vector<double> flat;

  [[nodiscard]] std::size_t size() const { return flat.size(); }
};

/// Glorot-uniform weights, zero biases and gates at kInitialAlpha/Beta.
/// Both architectures draw W_in, the per-layer square matrices and W_out
/// from one generator in the same order.
NetworkParams init(Arch arch, int in_dim, int out_dim, int width, int depth, std::uint64_t seed,
                   GateMode gates = GateMode::kChannel);

/// Fixed affine map x_hat = (x - shift) * scale applied before the network.
struct InputMap {
  std::vector<double> shift;
  std::vector<double> scale;

  static InputMap identity(int dim);
  /// Maps the box [lo, hi] onto [-1, 1] per axis.
  static InputMap from_box(std::span<const double> lo, std::span<const double> hi);
};

/// Input derivative request: order 0 is the value itself.
struct DerivKey {
  int axis = 0;
  int order = 0;
  friend bool operator==(const DerivKey&, const DerivKey&) = default;
};

/// Value and requested input derivatives of one output channel at one point.
template <typename S>
struct FieldEval {
  S value{};
  std::vector<std::pair<DerivKey, S>> derivs;

  [[nodiscard]] const S& get(DerivKey key) const {
    if (key.order == 0) {
      return value;
    }
    for (const auto& [k, v] : derivs) {
      if (k == key) {
        return v;
      }
    }
    throw std::out_of_range("derivative (axis " + std::to_string(key.axis) + ", order " +
                            std::to_string(key.order) + ") was not requested");
  }
};

/// Smallest supported jet degree covering `order`.
int jet_degree_for(int order);

namespace detail {

template <typename S>
using Jet = ad::TaylorJet<S>;

// out_r = sum_c W[r, c] * x_c (+ bias_r on the constant coefficient).
template <typename S>
std::vector<Jet<S>> affine(std::span<const S> theta, std::size_t w_off, std::size_t b_off, int rows, int cols,
                           const std::vector<Jet<S>>& x, bool with_bias) {
  std::vector<Jet<S>> out;
  out.reserve(rows);
  for (int r = 0; r < rows; ++r) {
    Jet<S> acc = ad::scale(x[0], theta[w_off + static_cast<std::size_t>(r) * cols]);
    for (int c = 1; c < cols; ++c) {
      acc = acc + ad::scale(x[c], theta[w_off + static_cast<std::size_t>(r) * cols + c]);
    }
    if (with_bias) {
      acc[0] = acc[0] + theta[b_off + r];
    }
    out.push_back(std::move(acc));
  }
  return out;
}

template <typename S>
void check_inputs(const NetworkParams& p, std::span<const Jet<S>> inputs) {
  if (static_cast<int>(inputs.size()) != p.in_dim) {
    throw std::invalid_argument("network input arity " + std::to_string(inputs.size()) + " != in_dim " +
                                std::to_string(p.in_dim));
  }
  for (const auto& j : inputs) {
    if (j.degree() != inputs[0].degree()) {
      throw std::invalid_argument("network inputs must share one jet degree");
    }
  }
}

template <typename S>
std::vector<Jet<S>> input_layer(const NetworkParams& p, std::span<const S> theta, std::span<const Jet<S>> inputs) {
  std::vector<Jet<S>> x(inputs.begin(), inputs.end());
  return affine<S>(theta, p.layout.w_in, p.layout.b_in, p.width, p.in_dim, x, true);
}

template <typename S>
std::vector<Jet<S>> readout(const NetworkParams& p, std::span<const S> theta, const std::vector<Jet<S>>& z) {
  return affine<S>(theta, p.layout.w_out, p.layout.b_out, p.out_dim, p.width, z, true);
}

}  // namespace detail

/// z_0 = W_in x + b_in;  z_{l+1} = tanh(W_l z_l + b_l);  f = W_out z_L + b_out.
template <typename S>
std::vector<ad::TaylorJet<S>> forward_mlp(const NetworkParams& p, std::span<const S> theta,
                                         std::span<const ad::TaylorJet<S>> inputs) {
  if (p.arch != Arch::kMlp) {
    throw std::invalid_argument("forward_mlp called on a non-MLP network");
  }
  detail::check_inputs(p, inputs);
  auto z = detail::input_layer(p, theta, inputs);
  for (const LayerOffsets& layer : p.layout.layers) {
    auto pre = detail::affine<S>(theta, layer.weight, layer.bias, p.width, p.width, z, true);
    for (int r = 0; r < p.width; ++r) {
      z[r] = ad::jet_tanh(pre[r]);
    }
  }
  return detail::readout(p, theta, z);
}

/// Liquid residual-gating blocks:
///   h_{l+1} = beta_l * h_l + alpha_l * tanh(W_h h_l + U z_l + b_l),  z_{l+1} = h_{l+1},
/// with h_0 = z_0 and alpha = sigmoid(raw_alpha), beta = sigmoid(raw_beta).
template <typename S>
std::vector<ad::TaylorJet<S>> forward_lnn(const NetworkParams& p, std::span<const S> theta,
                                         std::span<const ad::TaylorJet<S>> inputs) {
  using lnnpinn::sigmoid;
  if (p.arch != Arch::kLnn) {
    throw std::invalid_argument("forward_lnn called on a non-LNN network");
  }
  detail::check_inputs(p, inputs);
  auto z = detail::input_layer(p, theta, inputs);
  auto h = z;
  for (const LayerOffsets& layer : p.layout.layers) {
    auto rec = detail::affine<S>(theta, layer.weight, 0, p.width, p.width, h, false);
    auto mix = detail::affine<S>(theta, layer.input_mix, layer.bias, p.width, p.width, z, true);
    for (int r = 0; r < p.width; ++r) {
      const std::size_t g = p.layout.gate_size == 1 ? 0 : static_cast<std::size_t>(r);
      const S alpha = sigmoid(theta[layer.raw_alpha + g]);
      const S beta = sigmoid(theta[layer.raw_beta + g]);
      h[r] = ad::scale(h[r], beta) + ad::scale(ad::jet_tanh(rec[r] + mix[r]), alpha);
    }
    z = h;
  }
  return detail::readout(p, theta, z);
}

template <typename S>
std::vector<ad::TaylorJet<S>> forward(const NetworkParams& p, std::span<const S> theta,
                                     std::span<const ad::TaylorJet<S>> inputs) {
  return p.arch == Arch::kMlp ? forward_mlp<S>(p, theta, inputs) : forward_lnn<S>(p, theta, inputs);
}

/// Evaluates output channel `output` and the requested derivatives at one
/// point.  Each differentiated axis gets its own univariate jet pass.
template <typename S>
FieldEval<S> evaluate_field(const NetworkParams& p, std::span<const S> theta, const InputMap& map,
                            std::span<const S> point, std::span<const DerivKey> derivs, int output = 0) {
  using Jet = ad::TaylorJet<S>;
  if (static_cast<int>(point.size()) != p.in_dim) {
    throw std::invalid_argument("evaluate_field: point arity mismatch");
  }
  auto mapped = [&](int axis, int degree, bool moving) {
    const S& x = point[axis];
    Jet j = moving ? Jet::lift(x, degree) : Jet::lift_constant(x, degree);
    return ad::scale(ad::add_constant(j, -map.shift[axis]), map.scale[axis]);
  };
  auto run = [&](int axis, int degree) {
    std::vector<Jet> in;
    for (int a = 0; a < p.in_dim; ++a) {
      in.push_back(mapped(a, degree, a == axis));
    }
    return forward<S>(p, theta, std::span<const Jet>(in))[output];
  };

  FieldEval<S> out;
  bool have_value = false;
  for (int axis = 0; axis < p.in_dim; ++axis) {
    int max_order = 0;
    for (const auto& d : derivs) {
      if (d.axis == axis) {
        max_order = std::max(max_order, d.order);
      }
    }
    if (max_order == 0) {
      continue;
    }
    const Jet y = run(axis, jet_degree_for(max_order));
    if (!have_value) {
      out.value = y[0];
      have_value = true;
    }
    for (const auto& d : derivs) {
      if (d.axis == axis && d.order > 0) {
        out.derivs.emplace_back(d, y.derivative(d.order));
      }
    }
  }
  if (!have_value) {
    out.value = run(-1, 1)[0];
  }
  return out;
}

/// Binary parameter blob: little-endian header followed by the flat vector.
void save_params(const NetworkParams& p, std::ostream& os);
NetworkParams load_params(std::istream& is);
void save_params_file(const NetworkParams& p, const std::string& path);
NetworkParams load_params_file(const std::string& path);

}  // namespace lnnpinn::net
