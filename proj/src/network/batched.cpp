#include "lnnpinn/network/batched.hpp"

#include <algorithm>
#include <stdexcept>

namespace lnnpinn::net {

namespace {

using ad::Tensor;
using Jet = ad::TaylorJet<Tensor>;

// Value plus one univariate Taylor expansion per differentiated axis.  All
// directions share the constant coefficient.
struct MultiJet {
  Tensor value;
  std::vector<int> axes;
  std::vector<Jet> dirs;  // dirs[i][0] == value
};

MultiJet linear(const MultiJet& x, Tensor weight, const Tensor* bias) {
  MultiJet out;
  out.axes = x.axes;
  Tensor v = weight.tape()->matmul(weight, x.value);
  out.value = bias ? v.tape()->add_bias(v, *bias) : v;
  for (const Jet& d : x.dirs) {
    std::vector<Tensor> c{out.value};
    for (int k = 1; k <= d.degree(); ++k) {
      c.push_back(weight.tape()->matmul(weight, d[k]));
    }
    out.dirs.emplace_back(std::move(c));
  }
  return out;
}

MultiJet tanh_jet(const MultiJet& x) {
  MultiJet out;
  out.axes = x.axes;
  out.value = ad::tanh(x.value);
  for (const Jet& d : x.dirs) {
    out.dirs.push_back(ad::jet_tanh(d, out.value));
  }
  return out;
}

// beta * h + alpha * t, coefficient by coefficient.
MultiJet gate_mix(const MultiJet& h, const MultiJet& t, Tensor alpha, Tensor beta) {
  ad::BatchTape& tape = *alpha.tape();
  auto mix = [&](Tensor hk, Tensor tk) { return tape.scale_rows(hk, beta) + tape.scale_rows(tk, alpha); };
  MultiJet out;
  out.axes = h.axes;
  out.value = mix(h.value, t.value);
  for (std::size_t i = 0; i < h.dirs.size(); ++i) {
    std::vector<Tensor> c{out.value};
    for (int k = 1; k <= h.dirs[i].degree(); ++k) {
      c.push_back(mix(h.dirs[i][k], t.dirs[i][k]));
    }
    out.dirs.emplace_back(std::move(c));
  }
  return out;
}

}  // namespace

BatchedNetwork::BatchedNetwork(ad::BatchTape& tape, const NetworkParams& params) : tape_(tape), params_(params) {
  const Layout& l = params.layout;
  const std::span<const double> flat(params.flat);
  const int w = params.width;
  const auto gate_rows = static_cast<Eigen::Index>(l.gate_size);
  w_in_ = tape.parameter(flat, l.w_in, w, params.in_dim);
  b_in_ = tape.parameter(flat, l.b_in, w, 1);
  for (const LayerOffsets& lo : l.layers) {
    Layer layer;
    if (params.arch == Arch::kMlp) {
      layer.weight = tape.parameter(flat, lo.weight, w, w);
    } else {
      // z_l == h_l because psi is the identity and h_0 = z_0, so
      // W_h h_l + U z_l == (W_h + U) h_l.
      layer.weight = tape.parameter(flat, lo.weight, w, w) + tape.parameter(flat, lo.input_mix, w, w);
      layer.alpha = ad::sigmoid(tape.parameter(flat, lo.raw_alpha, gate_rows, 1));
      layer.beta = ad::sigmoid(tape.parameter(flat, lo.raw_beta, gate_rows, 1));
    }
    layer.bias = tape.parameter(flat, lo.bias, w, 1);
    layers_.push_back(layer);
  }
}

FieldEval<Tensor> BatchedNetwork::evaluate(const InputMap& map, const Eigen::MatrixXd& points,
                                           std::span<const DerivKey> derivs, int output) {
  const int in_dim = params_.in_dim;
  if (points.rows() != in_dim) {
    throw std::invalid_argument("batched evaluate: points must have in_dim rows");
  }
  if (output < 0 || output >= params_.out_dim) {
    throw std::invalid_argument("batched evaluate: output channel out of range");
  }
  const Eigen::Index n = points.cols();

  Eigen::MatrixXd mapped(in_dim, n);
  for (int a = 0; a < in_dim; ++a) {
    mapped.row(a) = (points.row(a).array() - map.shift[a]) * map.scale[a];
  }

  MultiJet x;
  x.value = tape_.constant(std::move(mapped));
  for (int a = 0; a < in_dim; ++a) {
    int max_order = 0;
    for (const auto& d : derivs) {
      if (d.axis == a) {
        max_order = std::max(max_order, d.order);
      }
    }
    if (max_order == 0) {
      continue;
    }
    const int degree = jet_degree_for(max_order);
    Eigen::MatrixXd seed = Eigen::MatrixXd::Zero(in_dim, n);
    seed.row(a).setConstant(map.scale[a]);
    std::vector<Tensor> c{x.value, tape_.constant(std::move(seed))};
    for (int k = 2; k <= degree; ++k) {
      c.push_back(tape_.constant_fill(in_dim, n, 0.0));
    }
    x.axes.push_back(a);
    x.dirs.emplace_back(std::move(c));
  }

  MultiJet z = linear(x, w_in_, &b_in_);
  for (const Layer& layer : layers_) {
    MultiJet t = tanh_jet(linear(z, layer.weight, &layer.bias));
    z = params_.arch == Arch::kMlp ? std::move(t) : gate_mix(z, t, layer.alpha, layer.beta);
  }

  const std::span<const double> flat(params_.flat);
  const auto w = static_cast<std::size_t>(params_.width);
  Tensor w_out = tape_.parameter(flat, params_.layout.w_out + static_cast<std::size_t>(output) * w, 1, params_.width);
  Tensor b_out = tape_.parameter(flat, params_.layout.b_out + static_cast<std::size_t>(output), 1, 1);
  MultiJet y = linear(z, w_out, &b_out);

  FieldEval<Tensor> out;
  out.value = y.value;
  for (const auto& d : derivs) {
    if (d.order == 0) {
      continue;
    }
    const auto it = std::find(y.axes.begin(), y.axes.end(), d.axis);
    const Jet& dir = y.dirs[static_cast<std::size_t>(it - y.axes.begin())];
    out.derivs.emplace_back(d, d.order == 1 ? dir[1] : dir.derivative(d.order));
  }
  return out;
}

}  // namespace lnnpinn::net
