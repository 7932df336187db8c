#include "lnnpinn/network/jet_engine.hpp"

#include <algorithm>
#include <stdexcept>

#include "lnnpinn/autodiff/scalar_math.hpp"
#include "lnnpinn/autodiff/vector_math.hpp"

namespace lnnpinn::net {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

MatrixXd slice(std::span<const double> flat, std::size_t offset, Index rows, Index cols) {
  return Eigen::Map<const RowMajor>(flat.data() + offset, rows, cols);
}

VectorXd gate(std::span<const double> flat, std::size_t offset, std::size_t size) {
  VectorXd g(static_cast<Index>(size));
  for (std::size_t i = 0; i < size; ++i) {
    g(static_cast<Index>(i)) = lnnpinn::sigmoid(flat[offset + i]);
  }
  return g;
}

void add_to(std::span<double> grad, std::size_t offset, const MatrixXd& g) {
  Eigen::Map<RowMajor> out(grad.data() + offset, g.rows(), g.cols());
  out += g;
}

// x scaled per row by a gate vector (length rows or 1).
MatrixXd gated(const MatrixXd& x, const VectorXd& g) {
  if (g.size() == 1) {
    return x * g(0);
  }
  return (x.array().colwise() * g.array()).matrix();
}

// d/d(raw gate) of sum(adj .* x) through the sigmoid.
VectorXd gate_grad(const MatrixXd& adj, const MatrixXd& x, const VectorXd& g) {
  VectorXd s = adj.cwiseProduct(x).rowwise().sum();
  if (g.size() == 1) {
    s = VectorXd::Constant(1, s.sum());
  }
  return s.array() * g.array() * (1.0 - g.array());
}

}  // namespace

JetEngine::JetEngine(const NetworkParams& params, const InputMap& map, std::span<const DerivKey> derivs, int output)
    : params_(params), map_(map), derivs_(derivs.begin(), derivs.end()), output_(output) {
  if (output < 0 || output >= params.out_dim) {
    throw std::invalid_argument("jet engine: output channel out of range");
  }
  if (static_cast<int>(map.shift.size()) != params.in_dim || static_cast<int>(map.scale.size()) != params.in_dim) {
    throw std::invalid_argument("jet engine: input map arity mismatch");
  }
  for (int a = 0; a < params.in_dim; ++a) {
    int max_order = 0;
    for (const DerivKey& d : derivs_) {
      if (d.axis < 0 || d.axis >= params.in_dim) {
        throw std::invalid_argument("jet engine: derivative axis out of range");
      }
      if (d.axis == a) {
        max_order = std::max(max_order, d.order);
      }
    }
    if (max_order > 0) {
      const int degree = jet_degree_for(max_order);
      dirs_.push_back({a, degree, blocks_});
      blocks_ += degree;
    }
  }

  const std::span<const double> flat(params.flat);
  const Layout& l = params.layout;
  const int w = params.width;
  w_in_ = slice(flat, l.w_in, w, params.in_dim);
  b_in_ = slice(flat, l.b_in, w, 1);
  for (const LayerOffsets& lo : l.layers) {
    MatrixXd weight = slice(flat, lo.weight, w, w);
    if (params.arch == Arch::kLnn) {
      weight += slice(flat, lo.input_mix, w, w);
      alphas_.push_back(gate(flat, lo.raw_alpha, l.gate_size));
      betas_.push_back(gate(flat, lo.raw_beta, l.gate_size));
    }
    weights_.push_back(std::move(weight));
    biases_.push_back(slice(flat, lo.bias, w, 1));
  }
  w_out_ = slice(flat, l.w_out + static_cast<std::size_t>(output) * static_cast<std::size_t>(w), 1, w);
  b_out_ = flat[l.b_out + static_cast<std::size_t>(output)];
}

namespace {

// Taylor coefficients of y = tanh(a) along one direction from y' = s a',
// s = 1 - y^2:  k y_k = sum_{j=1..k} j a_j s_{k-j},  s_k = -sum_{i=0..k} y_i y_{k-i}.
// Each element runs the recurrence in registers; pointers index coefficient
// blocks of `count` contiguous entries.
template <int K>
void tanh_forward_kernel(const double* const* a_in, double* const* y_in, Index count) {
  const double* a[K + 1];
  double* y[K + 1];
  for (int k = 0; k <= K; ++k) {
    a[k] = a_in[k];
    y[k] = y_in[k];
  }
  for (Index e = 0; e < count; ++e) {
    double av[K + 1];
    double yv[K + 1];
    double s[K];
    yv[0] = y[0][e];
    #pragma GCC unroll 8
    for (int k = 1; k <= K; ++k) {
      av[k] = a[k][e];
    }
    s[0] = 1.0 - yv[0] * yv[0];
    #pragma GCC unroll 8
    for (int k = 1; k <= K; ++k) {
      double acc = 0.0;
      #pragma GCC unroll 8
      for (int j = 1; j <= k; ++j) {
        acc += j * av[j] * s[k - j];
      }
      yv[k] = acc / k;
      if (k < K) {
        double sk = 0.0;
        #pragma GCC unroll 8
        for (int i = 0; i <= k; ++i) {
          sk -= yv[i] * yv[k - i];
        }
        s[k] = sk;
      }
    }
    #pragma GCC unroll 8
    for (int k = 1; k <= K; ++k) {
      y[k][e] = yv[k];
    }
  }
}

// Reverse of tanh_forward_kernel for coefficients 1..K.  Adds into
// pre_adj[1..K]; the value-slot adjoints y0_adj and s0_adj accumulate across
// directions and are resolved once by the caller.
template <int K>
void tanh_backward_kernel(const double* const* a_in, const double* const* y_in, const double* const* y_adj_in,
                          double* const* pre_adj_in, double* __restrict y0_adj, double* __restrict s0_adj,
                          Index count) {
  const double* a[K + 1];
  const double* y[K + 1];
  const double* y_adj[K + 1];
  double* pre_adj[K + 1];
  for (int k = 0; k <= K; ++k) {
    a[k] = a_in[k];
    y[k] = y_in[k];
    y_adj[k] = y_adj_in[k];
    pre_adj[k] = pre_adj_in[k];
  }
  for (Index e = 0; e < count; ++e) {
    double av[K + 1];
    double yv[K + 1];
    double ya[K + 1];
    double s[K];
    double sa[K];
    #pragma GCC unroll 8
    for (int k = 0; k <= K; ++k) {
      yv[k] = y[k][e];
    }
    #pragma GCC unroll 8
    for (int k = 1; k <= K; ++k) {
      av[k] = a[k][e];
      ya[k] = y_adj[k][e];
    }
    ya[0] = 0.0;
    s[0] = 1.0 - yv[0] * yv[0];
    #pragma GCC unroll 8
    for (int k = 1; k < K; ++k) {
      double sk = 0.0;
      #pragma GCC unroll 8
      for (int i = 0; i <= k; ++i) {
        sk -= yv[i] * yv[k - i];
      }
      s[k] = sk;
    }
    #pragma GCC unroll 8
    for (int k = 0; k < K; ++k) {
      sa[k] = 0.0;
    }
    double aa[K + 1];
    #pragma GCC unroll 8
    for (int k = 0; k <= K; ++k) {
      aa[k] = 0.0;
    }
    #pragma GCC unroll 8
    for (int k = K; k >= 1; --k) {
      if (k < K) {
        #pragma GCC unroll 8
        for (int m = 0; m <= k; ++m) {
          ya[m] -= 2.0 * sa[k] * yv[k - m];
        }
      }
      const double g = ya[k] / k;
      #pragma GCC unroll 8
      for (int j = 1; j <= k; ++j) {
        aa[j] += j * g * s[k - j];
        sa[k - j] += j * g * av[j];
      }
    }
    #pragma GCC unroll 8
    for (int k = 1; k <= K; ++k) {
      pre_adj[k][e] += aa[k];
    }
    y0_adj[e] += ya[0];
    s0_adj[e] += sa[0];
  }
}

}  // namespace

void JetEngine::tanh_jet(const MatrixXd& pre, MatrixXd& out) const {
  const Index n = n_;
  const Index block = pre.rows() * n;
  out.resize(pre.rows(), pre.cols());
  out.middleCols(0, n) = ad::vector_tanh(pre.middleCols(0, n));
  for (const Direction& d : dirs_) {
    const double* a[5] = {pre.data()};
    double* y[5] = {out.data()};
    for (int k = 1; k <= d.degree; ++k) {
      a[k] = pre.data() + (d.first_block + k - 1) * block;
      y[k] = out.data() + (d.first_block + k - 1) * block;
    }
    switch (d.degree) {
      case 1: tanh_forward_kernel<1>(a, y, block); break;
      case 2: tanh_forward_kernel<2>(a, y, block); break;
      default: tanh_forward_kernel<4>(a, y, block); break;
    }
  }
}

void JetEngine::tanh_jet_backward(const MatrixXd& pre, const MatrixXd& out, const MatrixXd& out_adj,
                                  MatrixXd& pre_adj) const {
  const Index n = n_;
  const Index block = pre.rows() * n;
  pre_adj.setZero(pre.rows(), pre.cols());
  Eigen::ArrayXXd y0_adj = out_adj.middleCols(0, n).array();
  Eigen::ArrayXXd s0_adj = Eigen::ArrayXXd::Zero(pre.rows(), n);
  for (const Direction& d : dirs_) {
    const double* a[5] = {pre.data()};
    const double* y[5] = {out.data()};
    const double* ya[5] = {out_adj.data()};
    double* pa[5] = {pre_adj.data()};
    for (int k = 1; k <= d.degree; ++k) {
      const Index off = (d.first_block + k - 1) * block;
      a[k] = pre.data() + off;
      y[k] = out.data() + off;
      ya[k] = out_adj.data() + off;
      pa[k] = pre_adj.data() + off;
    }
    switch (d.degree) {
      case 1: tanh_backward_kernel<1>(a, y, ya, pa, y0_adj.data(), s0_adj.data(), block); break;
      case 2: tanh_backward_kernel<2>(a, y, ya, pa, y0_adj.data(), s0_adj.data(), block); break;
      default: tanh_backward_kernel<4>(a, y, ya, pa, y0_adj.data(), s0_adj.data(), block); break;
    }
  }
  const Eigen::ArrayXXd y0 = out.middleCols(0, n).array();
  pre_adj.middleCols(0, n).array() = (y0_adj - 2.0 * y0 * s0_adj) * (1.0 - y0.square());
}

BatchField JetEngine::forward(const MatrixXd& points) {
  const int in_dim = params_.in_dim;
  if (points.rows() != in_dim) {
    throw std::invalid_argument("jet engine: points must have in_dim rows");
  }
  n_ = points.cols();
  const Index n = n_;
  input_.setZero(in_dim, cols());
  for (int a = 0; a < in_dim; ++a) {
    input_.block(a, 0, 1, n) = (points.row(a).array() - map_.shift[a]) * map_.scale[a];
  }
  for (const Direction& d : dirs_) {
    input_.block(d.axis, d.first_block * n, 1, n).setConstant(map_.scale[d.axis]);
  }

  const bool lnn = params_.arch == Arch::kLnn;
  z_.assign(1, MatrixXd());
  z_[0].noalias() = w_in_ * input_;
  z_[0].middleCols(0, n).colwise() += b_in_;
  pre_.resize(weights_.size());
  act_.resize(weights_.size());
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    pre_[l].noalias() = weights_[l] * z_[l];
    pre_[l].middleCols(0, n).colwise() += biases_[l];
    tanh_jet(pre_[l], act_[l]);
    z_.push_back(lnn ? MatrixXd(gated(z_[l], betas_[l]) + gated(act_[l], alphas_[l])) : act_[l]);
  }

  const Eigen::RowVectorXd y = w_out_ * z_.back();
  BatchField f;
  f.value = y.segment(0, n).array() + b_out_;
  for (const DerivKey& key : derivs_) {
    if (key.order == 0) {
      f.derivs.push_back(f.value);
      continue;
    }
    const auto it = std::find_if(dirs_.begin(), dirs_.end(), [&](const Direction& d) { return d.axis == key.axis; });
    f.derivs.push_back(y.segment((it->first_block + key.order - 1) * n, n) * ad::factorial(key.order));
  }
  return f;
}

void JetEngine::backward(const BatchField& adjoint, std::span<double> grad) const {
  if (grad.size() != params_.size()) {
    throw std::invalid_argument("jet engine: gradient buffer size does not match parameter count");
  }
  if (z_.empty() || adjoint.derivs.size() != derivs_.size() || adjoint.value.size() != n_) {
    throw std::invalid_argument("jet engine: adjoint does not match the last forward pass");
  }
  const Index n = n_;
  const Layout& l = params_.layout;
  const std::size_t w = static_cast<std::size_t>(params_.width);

  Eigen::RowVectorXd y_adj = Eigen::RowVectorXd::Zero(cols());
  y_adj.segment(0, n) = adjoint.value;
  for (std::size_t i = 0; i < derivs_.size(); ++i) {
    const DerivKey& key = derivs_[i];
    if (key.order == 0) {
      y_adj.segment(0, n) += adjoint.derivs[i];
      continue;
    }
    const auto it = std::find_if(dirs_.begin(), dirs_.end(), [&](const Direction& d) { return d.axis == key.axis; });
    y_adj.segment((it->first_block + key.order - 1) * n, n) += adjoint.derivs[i] * ad::factorial(key.order);
  }
  add_to(grad, l.w_out + static_cast<std::size_t>(output_) * w, y_adj * z_.back().transpose());
  grad[l.b_out + static_cast<std::size_t>(output_)] += y_adj.segment(0, n).sum();

  const bool lnn = params_.arch == Arch::kLnn;
  MatrixXd z_adj = w_out_.transpose() * y_adj;
  MatrixXd act_adj;
  MatrixXd pre_adj;
  for (std::size_t li = weights_.size(); li-- > 0;) {
    const LayerOffsets& lo = l.layers[li];
    MatrixXd below;
    if (lnn) {
      act_adj = gated(z_adj, alphas_[li]);
      add_to(grad, lo.raw_alpha, gate_grad(z_adj, act_[li], alphas_[li]));
      add_to(grad, lo.raw_beta, gate_grad(z_adj, z_[li], betas_[li]));
      below = gated(z_adj, betas_[li]);
    } else {
      act_adj = std::move(z_adj);
    }
    tanh_jet_backward(pre_[li], act_[li], act_adj, pre_adj);
    const MatrixXd w_grad = pre_adj * z_[li].transpose();
    add_to(grad, lo.weight, w_grad);
    if (lnn) {
      add_to(grad, lo.input_mix, w_grad);
    }
    add_to(grad, lo.bias, pre_adj.middleCols(0, n).rowwise().sum());
    if (lnn) {
      below.noalias() += weights_[li].transpose() * pre_adj;
      z_adj = std::move(below);
    } else {
      z_adj.noalias() = weights_[li].transpose() * pre_adj;
    }
  }
  add_to(grad, l.w_in, z_adj * input_.transpose());
  add_to(grad, l.b_in, z_adj.middleCols(0, n).rowwise().sum());
}

}  // namespace lnnpinn::net
