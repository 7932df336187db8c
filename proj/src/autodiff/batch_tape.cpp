#include "lnnpinn/autodiff/batch_tape.hpp"

#include <cmath>
#include <stdexcept>

#include "lnnpinn/autodiff/scalar_math.hpp"
#include "lnnpinn/autodiff/vector_math.hpp"

namespace lnnpinn::ad {

namespace {

using Eigen::MatrixXd;
using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void require_same_shape(const MatrixXd& a, const MatrixXd& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string("tensor shape mismatch in ") + what);
  }
}

void accumulate(MatrixXd& slot, const MatrixXd& g) {
  if (slot.size() == 0) {
    slot = g;
  } else {
    slot += g;
  }
}

}  // namespace

const Eigen::MatrixXd& Tensor::value() const { return tape_->value(index_); }

void BatchTape::check(Tensor t) const {
  if (t.tape() != this || t.index() < 0 || static_cast<std::size_t>(t.index()) >= nodes_.size()) {
    throw std::invalid_argument("tensor does not belong to this tape");
  }
}

Tensor BatchTape::push(Node node) {
  nodes_.push_back(std::move(node));
  return {this, static_cast<std::int32_t>(nodes_.size() - 1)};
}

Tensor BatchTape::constant(Eigen::MatrixXd value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Tensor BatchTape::constant_fill(Eigen::Index rows, Eigen::Index cols, double c) {
  return constant(MatrixXd::Constant(rows, cols, c));
}

Tensor BatchTape::parameter(std::span<const double> flat, std::size_t offset, Eigen::Index rows, Eigen::Index cols) {
  if (offset + static_cast<std::size_t>(rows * cols) > flat.size()) {
    throw std::out_of_range("parameter slice exceeds flat vector");
  }
  Node n;
  n.value = Eigen::Map<const RowMajor>(flat.data() + offset, rows, cols);
  n.param_offset = static_cast<std::int64_t>(offset);
  return push(std::move(n));
}

Tensor BatchTape::add(Tensor a, Tensor b) {
  check(a);
  check(b);
  require_same_shape(a.value(), b.value(), "add");
  Node n{Op::kAdd, a.index(), b.index()};
  n.value = a.value() + b.value();
  return push(std::move(n));
}

Tensor BatchTape::sub(Tensor a, Tensor b) {
  check(a);
  check(b);
  require_same_shape(a.value(), b.value(), "sub");
  Node n{Op::kSub, a.index(), b.index()};
  n.value = a.value() - b.value();
  return push(std::move(n));
}

Tensor BatchTape::mul(Tensor a, Tensor b) {
  check(a);
  check(b);
  require_same_shape(a.value(), b.value(), "mul");
  Node n{Op::kMul, a.index(), b.index()};
  n.value = a.value().cwiseProduct(b.value());
  return push(std::move(n));
}

Tensor BatchTape::matmul(Tensor a, Tensor b) {
  check(a);
  check(b);
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("tensor shape mismatch in matmul");
  }
  Node n{Op::kMatMul, a.index(), b.index()};
  n.value.noalias() = a.value() * b.value();
  return push(std::move(n));
}

Tensor BatchTape::add_bias(Tensor x, Tensor bias) {
  check(x);
  check(bias);
  if (bias.cols() != 1 || bias.rows() != x.rows()) {
    throw std::invalid_argument("tensor shape mismatch in add_bias");
  }
  Node n{Op::kAddBias, x.index(), bias.index()};
  n.value = x.value().colwise() + bias.value().col(0);
  return push(std::move(n));
}

Tensor BatchTape::scale_rows(Tensor x, Tensor gate) {
  check(x);
  check(gate);
  if (gate.cols() != 1 || (gate.rows() != x.rows() && gate.rows() != 1)) {
    throw std::invalid_argument("tensor shape mismatch in scale_rows");
  }
  Node n{Op::kScaleRows, x.index(), gate.index()};
  if (gate.rows() == 1) {
    n.value = x.value() * gate.value()(0, 0);
  } else {
    n.value = (x.value().array().colwise() * gate.value().col(0).array()).matrix();
  }
  return push(std::move(n));
}

Tensor BatchTape::scale(Tensor a, double factor) {
  check(a);
  Node n{Op::kScale, a.index(), -1, factor};
  n.value = a.value() * factor;
  return push(std::move(n));
}

Tensor BatchTape::add_const(Tensor a, double c) {
  check(a);
  Node n{Op::kAddConst, a.index(), -1, c};
  n.value = a.value().array() + c;
  return push(std::move(n));
}

Tensor BatchTape::neg(Tensor a) {
  check(a);
  Node n{Op::kNeg, a.index()};
  n.value = -a.value();
  return push(std::move(n));
}

Tensor BatchTape::exp(Tensor a) {
  check(a);
  Node n{Op::kExp, a.index()};
  n.value = a.value().array().exp();
  return push(std::move(n));
}

Tensor BatchTape::tanh(Tensor a) {
  check(a);
  Node n{Op::kTanh, a.index()};
  n.value = vector_tanh(a.value());
  return push(std::move(n));
}

Tensor BatchTape::sigmoid(Tensor a) {
  check(a);
  Node n{Op::kSigmoid, a.index()};
  n.value = a.value().unaryExpr([](double x) { return lnnpinn::sigmoid(x); });
  return push(std::move(n));
}

Tensor BatchTape::softplus(Tensor a) {
  check(a);
  Node n{Op::kSoftplus, a.index()};
  n.value = a.value().unaryExpr([](double x) { return lnnpinn::softplus(x); });
  return push(std::move(n));
}

Tensor BatchTape::mean_square(Tensor a) {
  check(a);
  if (a.value().size() == 0) {
    throw std::invalid_argument("mean_square of empty tensor");
  }
  Node n{Op::kMeanSquare, a.index()};
  n.value = MatrixXd::Constant(1, 1, a.value().squaredNorm() / static_cast<double>(a.value().size()));
  return push(std::move(n));
}

void BatchTape::backward(Tensor root, std::span<double> grad) const {
  check(root);
  if (root.rows() != 1 || root.cols() != 1) {
    throw std::invalid_argument("backward root must be a 1x1 tensor");
  }
  const std::size_t count = static_cast<std::size_t>(root.index()) + 1;

  // Only nodes downstream of a parameter carry adjoints.
  std::vector<char> active(count, 0);
  for (std::size_t i = 0; i < count; ++i) {
    const Node& n = nodes_[i];
    if (n.op == Op::kLeaf) {
      active[i] = n.param_offset >= 0;
    } else {
      active[i] = (n.lhs >= 0 && active[n.lhs]) || (n.rhs >= 0 && active[n.rhs]);
    }
  }

  std::vector<MatrixXd> adj(count);
  adj[root.index()] = MatrixXd::Ones(1, 1);
  for (std::int32_t i = root.index(); i >= 0; --i) {
    if (!active[i] || adj[i].size() == 0) {
      continue;
    }
    const Node& n = nodes_[i];
    const MatrixXd& g = adj[i];
    const bool da = n.lhs >= 0 && active[n.lhs];
    const bool db = n.rhs >= 0 && active[n.rhs];
    switch (n.op) {
      case Op::kLeaf: {
        Eigen::Map<RowMajor> out(grad.data() + n.param_offset, n.value.rows(), n.value.cols());
        out += g;
        break;
      }
      case Op::kAdd:
        if (da) accumulate(adj[n.lhs], g);
        if (db) accumulate(adj[n.rhs], g);
        break;
      case Op::kSub:
        if (da) accumulate(adj[n.lhs], g);
        if (db) accumulate(adj[n.rhs], -g);
        break;
      case Op::kMul:
        if (da) accumulate(adj[n.lhs], g.cwiseProduct(nodes_[n.rhs].value));
        if (db) accumulate(adj[n.rhs], g.cwiseProduct(nodes_[n.lhs].value));
        break;
      case Op::kMatMul:
        if (da) accumulate(adj[n.lhs], g * nodes_[n.rhs].value.transpose());
        if (db) accumulate(adj[n.rhs], nodes_[n.lhs].value.transpose() * g);
        break;
      case Op::kAddBias:
        if (da) accumulate(adj[n.lhs], g);
        if (db) accumulate(adj[n.rhs], g.rowwise().sum());
        break;
      case Op::kScaleRows: {
        const MatrixXd& gate = nodes_[n.rhs].value;
        const MatrixXd& x = nodes_[n.lhs].value;
        if (gate.rows() == 1) {
          if (da) accumulate(adj[n.lhs], g * gate(0, 0));
          if (db) accumulate(adj[n.rhs], MatrixXd::Constant(1, 1, g.cwiseProduct(x).sum()));
        } else {
          if (da) accumulate(adj[n.lhs], (g.array().colwise() * gate.col(0).array()).matrix());
          if (db) accumulate(adj[n.rhs], g.cwiseProduct(x).rowwise().sum());
        }
        break;
      }
      case Op::kScale:
        if (da) accumulate(adj[n.lhs], g * n.aux);
        break;
      case Op::kAddConst:
        if (da) accumulate(adj[n.lhs], g);
        break;
      case Op::kNeg:
        if (da) accumulate(adj[n.lhs], -g);
        break;
      case Op::kExp:
        if (da) accumulate(adj[n.lhs], g.cwiseProduct(n.value));
        break;
      case Op::kTanh:
        if (da) accumulate(adj[n.lhs], (g.array() * (1.0 - n.value.array().square())).matrix());
        break;
      case Op::kSigmoid:
        if (da) accumulate(adj[n.lhs], (g.array() * n.value.array() * (1.0 - n.value.array())).matrix());
        break;
      case Op::kSoftplus:
        if (da) {
          const MatrixXd sig = nodes_[n.lhs].value.unaryExpr([](double x) { return lnnpinn::sigmoid(x); });
          accumulate(adj[n.lhs], g.cwiseProduct(sig));
        }
        break;
      case Op::kMeanSquare:
        if (da) {
          const MatrixXd& x = nodes_[n.lhs].value;
          accumulate(adj[n.lhs], x * (2.0 * g(0, 0) / static_cast<double>(x.size())));
        }
        break;
    }
    // Adjoints are consumed in reverse order; release memory early.
    adj[i].resize(0, 0);
  }
}

Tensor operator+(Tensor a, Tensor b) { return a.tape()->add(a, b); }
Tensor operator-(Tensor a, Tensor b) { return a.tape()->sub(a, b); }
Tensor operator*(Tensor a, Tensor b) { return a.tape()->mul(a, b); }
Tensor operator-(Tensor a) { return a.tape()->neg(a); }
Tensor operator+(Tensor a, double c) { return a.tape()->add_const(a, c); }
Tensor operator+(double c, Tensor a) { return a.tape()->add_const(a, c); }
Tensor operator-(Tensor a, double c) { return a.tape()->add_const(a, -c); }
Tensor operator-(double c, Tensor a) { return a.tape()->add_const(a.tape()->neg(a), c); }
Tensor operator*(Tensor a, double c) { return a.tape()->scale(a, c); }
Tensor operator*(double c, Tensor a) { return a.tape()->scale(a, c); }

Tensor exp(Tensor a) { return a.tape()->exp(a); }
Tensor tanh(Tensor a) { return a.tape()->tanh(a); }
Tensor sigmoid(Tensor a) { return a.tape()->sigmoid(a); }
Tensor softplus(Tensor a) { return a.tape()->softplus(a); }

Tensor constant_like(Tensor ref, double c) { return ref.tape()->constant_fill(ref.rows(), ref.cols(), c); }

}  // namespace lnnpinn::ad
