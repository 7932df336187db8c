#include "lnnpinn/autodiff/tape.hpp"

#include <cmath>
#include <string>

#include "lnnpinn/autodiff/scalar_math.hpp"

namespace lnnpinn::ad {

double Var::value() const { return tape_->value(index_); }

void Tape::check(Var v) const {
  if (v.tape() != this || v.index() < 0 || static_cast<std::size_t>(v.index()) >= nodes_.size()) {
    throw std::invalid_argument("tape operand does not belong to this tape");
  }
}

Var Tape::push(TapeNode node, double value) {
  if (!std::isfinite(value)) {
    all_finite_ = false;
  }
  nodes_.push_back(node);
  values_.push_back(value);
  return {this, static_cast<std::int32_t>(nodes_.size() - 1)};
}

Var Tape::parameter(double value) {
  Var v = push({OpKind::kParameter, -1, -1, 0.0, 0.0, value}, value);
  parameters_.push_back(v.index());
  return v;
}

Var Tape::constant(double value) { return push({OpKind::kConstant, -1, -1, 0.0, 0.0, value}, value); }

Var Tape::add(Var a, Var b) {
  check(a);
  check(b);
  return push({OpKind::kAdd, a.index(), b.index(), 1.0, 1.0}, a.value() + b.value());
}

Var Tape::sub(Var a, Var b) {
  check(a);
  check(b);
  return push({OpKind::kSub, a.index(), b.index(), 1.0, -1.0}, a.value() - b.value());
}

Var Tape::mul(Var a, Var b) {
  check(a);
  check(b);
  return push({OpKind::kMul, a.index(), b.index(), b.value(), a.value()}, a.value() * b.value());
}

Var Tape::div(Var a, Var b) {
  check(a);
  check(b);
  const double den = b.value();
  if (den == 0.0) {
    throw std::domain_error("tape division by zero");
  }
  const double q = a.value() / den;
  return push({OpKind::kDiv, a.index(), b.index(), 1.0 / den, -q / den}, q);
}

Var Tape::neg(Var a) {
  check(a);
  return push({OpKind::kNeg, a.index(), -1, -1.0, 0.0}, -a.value());
}

Var Tape::exp(Var a) {
  check(a);
  const double e = std::exp(a.value());
  return push({OpKind::kExp, a.index(), -1, e, 0.0}, e);
}

Var Tape::tanh(Var a) {
  check(a);
  const double t = std::tanh(a.value());
  return push({OpKind::kTanh, a.index(), -1, 1.0 - t * t, 0.0}, t);
}

Var Tape::sigmoid(Var a) {
  check(a);
  const double s = lnnpinn::sigmoid(a.value());
  return push({OpKind::kSigmoid, a.index(), -1, s * (1.0 - s), 0.0}, s);
}

Var Tape::softplus(Var a) {
  check(a);
  const double x = a.value();
  return push({OpKind::kSoftplus, a.index(), -1, lnnpinn::sigmoid(x), 0.0}, lnnpinn::softplus(x));
}

Var Tape::pow_int(Var a, int exponent) {
  check(a);
  const double x = a.value();
  if (exponent < 0 && x == 0.0) {
    throw std::domain_error("tape negative power of zero");
  }
  const double partial = exponent == 0 ? 0.0 : exponent * std::pow(x, exponent - 1);
  return push({OpKind::kPowInt, a.index(), -1, partial, 0.0, static_cast<double>(exponent)},
              std::pow(x, exponent));
}

Var Tape::scale(Var a, double factor) {
  check(a);
  return push({OpKind::kScale, a.index(), -1, factor, 0.0, factor}, a.value() * factor);
}

Var Tape::add_const(Var a, double c) {
  check(a);
  return push({OpKind::kAddConst, a.index(), -1, 1.0, 0.0, c}, a.value() + c);
}

std::vector<double> Tape::replay() const {
  std::vector<double> v(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const TapeNode& n = nodes_[i];
    const double a = n.lhs >= 0 ? v[n.lhs] : 0.0;
    const double b = n.rhs >= 0 ? v[n.rhs] : 0.0;
    switch (n.op) {
      case OpKind::kParameter:
      case OpKind::kConstant: v[i] = n.aux; break;
      case OpKind::kAdd: v[i] = a + b; break;
      case OpKind::kSub: v[i] = a - b; break;
      case OpKind::kMul: v[i] = a * b; break;
      case OpKind::kDiv: v[i] = a / b; break;
      case OpKind::kNeg: v[i] = -a; break;
      case OpKind::kExp: v[i] = std::exp(a); break;
      case OpKind::kTanh: v[i] = std::tanh(a); break;
      case OpKind::kSigmoid: v[i] = lnnpinn::sigmoid(a); break;
      case OpKind::kSoftplus: v[i] = lnnpinn::softplus(a); break;
      case OpKind::kPowInt: v[i] = std::pow(a, static_cast<int>(n.aux)); break;
      case OpKind::kScale: v[i] = a * n.aux; break;
      case OpKind::kAddConst: v[i] = a + n.aux; break;
    }
  }
  return v;
}

Grad backward(const Tape& tape, Var root) {
  if (root.tape() != &tape || root.index() < 0 || static_cast<std::size_t>(root.index()) >= tape.size()) {
    throw std::invalid_argument("backward root is not a scalar node of this tape");
  }
  std::vector<double> adjoint(root.index() + 1, 0.0);
  adjoint[root.index()] = 1.0;
  for (std::int32_t i = root.index(); i >= 0; --i) {
    const double g = adjoint[i];
    if (g == 0.0) {
      continue;
    }
    const TapeNode& n = tape.nodes_[i];
    if (n.lhs >= 0) {
      adjoint[n.lhs] += g * n.lhs_partial;
    }
    if (n.rhs >= 0) {
      adjoint[n.rhs] += g * n.rhs_partial;
    }
  }
  Grad grad(tape.parameters_.size(), 0.0);
  for (std::size_t p = 0; p < tape.parameters_.size(); ++p) {
    const std::int32_t idx = tape.parameters_[p];
    if (idx <= root.index()) {
      grad[p] = adjoint[idx];
    }
  }
  return grad;
}

Var operator+(Var a, Var b) { return a.tape()->add(a, b); }
Var operator-(Var a, Var b) { return a.tape()->sub(a, b); }
Var operator*(Var a, Var b) { return a.tape()->mul(a, b); }
Var operator/(Var a, Var b) { return a.tape()->div(a, b); }
Var operator-(Var a) { return a.tape()->neg(a); }
Var operator+(Var a, double c) { return a.tape()->add_const(a, c); }
Var operator+(double c, Var a) { return a.tape()->add_const(a, c); }
Var operator-(Var a, double c) { return a.tape()->add_const(a, -c); }
Var operator-(double c, Var a) { return a.tape()->add_const(a.tape()->neg(a), c); }
Var operator*(Var a, double c) { return a.tape()->scale(a, c); }
Var operator*(double c, Var a) { return a.tape()->scale(a, c); }
Var operator/(Var a, double c) {
  if (c == 0.0) {
    throw std::domain_error("tape division by zero");
  }
  return a.tape()->scale(a, 1.0 / c);
}

Var exp(Var a) { return a.tape()->exp(a); }
Var tanh(Var a) { return a.tape()->tanh(a); }
Var sigmoid(Var a) { return a.tape()->sigmoid(a); }
Var softplus(Var a) { return a.tape()->softplus(a); }
Var pow_int(Var a, int exponent) { return a.tape()->pow_int(a, exponent); }

}  // namespace lnnpinn::ad
