#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace lnnpinn::ad {

/// Operation recorded on a scalar tape node.
enum class OpKind : std::uint8_t {
  kParameter,
  kConstant,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kNeg,
  kExp,
  kTanh,
  kSigmoid,
  kSoftplus,
  kPowInt,
  kScale,     // operand * aux
  kAddConst,  // operand + aux
};

struct TapeNode {
  OpKind op;
  std::int32_t lhs = -1;
  std::int32_t rhs = -1;
  double lhs_partial = 0.0;
  double rhs_partial = 0.0;
  double aux = 0.0;  // constant value, exponent or scale factor
};

class Tape;

/// Handle to a scalar node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::int32_t index) : tape_(tape), index_(index) {}

  [[nodiscard]] double value() const;
  [[nodiscard]] std::int32_t index() const { return index_; }
  [[nodiscard]] Tape* tape() const { return tape_; }

 private:
  Tape* tape_ = nullptr;
  std::int32_t index_ = -1;
};

/// Partials of a root node with respect to each declared parameter, in
/// declaration order.
using Grad = std::vector<double>;

/// Append-only scalar computation graph. Operands always precede results, so a
/// single reverse sweep computes exact adjoints.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var parameter(double value);
  Var constant(double value);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var div(Var a, Var b);
  Var neg(Var a);
  Var exp(Var a);
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var softplus(Var a);
  Var pow_int(Var a, int exponent);
  Var scale(Var a, double factor);
  Var add_const(Var a, double c);

  [[nodiscard]] double value(std::int32_t index) const { return values_.at(index); }
  [[nodiscard]] std::size_t size() const { return nodes_.size(); }
  [[nodiscard]] std::size_t parameter_count() const { return parameters_.size(); }
  [[nodiscard]] std::span<const TapeNode> nodes() const { return nodes_; }
  [[nodiscard]] std::span<const double> values() const { return values_; }

  /// False once any node holds NaN or Inf (e.g. exp of a huge input).
  [[nodiscard]] bool all_finite() const { return all_finite_; }

  /// Recomputes every node value from the recorded operations.
  [[nodiscard]] std::vector<double> replay() const;

 private:
  friend Grad backward(const Tape& tape, Var root);

  Var push(TapeNode node, double value);
  void check(Var v) const;

  std::vector<TapeNode> nodes_;
  std::vector<double> values_;
  std::vector<std::int32_t> parameters_;
  bool all_finite_ = true;
};

/// Reverse sweep from `root`; returns d(root)/d(parameter) for every parameter.
Grad backward(const Tape& tape, Var root);

// Operator sugar so generic numeric code runs unchanged on Var.
Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator-(Var a);
Var operator+(Var a, double c);
Var operator+(double c, Var a);
Var operator-(Var a, double c);
Var operator-(double c, Var a);
Var operator*(Var a, double c);
Var operator*(double c, Var a);
Var operator/(Var a, double c);

Var exp(Var a);
Var tanh(Var a);
Var sigmoid(Var a);
Var softplus(Var a);
Var pow_int(Var a, int exponent);

}  // namespace lnnpinn::ad
