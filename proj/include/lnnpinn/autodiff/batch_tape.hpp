#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

namespace lnnpinn::ad {

class BatchTape;

/// Handle to a matrix-valued node on a BatchTape.  Elementwise arithmetic on
/// tensors mirrors the scalar Var API, so TaylorJet<Tensor> propagates Taylor
/// coefficients for a whole batch of sample points at once.
class Tensor {
 public:
  Tensor() = default;
  Tensor(BatchTape* tape, std::int32_t index) : tape_(tape), index_(index) {}

  [[nodiscard]] const Eigen::MatrixXd& value() const;
  [[nodiscard]] std::int32_t index() const { return index_; }
  [[nodiscard]] BatchTape* tape() const { return tape_; }
  [[nodiscard]] Eigen::Index rows() const { return value().rows(); }
  [[nodiscard]] Eigen::Index cols() const { return value().cols(); }

 private:
  BatchTape* tape_ = nullptr;
  std::int32_t index_ = -1;
};

/// Reverse-mode tape over dense matrices.  Parameter leaves map onto
/// row-major slices of a flat parameter vector so the gradient comes back in
/// the same layout.
class BatchTape {
 public:
  enum class Op : std::uint8_t {
    kLeaf,
    kAdd,
    kSub,
    kMul,          // elementwise
    kMatMul,       // lhs (m x k) * rhs (k x n)
    kAddBias,      // lhs (m x n) + rhs (m x 1) broadcast over columns
    kScaleRows,    // rhs (m x 1 or 1 x 1) scales rows of lhs (m x n)
    kScale,        // lhs * aux
    kAddConst,     // lhs + aux
    kNeg,
    kExp,
    kTanh,
    kSigmoid,
    kSoftplus,
    kMeanSquare,   // mean of squared entries -> 1 x 1
  };

  BatchTape() = default;
  BatchTape(const BatchTape&) = delete;
  BatchTape& operator=(const BatchTape&) = delete;

  Tensor constant(Eigen::MatrixXd value);
  Tensor constant_fill(Eigen::Index rows, Eigen::Index cols, double c);

  /// Leaf bound to flat[offset, offset + rows*cols) in row-major order.
  Tensor parameter(std::span<const double> flat, std::size_t offset, Eigen::Index rows, Eigen::Index cols);

  Tensor add(Tensor a, Tensor b);
  Tensor sub(Tensor a, Tensor b);
  Tensor mul(Tensor a, Tensor b);
  Tensor matmul(Tensor a, Tensor b);
  Tensor add_bias(Tensor x, Tensor bias);
  Tensor scale_rows(Tensor x, Tensor gate);
  Tensor scale(Tensor a, double factor);
  Tensor add_const(Tensor a, double c);
  Tensor neg(Tensor a);
  Tensor exp(Tensor a);
  Tensor tanh(Tensor a);
  Tensor sigmoid(Tensor a);
  Tensor softplus(Tensor a);
  Tensor mean_square(Tensor a);

  [[nodiscard]] const Eigen::MatrixXd& value(std::int32_t index) const { return nodes_[index].value; }
  [[nodiscard]] std::size_t size() const { return nodes_.size(); }

  /// Accumulates d(root)/d(parameter) into `grad` (flat layout).  `root`
  /// must be a 1 x 1 node.
  void backward(Tensor root, std::span<double> grad) const;

 private:
  struct Node {
    Node() = default;
    Node(Op o, std::int32_t l, std::int32_t r = -1, double a = 0.0) : op(o), lhs(l), rhs(r), aux(a) {}

    Op op = Op::kLeaf;
    std::int32_t lhs = -1;
    std::int32_t rhs = -1;
    double aux = 0.0;
    Eigen::MatrixXd value;
    std::int64_t param_offset = -1;
  };

  Tensor push(Node node);
  void check(Tensor t) const;

  std::vector<Node> nodes_;
};

Tensor operator+(Tensor a, Tensor b);
Tensor operator-(Tensor a, Tensor b);
Tensor operator*(Tensor a, Tensor b);
Tensor operator-(Tensor a);
Tensor operator+(Tensor a, double c);
Tensor operator+(double c, Tensor a);
Tensor operator-(Tensor a, double c);
Tensor operator-(double c, Tensor a);
Tensor operator*(Tensor a, double c);
Tensor operator*(double c, Tensor a);

Tensor exp(Tensor a);
Tensor tanh(Tensor a);
Tensor sigmoid(Tensor a);
Tensor softplus(Tensor a);

/// Same-shaped constant filled with c; lets TaylorJet<Tensor> seed jets.
Tensor constant_like(Tensor ref, double c);

}  // namespace lnnpinn::ad
