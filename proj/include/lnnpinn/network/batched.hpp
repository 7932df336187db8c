#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "lnnpinn/autodiff/batch_tape.hpp"
#include "lnnpinn/network/network.hpp"

namespace lnnpinn::net {

/// Network bound to a BatchTape: every parameter block is a tape leaf, so
/// one backward() call yields the gradient in NetworkParams flat layout.
/// Evaluates a whole batch of points (columns) per call.
class BatchedNetwork {
 public:
  BatchedNetwork(ad::BatchTape& tape, const NetworkParams& params);

  /// `points` is in_dim x B.  Returns 1 x B tensors for the value and each
  /// requested derivative of output channel `output`.
  FieldEval<ad::Tensor> evaluate(const InputMap& map, const Eigen::MatrixXd& points, std::span<const DerivKey> derivs,
                                 int output = 0);

 private:
  struct Layer {
    ad::Tensor weight;  // MLP: W_l.  LNN: W_h + U (see evaluate)
    ad::Tensor bias;
    ad::Tensor alpha;
    ad::Tensor beta;
  };

  ad::BatchTape& tape_;
  const NetworkParams& params_;
  ad::Tensor w_in_;
  ad::Tensor b_in_;
  std::vector<Layer> layers_;
};

}  // namespace lnnpinn::net
