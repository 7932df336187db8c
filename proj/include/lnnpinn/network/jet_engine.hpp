#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "lnnpinn/network/network.hpp"

namespace lnnpinn::net {

/// Value and requested input derivatives of one output channel over a batch
/// (1 x n rows), in the order the derivatives were requested.
struct BatchField {
  Eigen::RowVectorXd value;
  std::vector<Eigen::RowVectorXd> derivs;
};

/// Fused forward and reverse pass of the network with Taylor-mode input
/// derivatives, for training.  The value and every Taylor coefficient of a
/// layer are stacked column-wise so a layer costs one matrix product, and
/// the tanh recurrence is differentiated by hand.  Numerically equivalent
/// to BatchedNetwork on a BatchTape, which serves as its oracle.
class JetEngine {
 public:
  JetEngine(const NetworkParams& params, const InputMap& map, std::span<const DerivKey> derivs, int output = 0);

  /// points: in_dim x n.  Keeps the intermediates needed by backward().
  BatchField forward(const Eigen::MatrixXd& points);

  /// Accumulates d(sum_i <adjoint_i, field_i>)/d(params) into `grad` for the
  /// most recent forward() call.
  void backward(const BatchField& adjoint, std::span<double> grad) const;

 private:
  struct Direction {
    int axis;
    int degree;
    int first_block;  // block index of coefficient 1
  };

  [[nodiscard]] Eigen::Index cols() const { return n_ * blocks_; }
  void tanh_jet(const Eigen::MatrixXd& pre, Eigen::MatrixXd& out) const;
  void tanh_jet_backward(const Eigen::MatrixXd& pre, const Eigen::MatrixXd& out, const Eigen::MatrixXd& out_adj,
                         Eigen::MatrixXd& pre_adj) const;

  const NetworkParams& params_;
  InputMap map_;
  std::vector<DerivKey> derivs_;
  int output_;
  std::vector<Direction> dirs_;
  int blocks_ = 1;
  Eigen::Index n_ = 0;

  Eigen::MatrixXd w_in_;
  Eigen::VectorXd b_in_;
  std::vector<Eigen::MatrixXd> weights_;  // LNN: W_h + U
  std::vector<Eigen::VectorXd> biases_;
  std::vector<Eigen::VectorXd> alphas_;
  std::vector<Eigen::VectorXd> betas_;
  Eigen::RowVectorXd w_out_;
  double b_out_ = 0.0;

  Eigen::MatrixXd input_;               // in_dim x n*blocks
  std::vector<Eigen::MatrixXd> z_;      // layer inputs z_0..z_L
  std::vector<Eigen::MatrixXd> pre_;    // pre-activations per layer
  std::vector<Eigen::MatrixXd> act_;    // tanh jets per layer
};

}  // namespace lnnpinn::net
