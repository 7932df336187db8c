#pragma once

#include <Eigen/Dense>
#include <span>
#include <stdexcept>
#include <vector>

#include "lnnpinn/autodiff/tape.hpp"
#include "lnnpinn/network/network.hpp"
#include "lnnpinn/physics/physics.hpp"

namespace lnnpinn::physics {

/// FieldFunction adapter over network parameters (double evaluation).
FieldFunction network_field(const net::NetworkParams& params, const net::InputMap& map);

/// Composite loss of a network over `terms`, evaluated and differentiated in
/// whole-sample batches.  Residual coefficients and sources are tabulated
/// once at construction since sample sets are fixed for a run.
class BatchedLoss {
 public:
  explicit BatchedLoss(std::span<const ResidualTerm> terms);

  /// Loss breakdown at `params`; when `grad` is non-empty it receives the
  /// gradient in flat parameter layout (overwritten).  `subsets`, when
  /// given, restricts each term to the listed sample columns.
  LossBreakdown evaluate(const net::NetworkParams& params, const net::InputMap& map, std::span<double> grad,
                         const std::vector<std::vector<int>>* subsets = nullptr) const;

  /// Samples per tape; bounds the working set of one forward/backward pass.
  void set_chunk_size(Eigen::Index columns) {
    if (columns < 1) {
      throw std::invalid_argument("chunk size must be positive");
    }
    chunk_ = columns;
  }

  [[nodiscard]] std::size_t term_count() const { return terms_.size(); }
  [[nodiscard]] std::size_t sample_count(std::size_t term) const { return terms_[term].points.cols(); }

 private:
  struct Part {
    DerivKey deriv;
    bool varying = false;
    double coeff = 1.0;
    Eigen::MatrixXd coeffs;  // 1 x N when varying
  };
  struct Component {
    std::vector<Part> parts;
    bool has_source = false;
    Eigen::MatrixXd source;  // 1 x N
  };
  struct Term {
    std::string name;
    TermKind kind;
    double weight;
    double scale;
    std::vector<DerivKey> derivs;
    Eigen::MatrixXd points;  // in_dim x N
    std::vector<Component> components;
  };

  std::vector<Term> terms_;
  Eigen::Index chunk_ = 128;
};

/// Same composite loss recorded on a scalar tape over parameter Vars, one
/// sample at a time.  Used to cross-check the batched engine on small nets.
ad::Var tape_loss(ad::Tape& tape, std::span<const ad::Var> theta, const net::NetworkParams& params,
                  const net::InputMap& map, std::span<const ResidualTerm> terms);

}  // namespace lnnpinn::physics
