#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lnnpinn/network/network.hpp"
#include "lnnpinn/problems/problems.hpp"

namespace lnnpinn::trainer {

/// Independent random streams derived from the run seed.
inline constexpr std::uint64_t kNetworkStream = 0x6e6574;
inline constexpr std::uint64_t kSampleStream = 0x736d70;
inline constexpr std::uint64_t kBatchStream = 0x626174;

struct TrainConfig {
  std::uint64_t seed = 0;
  int iters = 0;  // 0: the problem's default iteration count
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double batch_fraction = 1.0;  // 1: full fixed sample sets every step
  net::Arch arch = net::Arch::kLnn;
  net::GateMode gates = net::GateMode::kChannel;
  int width = 64;
  int depth = 4;

  void validate() const;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;

  static AdamState zeros(std::size_t n) { return {std::vector<double>(n), std::vector<double>(n), 0}; }
};

/// One bias-corrected Adam update in place.  Throws std::domain_error naming
/// the first non-finite gradient entry (parameters untouched in that case).
void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state, const TrainConfig& config);

struct LossRow {
  int step = 0;
  double total = 0.0;
  std::vector<double> terms;
};

struct RunRecord {
  std::string problem;
  std::vector<std::string> term_names;
  std::vector<LossRow> history;  // loss at the parameters each step updates
  net::NetworkParams params;
  double wall_seconds = 0.0;
  bool diverged = false;
  std::string message;
};

using ProgressFn = std::function<void(const LossRow&)>;

/// Draws the sample sets once (from config.seed), then runs Adam on the
/// composite loss.  A non-finite loss stops the run with `diverged` set and
/// the history recorded so far.
RunRecord train(const problems::ProblemDef& problem, const TrainConfig& config, const ProgressFn& progress = {});

/// Network prediction at each point (rows of `points`).
std::vector<double> predict(const net::NetworkParams& params, const problems::ProblemDef& problem,
                            const std::vector<std::vector<double>>& points);

struct Metrics {
  double rmse = 0.0;
  double mae = 0.0;
  std::size_t points = 0;
};

Metrics error_metrics(std::span<const double> predicted, std::span<const double> reference);
/// RMSE and MAE against the closed-form reference on the masked grid.
Metrics evaluate(const net::NetworkParams& params, const problems::ProblemDef& problem);

void write_loss_csv(std::ostream& out, const RunRecord& record);
void write_metrics(std::ostream& out, const Metrics& metrics);
/// Parses the `key=value` metrics file written by write_metrics.
Metrics read_metrics(std::istream& in);

}  // namespace lnnpinn::trainer
