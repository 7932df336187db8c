#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "lnnpinn/io/config.hpp"
#include "lnnpinn/problems/problems.hpp"
#include "lnnpinn/trainer/trainer.hpp"

namespace lnnpinn::cli {

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitNumerical = 3 };

/// Bad command line or configuration; maps to kExitUsage.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// git-describe style version baked in at configure time.
std::string version_string();

/// Written to `manifest.txt` before any computation.  The config snapshot
/// holds every resolved setting, so `--config manifest.txt` replays the run.
struct RunManifest {
  std::string command;
  std::string problem;
  io::Config config;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string version;

  void write(std::ostream& out) const;
  static RunManifest read(std::istream& in);
  /// Same command, problem, seed and settings (the version string is ignored).
  [[nodiscard]] bool same_run(const RunManifest& other) const;
};

/// Output root: LNNPINN_OUT when set, otherwise "out".
std::string default_output_root();

struct TrainSettings {
  std::string problem;
  trainer::TrainConfig train;
  problems::Overrides overrides;
  std::string out_dir;
  int log_every = 1000;

  /// Every resolved setting as key=value pairs (problem overrides included).
  [[nodiscard]] io::Config snapshot() const;
};

/// Resolves a training configuration.  Keys other than the training
/// settings are problem overrides; anything invalid raises UsageError.
TrainSettings resolve_train(const std::string& problem, const io::Config& config);

struct TrainOutcome {
  trainer::RunRecord record;
  trainer::Metrics metrics;
  int exit_code = kExitOk;
};

/// Trains one network and writes the manifest, loss history, parameter blob,
/// metrics and plots into settings.out_dir.
TrainOutcome run_training(const TrainSettings& settings, std::ostream& log);

int cmd_train(const std::string& problem, const io::Config& config, std::ostream& log);
/// Trains both architectures for `seeds` consecutive seeds starting at
/// `seed`.  Finished runs with a matching manifest are reused.
int cmd_compare(const std::string& problem, const io::Config& config, std::ostream& log);
/// Re-evaluates a finished run directory on its evaluation grid.
int cmd_evaluate(const std::string& run_dir, const io::Config& config, std::ostream& log);
int cmd_fem_converge(const io::Config& config, std::ostream& log);
int cmd_mc_verify(const io::Config& config, std::ostream& log);

}  // namespace lnnpinn::cli
