#include <CLI11.hpp>

#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "lnnpinn/cli/commands.hpp"

namespace {

using lnnpinn::io::Config;
namespace cli = lnnpinn::cli;

struct CommonFlags {
  std::string config_file;
  std::vector<std::string> assignments;
  std::optional<std::string> arch;
  std::optional<std::string> seed;
  std::optional<std::string> iters;
  std::optional<std::string> width;
  std::optional<std::string> depth;
  std::optional<std::string> lr;
  std::optional<std::string> out;
};

void add_common(CLI::App* app, CommonFlags& f, bool training) {
  app->add_option("--config", f.config_file, "key=value settings file (a run manifest works too)");
  app->add_option("--set", f.assignments, "extra key=value setting, e.g. count.pde=500");
  app->add_option("--out", f.out, "output directory");
  if (!training) {
    return;
  }
  app->add_option("--seed", f.seed, "run seed (first seed for compare)");
  app->add_option("--iters", f.iters, "training iterations (default: the problem's own count)");
  app->add_option("--width", f.width, "hidden width");
  app->add_option("--depth", f.depth, "hidden layers");
  app->add_option("--lr", f.lr, "Adam learning rate");
}

// Config file first, then --set, then dedicated flags.
Config collect(const CommonFlags& f) {
  Config c;
  if (!f.config_file.empty()) {
    c = Config::load(f.config_file);
  }
  for (const std::string& a : f.assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw cli::UsageError("--set expects key=value, got '" + a + "'");
    }
    c.set(a.substr(0, eq), a.substr(eq + 1));
  }
  const std::pair<const char*, const std::optional<std::string>*> flags[] = {
      {"arch", &f.arch}, {"seed", &f.seed}, {"iters", &f.iters}, {"width", &f.width},
      {"depth", &f.depth}, {"lr", &f.lr}, {"out", &f.out}};
  for (const auto& [key, value] : flags) {
    if (value->has_value()) {
      c.set(key, **value);
    }
  }
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physics-informed network training with liquid residual gating"};
  app.set_version_flag("--version", cli::version_string());
  app.require_subcommand(1);

  CommonFlags train_flags;
  std::string train_problem;
  auto* train = app.add_subcommand("train", "train one network on a benchmark");
  train->add_option("problem", train_problem, "advection | laplace | heat | beam")->required();
  train->add_option("--arch", train_flags.arch, "mlp | lnn");
  add_common(train, train_flags, true);

  CommonFlags compare_flags;
  std::string compare_problem;
  std::optional<std::string> seeds;
  auto* compare = app.add_subcommand("compare", "train both architectures over several seeds");
  compare->add_option("problem", compare_problem, "advection | laplace | heat | beam")->required();
  compare->add_option("--seeds", seeds, "number of consecutive seeds (default 10)");
  add_common(compare, compare_flags, true);

  CommonFlags eval_flags;
  std::string run_dir;
  auto* evaluate = app.add_subcommand("evaluate", "re-evaluate a finished training run");
  evaluate->add_option("run_dir", run_dir, "directory written by train")->required();

  CommonFlags fem_flags;
  std::optional<std::string> levels;
  auto* fem = app.add_subcommand("fem-converge", "finite element convergence study on the heated disk");
  fem->add_option("--levels", levels, "number of nested mesh levels (default 5)");
  add_common(fem, fem_flags, false);

  CommonFlags mc_flags;
  auto* mc = app.add_subcommand("mc-verify", "check the Monte Carlo estimator identities");
  add_common(mc, mc_flags, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitUsage;
  }

  try {
    if (*train) {
      return cli::cmd_train(train_problem, collect(train_flags), std::cout);
    }
    if (*compare) {
      Config c = collect(compare_flags);
      if (seeds) {
        c.set("seeds", *seeds);
      }
      return cli::cmd_compare(compare_problem, c, std::cout);
    }
    if (*evaluate) {
      return cli::cmd_evaluate(run_dir, Config{}, std::cout);
    }
    if (*fem) {
      Config c = collect(fem_flags);
      if (levels) {
        c.set("levels", *levels);
      }
      return cli::cmd_fem_converge(c, std::cout);
    }
    return cli::cmd_mc_verify(collect(mc_flags), std::cout);
  } catch (const cli::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return cli::kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return cli::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kExitNumerical;
  }
}
