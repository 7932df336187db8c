#include "lnnpinn/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "lnnpinn/io/svg.hpp"
#include "lnnpinn/network/network.hpp"

#ifndef LNNPINN_GIT_DESCRIBE
#define LNNPINN_GIT_DESCRIBE LNNPINN_VERSION
#endif

namespace lnnpinn::cli {

namespace fs = std::filesystem;

namespace {

const std::set<std::string> kTrainKeys{"arch",  "seed",    "iters",          "width", "depth",    "lr",
                                       "beta1", "beta2",   "epsilon",        "gates", "log_every", "out",
                                       "batch_fraction"};
const std::set<std::string> kManifestKeys{"command", "problem", "version"};

struct PaperMetrics {
  double lnn_rmse;
  double lnn_mae;
  double mlp_rmse;
  double mlp_mae;
};

// Values quoted in the figure captions of the original study.
const std::map<std::string, PaperMetrics> kPaperMetrics{
    {"advection", {0.001758, 0.001653, 0.007496, 0.007442}},
    {"laplace", {0.000342, 0.000323, 0.013116, 0.013085}},
    {"heat", {0.000225, 0.000222, 0.000319, 0.000315}},
    {"beam", {0.001886, 0.001808, 0.007708, 0.007658}},
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write '" + path.string() + "'");
  }
  out << text;
}

std::string gate_name(net::GateMode g) { return g == net::GateMode::kScalar ? "scalar" : "channel"; }

net::GateMode parse_gates(const std::string& s) {
  if (s == "channel") {
    return net::GateMode::kChannel;
  }
  if (s == "scalar") {
    return net::GateMode::kScalar;
  }
  throw UsageError("unknown gate mode '" + s + "' (expected channel or scalar)");
}

problems::ProblemDef build_problem(const std::string& name, const problems::Overrides& overrides) {
  try {
    return problems::make_problem(name, overrides);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

io::Series series(const std::string& label, const std::vector<double>& x, const std::vector<double>& y,
                  const std::string& color) {
  io::Series s;
  s.label = label;
  s.x = x;
  s.y = y;
  s.color = color;
  return s;
}

std::string loss_plot(const trainer::RunRecord& rec) {
  static const std::vector<std::string> kColors{"#000000", "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                                "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  const std::size_t n = rec.history.size();
  const std::size_t stride = std::max<std::size_t>(1, n / 2000);
  std::vector<double> steps;
  std::vector<std::vector<double>> ys(rec.term_names.size() + 1);
  for (std::size_t i = 0; i < n; i += stride) {
    const auto& row = rec.history[i];
    steps.push_back(row.step);
    ys[0].push_back(row.total);
    for (std::size_t t = 0; t < row.terms.size(); ++t) {
      ys[t + 1].push_back(row.terms[t]);
    }
  }
  io::LinePlot plot;
  plot.title = rec.problem + " training loss";
  plot.x_label = "iteration";
  plot.y_label = "loss";
  plot.log_y = true;
  plot.series.push_back(series("total", steps, ys[0], kColors[0]));
  for (std::size_t t = 0; t < rec.term_names.size(); ++t) {
    plot.series.push_back(series(rec.term_names[t], steps, ys[t + 1], kColors[(t + 1) % kColors.size()]));
  }
  return io::render(plot);
}

std::pair<io::Heatmap, io::Heatmap> field_maps(const net::NetworkParams& params, const problems::ProblemDef& p,
                                               const std::string& label) {
  const auto& g = p.grid;
  const int n = g.points_per_axis;
  std::vector<std::vector<double>> pts;
  std::vector<std::size_t> slot;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      std::vector<double> x{g.lo[0] + (g.hi[0] - g.lo[0]) * i / (n - 1), g.lo[1] + (g.hi[1] - g.lo[1]) * j / (n - 1)};
      if (!g.inside || g.inside(x)) {
        pts.push_back(std::move(x));
        slot.push_back(static_cast<std::size_t>(j) * n + i);
      }
    }
  }
  const auto pred = trainer::predict(params, p, pts);
  io::Heatmap field{label + " prediction", n, n, g.lo[0], g.hi[0], g.lo[1], g.hi[1],
                    std::vector<double>(static_cast<std::size_t>(n) * n, std::numeric_limits<double>::quiet_NaN())};
  io::Heatmap error = field;
  error.title = label + " absolute error";
  for (std::size_t k = 0; k < pts.size(); ++k) {
    field.values[slot[k]] = pred[k];
    error.values[slot[k]] = std::abs(pred[k] - p.reference.value(pts[k]));
  }
  return {field, error};
}

std::string metrics_text(const trainer::Metrics& m, bool diverged) {
  std::ostringstream os;
  trainer::write_metrics(os, m);
  os << "status=" << (diverged ? "diverged" : "ok") << '\n';
  return os.str();
}

}  // namespace

std::string version_string() { return LNNPINN_GIT_DESCRIBE; }

std::string default_output_root() {
  const char* env = std::getenv("LNNPINN_OUT");
  return env != nullptr && *env != '\0' ? env : "out";
}

void RunManifest::write(std::ostream& out) const {
  out << "command=" << command << '\n';
  out << "problem=" << problem << '\n';
  out << "version=" << version << '\n';
  io::Config c = config;
  c.set("seed", std::to_string(seed));
  c.set("out", out_dir);
  c.write(out);
}

RunManifest RunManifest::read(std::istream& in) {
  io::Config c = io::Config::parse(in, "manifest");
  RunManifest m;
  m.command = c.get_string("command", "");
  m.problem = c.get_string("problem", "");
  m.version = c.get_string("version", "");
  m.seed = c.get_uint("seed", 0);
  m.out_dir = c.get_string("out", "");
  for (const auto& k : kManifestKeys) {
    c.erase(k);
  }
  c.erase("out");
  m.config = c;
  return m;
}

bool RunManifest::same_run(const RunManifest& other) const {
  io::Config a = config;
  io::Config b = other.config;
  a.set("seed", std::to_string(seed));
  b.set("seed", std::to_string(other.seed));
  return command == other.command && problem == other.problem && a.values() == b.values();
}

io::Config TrainSettings::snapshot() const {
  io::Config c;
  c.set("arch", net::to_string(train.arch));
  c.set("seed", std::to_string(train.seed));
  c.set("iters", std::to_string(train.iters));
  c.set("width", std::to_string(train.width));
  c.set("depth", std::to_string(train.depth));
  c.set("lr", io::format_double(train.learning_rate));
  c.set("beta1", io::format_double(train.beta1));
  c.set("beta2", io::format_double(train.beta2));
  c.set("epsilon", io::format_double(train.epsilon));
  c.set("batch_fraction", io::format_double(train.batch_fraction));
  c.set("gates", gate_name(train.gates));
  for (const auto& [k, v] : overrides) {
    c.set(k, io::format_double(v));
  }
  return c;
}

TrainSettings resolve_train(const std::string& problem, const io::Config& config) {
  TrainSettings s;
  s.problem = problem;
  if (const auto p = config.get("problem"); p && *p != problem) {
    throw UsageError("config is for problem '" + *p + "', not '" + problem + "'");
  }
  try {
    trainer::TrainConfig& t = s.train;
    t.arch = net::parse_arch(config.get_string("arch", "lnn"));
    t.seed = config.get_uint("seed", 0);
    t.width = config.get_int("width", t.width);
    t.depth = config.get_int("depth", t.depth);
    t.learning_rate = config.get_double("lr", t.learning_rate);
    t.beta1 = config.get_double("beta1", t.beta1);
    t.beta2 = config.get_double("beta2", t.beta2);
    t.epsilon = config.get_double("epsilon", t.epsilon);
    t.batch_fraction = config.get_double("batch_fraction", t.batch_fraction);
    t.gates = parse_gates(config.get_string("gates", "channel"));
    t.iters = config.get_int("iters", 0);
    s.log_every = config.get_int("log_every", s.log_every);
    for (const auto& [k, v] : config.values()) {
      if (kTrainKeys.count(k) == 0 && kManifestKeys.count(k) == 0 && k != "seeds") {
        s.overrides[k] = config.get_double(k, 0.0);
      }
    }
    const problems::ProblemDef def = build_problem(problem, s.overrides);
    if (t.iters == 0) {
      t.iters = def.train_iters;
    }
    t.validate();
  } catch (const UsageError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  s.out_dir = config.get_string("out", (fs::path(default_output_root()) / (problem + "-" + net::to_string(s.train.arch) +
                                                                           "-" + std::to_string(s.train.seed)))
                                           .string());
  return s;
}

TrainOutcome run_training(const TrainSettings& settings, std::ostream& log) {
  const problems::ProblemDef problem = build_problem(settings.problem, settings.overrides);
  const fs::path dir(settings.out_dir);
  fs::create_directories(dir);
  RunManifest manifest{"train", settings.problem, settings.snapshot(), settings.train.seed, settings.out_dir,
                       version_string()};
  {
    std::ostringstream os;
    manifest.write(os);
    write_file(dir / "manifest.txt", os.str());
  }

  const std::string tag = settings.problem + " " + net::to_string(settings.train.arch) + " seed " +
                          std::to_string(settings.train.seed);
  const int every = settings.log_every;
  const int last = settings.train.iters - 1;
  auto progress = [&](const trainer::LossRow& row) {
    if (every > 0 && (row.step % every == 0 || row.step == last)) {
      log << '[' << tag << "] step " << row.step << " loss " << row.total << '\n' << std::flush;
    }
  };

  TrainOutcome out;
  out.record = trainer::train(problem, settings.train, progress);
  const trainer::RunRecord& rec = out.record;
  {
    std::ostringstream os;
    trainer::write_loss_csv(os, rec);
    write_file(dir / "loss.csv", os.str());
  }
  net::save_params_file(rec.params, (dir / "params.bin").string());
  out.metrics = trainer::evaluate(rec.params, problem);
  write_file(dir / "metrics.txt", metrics_text(out.metrics, rec.diverged));
  write_file(dir / "loss.svg", loss_plot(rec));
  const bool finite_field = std::isfinite(out.metrics.rmse);
  if (problem.input_dim == 2 && finite_field) {
    const auto [field, error] = field_maps(rec.params, problem, tag);
    write_file(dir / "field.svg", io::render(field));
    write_file(dir / "error.svg", io::render(error));
  }
  log << '[' << tag << "] rmse " << out.metrics.rmse << " mae " << out.metrics.mae << " ("
      << rec.wall_seconds << " s)\n";
  if (rec.diverged) {
    log << '[' << tag << "] diverged: " << rec.message << '\n';
    out.exit_code = kExitNumerical;
  }
  return out;
}

int cmd_train(const std::string& problem, const io::Config& config, std::ostream& log) {
  if (config.has("seeds")) {
    throw UsageError("'seeds' applies to compare, not train");
  }
  const TrainSettings s = resolve_train(problem, config);
  return run_training(s, log).exit_code;
}

int cmd_compare(const std::string& problem, const io::Config& config, std::ostream& log) {
  const int seeds = [&] {
    try {
      return config.get_int("seeds", 10);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }();
  if (seeds < 1) {
    throw UsageError("compare needs at least one seed");
  }
  if (config.has("arch")) {
    throw UsageError("compare always trains both architectures; drop 'arch'");
  }
  io::Config base = config;
  base.erase("seeds");
  base.erase("out");
  base.erase("command");
  const TrainSettings probe = resolve_train(problem, base);
  const std::uint64_t first = probe.train.seed;
  const fs::path root(config.get_string("out", (fs::path(default_output_root()) / (problem + "-compare")).string()));
  fs::create_directories(root);

  RunManifest manifest{"compare", problem, probe.snapshot(), first, root.string(), version_string()};
  manifest.config.erase("arch");
  manifest.config.set("seeds", std::to_string(seeds));
  {
    std::ostringstream os;
    manifest.write(os);
    write_file(root / "manifest.txt", os.str());
  }

  struct Row {
    std::uint64_t seed;
    trainer::Metrics lnn;
    trainer::Metrics mlp;
  };
  std::vector<Row> rows;
  int exit_code = kExitOk;
  for (int k = 0; k < seeds; ++k) {
    Row row{first + static_cast<std::uint64_t>(k), {}, {}};
    for (const net::Arch arch : {net::Arch::kLnn, net::Arch::kMlp}) {
      io::Config c = base;
      c.set("arch", net::to_string(arch));
      c.set("seed", std::to_string(row.seed));
      TrainSettings s = resolve_train(problem, c);
      s.out_dir = (root / (net::to_string(arch) + "-" + std::to_string(row.seed))).string();
      trainer::Metrics& slot = arch == net::Arch::kLnn ? row.lnn : row.mlp;

      const RunManifest wanted{"train", problem, s.snapshot(), s.train.seed, s.out_dir, version_string()};
      const fs::path dir(s.out_dir);
      bool reused = false;
      if (fs::exists(dir / "metrics.txt") && fs::exists(dir / "manifest.txt")) {
        std::ifstream min(dir / "manifest.txt");
        std::ifstream metin(dir / "metrics.txt");
        if (RunManifest::read(min).same_run(wanted)) {
          slot = trainer::read_metrics(metin);
          reused = true;
          log << "[compare] reusing " << dir.string() << '\n';
        }
      }
      if (!reused) {
        const TrainOutcome o = run_training(s, log);
        slot = o.metrics;
        if (o.exit_code != kExitOk) {
          exit_code = o.exit_code;
        }
      }
    }
    rows.push_back(row);
  }

  auto beats = [](double a, double b) { return std::isfinite(a) && (!std::isfinite(b) || a < b); };
  int wins = 0;
  double best_lnn = std::numeric_limits<double>::infinity();
  double best_mlp = best_lnn;
  std::ostringstream csv;
  csv << "seed,lnn_rmse,lnn_mae,mlp_rmse,mlp_mae\n";
  for (const Row& r : rows) {
    csv << r.seed << ',' << io::format_double(r.lnn.rmse) << ',' << io::format_double(r.lnn.mae) << ','
        << io::format_double(r.mlp.rmse) << ',' << io::format_double(r.mlp.mae) << '\n';
    wins += beats(r.lnn.rmse, r.mlp.rmse) ? 1 : 0;
    if (std::isfinite(r.lnn.rmse)) best_lnn = std::min(best_lnn, r.lnn.rmse);
    if (std::isfinite(r.mlp.rmse)) best_mlp = std::min(best_mlp, r.mlp.rmse);
  }
  if (const auto it = kPaperMetrics.find(problem); it != kPaperMetrics.end()) {
    const PaperMetrics& p = it->second;
    csv << "paper," << io::format_double(p.lnn_rmse) << ',' << io::format_double(p.lnn_mae) << ','
        << io::format_double(p.mlp_rmse) << ',' << io::format_double(p.mlp_mae) << '\n';
  }
  write_file(root / "comparison.csv", csv.str());

  std::ostringstream summary;
  summary << "problem,seeds,lnn_wins,lnn_best_rmse,mlp_best_rmse\n"
          << problem << ',' << seeds << ',' << wins << ',' << io::format_double(best_lnn) << ','
          << io::format_double(best_mlp) << '\n';
  write_file(root / "summary.csv", summary.str());
  log << "[compare] " << problem << ": LNN beats MLP on RMSE in " << wins << '/' << seeds
      << " seeds; best RMSE lnn " << best_lnn << " mlp " << best_mlp << '\n';
  return exit_code;
}

int cmd_evaluate(const std::string& run_dir, const io::Config& config, std::ostream& log) {
  io::require_known_keys(config, {}, "evaluate");
  const fs::path dir(run_dir);
  std::ifstream min(dir / "manifest.txt");
  if (!min) {
    throw UsageError("'" + run_dir + "' has no manifest.txt");
  }
  const RunManifest m = RunManifest::read(min);
  if (m.command != "train") {
    throw UsageError("'" + run_dir + "' is not a training run");
  }
  const TrainSettings s = resolve_train(m.problem, m.config);
  const problems::ProblemDef problem = build_problem(m.problem, s.overrides);
  const net::NetworkParams params = net::load_params_file((dir / "params.bin").string());
  const auto pts = problem.grid.points();
  const auto pred = trainer::predict(params, problem, pts);

  std::ostringstream csv;
  csv << problem.axis_names[0] << ',' << problem.axis_names[1] << ",predicted,reference,abs_error\n";
  std::vector<double> ref;
  ref.reserve(pts.size());
  for (std::size_t k = 0; k < pts.size(); ++k) {
    ref.push_back(problem.reference.value(pts[k]));
    csv << io::format_double(pts[k][0]) << ',' << io::format_double(pts[k][1]) << ',' << io::format_double(pred[k])
        << ',' << io::format_double(ref.back()) << ',' << io::format_double(std::abs(pred[k] - ref.back())) << '\n';
  }
  write_file(dir / "evaluation.csv", csv.str());
  const trainer::Metrics metrics = trainer::error_metrics(pred, ref);
  log << m.problem << ' ' << m.config.get_string("arch", "?") << " seed " << m.seed << ": rmse " << metrics.rmse
      << " mae " << metrics.mae << " over " << metrics.points << " points\n";
  return std::isfinite(metrics.rmse) ? kExitOk : kExitNumerical;
}

}  // namespace lnnpinn::cli
