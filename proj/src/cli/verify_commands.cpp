#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "lnnpinn/cli/commands.hpp"
#include "lnnpinn/fem/fem.hpp"
#include "lnnpinn/io/svg.hpp"
#include "lnnpinn/mc/mc_checks.hpp"

namespace lnnpinn::cli {

namespace fs = std::filesystem;

namespace {

const std::set<std::string> kHeatKeys{"k", "h", "T_inf", "Q", "R", "T_ref"};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write '" + path.string() + "'");
  }
  out << text;
}

void write_manifest(const fs::path& dir, const std::string& command, const io::Config& config) {
  fs::create_directories(dir);
  RunManifest m{command, "", config, config.get_uint("seed", 0), dir.string(), version_string()};
  m.config.erase("out");
  std::ostringstream os;
  m.write(os);
  write_file(dir / "manifest.txt", os.str());
}

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

int cmd_fem_converge(const io::Config& config, std::ostream& log) {
  std::set<std::string> allowed = kHeatKeys;
  allowed.insert({"levels", "rings", "out", "command", "problem", "version", "seed"});
  int levels = 5;
  int rings = 10;
  problems::Overrides overrides;
  problems::HeatConstants constants;
  try {
    io::require_known_keys(config, allowed, "fem-converge");
    levels = config.get_int("levels", levels);
    rings = config.get_int("rings", rings);
    for (const auto& k : kHeatKeys) {
      if (config.has(k)) {
        overrides[k] = config.get_double(k, 0.0);
      }
    }
    constants = problems::heat_constants(overrides);
    if (levels < 3) {
      throw std::invalid_argument("the convergence study needs at least three levels");
    }
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  io::Config snapshot;
  snapshot.set("levels", std::to_string(levels));
  snapshot.set("rings", std::to_string(rings));
  for (const auto& [k, v] : overrides) {
    snapshot.set(k, io::format_double(v));
  }
  const fs::path dir(config.get_string("out", (fs::path(default_output_root()) / "fem-converge").string()));
  write_manifest(dir, "fem-converge", snapshot);

  const auto hierarchy = fem::build_mesh_hierarchy(constants.radius, levels, rings);
  const fem::ConvergenceReport rep = fem::convergence_study(hierarchy, constants);
  std::ostringstream levels_csv, errors_csv, orders_csv;
  fem::write_levels_csv(levels_csv, rep);
  fem::write_errors_csv(errors_csv, rep);
  fem::write_orders_csv(orders_csv, rep);
  write_file(dir / "levels.csv", levels_csv.str());
  write_file(dir / "errors.csv", errors_csv.str());
  write_file(dir / "orders.csv", orders_csv.str());
  {
    const fem::HeatSolution finest = fem::solve_heat(hierarchy.back(), constants);
    std::ostringstream mesh;
    fem::write_mesh(mesh, hierarchy.back(), finest.temperature);
    write_file(dir / "finest_mesh.txt", mesh.str());
  }

  io::LinePlot plot;
  plot.title = "Inter-level convergence on the heated disk";
  plot.x_label = "fine mesh size h_f [m]";
  plot.y_label = "norm of T_f - P T_c";
  plot.log_x = true;
  plot.log_y = true;
  io::Series l2{"L2 norm", {}, {}, "#1f77b4", true};
  io::Series h1{"H1 seminorm", {}, {}, "#ff7f0e", true};
  for (const auto& p : rep.pairs) {
    l2.x.push_back(p.h_fine);
    l2.y.push_back(p.l2);
    h1.x.push_back(p.h_fine);
    h1.y.push_back(p.h1);
  }
  plot.series = {l2, h1};
  plot.notes = {"L2 slope " + fixed3(rep.l2_slope) + " (paper 1.989)", "H1 slope " + fixed3(rep.h1_slope) +
                                                                           " (paper 1.008)"};
  write_file(dir / "convergence.svg", io::render(plot));

  for (const auto& l : rep.levels) {
    log << "level " << l.level << ": " << l.nodes << " nodes, " << l.elems << " elements, centre rise "
        << l.center_rise << " K, CG " << l.cg_iterations << " iterations\n";
  }
  log << "global L2 slope " << fixed3(rep.l2_slope) << " (paper 1.989)\n";
  for (std::size_t i = 0; i < rep.local_orders.size(); ++i) {
    log << "local " << i + 1 << "-" << i + 2 << "-" << i + 3 << " order " << fixed3(rep.local_orders[i]) << '\n';
  }
  log << "global H1 slope " << fixed3(rep.h1_slope) << " (paper 1.008)\n";
  return kExitOk;
}

int cmd_mc_verify(const io::Config& config, std::ostream& log) {
  std::uint64_t seed = 0;
  try {
    io::require_known_keys(config, {"seed", "out", "command", "problem", "version"}, "mc-verify");
    seed = config.get_uint("seed", 0);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  io::Config snapshot;
  snapshot.set("seed", std::to_string(seed));
  const fs::path dir(config.get_string("out", (fs::path(default_output_root()) / "mc-verify").string()));
  write_manifest(dir, "mc-verify", snapshot);

  const mc::FixtureSuite suite = mc::run_fixture_suite(seed);
  std::ostringstream table;
  table << "check,value,expected,status\n";
  for (const auto& r : suite.rows) {
    table << r.name << ',' << io::format_double(r.value) << ',' << io::format_double(r.expected) << ','
          << (r.pass ? "pass" : "FAIL") << '\n';
    char line[160];
    std::snprintf(line, sizeof line, "%-42s %14.6g %14.6g  %s\n", r.name.c_str(), r.value, r.expected,
                  r.pass ? "pass" : "FAIL");
    log << line;
  }
  write_file(dir / "checks.csv", table.str());
  std::ostringstream trend;
  trend << "n,median_error,shrink_per_decade\n";
  for (std::size_t k = 0; k < suite.trend.points.size(); ++k) {
    trend << suite.trend.points[k].n << ',' << io::format_double(suite.trend.points[k].median_error) << ','
          << (k == 0 ? "" : io::format_double(suite.trend.shrink_per_decade[k - 1])) << '\n';
  }
  write_file(dir / "slln.csv", trend.str());
  return suite.all_pass() ? kExitOk : kExitNumerical;
}

}  // namespace lnnpinn::cli
