#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "lnnpinn/network/network.hpp"
#include "lnnpinn/physics/physics.hpp"

namespace lnnpinn::problems {

using physics::SamplePoint;

enum class Region { kRectangle, kSegment, kDisk, kCircle };

/// Point source over a region.  Rectangles and segments are axis-aligned
/// boxes (a segment has lo == hi on its fixed axis); disks and circles are
/// centred at the origin.  `normal` fixes the outward normal stored on
/// rectangle/segment samples; circle samples get the radial normal.
struct Sampler {
  Region region = Region::kRectangle;
  std::vector<double> lo;
  std::vector<double> hi;
  double radius = 1.0;
  std::vector<double> normal;
  std::size_t count = 0;
};

/// Deterministic i.i.d. draws for a given seed.  Disk points are
/// area-uniform (r = R sqrt(u1), angle = 2 pi u2).
std::vector<SamplePoint> sample(const Sampler& sampler, std::uint64_t seed);

/// Closed-form reference: value(x) and derivatives through FieldFunction.
struct Reference {
  std::function<double(std::span<const double>)> value;
  physics::FieldFunction field;
};

/// Uniform evaluation grid over a bounding box, masked to the domain.
struct EvalGrid {
  std::vector<double> lo;
  std::vector<double> hi;
  int points_per_axis = 101;
  std::function<bool(std::span<const double>)> inside;

  /// Grid points (row-major over axis 1 then axis 0), masked.
  [[nodiscard]] std::vector<std::vector<double>> points() const;
};

/// A residual family and the sampler that feeds it.
struct TermSpec {
  physics::ResidualTerm term;  // samples left empty
  Sampler sampler;
};

struct ProblemDef {
  std::string name;
  int input_dim = 2;
  std::vector<std::string> axis_names;
  std::vector<TermSpec> terms;
  int train_iters = 1;
  Reference reference;
  EvalGrid grid;
  net::InputMap input_map;
  physics::ScaleSet scales;

  [[nodiscard]] std::vector<std::size_t> sample_counts() const;
  /// Rejects empty samplers, unsatisfiable derivative requests and
  /// nonpositive weights or scales.
  void validate() const;
};

/// Draws every term's sample set once; term i uses derive_seed(seed, i).
std::vector<physics::ResidualTerm> draw_terms(const ProblemDef& problem, std::uint64_t seed);

/// Closed-form reference as a field; the analytic adapter for residual checks.
physics::FieldFunction analytic_field(const ProblemDef& problem);

/// Constant overrides by key, e.g. "k", "count.pde", "lambda.bc".
using Overrides = std::map<std::string, double>;

ProblemDef advection_reaction(const Overrides& overrides = {});
ProblemDef laplace_mixed(const Overrides& overrides = {});
ProblemDef disk_heat(const Overrides& overrides = {});
ProblemDef poisson_beam(const Overrides& overrides = {});

std::vector<std::string> problem_names();
/// Throws std::invalid_argument for unknown names.
ProblemDef make_problem(const std::string& name, const Overrides& overrides = {});

/// Physical constants of the disk heat benchmark and derived
/// nondimensional groups.
struct HeatConstants {
  double conductivity = 159.0;  // k  [W/(m K)]
  double convection = 50.0;     // h  [W/(m^2 K)]
  double ambient = 800.0;       // T_inf [K]
  double source = 2000.0;       // Q  [W/m^3]
  double radius = 0.15;         // R  [m]
  double temperature_ref = 1.0; // T_ref [K]

  [[nodiscard]] double source_nd() const { return source * radius * radius / (conductivity * temperature_ref); }
  [[nodiscard]] double convection_nd() const { return convection * radius / conductivity; }
  /// Radial solution theta(r) of the nondimensional problem, r in [0, 1].
  [[nodiscard]] double radial_solution(double r) const {
    return source_nd() * (1.0 - r * r) / 4.0 + source_nd() / (2.0 * convection_nd());
  }
};

HeatConstants heat_constants(const Overrides& overrides = {});

}  // namespace lnnpinn::problems
