#include "lnnpinn/problems/problems.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

#include "lnnpinn/autodiff/taylor_jet.hpp"
#include "lnnpinn/random.hpp"

namespace lnnpinn::problems {

using net::DerivKey;
using physics::LinearPart;
using physics::ResidualComponent;
using physics::ResidualTerm;
using physics::TermKind;

std::vector<SamplePoint> sample(const Sampler& s, std::uint64_t seed) {
  if (s.count == 0) {
    throw std::invalid_argument("sampler count must be positive");
  }
  Rng rng(seed);
  std::vector<SamplePoint> out;
  out.reserve(s.count);
  switch (s.region) {
    case Region::kRectangle:
    case Region::kSegment: {
      if (s.lo.size() != s.hi.size() || s.lo.empty()) {
        throw std::invalid_argument("box sampler needs matching lo/hi bounds");
      }
      for (std::size_t i = 0; i < s.count; ++i) {
        SamplePoint p;
        for (std::size_t a = 0; a < s.lo.size(); ++a) {
          p.x.push_back(s.lo[a] == s.hi[a] ? s.lo[a] : rng.uniform(s.lo[a], s.hi[a]));
        }
        p.normal = s.normal;
        out.push_back(std::move(p));
      }
      break;
    }
    case Region::kDisk:
      for (std::size_t i = 0; i < s.count; ++i) {
        const double r = s.radius * std::sqrt(rng.uniform());
        const double phi = 2.0 * std::numbers::pi * rng.uniform();
        out.push_back({{r * std::cos(phi), r * std::sin(phi)}, {}});
      }
      break;
    case Region::kCircle:
      for (std::size_t i = 0; i < s.count; ++i) {
        const double phi = 2.0 * std::numbers::pi * rng.uniform();
        const double c = std::cos(phi);
        const double sn = std::sin(phi);
        out.push_back({{s.radius * c, s.radius * sn}, {c, sn}});
      }
      break;
  }
  return out;
}

std::vector<std::vector<double>> EvalGrid::points() const {
  if (lo.size() != 2 || hi.size() != 2 || points_per_axis < 2) {
    throw std::invalid_argument("evaluation grid must be 2D with at least two points per axis");
  }
  std::vector<std::vector<double>> out;
  const int n = points_per_axis;
  for (int j = 0; j < n; ++j) {
    const double y = lo[1] + (hi[1] - lo[1]) * j / (n - 1);
    for (int i = 0; i < n; ++i) {
      std::vector<double> p{lo[0] + (hi[0] - lo[0]) * i / (n - 1), y};
      if (!inside || inside(p)) {
        out.push_back(std::move(p));
      }
    }
  }
  return out;
}

std::vector<std::size_t> ProblemDef::sample_counts() const {
  std::vector<std::size_t> counts;
  for (const TermSpec& t : terms) {
    counts.push_back(t.sampler.count);
  }
  return counts;
}

void ProblemDef::validate() const {
  if (terms.empty()) {
    throw std::invalid_argument("problem '" + name + "' has no residual terms");
  }
  if (train_iters < 1) {
    throw std::invalid_argument("problem '" + name + "': train_iters must be positive");
  }
  for (const TermSpec& t : terms) {
    t.term.validate();
    if (t.sampler.count == 0) {
      throw std::invalid_argument("term '" + t.term.name + "' has a zero sample count");
    }
    for (const DerivKey& k : t.term.required_derivs()) {
      if (k.axis < 0 || k.axis >= input_dim || !ad::supported_jet_degree(k.order)) {
        throw std::invalid_argument("term '" + t.term.name + "' requests a derivative outside the supported set");
      }
    }
  }
}

std::vector<ResidualTerm> draw_terms(const ProblemDef& problem, std::uint64_t seed) {
  problem.validate();
  std::vector<ResidualTerm> out;
  for (std::size_t i = 0; i < problem.terms.size(); ++i) {
    ResidualTerm t = problem.terms[i].term;
    t.samples = sample(problem.terms[i].sampler, derive_seed(seed, i));
    out.push_back(std::move(t));
  }
  return out;
}

physics::FieldFunction analytic_field(const ProblemDef& problem) {
  if (!problem.reference.field) {
    throw std::invalid_argument("problem '" + problem.name + "' has no closed-form reference");
  }
  return problem.reference.field;
}

namespace {

/// Partial derivatives of a closed form: d(x, axis, order).
using Partial = std::function<double(std::span<const double>, int, int)>;

Reference make_reference(Partial partial) {
  Reference ref;
  ref.value = [partial](std::span<const double> x) { return partial(x, 0, 0); };
  ref.field = [partial](const SamplePoint& p, std::span<const DerivKey> keys) {
    net::FieldEval<double> f;
    f.value = partial(p.x, 0, 0);
    for (const DerivKey& k : keys) {
      f.derivs.emplace_back(k, partial(p.x, k.axis, k.order));
    }
    return f;
  };
  return ref;
}

class OverrideReader {
 public:
  explicit OverrideReader(const Overrides& o) : overrides_(o) {}

  double get(const std::string& key, double fallback) {
    used_.insert(key);
    auto it = overrides_.find(key);
    return it == overrides_.end() ? fallback : it->second;
  }

  std::size_t count(const std::string& term, std::size_t fallback) {
    const double v = get("count." + term, static_cast<double>(fallback));
    if (!(v >= 1.0) || v != std::floor(v)) {
      throw std::invalid_argument("count." + term + " must be a positive integer");
    }
    return static_cast<std::size_t>(v);
  }

  void finish(const std::string& problem) const {
    for (const auto& [key, value] : overrides_) {
      if (!used_.contains(key)) {
        throw std::invalid_argument("unknown override '" + key + "' for problem '" + problem + "'");
      }
    }
  }

 private:
  const Overrides& overrides_;
  std::set<std::string> used_;
};

TermSpec make_term(OverrideReader& rd, const std::string& name, TermKind kind, std::vector<ResidualComponent> comps,
                   Sampler sampler, std::size_t default_count, double scale = 1.0) {
  TermSpec spec;
  spec.term.name = name;
  spec.term.kind = kind;
  spec.term.components = std::move(comps);
  spec.term.weight = rd.get("lambda." + name, 1.0);
  spec.term.scale = scale;
  spec.sampler = std::move(sampler);
  spec.sampler.count = rd.count(name, default_count);
  return spec;
}

Sampler box(std::vector<double> lo, std::vector<double> hi, std::vector<double> normal = {}) {
  const bool flat = lo[0] == hi[0] || lo[1] == hi[1];
  return Sampler{flat ? Region::kSegment : Region::kRectangle, std::move(lo), std::move(hi), 1.0, std::move(normal), 0};
}

ResidualComponent value_equals(physics::PointFn target) { return {{LinearPart{{0, 0}, 1.0, {}}}, std::move(target)}; }

EvalGrid unit_box_grid(double x1, double y1) {
  return EvalGrid{{0.0, 0.0}, {x1, y1}, 101, {}};
}

int iters(OverrideReader& rd, int fallback) {
  const double v = rd.get("iters", fallback);
  if (!(v >= 1.0) || v != std::floor(v)) {
    throw std::invalid_argument("iters must be a positive integer");
  }
  return static_cast<int>(v);
}

}  // namespace

ProblemDef advection_reaction(const Overrides& overrides) {
  OverrideReader rd(overrides);
  ProblemDef p;
  p.name = "advection";
  p.axis_names = {"x", "t"};
  // u_x - 2 u_t - u = 0 on [0,2] x [0,1]
  ResidualComponent pde{{LinearPart{{0, 1}, 1.0, {}}, LinearPart{{1, 1}, -2.0, {}}, LinearPart{{0, 0}, -1.0, {}}}, {}};
  p.terms.push_back(make_term(rd, "pde", TermKind::kPde, {pde}, box({0.0, 0.0}, {2.0, 1.0}), 2000));
  p.terms.push_back(make_term(rd, "ic", TermKind::kInitial,
                              {value_equals([](const SamplePoint& s) { return 6.0 * std::exp(-3.0 * s.x[0]); })},
                              box({0.0, 0.0}, {2.0, 0.0}), 1000));
  p.terms.push_back(make_term(rd, "bc", TermKind::kDirichlet,
                              {value_equals([](const SamplePoint& s) { return 6.0 * std::exp(-6.0 - 2.0 * s.x[1]); })},
                              box({2.0, 0.0}, {2.0, 1.0}, {1.0, 0.0}), 1000));
  p.train_iters = iters(rd, 8000);
  p.reference = make_reference([](std::span<const double> x, int axis, int order) {
    const double rate = axis == 0 ? -3.0 : -2.0;
    return std::pow(rate, order) * 6.0 * std::exp(-3.0 * x[0] - 2.0 * x[1]);
  });
  p.grid = unit_box_grid(2.0, 1.0);
  p.input_map = net::InputMap::from_box(p.grid.lo, p.grid.hi);
  rd.finish(p.name);
  p.validate();
  return p;
}

ProblemDef laplace_mixed(const Overrides& overrides) {
  OverrideReader rd(overrides);
  ProblemDef p;
  p.name = "laplace";
  p.axis_names = {"x", "y"};
  ResidualComponent pde{{LinearPart{{0, 2}, 1.0, {}}, LinearPart{{1, 2}, 1.0, {}}}, {}};
  ResidualComponent flux{{LinearPart{{0, 1}, 1.0, {}}}, {}};
  p.terms.push_back(make_term(rd, "pde", TermKind::kPde, {pde}, box({0.0, 0.0}, {1.0, 1.0}), 1000));
  p.terms.push_back(make_term(rd, "bottom", TermKind::kDirichlet, {value_equals({})},
                              box({0.0, 0.0}, {1.0, 0.0}, {0.0, -1.0}), 1000));
  p.terms.push_back(make_term(rd, "top", TermKind::kDirichlet,
                              {value_equals([](const SamplePoint&) { return 1.0; })},
                              box({0.0, 1.0}, {1.0, 1.0}, {0.0, 1.0}), 1000));
  p.terms.push_back(make_term(rd, "left", TermKind::kNeumann, {flux}, box({0.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}), 1000));
  p.terms.push_back(make_term(rd, "right", TermKind::kNeumann, {flux}, box({1.0, 0.0}, {1.0, 1.0}, {1.0, 0.0}), 1000));
  p.train_iters = iters(rd, 5000);
  p.reference = make_reference([](std::span<const double> x, int axis, int order) {
    if (order == 0) {
      return x[1];
    }
    return axis == 1 && order == 1 ? 1.0 : 0.0;
  });
  p.grid = unit_box_grid(1.0, 1.0);
  p.input_map = net::InputMap::from_box(p.grid.lo, p.grid.hi);
  rd.finish(p.name);
  p.validate();
  return p;
}

HeatConstants heat_constants(const Overrides& overrides) {
  HeatConstants c;
  auto pick = [&](const char* key, double& field) {
    if (auto it = overrides.find(key); it != overrides.end()) {
      field = it->second;
    }
  };
  pick("k", c.conductivity);
  pick("h", c.convection);
  pick("T_inf", c.ambient);
  pick("Q", c.source);
  pick("R", c.radius);
  pick("T_ref", c.temperature_ref);
  if (!(c.conductivity > 0.0) || !(c.convection > 0.0) || !(c.radius > 0.0) || !(c.temperature_ref > 0.0)) {
    throw std::invalid_argument("heat constants k, h, R and T_ref must be positive");
  }
  return c;
}

ProblemDef disk_heat(const Overrides& overrides) {
  OverrideReader rd(overrides);
  for (const char* key : {"k", "h", "T_inf", "Q", "R", "T_ref"}) {
    rd.get(key, 0.0);
  }
  const HeatConstants hc = heat_constants(overrides);
  ProblemDef p;
  p.name = "heat";
  p.axis_names = {"x", "y"};

  // Inputs are x/R on the unit disk, the output is theta = (T - T_inf)/T_ref.
  // Residuals keep physical units; the reference scales make their
  // normalized forms the nondimensional equations.
  const double k = hc.conductivity;
  const double tr = hc.temperature_ref;
  const double r = hc.radius;
  const double lap = k * tr / (r * r);
  const double q = hc.source;
  ResidualComponent pde{{LinearPart{{0, 2}, lap, {}}, LinearPart{{1, 2}, lap, {}}},
                        [q](const SamplePoint&) { return -q; }};
  const double flux = -k * tr / r;
  ResidualComponent robin{{LinearPart{{0, 1}, flux, [](const SamplePoint& s) { return s.normal.at(0); }},
                           LinearPart{{1, 1}, flux, [](const SamplePoint& s) { return s.normal.at(1); }},
                           LinearPart{{0, 0}, -hc.convection * tr, {}}},
                          {}};

  const physics::CoefficientMagnitude laplacian{k, 2, 0};
  p.scales = physics::compute_scales({r, 1.0, tr, k}, std::span(&laplacian, 1));

  p.terms.push_back(make_term(rd, "pde", TermKind::kPde, {pde}, Sampler{Region::kDisk, {}, {}, 1.0, {}, 0}, 3000,
                              p.scales.interior));
  p.terms.push_back(make_term(rd, "robin", TermKind::kRobin, {robin}, Sampler{Region::kCircle, {}, {}, 1.0, {}, 0},
                              500, p.scales.flux));
  p.train_iters = iters(rd, 50000);

  const double a = hc.source_nd() / 4.0;
  const double c = hc.source_nd() / (2.0 * hc.convection_nd());
  p.reference = make_reference([a, c](std::span<const double> x, int axis, int order) {
    switch (order) {
      case 0: return a * (1.0 - x[0] * x[0] - x[1] * x[1]) + c;
      case 1: return -2.0 * a * x[axis];
      case 2: return -2.0 * a;
      default: return 0.0;
    }
  });
  p.grid = EvalGrid{{-1.0, -1.0}, {1.0, 1.0}, 101,
                    [](std::span<const double> x) { return x[0] * x[0] + x[1] * x[1] <= 1.0; }};
  p.input_map = net::InputMap::identity(2);
  rd.finish(p.name);
  p.validate();
  return p;
}

ProblemDef poisson_beam(const Overrides& overrides) {
  OverrideReader rd(overrides);
  ProblemDef p;
  p.name = "beam";
  p.axis_names = {"x", "y"};
  const double inv_e = std::exp(-1.0);
  ResidualComponent pde{{LinearPart{{0, 2}, 1.0, {}}, LinearPart{{1, 4}, -1.0, {}}},
                        [](const SamplePoint& s) { return (2.0 - s.x[0] * s.x[0]) * std::exp(-s.x[1]); }};
  auto x2 = [](double f) { return [f](const SamplePoint& s) { return f * s.x[0] * s.x[0]; }; };
  ResidualComponent uyy_bottom{{LinearPart{{1, 2}, 1.0, {}}}, x2(1.0)};
  ResidualComponent uyy_top{{LinearPart{{1, 2}, 1.0, {}}}, x2(inv_e)};

  p.terms.push_back(make_term(rd, "pde", TermKind::kPde, {pde}, box({0.0, 0.0}, {1.0, 1.0}), 1000));
  p.terms.push_back(make_term(rd, "yy_bottom", TermKind::kDerivBc, {uyy_bottom},
                              box({0.0, 0.0}, {1.0, 0.0}, {0.0, -1.0}), 1000));
  p.terms.push_back(make_term(rd, "yy_top", TermKind::kDerivBc, {uyy_top}, box({0.0, 1.0}, {1.0, 1.0}, {0.0, 1.0}),
                              1000));
  p.terms.push_back(make_term(rd, "bottom", TermKind::kDirichlet, {value_equals(x2(1.0))},
                              box({0.0, 0.0}, {1.0, 0.0}, {0.0, -1.0}), 1000));
  p.terms.push_back(make_term(rd, "top", TermKind::kDirichlet, {value_equals(x2(inv_e))},
                              box({0.0, 1.0}, {1.0, 1.0}, {0.0, 1.0}), 1000));
  p.terms.push_back(make_term(rd, "left", TermKind::kDirichlet, {value_equals({})},
                              box({0.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}), 1000));
  p.terms.push_back(make_term(rd, "right", TermKind::kDirichlet,
                              {value_equals([](const SamplePoint& s) { return std::exp(-s.x[1]); })},
                              box({1.0, 0.0}, {1.0, 1.0}, {1.0, 0.0}), 1000));
  p.train_iters = iters(rd, 5000);
  p.reference = make_reference([](std::span<const double> x, int axis, int order) {
    const double ey = std::exp(-x[1]);
    if (axis == 1 || order == 0) {
      return (order % 2 == 0 ? 1.0 : -1.0) * x[0] * x[0] * ey;
    }
    switch (order) {
      case 1: return 2.0 * x[0] * ey;
      case 2: return 2.0 * ey;
      default: return 0.0;
    }
  });
  p.grid = unit_box_grid(1.0, 1.0);
  p.input_map = net::InputMap::from_box(p.grid.lo, p.grid.hi);
  rd.finish(p.name);
  p.validate();
  return p;
}

std::vector<std::string> problem_names() { return {"advection", "laplace", "heat", "beam"}; }

ProblemDef make_problem(const std::string& name, const Overrides& overrides) {
  if (name == "advection") {
    return advection_reaction(overrides);
  }
  if (name == "laplace") {
    return laplace_mixed(overrides);
  }
  if (name == "heat") {
    return disk_heat(overrides);
  }
  if (name == "beam") {
    return poisson_beam(overrides);
  }
  throw std::invalid_argument("unknown problem '" + name + "'");
}

}  // namespace lnnpinn::problems
