#pragma once

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lnnpinn/network/network.hpp"

namespace lnnpinn::physics {

using net::DerivKey;
using net::FieldEval;

/// A collocation point; `normal` holds the outward unit normal for boundary
/// samples that need one (empty otherwise).
struct SamplePoint {
  std::vector<double> x;
  std::vector<double> normal;
};

enum class TermKind { kPde, kDirichlet, kNeumann, kRobin, kInitial, kDerivBc };

std::string to_string(TermKind kind);

using PointFn = std::function<double(const SamplePoint&)>;

/// coefficient(p) * D u, with coefficient = coeff * coeff_fn(p) (coeff_fn
/// optional).
struct LinearPart {
  DerivKey deriv;
  double coeff = 1.0;
  PointFn coeff_fn;

  [[nodiscard]] double coefficient(const SamplePoint& p) const { return coeff_fn ? coeff * coeff_fn(p) : coeff; }
};

/// One scalar residual channel: sum_i coefficient_i(p) D_i u(p) - source(p).
struct ResidualComponent {
  std::vector<LinearPart> parts;
  PointFn source;

  [[nodiscard]] double source_at(const SamplePoint& p) const { return source ? source(p) : 0.0; }
};

/// A strong-form residual family with its own sample set, weight and scale.
/// Vector-valued residuals use several components; their squares add.
struct ResidualTerm {
  std::string name;
  TermKind kind = TermKind::kPde;
  std::vector<SamplePoint> samples;
  std::vector<ResidualComponent> components;
  double weight = 1.0;
  double scale = 1.0;

  /// Distinct derivatives (order >= 1) the components consume.
  [[nodiscard]] std::vector<DerivKey> required_derivs() const;
  /// Throws unless weight > 0, scale > 0 and at least one component exists.
  void validate() const;
};

template <typename S>
S residual(const ResidualComponent& c, const FieldEval<S>& f, const SamplePoint& p) {
  S acc = f.get(c.parts.at(0).deriv) * c.parts[0].coefficient(p);
  for (std::size_t i = 1; i < c.parts.size(); ++i) {
    acc = acc + f.get(c.parts[i].deriv) * c.parts[i].coefficient(p);
  }
  return acc - c.source_at(p);
}

/// Evaluates a field (network or closed form) and the requested derivatives
/// at one sample point.
using FieldFunction = std::function<FieldEval<double>(const SamplePoint&, std::span<const DerivKey>)>;

/// (1/N) sum_x ||r(x) / s||^2 over the term's samples.
double component_mse(const ResidualTerm& term, const FieldFunction& field);

struct LossBreakdown {
  double total = 0.0;
  std::vector<std::pair<std::string, double>> terms;  // unweighted component MSEs
};

/// total = sum_i weight_i * component_mse_i; requires a PDE term.
LossBreakdown composite_loss(std::span<const ResidualTerm> terms, const FieldFunction& field);

/// Normalized energies C_i = E||r_i / s_i||^2 and the balance ratio
/// kappa = max_ij C_i / C_j.  A zero energy makes kappa infinite and sets
/// `degenerate`.
struct BalanceReport {
  std::vector<std::pair<std::string, double>> energies;
  double kappa = 1.0;
  bool degenerate = false;
};

BalanceReport balance_report(std::span<const ResidualTerm> terms, const FieldFunction& field);
BalanceReport balance_from_energies(std::vector<std::pair<std::string, double>> energies);

enum class ScaleProvenance { kUnit, kReference };

/// Residual normalization scales for the interior, Dirichlet and
/// Neumann/flux families.
struct ScaleSet {
  double interior = 1.0;
  double dirichlet = 1.0;
  double flux = 1.0;
  ScaleProvenance provenance = ScaleProvenance::kUnit;

  static ScaleSet unit() { return {}; }
};

/// Representative coefficient magnitude c* of one operator term with spatial
/// order `space_order` and temporal order `time_order`.
struct CoefficientMagnitude {
  double magnitude = 1.0;
  int space_order = 0;
  int time_order = 0;
};

struct ScaleReferences {
  double length = 1.0;     // L_ref
  double time = 1.0;       // T_ref (time)
  double field = 1.0;      // U_ref
  double conductivity = 1.0;  // K*
};

/// s_int = U * sum c* L^-ax T^-at,  s_D = U,  s_N = K* U / L.
ScaleSet compute_scales(const ScaleReferences& ref, std::span<const CoefficientMagnitude> coefficients);

}  // namespace lnnpinn::physics
