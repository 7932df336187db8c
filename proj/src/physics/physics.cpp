#include "lnnpinn/physics/physics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lnnpinn::physics {

std::string to_string(TermKind kind) {
  switch (kind) {
    case TermKind::kPde: return "pde";
    case TermKind::kDirichlet: return "dirichlet";
    case TermKind::kNeumann: return "neumann";
    case TermKind::kRobin: return "robin";
    case TermKind::kInitial: return "initial";
    case TermKind::kDerivBc: return "deriv_bc";
  }
  return "unknown";
}

std::vector<DerivKey> ResidualTerm::required_derivs() const {
  std::vector<DerivKey> keys;
  for (const auto& c : components) {
    for (const auto& part : c.parts) {
      if (part.deriv.order > 0 && std::find(keys.begin(), keys.end(), part.deriv) == keys.end()) {
        keys.push_back(part.deriv);
      }
    }
  }
  return keys;
}

void ResidualTerm::validate() const {
  if (!(weight > 0.0) || !(scale > 0.0)) {
    throw std::invalid_argument("term '" + name + "': weight and scale must be positive");
  }
  if (components.empty()) {
    throw std::invalid_argument("term '" + name + "' has no residual components");
  }
  for (const auto& c : components) {
    if (c.parts.empty()) {
      throw std::invalid_argument("term '" + name + "' has an empty residual component");
    }
  }
}

double component_mse(const ResidualTerm& term, const FieldFunction& field) {
  term.validate();
  if (term.samples.empty()) {
    throw std::invalid_argument("term '" + term.name + "' has an empty sample set");
  }
  const auto keys = term.required_derivs();
  const double inv_s = 1.0 / term.scale;
  double sum = 0.0;
  for (const SamplePoint& p : term.samples) {
    const FieldEval<double> f = field(p, keys);
    for (const auto& c : term.components) {
      const double r = residual(c, f, p) * inv_s;
      sum += r * r;
    }
  }
  return sum / static_cast<double>(term.samples.size());
}

LossBreakdown composite_loss(std::span<const ResidualTerm> terms, const FieldFunction& field) {
  if (std::none_of(terms.begin(), terms.end(), [](const ResidualTerm& t) { return t.kind == TermKind::kPde; })) {
    throw std::invalid_argument("composite loss needs at least one PDE term");
  }
  LossBreakdown out;
  for (const ResidualTerm& t : terms) {
    const double mse = component_mse(t, field);
    out.terms.emplace_back(t.name, mse);
    out.total += t.weight * mse;
  }
  return out;
}

BalanceReport balance_from_energies(std::vector<std::pair<std::string, double>> energies) {
  BalanceReport rep;
  rep.energies = std::move(energies);
  if (rep.energies.empty()) {
    return rep;
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const auto& [name, c] : rep.energies) {
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  if (lo <= 0.0) {
    rep.degenerate = true;
    rep.kappa = hi > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    return rep;
  }
  rep.kappa = hi / lo;
  return rep;
}

BalanceReport balance_report(std::span<const ResidualTerm> terms, const FieldFunction& field) {
  if (std::none_of(terms.begin(), terms.end(), [](const ResidualTerm& t) { return t.kind == TermKind::kPde; })) {
    throw std::invalid_argument("balance report needs at least one PDE term");
  }
  std::vector<std::pair<std::string, double>> energies;
  for (const ResidualTerm& t : terms) {
    energies.emplace_back(t.name, component_mse(t, field));
  }
  return balance_from_energies(std::move(energies));
}

ScaleSet compute_scales(const ScaleReferences& ref, std::span<const CoefficientMagnitude> coefficients) {
  if (!(ref.length > 0.0) || !(ref.time > 0.0) || !(ref.field > 0.0) || !(ref.conductivity > 0.0)) {
    throw std::invalid_argument("scale references must all be positive");
  }
  if (coefficients.empty()) {
    throw std::invalid_argument("compute_scales needs at least one operator coefficient");
  }
  double sum = 0.0;
  for (const auto& c : coefficients) {
    if (!(c.magnitude > 0.0) || c.space_order < 0 || c.time_order < 0) {
      throw std::invalid_argument("coefficient magnitudes must be positive with nonnegative orders");
    }
    sum += c.magnitude * std::pow(ref.length, -c.space_order) * std::pow(ref.time, -c.time_order);
  }
  ScaleSet s;
  s.interior = ref.field * sum;
  s.dirichlet = ref.field;
  s.flux = ref.conductivity * ref.field / ref.length;
  s.provenance = ScaleProvenance::kReference;
  return s;
}

}  // namespace lnnpinn::physics
