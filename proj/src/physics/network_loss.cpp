#include "lnnpinn/physics/network_loss.hpp"

#include <algorithm>
#include <stdexcept>

#include "lnnpinn/network/jet_engine.hpp"

namespace lnnpinn::physics {

FieldFunction network_field(const net::NetworkParams& params, const net::InputMap& map) {
  return [&params, map](const SamplePoint& p, std::span<const DerivKey> keys) {
    return net::evaluate_field<double>(params, params.flat, map, p.x, keys);
  };
}

namespace {

void require_pde(std::span<const ResidualTerm> terms) {
  if (std::none_of(terms.begin(), terms.end(), [](const ResidualTerm& t) { return t.kind == TermKind::kPde; })) {
    throw std::invalid_argument("composite loss needs at least one PDE term");
  }
}

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& m, const std::vector<int>* cols) {
  if (cols == nullptr) {
    return m;
  }
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(cols->size()));
  for (std::size_t j = 0; j < cols->size(); ++j) {
    out.col(static_cast<Eigen::Index>(j)) = m.col((*cols)[j]);
  }
  return out;
}

}  // namespace

BatchedLoss::BatchedLoss(std::span<const ResidualTerm> terms) {
  require_pde(terms);
  for (const ResidualTerm& t : terms) {
    t.validate();
    if (t.samples.empty()) {
      throw std::invalid_argument("term '" + t.name + "' has an empty sample set");
    }
    Term bt{t.name, t.kind, t.weight, t.scale, t.required_derivs(), {}, {}};
    const auto n = static_cast<Eigen::Index>(t.samples.size());
    const auto dim = static_cast<Eigen::Index>(t.samples[0].x.size());
    bt.points.resize(dim, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index a = 0; a < dim; ++a) {
        bt.points(a, j) = t.samples[j].x[a];
      }
    }
    for (const ResidualComponent& c : t.components) {
      Component bc;
      for (const LinearPart& lp : c.parts) {
        Part part{lp.deriv, static_cast<bool>(lp.coeff_fn), lp.coeff, {}};
        if (part.varying) {
          part.coeffs.resize(1, n);
          for (Eigen::Index j = 0; j < n; ++j) {
            part.coeffs(0, j) = lp.coefficient(t.samples[j]);
          }
        }
        bc.parts.push_back(std::move(part));
      }
      if (c.source) {
        bc.has_source = true;
        bc.source.resize(1, n);
        for (Eigen::Index j = 0; j < n; ++j) {
          bc.source(0, j) = c.source(t.samples[j]);
        }
      }
      bt.components.push_back(std::move(bc));
    }
    terms_.push_back(std::move(bt));
  }
}

LossBreakdown BatchedLoss::evaluate(const net::NetworkParams& params, const net::InputMap& map,
                                    std::span<double> grad, const std::vector<std::vector<int>>* subsets) const {
  if (subsets != nullptr && subsets->size() != terms_.size()) {
    throw std::invalid_argument("one subset per term is required");
  }
  const bool want_grad = !grad.empty();
  if (want_grad) {
    if (grad.size() != params.size()) {
      throw std::invalid_argument("gradient buffer size does not match parameter count");
    }
    std::fill(grad.begin(), grad.end(), 0.0);
  }
  LossBreakdown out;
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    const Term& t = terms_[i];
    const std::vector<int>* cols = subsets ? &(*subsets)[i] : nullptr;
    const Eigen::MatrixXd points = select_columns(t.points, cols);
    const Eigen::Index n = points.cols();
    if (n == 0) {
      throw std::invalid_argument("term '" + t.name + "' has an empty subset");
    }
    std::vector<Eigen::MatrixXd> coeffs;
    std::vector<Eigen::MatrixXd> sources;
    for (const Component& c : t.components) {
      for (const Part& part : c.parts) {
        coeffs.push_back(part.varying ? select_columns(part.coeffs, cols) : Eigen::MatrixXd());
      }
      sources.push_back(c.has_source ? select_columns(c.source, cols) : Eigen::MatrixXd());
    }

    net::JetEngine engine(params, map, t.derivs);
    const double adj_scale = 2.0 * t.weight / (static_cast<double>(n) * t.scale * t.scale);
    double sum_sq = 0.0;
    for (Eigen::Index begin = 0; begin < n; begin += chunk_) {
      const Eigen::Index len = std::min(chunk_, n - begin);
      const net::BatchField f = engine.forward(points.middleCols(begin, len));
      net::BatchField adj{Eigen::RowVectorXd::Zero(len), std::vector<Eigen::RowVectorXd>(t.derivs.size())};
      for (auto& d : adj.derivs) {
        d.setZero(len);
      }
      auto slot = [&](const DerivKey& key) -> std::pair<const Eigen::RowVectorXd*, Eigen::RowVectorXd*> {
        if (key.order == 0) {
          return {&f.value, &adj.value};
        }
        const auto k = static_cast<std::size_t>(std::find(t.derivs.begin(), t.derivs.end(), key) - t.derivs.begin());
        return {&f.derivs[k], &adj.derivs[k]};
      };
      std::size_t part_index = 0;
      for (std::size_t ci = 0; ci < t.components.size(); ++ci) {
        const Component& c = t.components[ci];
        const std::size_t first_part = part_index;
        Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(len);
        for (const Part& part : c.parts) {
          const Eigen::RowVectorXd& d = *slot(part.deriv).first;
          const Eigen::MatrixXd& cf = coeffs[part_index++];
          if (part.varying) {
            r.array() += d.array() * cf.block(0, begin, 1, len).array();
          } else {
            r += part.coeff * d;
          }
        }
        if (c.has_source) {
          r -= sources[ci].block(0, begin, 1, len);
        }
        sum_sq += r.squaredNorm();
        if (want_grad) {
          part_index = first_part;
          for (const Part& part : c.parts) {
            Eigen::RowVectorXd& g = *slot(part.deriv).second;
            const Eigen::MatrixXd& cf = coeffs[part_index++];
            if (part.varying) {
              g.array() += adj_scale * r.array() * cf.block(0, begin, 1, len).array();
            } else {
              g += (adj_scale * part.coeff) * r;
            }
          }
        }
      }
      if (want_grad) {
        engine.backward(adj, grad);
      }
    }
    const double energy_sum = sum_sq / (static_cast<double>(n) * t.scale * t.scale);
    out.terms.emplace_back(t.name, energy_sum);
    out.total += t.weight * energy_sum;
  }
  return out;
}

ad::Var tape_loss(ad::Tape& tape, std::span<const ad::Var> theta, const net::NetworkParams& params,
                  const net::InputMap& map, std::span<const ResidualTerm> terms) {
  require_pde(terms);
  ad::Var total = tape.constant(0.0);
  for (const ResidualTerm& t : terms) {
    t.validate();
    if (t.samples.empty()) {
      throw std::invalid_argument("term '" + t.name + "' has an empty sample set");
    }
    const auto keys = t.required_derivs();
    ad::Var sum = tape.constant(0.0);
    for (const SamplePoint& p : t.samples) {
      std::vector<ad::Var> x;
      for (double v : p.x) {
        x.push_back(tape.constant(v));
      }
      const auto f = net::evaluate_field<ad::Var>(params, theta, map, x, keys);
      for (const ResidualComponent& c : t.components) {
        const ad::Var r = residual(c, f, p) * (1.0 / t.scale);
        sum = sum + r * r;
      }
    }
    total = total + sum * (t.weight / static_cast<double>(t.samples.size()));
  }
  return total;
}

}  // namespace lnnpinn::physics
