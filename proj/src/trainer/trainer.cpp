#include "lnnpinn/trainer/trainer.hpp"

#include <chrono>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "lnnpinn/autodiff/batch_tape.hpp"
#include "lnnpinn/network/batched.hpp"
#include "lnnpinn/physics/network_loss.hpp"
#include "lnnpinn/random.hpp"

namespace lnnpinn::trainer {

namespace {

std::vector<std::vector<int>> draw_subsets(const physics::BatchedLoss& loss, double fraction, Rng& rng) {
  std::vector<std::vector<int>> subsets(loss.term_count());
  for (std::size_t t = 0; t < loss.term_count(); ++t) {
    const auto n = static_cast<int>(loss.sample_count(t));
    const int take = std::max(1, static_cast<int>(std::floor(fraction * n)));
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < take; ++i) {
      const int j = i + static_cast<int>(rng.next() % static_cast<std::uint64_t>(n - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(take);
    subsets[t] = std::move(idx);
  }
  return subsets;
}

}  // namespace

void TrainConfig::validate() const {
  if (iters < 0) {
    throw std::invalid_argument("iters must be positive");
  }
  if (!(learning_rate > 0.0)) {
    throw std::invalid_argument("learning rate must be positive");
  }
  if (!(batch_fraction > 0.0 && batch_fraction <= 1.0)) {
    throw std::invalid_argument("batch fraction must lie in (0, 1]");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(epsilon > 0.0)) {
    throw std::invalid_argument("invalid Adam moment parameters");
  }
  if (width < 1 || depth < 1) {
    throw std::invalid_argument("width and depth must be positive");
  }
}

void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state, const TrainConfig& config) {
  if (grad.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw std::invalid_argument("Adam state, gradient and parameter sizes differ");
  }
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad[i])) {
      throw std::domain_error("non-finite gradient at index " + std::to_string(i));
    }
  }
  ++state.step;
  const double b1 = config.beta1;
  const double b2 = config.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * grad[i];
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * grad[i] * grad[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
  }
}

RunRecord train(const problems::ProblemDef& problem, const TrainConfig& config, const ProgressFn& progress) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const int iters = config.iters > 0 ? config.iters : problem.train_iters;

  RunRecord rec;
  rec.problem = problem.name;
  const auto terms = problems::draw_terms(problem, derive_seed(config.seed, kSampleStream));
  for (const auto& t : terms) {
    rec.term_names.push_back(t.name);
  }
  const physics::BatchedLoss loss(terms);
  rec.params = net::init(config.arch, problem.input_dim, 1, config.width, config.depth,
                         derive_seed(config.seed, kNetworkStream), config.gates);
  AdamState state = AdamState::zeros(rec.params.size());
  std::vector<double> grad(rec.params.size());
  Rng batch_rng(derive_seed(config.seed, kBatchStream));
  rec.history.reserve(static_cast<std::size_t>(iters));

  for (int step = 0; step < iters; ++step) {
    physics::LossBreakdown b;
    if (config.batch_fraction < 1.0) {
      const auto subsets = draw_subsets(loss, config.batch_fraction, batch_rng);
      b = loss.evaluate(rec.params, problem.input_map, grad, &subsets);
    } else {
      b = loss.evaluate(rec.params, problem.input_map, grad);
    }
    if (!std::isfinite(b.total)) {
      rec.diverged = true;
      rec.message = "loss became non-finite at step " + std::to_string(step);
      break;
    }
    LossRow row{step, b.total, {}};
    for (const auto& [name, value] : b.terms) {
      row.terms.push_back(value);
    }
    rec.history.push_back(std::move(row));
    if (progress) {
      progress(rec.history.back());
    }
    try {
      adam_step(rec.params.flat, grad, state, config);
    } catch (const std::domain_error& e) {
      rec.diverged = true;
      rec.message = std::string(e.what()) + " at step " + std::to_string(step);
      break;
    }
  }
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

std::vector<double> predict(const net::NetworkParams& params, const problems::ProblemDef& problem,
                            const std::vector<std::vector<double>>& points) {
  std::vector<double> out;
  out.reserve(points.size());
  constexpr std::size_t kChunk = 4096;
  for (std::size_t begin = 0; begin < points.size(); begin += kChunk) {
    const std::size_t end = std::min(points.size(), begin + kChunk);
    Eigen::MatrixXd batch(params.in_dim, static_cast<Eigen::Index>(end - begin));
    for (std::size_t j = begin; j < end; ++j) {
      if (static_cast<int>(points[j].size()) != params.in_dim) {
        throw std::invalid_argument("prediction point arity mismatch");
      }
      for (int a = 0; a < params.in_dim; ++a) {
        batch(a, static_cast<Eigen::Index>(j - begin)) = points[j][a];
      }
    }
    ad::BatchTape tape;
    net::BatchedNetwork network(tape, params);
    const auto f = network.evaluate(problem.input_map, batch, {});
    const Eigen::MatrixXd& v = f.value.value();
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      out.push_back(v(0, j));
    }
  }
  return out;
}

Metrics error_metrics(std::span<const double> predicted, std::span<const double> reference) {
  if (predicted.size() != reference.size() || predicted.empty()) {
    throw std::invalid_argument("metrics need equally sized, non-empty fields");
  }
  double sq = 0.0;
  double abs = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double e = predicted[i] - reference[i];
    sq += e * e;
    abs += std::abs(e);
  }
  const auto n = static_cast<double>(predicted.size());
  return {std::sqrt(sq / n), abs / n, predicted.size()};
}

Metrics evaluate(const net::NetworkParams& params, const problems::ProblemDef& problem) {
  if (!problem.reference.value) {
    throw std::invalid_argument("problem '" + problem.name + "' has no reference solution");
  }
  const auto pts = problem.grid.points();
  const auto pred = predict(params, problem, pts);
  std::vector<double> ref;
  ref.reserve(pts.size());
  for (const auto& p : pts) {
    ref.push_back(problem.reference.value(p));
  }
  return error_metrics(pred, ref);
}

void write_loss_csv(std::ostream& out, const RunRecord& record) {
  out << "step,total";
  for (const auto& n : record.term_names) {
    out << ',' << n;
  }
  out << '\n';
  out.precision(17);
  for (const LossRow& row : record.history) {
    out << row.step << ',' << row.total;
    for (double v : row.terms) {
      out << ',' << v;
    }
    out << '\n';
  }
}

void write_metrics(std::ostream& out, const Metrics& metrics) {
  out.precision(17);
  out << "rmse=" << metrics.rmse << "\nmae=" << metrics.mae << '\n';
}

Metrics read_metrics(std::istream& in) {
  Metrics m;
  bool have_rmse = false;
  bool have_mae = false;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      continue;
    }
    const std::string key = line.substr(0, eq);
    if (key != "rmse" && key != "mae") {
      continue;
    }
    const double value = std::stod(line.substr(eq + 1));
    (key == "rmse" ? m.rmse : m.mae) = value;
    (key == "rmse" ? have_rmse : have_mae) = true;
  }
  if (!have_rmse || !have_mae) {
    throw std::runtime_error("metrics file lacks rmse or mae");
  }
  return m;
}

}  // namespace lnnpinn::trainer
