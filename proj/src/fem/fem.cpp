#include "lnnpinn/fem/fem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "lnnpinn/io/config.hpp"

namespace lnnpinn::fem {

namespace {

double edge_length(const Point& a, const Point& b) { return std::hypot(b[0] - a[0], b[1] - a[1]); }

std::uint64_t edge_key(int a, int b) {
  const auto lo = static_cast<std::uint64_t>(std::min(a, b));
  const auto hi = static_cast<std::uint64_t>(std::max(a, b));
  return (lo << 32) | hi;
}

double target_size(double radius, int rings, int level) { return radius / rings / std::pow(2.0, level - 1); }

}  // namespace

double signed_area(const Triangle& t) {
  return 0.5 * ((t[1][0] - t[0][0]) * (t[2][1] - t[0][1]) - (t[2][0] - t[0][0]) * (t[1][1] - t[0][1]));
}

Triangle TriMesh::triangle(std::size_t e) const {
  const auto& el = elems.at(e);
  return {nodes[el[0]], nodes[el[1]], nodes[el[2]]};
}

double TriMesh::area() const {
  double a = 0.0;
  for (std::size_t e = 0; e < elems.size(); ++e) {
    a += signed_area(triangle(e));
  }
  return a;
}

double TriMesh::max_edge_length() const {
  double h = 0.0;
  for (const auto& el : elems) {
    for (int i = 0; i < 3; ++i) {
      h = std::max(h, edge_length(nodes[el[i]], nodes[el[(i + 1) % 3]]));
    }
  }
  return h;
}

void TriMesh::validate(double radius) const {
  for (std::size_t e = 0; e < elems.size(); ++e) {
    if (!(signed_area(triangle(e)) > 0.0)) {
      throw std::logic_error("element " + std::to_string(e) + " is not counter-clockwise");
    }
  }
  for (const auto& be : boundary_edges) {
    for (int n : be) {
      const double r = std::hypot(nodes[n][0], nodes[n][1]);
      if (std::abs(r - radius) > 1e-12) {
        throw std::logic_error("boundary node " + std::to_string(n) + " is off the circle");
      }
    }
  }
}

TriMesh coarse_disk_mesh(double radius, int rings) {
  if (!(radius > 0.0) || rings < 1) {
    throw std::invalid_argument("disk mesh needs a positive radius and at least one ring");
  }
  TriMesh m;
  m.level = 1;
  m.h_max = target_size(radius, rings, 1);
  m.nodes.push_back({0.0, 0.0});
  auto ring_start = [](int i) { return 1 + 3 * i * (i - 1); };
  for (int i = 1; i <= rings; ++i) {
    const int n = 6 * i;
    const double r = i == rings ? radius : radius * i / rings;
    for (int k = 0; k < n; ++k) {
      const double theta = 2.0 * std::numbers::pi * k / n;
      m.nodes.push_back({r * std::cos(theta), r * std::sin(theta)});
    }
  }
  for (int k = 0; k < 6; ++k) {
    m.elems.push_back({0, ring_start(1) + k, ring_start(1) + (k + 1) % 6});
  }
  for (int i = 2; i <= rings; ++i) {
    const int n0 = 6 * (i - 1);
    const int n1 = 6 * i;
    const int s0 = ring_start(i - 1);
    const int s1 = ring_start(i);
    int a = 0;
    int b = 0;
    while (a < n0 || b < n1) {
      // Advance whichever ring has the next node at the smaller angle.
      const bool outer = a == n0 || (b < n1 && static_cast<long>(b + 1) * n0 <= static_cast<long>(a + 1) * n1);
      if (outer) {
        m.elems.push_back({s0 + a % n0, s1 + b % n1, s1 + (b + 1) % n1});
        ++b;
      } else {
        m.elems.push_back({s0 + a % n0, s1 + b % n1, s0 + (a + 1) % n0});
        ++a;
      }
    }
  }
  const int s = ring_start(rings);
  const int n = 6 * rings;
  for (int k = 0; k < n; ++k) {
    m.boundary_edges.push_back({s + k, s + (k + 1) % n});
  }
  m.validate(radius);
  return m;
}

TriMesh refine(const TriMesh& coarse, double radius) {
  TriMesh f;
  f.level = coarse.level + 1;
  f.h_max = coarse.h_max / 2.0;
  f.nodes = coarse.nodes;
  f.parents.reserve(coarse.nodes.size() * 4);
  for (int i = 0; i < static_cast<int>(coarse.nodes.size()); ++i) {
    f.parents.push_back({i, i});
  }
  std::unordered_map<std::uint64_t, int> mid;
  mid.reserve(coarse.elems.size() * 2);
  auto midpoint = [&](int a, int b) {
    const auto [it, fresh] = mid.try_emplace(edge_key(a, b), static_cast<int>(f.nodes.size()));
    if (fresh) {
      f.nodes.push_back({0.5 * (coarse.nodes[a][0] + coarse.nodes[b][0]), 0.5 * (coarse.nodes[a][1] + coarse.nodes[b][1])});
      f.parents.push_back({std::min(a, b), std::max(a, b)});
    }
    return it->second;
  };
  f.elems.reserve(coarse.elems.size() * 4);
  for (const auto& [a, b, c] : coarse.elems) {
    const int ab = midpoint(a, b);
    const int bc = midpoint(b, c);
    const int ca = midpoint(c, a);
    f.elems.push_back({a, ab, ca});
    f.elems.push_back({ab, b, bc});
    f.elems.push_back({ca, bc, c});
    f.elems.push_back({ab, bc, ca});
  }
  for (const auto& [a, b] : coarse.boundary_edges) {
    const int m = midpoint(a, b);
    Point& p = f.nodes[m];
    const double r = std::hypot(p[0], p[1]);
    p = {p[0] * radius / r, p[1] * radius / r};
    f.boundary_edges.push_back({a, m});
    f.boundary_edges.push_back({m, b});
  }
  f.validate(radius);
  return f;
}

std::vector<TriMesh> build_mesh_hierarchy(double radius, int levels, int rings) {
  if (levels < 2) {
    throw std::invalid_argument("a mesh hierarchy needs at least two levels");
  }
  std::vector<TriMesh> h;
  h.reserve(static_cast<std::size_t>(levels));
  h.push_back(coarse_disk_mesh(radius, rings));
  for (int l = 1; l < levels; ++l) {
    h.push_back(refine(h.back(), radius));
  }
  return h;
}

Eigen::Matrix3d element_stiffness(const Triangle& t, double k) {
  const double area = signed_area(t);
  double x_lo = t[0][0], x_hi = t[0][0], y_lo = t[0][1], y_hi = t[0][1];
  for (const Point& p : t) {
    x_lo = std::min(x_lo, p[0]);
    x_hi = std::max(x_hi, p[0]);
    y_lo = std::min(y_lo, p[1]);
    y_hi = std::max(y_hi, p[1]);
  }
  const double bbox = std::max(x_hi - x_lo, y_hi - y_lo);
  if (!(std::abs(area) >= 1e-14 * bbox * bbox) || bbox == 0.0) {
    throw std::invalid_argument("degenerate triangle (area " + io::format_double(area) + ")");
  }
  if (area < 0.0) {
    throw std::invalid_argument("triangle vertices must be counter-clockwise");
  }
  Eigen::Vector3d b;
  Eigen::Vector3d c;
  for (int i = 0; i < 3; ++i) {
    const Point& pj = t[(i + 1) % 3];
    const Point& pk = t[(i + 2) % 3];
    b[i] = pj[1] - pk[1];
    c[i] = pk[0] - pj[0];
  }
  return k * (b * b.transpose() + c * c.transpose()) / (4.0 * area);
}

Eigen::Matrix3d element_mass(const Triangle& t) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Ones();
  m.diagonal().setConstant(2.0);
  return signed_area(t) / 12.0 * m;
}

RobinEdge edge_robin(double length, double h, double t_inf) {
  if (!(length > 0.0)) {
    throw std::invalid_argument("edge length must be positive");
  }
  RobinEdge r;
  r.matrix << 2.0, 1.0, 1.0, 2.0;
  r.matrix *= h * length / 6.0;
  r.load.setConstant(h * t_inf * length / 2.0);
  return r;
}

namespace {

template <typename ElementMatrix>
CsrMatrix assemble_elements(const TriMesh& mesh, ElementMatrix&& element) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(mesh.elems.size() * 9);
  for (std::size_t e = 0; e < mesh.elems.size(); ++e) {
    const Eigen::Matrix3d ke = element(mesh.triangle(e));
    const auto& el = mesh.elems[e];
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        trip.emplace_back(el[i], el[j], ke(i, j));
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(mesh.nodes.size());
  CsrMatrix a(n, n);
  a.setFromTriplets(trip.begin(), trip.end());
  return a;
}

}  // namespace

CsrMatrix assemble_stiffness(const TriMesh& mesh, double k) {
  return assemble_elements(mesh, [k](const Triangle& t) { return element_stiffness(t, k); });
}

CsrMatrix assemble_mass(const TriMesh& mesh) {
  return assemble_elements(mesh, [](const Triangle& t) { return element_mass(t); });
}

LinearSystem assemble_heat(const TriMesh& mesh, const problems::HeatConstants& c) {
  const auto n = static_cast<Eigen::Index>(mesh.nodes.size());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(mesh.elems.size() * 9 + mesh.boundary_edges.size() * 4);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for (std::size_t e = 0; e < mesh.elems.size(); ++e) {
    const Triangle t = mesh.triangle(e);
    const Eigen::Matrix3d ke = element_stiffness(t, c.conductivity);
    const double load = c.source * signed_area(t) / 3.0;
    const auto& el = mesh.elems[e];
    for (int i = 0; i < 3; ++i) {
      rhs[el[i]] += load;
      for (int j = 0; j < 3; ++j) {
        trip.emplace_back(el[i], el[j], ke(i, j));
      }
    }
  }
  for (const auto& be : mesh.boundary_edges) {
    const RobinEdge r = edge_robin(edge_length(mesh.nodes[be[0]], mesh.nodes[be[1]]), c.convection, c.ambient);
    for (int i = 0; i < 2; ++i) {
      rhs[be[i]] += r.load[i];
      for (int j = 0; j < 2; ++j) {
        trip.emplace_back(be[i], be[j], r.matrix(i, j));
      }
    }
  }
  LinearSystem sys{CsrMatrix(n, n), std::move(rhs)};
  sys.matrix.setFromTriplets(trip.begin(), trip.end());
  return sys;
}

CgResult solve_cg(const CsrMatrix& a, const Eigen::VectorXd& b, const Eigen::VectorXd& x0, double tol, int max_iter) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || b.size() != n || x0.size() != n) {
    throw std::invalid_argument("CG operands have inconsistent sizes");
  }
  if (max_iter < 0) {
    max_iter = static_cast<int>(10 * n);
  }
  const Eigen::VectorXd inv_diag = a.diagonal().cwiseInverse();
  CgResult res;
  res.x = x0;
  Eigen::VectorXd r = b - a * res.x;
  const double b_norm = b.norm() > 0.0 ? b.norm() : 1.0;
  Eigen::VectorXd z = inv_diag.cwiseProduct(r);
  Eigen::VectorXd p = z;
  Eigen::VectorXd ap(n);
  double rz = r.dot(z);
  res.relative_residual = r.norm() / b_norm;
  while (res.relative_residual > tol) {
    if (res.iterations >= max_iter) {
      throw std::runtime_error("CG did not converge in " + std::to_string(max_iter) + " iterations (residual " +
                               io::format_double(res.relative_residual) + ")");
    }
    ap.noalias() = a * p;
    const double curvature = p.dot(ap);
    if (!(curvature > 0.0)) {
      throw std::domain_error("CG met non-positive curvature; the matrix is not positive definite");
    }
    const double alpha = rz / curvature;
    res.x += alpha * p;
    r -= alpha * ap;
    z = inv_diag.cwiseProduct(r);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
    ++res.iterations;
    res.relative_residual = r.norm() / b_norm;
  }
  return res;
}

HeatSolution solve_heat(const TriMesh& mesh, const problems::HeatConstants& c) {
  if (!(c.convection > 0.0)) {
    throw std::invalid_argument("the convective coefficient must be positive for a definite system");
  }
  const LinearSystem sys = assemble_heat(mesh, c);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(sys.rhs.size(), c.ambient);
  CgResult r = solve_cg(sys.matrix, sys.rhs, x0);
  return {std::move(r.x), r.iterations};
}

double EnergyBalance::relative_gap() const {
  const double scale = std::max(std::abs(generated), std::abs(convected));
  return scale > 0.0 ? std::abs(generated - convected) / scale : 0.0;
}

EnergyBalance energy_balance(const TriMesh& mesh, const Eigen::VectorXd& temperature,
                             const problems::HeatConstants& c) {
  EnergyBalance b;
  b.generated = c.source * mesh.area();
  for (const auto& [i, j] : mesh.boundary_edges) {
    const double len = edge_length(mesh.nodes[i], mesh.nodes[j]);
    b.convected += c.convection * len * 0.5 * ((temperature[i] - c.ambient) + (temperature[j] - c.ambient));
  }
  return b;
}

Eigen::VectorXd prolong(const TriMesh& fine, const Eigen::VectorXd& coarse_values) {
  if (fine.parents.size() != fine.nodes.size()) {
    throw std::invalid_argument("mesh carries no refinement parents");
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(fine.nodes.size()));
  for (std::size_t i = 0; i < fine.parents.size(); ++i) {
    const auto [a, b] = fine.parents[i];
    if (a >= coarse_values.size() || b >= coarse_values.size()) {
      throw std::invalid_argument("coarse field is too short for this refinement");
    }
    out[static_cast<Eigen::Index>(i)] = 0.5 * (coarse_values[a] + coarse_values[b]);
  }
  return out;
}

Eigen::VectorXd interpolate(const TriMesh& mesh, const Eigen::VectorXd& values, const std::vector<Point>& points,
                            double tolerance) {
  if (values.size() != static_cast<Eigen::Index>(mesh.nodes.size())) {
    throw std::invalid_argument("nodal field does not match the mesh");
  }
  double x_lo = std::numeric_limits<double>::infinity(), y_lo = x_lo;
  double x_hi = -x_lo, y_hi = -x_lo;
  for (const Point& p : mesh.nodes) {
    x_lo = std::min(x_lo, p[0]);
    x_hi = std::max(x_hi, p[0]);
    y_lo = std::min(y_lo, p[1]);
    y_hi = std::max(y_hi, p[1]);
  }
  const int cells = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(mesh.elems.size()) / 2.0)));
  const double cw = (x_hi - x_lo) / cells;
  const double ch = (y_hi - y_lo) / cells;
  auto cell_of = [&](double v, double lo, double w) {
    return std::clamp(static_cast<int>(std::floor((v - lo) / w)), 0, cells - 1);
  };
  std::vector<std::vector<int>> bucket(static_cast<std::size_t>(cells) * cells);
  for (std::size_t e = 0; e < mesh.elems.size(); ++e) {
    const Triangle t = mesh.triangle(e);
    const double ex_lo = std::min({t[0][0], t[1][0], t[2][0]}) - tolerance;
    const double ex_hi = std::max({t[0][0], t[1][0], t[2][0]}) + tolerance;
    const double ey_lo = std::min({t[0][1], t[1][1], t[2][1]}) - tolerance;
    const double ey_hi = std::max({t[0][1], t[1][1], t[2][1]}) + tolerance;
    for (int j = cell_of(ey_lo, y_lo, ch); j <= cell_of(ey_hi, y_lo, ch); ++j) {
      for (int i = cell_of(ex_lo, x_lo, cw); i <= cell_of(ex_hi, x_lo, cw); ++i) {
        bucket[static_cast<std::size_t>(j) * cells + i].push_back(static_cast<int>(e));
      }
    }
  }

  Eigen::VectorXd out(static_cast<Eigen::Index>(points.size()));
  for (std::size_t q = 0; q < points.size(); ++q) {
    const Point& p = points[q];
    double best_gap = std::numeric_limits<double>::infinity();
    double best_value = 0.0;
    if (p[0] >= x_lo - tolerance && p[0] <= x_hi + tolerance && p[1] >= y_lo - tolerance &&
        p[1] <= y_hi + tolerance) {
      for (int e : bucket[static_cast<std::size_t>(cell_of(p[1], y_lo, ch)) * cells + cell_of(p[0], x_lo, cw)]) {
        const Triangle t = mesh.triangle(static_cast<std::size_t>(e));
        const double area = signed_area(t);
        double gap = -std::numeric_limits<double>::infinity();
        std::array<double, 3> lambda{};
        for (int i = 0; i < 3; ++i) {
          const Point& a = t[(i + 1) % 3];
          const Point& b = t[(i + 2) % 3];
          lambda[i] = signed_area({p, a, b}) / area;
          // Signed distance of p beyond edge (a, b), positive outside.
          gap = std::max(gap, -2.0 * signed_area({p, a, b}) / edge_length(a, b));
        }
        if (gap < best_gap) {
          best_gap = gap;
          const auto& el = mesh.elems[static_cast<std::size_t>(e)];
          best_value = lambda[0] * values[el[0]] + lambda[1] * values[el[1]] + lambda[2] * values[el[2]];
        }
      }
    }
    if (!(best_gap <= tolerance)) {
      throw std::domain_error("point (" + io::format_double(p[0]) + ", " + io::format_double(p[1]) +
                              ") lies outside the mesh");
    }
    out[static_cast<Eigen::Index>(q)] = best_value;
  }
  return out;
}

double l2_norm(const TriMesh& mesh, const Eigen::VectorXd& w) {
  double s = 0.0;
  for (std::size_t e = 0; e < mesh.elems.size(); ++e) {
    const auto& el = mesh.elems[e];
    const Eigen::Vector3d we(w[el[0]], w[el[1]], w[el[2]]);
    s += we.dot(element_mass(mesh.triangle(e)) * we);
  }
  return std::sqrt(s);
}

double h1_seminorm(const TriMesh& mesh, const Eigen::VectorXd& w) {
  double s = 0.0;
  for (std::size_t e = 0; e < mesh.elems.size(); ++e) {
    const auto& el = mesh.elems[e];
    const Eigen::Vector3d we(w[el[0]], w[el[1]], w[el[2]]);
    s += we.dot(element_stiffness(mesh.triangle(e), 1.0) * we);
  }
  return std::sqrt(s);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("slope fit needs at least two paired values");
  }
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
      throw std::invalid_argument("log-log fit needs positive data");
    }
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

ConvergenceReport convergence_study(const std::vector<TriMesh>& hierarchy, const problems::HeatConstants& c) {
  if (hierarchy.size() < 3) {
    throw std::invalid_argument("a convergence study needs at least three levels");
  }
  ConvergenceReport rep;
  Eigen::VectorXd previous;
  for (std::size_t l = 0; l < hierarchy.size(); ++l) {
    const TriMesh& mesh = hierarchy[l];
    const HeatSolution sol = solve_heat(mesh, c);
    const Eigen::VectorXd rise = sol.temperature.array() - c.ambient;
    rep.levels.push_back({mesh.level, mesh.h_max, mesh.nodes.size(), mesh.elems.size(), sol.iterations, rise[0],
                          rise.minCoeff(), energy_balance(mesh, sol.temperature, c).relative_gap()});
    if (l > 0) {
      const Eigen::VectorXd w = sol.temperature - prolong(mesh, previous);
      rep.pairs.push_back({static_cast<int>(l), mesh.h_max, l2_norm(mesh, w), h1_seminorm(mesh, w)});
    }
    previous = sol.temperature;
  }
  std::vector<double> h, l2, h1;
  for (const PairError& p : rep.pairs) {
    h.push_back(p.h_fine);
    l2.push_back(p.l2);
    h1.push_back(p.h1);
  }
  rep.l2_slope = loglog_slope(h, l2);
  rep.h1_slope = loglog_slope(h, h1);
  for (std::size_t i = 0; i + 1 < rep.pairs.size(); ++i) {
    rep.local_orders.push_back(std::log(rep.pairs[i].l2 / rep.pairs[i + 1].l2) /
                               std::log(rep.pairs[i].h_fine / rep.pairs[i + 1].h_fine));
  }
  return rep;
}

void write_levels_csv(std::ostream& out, const ConvergenceReport& r) {
  out << "level,h_max,nodes,elems,cg_iterations,center_rise,min_rise,balance_gap\n";
  for (const LevelResult& l : r.levels) {
    out << l.level << ',' << io::format_double(l.h_max) << ',' << l.nodes << ',' << l.elems << ',' << l.cg_iterations
        << ',' << io::format_double(l.center_rise) << ',' << io::format_double(l.min_rise) << ','
        << io::format_double(l.balance_gap) << '\n';
  }
}

void write_errors_csv(std::ostream& out, const ConvergenceReport& r) {
  out << "pair,h_f,l2_error,h1_error\n";
  for (const PairError& p : r.pairs) {
    out << p.pair << ',' << io::format_double(p.h_fine) << ',' << io::format_double(p.l2) << ','
        << io::format_double(p.h1) << '\n';
  }
}

void write_orders_csv(std::ostream& out, const ConvergenceReport& r) {
  static const std::vector<double> kPaperLocal{1.859, 2.051, 2.015, 1.986};
  auto row = [&out](const std::string& metric, double order, double paper) {
    out << metric << ',' << io::format_double(order) << ',' << (std::isnan(paper) ? "" : io::format_double(paper))
        << '\n';
  };
  const double none = std::numeric_limits<double>::quiet_NaN();
  out << "metric,order,paper\n";
  row("global_l2_slope", r.l2_slope, 1.989);
  for (std::size_t i = 0; i < r.local_orders.size(); ++i) {
    row("local_" + std::to_string(i + 1) + "_" + std::to_string(i + 2) + "_" + std::to_string(i + 3),
        r.local_orders[i], i < kPaperLocal.size() ? kPaperLocal[i] : none);
  }
  row("global_h1_slope", r.h1_slope, 1.008);
}

void write_mesh(std::ostream& out, const TriMesh& mesh, const Eigen::VectorXd& values) {
  if (values.size() != static_cast<Eigen::Index>(mesh.nodes.size())) {
    throw std::invalid_argument("nodal field does not match the mesh");
  }
  out << "# nodes " << mesh.nodes.size() << ": x y value\n";
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
    out << io::format_double(mesh.nodes[i][0]) << ' ' << io::format_double(mesh.nodes[i][1]) << ' '
        << io::format_double(values[static_cast<Eigen::Index>(i)]) << '\n';
  }
  out << "# elements " << mesh.elems.size() << ": node indices\n";
  for (const auto& [a, b, c] : mesh.elems) {
    out << a << ' ' << b << ' ' << c << '\n';
  }
}

}  // namespace lnnpinn::fem
