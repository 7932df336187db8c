#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "lnnpinn/fem/fem.hpp"

namespace lnnpinn::fem {
namespace {

constexpr double kRadius = 0.15;

double polygon_area(int sides) { return 0.5 * sides * kRadius * kRadius * std::sin(2.0 * std::numbers::pi / sides); }

TEST(Mesh, CoarseDiskCounts) {
  const TriMesh m = coarse_disk_mesh(kRadius);
  EXPECT_EQ(m.nodes.size(), 331u);
  EXPECT_EQ(m.elems.size(), 600u);
  EXPECT_EQ(m.boundary_edges.size(), 60u);
  EXPECT_NO_THROW(m.validate(kRadius));
  EXPECT_THROW(coarse_disk_mesh(0.0), std::invalid_argument);
}

TEST(Mesh, HierarchyQuadruplesAndStaysOnCircle) {
  const auto h = build_mesh_hierarchy(kRadius, 4);
  ASSERT_EQ(h.size(), 4u);
  for (std::size_t l = 1; l < h.size(); ++l) {
    EXPECT_EQ(h[l].elems.size(), 4 * h[l - 1].elems.size());
    EXPECT_EQ(h[l].boundary_edges.size(), 2 * h[l - 1].boundary_edges.size());
    EXPECT_DOUBLE_EQ(h[l].h_max, h[l - 1].h_max / 2.0);
    EXPECT_NEAR(h[l].max_edge_length(), h[l - 1].max_edge_length() / 2.0, 1e-12);
    for (const auto& e : h[l].boundary_edges) {
      EXPECT_NEAR(std::hypot(h[l].nodes[e[0]][0], h[l].nodes[e[0]][1]), kRadius, 1e-12);
    }
  }
  EXPECT_THROW(build_mesh_hierarchy(kRadius, 1), std::invalid_argument);
}

TEST(Mesh, AreaIsInscribedPolygonArea) {
  const auto h = build_mesh_hierarchy(kRadius, 5);
  for (const TriMesh& m : h) {
    const auto sides = static_cast<int>(m.boundary_edges.size());
    EXPECT_NEAR(m.area() / polygon_area(sides), 1.0, 1e-12) << "level " << m.level;
  }
}

TEST(Mesh, FineAreaApproachesDisk) {
  const auto h = build_mesh_hierarchy(kRadius, 7);
  const double disk = std::numbers::pi * kRadius * kRadius;
  EXPECT_NEAR(disk, 0.0706858, 5e-8);
  EXPECT_LT(std::abs(h.back().area() - disk) / disk, 1e-6);
}

TEST(Element, UnitRightTriangleStiffness) {
  const Eigen::Matrix3d k = element_stiffness({{{0, 0}, {1, 0}, {0, 1}}}, 1.0);
  Eigen::Matrix3d expected;
  expected << 1.0, -0.5, -0.5, -0.5, 0.5, 0.0, -0.5, 0.0, 0.5;
  EXPECT_LT((k - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Element, StiffnessAnnihilatesConstantsAndScalesWithK) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Triangle t{{{u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}}};
    if (signed_area(t) < 0.0) std::swap(t[1], t[2]);
    if (signed_area(t) < 1e-3) continue;
    const Eigen::Matrix3d k1 = element_stiffness(t, 1.0);
    EXPECT_LT((k1 * Eigen::Vector3d::Ones()).cwiseAbs().maxCoeff(), 1e-12 * k1.cwiseAbs().maxCoeff());
    EXPECT_LT((k1 - k1.transpose()).cwiseAbs().maxCoeff(), 1e-15 * k1.cwiseAbs().maxCoeff());
    EXPECT_LT((element_stiffness(t, 2.0) - 2.0 * k1).cwiseAbs().maxCoeff(), 1e-14 * k1.cwiseAbs().maxCoeff());
  }
}

TEST(Element, DegenerateAndClockwiseRejected) {
  EXPECT_THROW(element_stiffness({{{0, 0}, {1, 0}, {2, 1e-16}}}, 1.0), std::invalid_argument);
  EXPECT_THROW(element_stiffness({{{0, 0}, {0, 0}, {0, 0}}}, 1.0), std::invalid_argument);
  EXPECT_THROW(element_stiffness({{{0, 0}, {0, 1}, {1, 0}}}, 1.0), std::invalid_argument);
}

TEST(Element, MassMatrixIntegratesLinearFieldSquared) {
  // Edge-midpoint quadrature is exact for quadratics.
  const Triangle t{{{0.1, -0.2}, {0.9, 0.3}, {0.2, 0.7}}};
  const Eigen::Vector3d w(1.5, -0.75, 2.25);
  const double a = signed_area(t);
  const double exact = a / 3.0 *
                       (std::pow(0.5 * (w[0] + w[1]), 2) + std::pow(0.5 * (w[1] + w[2]), 2) +
                        std::pow(0.5 * (w[2] + w[0]), 2));
  EXPECT_NEAR(w.dot(element_mass(t) * w), exact, 1e-14 * exact);
}

TEST(Edge, RobinClosedForms) {
  const RobinEdge r = edge_robin(1.0, 1.0, 1.0);
  EXPECT_NEAR(r.matrix(0, 0), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(r.matrix(0, 1), 1.0 / 6.0, 1e-15);
  EXPECT_NEAR(r.matrix(1, 0), 1.0 / 6.0, 1e-15);
  EXPECT_NEAR(r.matrix(1, 1), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(r.load[0], 0.5, 1e-15);
  EXPECT_NEAR(r.load[1], 0.5, 1e-15);

  const RobinEdge zero = edge_robin(0.3, 0.0, 800.0);
  EXPECT_EQ(zero.matrix.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(zero.load.cwiseAbs().maxCoeff(), 0.0);

  const RobinEdge s = edge_robin(0.02, 50.0, 800.0);
  EXPECT_NEAR(s.matrix.row(0).sum(), 50.0 * 0.02 / 2.0, 1e-15);
  EXPECT_NEAR(s.matrix.row(1).sum(), 50.0 * 0.02 / 2.0, 1e-15);
  EXPECT_THROW(edge_robin(0.0, 1.0, 1.0), std::invalid_argument);
}

TEST(Assembly, StiffnessIsSymmetricWithConstantKernel) {
  const TriMesh m = build_mesh_hierarchy(kRadius, 2).back();
  const CsrMatrix k = assemble_stiffness(m, 159.0);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(k.rows());
  EXPECT_LT((k * ones).cwiseAbs().maxCoeff(), 1e-12 * 159.0);
  const CsrMatrix kt = k.transpose();
  EXPECT_LT((k - kt).norm(), 1e-12 * k.norm());
  const problems::HeatConstants c;
  const CsrMatrix a = assemble_heat(m, c).matrix;
  const CsrMatrix at = a.transpose();
  EXPECT_LT((a - at).norm(), 1e-12 * a.norm());
  EXPECT_NEAR(ones.dot(assemble_mass(m) * ones), m.area(), 1e-15);
}

TEST(Solve, NoSourceGivesAmbient) {
  problems::HeatConstants c;
  c.source = 0.0;
  const TriMesh m = build_mesh_hierarchy(kRadius, 2).back();
  const HeatSolution s = solve_heat(m, c);
  EXPECT_LT((s.temperature.array() - c.ambient).abs().maxCoeff(), 1e-10);
}

TEST(Solve, RequiresPositiveConvection) {
  problems::HeatConstants c;
  c.convection = 0.0;
  EXPECT_THROW(solve_heat(coarse_disk_mesh(kRadius), c), std::invalid_argument);
}

TEST(Solve, EnergyBalanceAndPositiveRise) {
  const problems::HeatConstants c;
  for (const TriMesh& m : build_mesh_hierarchy(kRadius, 3)) {
    const HeatSolution s = solve_heat(m, c);
    EXPECT_LT(energy_balance(m, s.temperature, c).relative_gap(), 1e-8);
    EXPECT_GE((s.temperature.array() - c.ambient).minCoeff(), -1e-10);
  }
}

TEST(Solve, CenterRiseApproachesRadialSolution) {
  const problems::HeatConstants c;
  const TriMesh m = build_mesh_hierarchy(kRadius, 4).back();
  const HeatSolution s = solve_heat(m, c);
  EXPECT_NEAR(s.temperature[0] - c.ambient, 3.0707547, 1e-3);
  EXPECT_NEAR(c.radial_solution(0.0), 3.0707547, 5e-8);
}

TEST(Cg, RejectsIndefiniteMatrix) {
  CsrMatrix a(2, 2);
  a.insert(0, 0) = 1.0;
  a.insert(1, 1) = -1.0;
  EXPECT_THROW(solve_cg(a, Eigen::Vector2d(1.0, 1.0), Eigen::Vector2d::Zero()), std::domain_error);
}

TEST(Cg, ReportsNonConvergence) {
  const TriMesh m = coarse_disk_mesh(kRadius);
  const LinearSystem sys = assemble_heat(m, problems::HeatConstants{});
  EXPECT_THROW(solve_cg(sys.matrix, sys.rhs, Eigen::VectorXd::Zero(sys.rhs.size()), 1e-12, 2), std::runtime_error);
}

TEST(Transfer, ProlongationIsInteriorInterpolation) {
  const auto h = build_mesh_hierarchy(kRadius, 2);
  const Eigen::VectorXd coarse = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(h[0].nodes.size()), 0.0, 1.0)
                                     .unaryExpr([](double v) { return std::sin(7.0 * v); });
  const Eigen::VectorXd fine = prolong(h[1], coarse);
  std::vector<Point> interior;
  std::vector<Eigen::Index> index;
  for (std::size_t i = 0; i < h[1].nodes.size(); ++i) {
    if (std::hypot(h[1].nodes[i][0], h[1].nodes[i][1]) < kRadius - 1e-9) {
      interior.push_back(h[1].nodes[i]);
      index.push_back(static_cast<Eigen::Index>(i));
    }
  }
  const Eigen::VectorXd located = interpolate(h[0], coarse, interior);
  for (std::size_t q = 0; q < interior.size(); ++q) {
    EXPECT_NEAR(located[static_cast<Eigen::Index>(q)], fine[index[q]], 1e-12);
  }
}

TEST(Transfer, InterpolationIsExactForLinearFieldsAndRejectsOutsidePoints) {
  const TriMesh m = coarse_disk_mesh(kRadius);
  Eigen::VectorXd f(static_cast<Eigen::Index>(m.nodes.size()));
  for (std::size_t i = 0; i < m.nodes.size(); ++i) f[static_cast<Eigen::Index>(i)] = 2.0 * m.nodes[i][0] - 3.0 * m.nodes[i][1] + 1.0;
  const std::vector<Point> pts{{0.01, 0.02}, {-0.1, 0.05}, {0.0, -0.149}};
  const Eigen::VectorXd v = interpolate(m, f, pts);
  for (std::size_t q = 0; q < pts.size(); ++q) {
    EXPECT_NEAR(v[static_cast<Eigen::Index>(q)], 2.0 * pts[q][0] - 3.0 * pts[q][1] + 1.0, 1e-14);
  }
  EXPECT_THROW(interpolate(m, f, {{0.0, 0.2}}), std::domain_error);
  // Just outside a boundary chord, beyond the tolerance.
  EXPECT_THROW(interpolate(m, f, {{kRadius + 1e-6, 0.0}}), std::domain_error);
}

TEST(Norms, MatchClosedFormsForLinearField) {
  const TriMesh m = build_mesh_hierarchy(kRadius, 2).back();
  Eigen::VectorXd w(static_cast<Eigen::Index>(m.nodes.size()));
  for (std::size_t i = 0; i < m.nodes.size(); ++i) w[static_cast<Eigen::Index>(i)] = 3.0 * m.nodes[i][0] + 4.0 * m.nodes[i][1];
  EXPECT_NEAR(h1_seminorm(m, w), 5.0 * std::sqrt(m.area()), 1e-12);
  EXPECT_NEAR(l2_norm(m, Eigen::VectorXd::Constant(w.size(), 2.0)), 2.0 * std::sqrt(m.area()), 1e-14);
}

TEST(Slope, RecoversPowerLaw) {
  EXPECT_NEAR(loglog_slope({1.0, 0.5, 0.25}, {3.0, 0.75, 0.1875}), 2.0, 1e-14);
  EXPECT_THROW(loglog_slope({1.0}, {1.0}), std::invalid_argument);
  EXPECT_THROW(loglog_slope({1.0, 2.0}, {0.0, 1.0}), std::invalid_argument);
}

TEST(Convergence, FourLevelStudy) {
  const problems::HeatConstants c;
  const ConvergenceReport r = convergence_study(build_mesh_hierarchy(kRadius, 4), c);
  ASSERT_EQ(r.pairs.size(), 3u);
  ASSERT_EQ(r.local_orders.size(), 2u);
  EXPECT_GE(r.l2_slope, 1.8);
  EXPECT_LE(r.l2_slope, 2.2);
  EXPECT_GE(r.h1_slope, 0.9);
  EXPECT_LE(r.h1_slope, 1.15);
  std::ostringstream orders;
  write_orders_csv(orders, r);
  EXPECT_NE(orders.str().find("global_l2_slope,"), std::string::npos);
  EXPECT_NE(orders.str().find(",1.989\n"), std::string::npos);
  EXPECT_THROW(convergence_study(build_mesh_hierarchy(kRadius, 2), c), std::invalid_argument);
}

TEST(Export, MeshTableLayout) {
  const TriMesh m = coarse_disk_mesh(kRadius, 1);
  std::ostringstream os;
  write_mesh(os, m, Eigen::VectorXd::Zero(7));
  EXPECT_EQ(os.str().rfind("# nodes 7: x y value\n0 0 0\n", 0), 0u);
  EXPECT_NE(os.str().find("# elements 6: node indices\n0 1 2\n"), std::string::npos);
  EXPECT_THROW(write_mesh(os, m, Eigen::VectorXd::Zero(3)), std::invalid_argument);
}

}  // namespace
}  // namespace lnnpinn::fem
