#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <array>
#include <cstddef>
#include <iosfwd>
#include <vector>

#include "lnnpinn/problems/problems.hpp"

namespace lnnpinn::fem {

using Point = std::array<double, 2>;
using Triangle = std::array<Point, 3>;
/// Compressed sparse rows.
using CsrMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct TriMesh {
  std::vector<Point> nodes;
  std::vector<std::array<int, 3>> elems;           // counter-clockwise
  std::vector<std::array<int, 2>> boundary_edges;  // consecutive nodes on the circle
  int level = 1;
  double h_max = 0.0;  // target element size
  /// Refined meshes keep the coarse nodes first; node i of the refined mesh
  /// was created at the midpoint of coarse edge parents[i] (both entries equal
  /// for kept nodes).  Empty on the coarsest level.
  std::vector<std::array<int, 2>> parents;

  [[nodiscard]] Triangle triangle(std::size_t e) const;
  [[nodiscard]] double area() const;
  [[nodiscard]] double max_edge_length() const;
  /// Throws std::logic_error when an element has non-positive signed area or
  /// a boundary node is off the circle of radius R by more than 1e-12.
  void validate(double radius) const;
};

double signed_area(const Triangle& t);

/// Centre node plus `rings` concentric rings with 6i nodes on ring i.
TriMesh coarse_disk_mesh(double radius, int rings = 10);
/// Uniform 1-to-4 split; new boundary midpoints are pushed out to the circle.
TriMesh refine(const TriMesh& coarse, double radius);
std::vector<TriMesh> build_mesh_hierarchy(double radius, int levels, int rings = 10);

/// k (b bᵀ + c cᵀ) / (4A) for the constant P1 gradients.  Throws
/// std::invalid_argument for triangles with area below 1e-14 times the
/// squared bounding-box size.
Eigen::Matrix3d element_stiffness(const Triangle& t, double k);
/// (A/12) [[2,1,1],[1,2,1],[1,1,2]].
Eigen::Matrix3d element_mass(const Triangle& t);

struct RobinEdge {
  Eigen::Matrix2d matrix;
  Eigen::Vector2d load;
};
/// Convective edge terms (hL/6)[[2,1],[1,2]] and (h T_inf L/2)[1,1].
RobinEdge edge_robin(double length, double h, double t_inf);

CsrMatrix assemble_stiffness(const TriMesh& mesh, double k);
CsrMatrix assemble_mass(const TriMesh& mesh);

struct LinearSystem {
  CsrMatrix matrix;
  Eigen::VectorXd rhs;
};
/// [K + C] T = f + g for the heated disk with convective rim.
LinearSystem assemble_heat(const TriMesh& mesh, const problems::HeatConstants& c);

struct CgResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double relative_residual = 0.0;
};
/// Jacobi-preconditioned conjugate gradients.  Throws std::domain_error on
/// non-positive curvature and std::runtime_error when the relative residual
/// does not reach `tol` within max_iter iterations (default 10 N).
CgResult solve_cg(const CsrMatrix& a, const Eigen::VectorXd& b, const Eigen::VectorXd& x0, double tol = 1e-12,
                  int max_iter = -1);

struct HeatSolution {
  Eigen::VectorXd temperature;
  int iterations = 0;
};
HeatSolution solve_heat(const TriMesh& mesh, const problems::HeatConstants& c);

struct EnergyBalance {
  double generated = 0.0;  // integral of Q over the mesh
  double convected = 0.0;  // boundary integral of h (T - T_inf)
  [[nodiscard]] double relative_gap() const;
};
EnergyBalance energy_balance(const TriMesh& mesh, const Eigen::VectorXd& temperature,
                             const problems::HeatConstants& c);

/// Coarse nodal field carried to the next level through the refinement
/// parents (P1 interpolation on the coarse mesh for every interior node).
Eigen::VectorXd prolong(const TriMesh& fine, const Eigen::VectorXd& coarse_values);
/// P1 interpolation at arbitrary points.  Throws std::domain_error when a
/// point lies outside the mesh by more than `tolerance`.
Eigen::VectorXd interpolate(const TriMesh& mesh, const Eigen::VectorXd& values, const std::vector<Point>& points,
                            double tolerance = 1e-10);

double l2_norm(const TriMesh& mesh, const Eigen::VectorXd& w);
double h1_seminorm(const TriMesh& mesh, const Eigen::VectorXd& w);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct LevelResult {
  int level = 0;
  double h_max = 0.0;
  std::size_t nodes = 0;
  std::size_t elems = 0;
  int cg_iterations = 0;
  double center_rise = 0.0;  // T - T_inf at the centre node
  double min_rise = 0.0;
  double balance_gap = 0.0;
};

struct PairError {
  int pair = 0;
  double h_fine = 0.0;
  double l2 = 0.0;
  double h1 = 0.0;
};

struct ConvergenceReport {
  std::vector<LevelResult> levels;
  std::vector<PairError> pairs;
  double l2_slope = 0.0;
  double h1_slope = 0.0;
  std::vector<double> local_orders;  // from pairs (i, i+1)
};

/// Solves on every level and compares each solution with its coarse
/// neighbour carried to the fine mesh.  Needs at least three levels.
ConvergenceReport convergence_study(const std::vector<TriMesh>& hierarchy, const problems::HeatConstants& c);

void write_levels_csv(std::ostream& out, const ConvergenceReport& r);
void write_errors_csv(std::ostream& out, const ConvergenceReport& r);
/// Observed orders next to the published ones where available.
void write_orders_csv(std::ostream& out, const ConvergenceReport& r);
/// Plain-text node table (x, y, value) followed by the element table.
void write_mesh(std::ostream& out, const TriMesh& mesh, const Eigen::VectorXd& values);

}  // namespace lnnpinn::fem
