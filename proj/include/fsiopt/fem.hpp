#pragma once

#include "fsiopt/linalg.hpp"
#include "fsiopt/mesh.hpp"

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace fsiopt {

// ---------------------------------------------------------------------------
// Quadrature

/// Points and weights on the unit square [0,1]^2 (or on [0,1] for lines,
/// stored in Point::x).
struct QuadratureRule {
  std::vector<Point> points;
  std::vector<double> weights;

  std::size_t size() const { return points.size(); }
};

/// Tensor Gauss-Legendre rule with n points per direction on [0,1]^2.
QuadratureRule gauss_square(int n);
/// Gauss-Legendre rule with n points on [0,1].
QuadratureRule gauss_line(int n);

// ---------------------------------------------------------------------------
// Reference elements

enum class ElementKind { Q2Scalar, Q2Vector, P1dcScalar };

/// Biquadratic Lagrange element on the unit square. Local nodes: the four
/// vertices (counterclockwise from the origin), the four edge midpoints
/// (edge k joins vertices k and k+1) and the centre.
namespace q2 {
inline constexpr int n_nodes = 9;
inline constexpr std::array<Point, 9> nodes{
    Point{0, 0},   Point{1, 0}, Point{1, 1},   Point{0, 1},  Point{0.5, 0},
    Point{1, 0.5}, Point{0.5, 1}, Point{0, 0.5}, Point{0.5, 0.5}};
double value(int node, const Point &xi);
Vec2 gradient(int node, const Point &xi);
} // namespace q2

/// Reference element descriptor. Vector elements repeat the scalar Q2 basis
/// per component.
struct ReferenceElement {
  ElementKind kind;

  int dofs_per_cell() const;
  /// Shape values and reference gradients of the scalar basis.
  double value(int i, const Point &xi) const;
  Vec2 gradient(int i, const Point &xi) const;
};

// ---------------------------------------------------------------------------
// Geometry

/// Bilinear map from the unit square onto a mesh cell.
struct CellMap {
  std::array<Point, 4> p;

  CellMap(const Mesh &mesh, std::size_t cell);
  explicit CellMap(const std::array<Point, 4> &vertices) : p(vertices) {}

  Point map(const Point &xi) const;
  Mat2 jacobian(const Point &xi) const;
  /// Reference coordinates of x if x lies in the (closed) cell.
  std::optional<Point> inverse(const Point &x, double tol = 1e-10) const;
  Point centre() const;
  double diameter() const;
};

/// Piecewise linear discontinuous basis {1, (x-xc)/h, (y-yc)/h} in physical
/// coordinates of one cell.
struct P1dcBasis {
  Point centre;
  double scale = 1.0;

  explicit P1dcBasis(const CellMap &cell) : centre(cell.centre()), scale(cell.diameter()) {}
  double value(int i, const Point &x) const;
  Vec2 gradient(int i) const;
};

// ---------------------------------------------------------------------------
// Boundary data

enum class Field { Velocity = 0, Displacement = 1, Auxiliary = 2, Pressure = 3 };

/// Spatial inflow shape: peak * 4 (y - y_min)(y_max - y) / (y_max - y_min)^2
/// in the x component, zero outside [y_min, y_max].
struct InflowProfile {
  double peak_factor = 1.5;
  double y_min = 0.0;
  double y_max = 0.41;

  double shape(const Point &x) const;
};

enum class VelocityCondition { Free, Zero, Inflow };

struct BoundaryRule {
  VelocityCondition velocity = VelocityCondition::Free;
  bool displacement_zero = false;
};

/// Boundary-condition table: marker -> rule; unlisted markers are natural.
struct BoundaryConditions {
  std::map<Marker, BoundaryRule> rules;
  InflowProfile inflow;

  /// Builds the table from marker names; throws std::invalid_argument on
  /// an unknown marker.
  static BoundaryConditions from_names(const std::vector<std::pair<std::string, BoundaryRule>> &table,
                                       const InflowProfile &inflow = {});
};

/// Prescribed value of one dof; inflow values scale with the mean inflow.
struct Constraint {
  int dof = 0;
  double value = 0.0;
  bool time_dependent = false;
};

// ---------------------------------------------------------------------------
// Degrees of freedom

/// Numbering of the monolithic unknown: per Q2 node the six values
/// (v_x, v_y, u_x, u_y, w_x, w_y), nodes ordered vertices, edges, cell
/// centres; then three P1dc pressure dofs per fluid cell.
class DofMap {
public:
  static constexpr int dofs_per_node = 6;
  static constexpr int pressure_per_cell = 3;

  DofMap(const Mesh &mesh, const BoundaryConditions &bc);

  std::size_t n_dofs() const { return n_dofs_; }
  std::size_t n_nodes() const { return node_points_.size(); }
  std::size_t n_pressure_dofs() const { return n_dofs_ - dofs_per_node * n_nodes(); }

  int node_dof(int node, Field field, int component) const {
    return dofs_per_node * node + 2 * static_cast<int>(field) + component;
  }
  const std::array<int, 9> &cell_nodes(std::size_t cell) const { return cell_nodes_[cell]; }
  /// First pressure dof of a fluid cell, -1 for solid cells.
  int cell_pressure_dof(std::size_t cell) const { return cell_pressure_[cell]; }
  /// All dofs of a cell: 54 nodal values followed by 3 pressure dofs for
  /// fluid cells.
  std::vector<int> cell_dofs(std::size_t cell) const;
  const Point &node_point(int node) const { return node_points_[node]; }
  /// True if the node lies in the closure of a solid cell.
  bool node_in_solid(int node) const { return node_solid_[node] != 0; }
  Field field_of(int dof) const;

  std::span<const Constraint> constraints() const { return constraints_; }
  bool is_constrained(int dof) const { return constrained_[dof] != 0; }

  /// Writes the Dirichlet values at time t (mean inflow inflow_mean) into U.
  void apply_constraints(std::span<double> u, double inflow_mean) const;
  /// Sets constrained entries to zero.
  void zero_constrained(std::span<double> v) const;
  /// Adds a fixed value for one more dof (e.g. a pinned pressure).
  void add_constraint(int dof, double value);

  const Mesh &mesh() const { return *mesh_; }

private:
  const Mesh *mesh_;
  std::size_t n_dofs_ = 0;
  std::vector<std::array<int, 9>> cell_nodes_;
  std::vector<int> cell_pressure_;
  std::vector<Point> node_points_;
  std::vector<char> node_solid_;
  std::vector<Constraint> constraints_;
  std::vector<char> constrained_;
};

/// Coupling pattern of the monolithic system (all dofs of a cell couple).
SparseOperator make_sparsity(const DofMap &dofs);

/// Replaces constrained rows by identity rows with the prescribed values and
/// eliminates constrained columns into the right-hand side. Returns the
/// constrained dofs.
std::vector<int> apply_constraints(SparseOperator &a, std::span<double> rhs, const DofMap &dofs,
                                   double inflow_mean);

// ---------------------------------------------------------------------------
// Point evaluation

/// Linear functional U -> value of one field component at a point, as
/// sparse coefficients.
struct EvaluationRow {
  std::vector<int> dofs;
  std::vector<double> weights;

  double apply(std::span<const double> u) const;
};

/// Throws std::out_of_range if x lies outside the mesh (for Pressure:
/// outside the fluid subdomain).
EvaluationRow evaluation_row(const DofMap &dofs, Field field, int component, const Point &x);
/// FE value at x; Pressure returns the scalar in .x.
Vec2 evaluate_at_point(const DofMap &dofs, std::span<const double> u, Field field,
                       const Point &x);

} // namespace fsiopt
