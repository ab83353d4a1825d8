#pragma once

#include "fsiopt/fem.hpp"
#include "fsiopt/forms.hpp"
#include "fsiopt/linalg.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace fsiopt {

/// Weights of the one-step-theta combination for one time step.
struct StepWeights {
  double k = 1.0;
  double theta = 1.0;
  /// Weight of J^n in the inertia average J^{n,theta}.
  double jacobian_average = 0.5;
};

enum class Execution { Serial, Parallel };

struct AssemblyOptions {
  Execution execution = Execution::Parallel;
  int cell_points = 3;
  int facet_points = 3;
  /// Order in which cell contributions are summed; empty means 0..n-1.
  std::vector<std::size_t> cell_order;
};

/// Quadrature data of one cell, precomputed in physical coordinates.
struct CellGeometry {
  struct PointData {
    Point x;
    double JxW = 0.0;
    std::array<double, 9> phi{};
    std::array<Vec2, 9> grad_phi{};
    std::array<double, 3> psi{};
  };
  struct FacetPoint {
    PointData point;
    Vec2 normal; // outward from this cell
    MarkerSet markers = 0;
  };
  std::vector<PointData> points;
  std::vector<FacetPoint> facet_points;
};

/// Assembles residuals, Jacobians and control derivatives of the
/// time-discretized monolithic FSI system on a fixed DofMap.
class FsiOperator {
public:
  FsiOperator(const DofMap &dofs, const MaterialParams &params, AssemblyOptions options = {});

  const DofMap &dofs() const { return *dofs_; }
  const MaterialParams &params() const { return params_; }
  const AssemblyOptions &options() const { return options_; }
  void set_options(AssemblyOptions options);
  const std::vector<CellGeometry> &geometry() const { return geometry_; }

  /// Shear modulus in the control region.
  void set_control(double q) { control_ = q; }
  double control() const { return control_; }
  Lame cell_lame(std::size_t cell) const;

  /// Unweighted group form tested with every basis function. Group E
  /// includes the outflow boundary term. Constrained rows are not touched.
  std::vector<double> group_residual(Group g, std::span<const double> u,
                                     std::span<const double> u_old,
                                     double jacobian_average = 0.5) const;

  /// T(U,U_old) + theta k E(U) + k P(U) + k I(U) + (1-theta) k E(U_old), with
  /// constrained rows set to zero.
  std::vector<double> residual(std::span<const double> u, std::span<const double> u_old,
                               const StepWeights &w) const;

  /// Derivative of the residual with respect to U (constrained rows not
  /// modified; see constrain_homogeneous).
  SparseOperator jacobian(std::span<const double> u, std::span<const double> u_old,
                          const StepWeights &w) const;
  /// Derivative of the residual of the step (U_old -> U) with respect to U_old.
  SparseOperator jacobian_old(std::span<const double> u, std::span<const double> u_old,
                              const StepWeights &w) const;

  /// Vector of d/dq E(U)(psi_i) over the control region.
  std::vector<double> control_derivative_E(std::span<const double> u) const;

  /// Integral of (J sigma_f F^-T n) . e_dir over facets carrying any of the
  /// markers, on the fluid side, with n pointing into the fluid.
  double boundary_traction(std::span<const double> u, MarkerSet markers, int dir) const;
  /// Gradient of boundary_traction with respect to U.
  std::vector<double> boundary_traction_derivative(std::span<const double> u, MarkerSet markers,
                                                   int dir) const;

  /// Smallest det F over all cell quadrature points.
  double min_jacobian(std::span<const double> u) const;
  /// Throws MeshEntanglementError if det F <= 0 somewhere.
  void check_admissible(std::span<const double> u) const;

  const SparseOperator &pattern() const { return pattern_; }

private:
  enum class Mode { Residual, Group, Jacobian, JacobianOld, Control };
  struct Request;
  struct LocalResult {
    std::vector<double> vector;
    std::vector<double> matrix;
  };

  void compute_cell(std::size_t cell, const Request &req, LocalResult &out) const;
  template <class Scatter> void run(const Request &req, Scatter &&scatter) const;
  std::vector<double> assemble_vector(const Request &req) const;
  SparseOperator assemble_matrix(const Request &req) const;

  const DofMap *dofs_;
  MaterialParams params_;
  AssemblyOptions options_;
  double control_;
  std::vector<CellGeometry> geometry_;
  std::vector<std::vector<int>> cell_dofs_;
  SparseOperator pattern_;
};

/// Identity rows and zero columns at all constrained dofs.
void constrain_homogeneous(SparseOperator &a, const DofMap &dofs);

/// Values and gradients of all fields at one quadrature point of a cell.
PointState point_state(const CellGeometry::PointData &pt, std::span<const double> local,
                       bool has_pressure);

} // namespace fsiopt
