#pragma once

#include "fsiopt/mesh.hpp"
#include "fsiopt/tensor.hpp"

namespace fsiopt {

enum class ControlMode {
  /// lambda = 2 mu nu_s / (1 - 2 nu_s) follows every change of mu.
  PoissonLocked,
  /// lambda stays fixed, only mu is controlled.
  MuOnly,
};

struct Lame {
  double mu = 0.0;
  double lambda = 0.0;
};

/// Fluid and solid material data plus the control parameterization.
struct MaterialParams {
  double rho_f = 1e3;
  double nu_f = 1e-3;
  double rho_s = 1e3;
  /// Reference shear modulus, used outside the control region.
  double mu = 0.5e6;
  double nu_s = 0.4;
  /// First Lame parameter in MuOnly mode.
  double lambda = 2e6;
  /// Mesh-motion scaling; the mesh equations are homogeneous in it.
  double alpha_mesh = 1e-2;
  ControlMode control_mode = ControlMode::PoissonLocked;
  /// Solid cells whose mu is the control: -1 for the whole solid, otherwise
  /// the cell region id.
  int control_region = -1;

  /// Lame pair for a given shear modulus under the control mode.
  Lame lame(double shear) const;
  /// d lambda / d mu under the control mode.
  double dlambda_dmu() const;
  bool controls(int cell_region) const {
    return control_region < 0 || cell_region == control_region;
  }
  /// Throws std::invalid_argument if densities, viscosity or nu_s are out of
  /// range.
  void check() const;
};

/// Deformation of the ALE map at one point: F = I + grad u.
struct Kinematics {
  Mat2 F;
  Mat2 F_inv;
  Mat2 F_inv_T;
  double J = 1.0;
  /// J <= 0: the map is not invertible and F_inv is meaningless.
  bool degenerate = false;
};

Kinematics kinematics(const Mat2 &grad_u);

struct FluidStress {
  /// rho_f nu_f (grad v F^-1 + F^-T grad v^T)
  Mat2 velocity;
  /// -p I
  Mat2 pressure;
};

FluidStress fluid_stress_split(const Mat2 &grad_v, double p, const Kinematics &kin,
                               const MaterialParams &params);

/// St. Venant-Kirchhoff: F Sigma with Sigma = 2 mu E + lambda tr(E) I,
/// E = (F^T F - I) / 2.
Mat2 solid_pk1(const Mat2 &grad_u, const Lame &lame);
/// Second Piola-Kirchhoff stress Sigma.
Mat2 solid_pk2(const Mat2 &grad_u, const Lame &lame);

/// Values and gradients of all fields at one quadrature point.
struct PointState {
  Vec2 v, u, w;
  Mat2 grad_v, grad_u, grad_w;
  double p = 0.0;
};

/// Integrand of a form, split by test function: f_* multiply test values,
/// G_* contract with test gradients, f_p multiplies pressure tests.
struct Fluxes {
  Vec2 f_v, f_u, f_w;
  Mat2 G_v, G_u, G_w;
  double f_p = 0.0;

  Fluxes &add(double s, const Fluxes &o);
};

/// The four groups of the semilinear form.
enum class Group { T, I, P, E };

/// Per-point material context.
struct PointMaterial {
  Subdomain subdomain = Subdomain::Fluid;
  const MaterialParams *params = nullptr;
  Lame lame;
  /// Weight of the current J in the inertia average J^{n,theta}.
  double jacobian_average = 0.5;
};

/// Integrand of group g at U; T additionally depends on the previous state.
/// T is the time-step-scaled form A_{T,k} (no 1/k factor).
Fluxes group_flux(Group g, const PointState &u, const PointState &u_old, const PointMaterial &m);
/// Directional derivative with respect to U in direction du.
Fluxes group_flux_derivative(Group g, const PointState &u, const PointState &u_old,
                             const PointState &du, const PointMaterial &m);
/// Directional derivative of group T with respect to the previous state.
Fluxes time_flux_derivative_old(const PointState &u, const PointState &u_old,
                                const PointState &du_old, const PointMaterial &m);

/// Outflow correction rho_f nu_f J (F^-T grad v^T F^-T) n, part of group E.
Vec2 outflow_flux(const PointState &u, const Vec2 &normal, const MaterialParams &params);
Vec2 outflow_flux_derivative(const PointState &u, const PointState &du, const Vec2 &normal,
                             const MaterialParams &params);

/// Derivative of the solid part of group E with respect to mu:
/// F (2E + dlambda/dmu tr(E) I), contracted with the test gradient.
Mat2 solid_stress_control_derivative(const Mat2 &grad_u, const MaterialParams &params);

/// Transformed traction (J sigma_f F^-T n) . e_dir of the full fluid stress.
double traction_component(const PointState &u, const Vec2 &normal, int dir,
                          const MaterialParams &params);
double traction_component_derivative(const PointState &u, const PointState &du,
                                     const Vec2 &normal, int dir, const MaterialParams &params);

} // namespace fsiopt
