#include "fsiopt/forms.hpp"

#include <stdexcept>

namespace fsiopt {

Lame MaterialParams::lame(double shear) const {
  if (control_mode == ControlMode::PoissonLocked)
    return {shear, 2.0 * shear * nu_s / (1.0 - 2.0 * nu_s)};
  return {shear, lambda};
}

double MaterialParams::dlambda_dmu() const {
  return control_mode == ControlMode::PoissonLocked ? 2.0 * nu_s / (1.0 - 2.0 * nu_s) : 0.0;
}

void MaterialParams::check() const {
  if (!(rho_f > 0 && nu_f > 0 && rho_s > 0))
    throw std::invalid_argument("densities and viscosity must be positive");
  if (!(nu_s < 0.5) || !(nu_s > -1.0))
    throw std::invalid_argument("Poisson ratio must lie in (-1, 0.5)");
  if (!(alpha_mesh > 0))
    throw std::invalid_argument("mesh-motion parameter must be positive");
}

Kinematics kinematics(const Mat2 &grad_u) {
  Kinematics k;
  k.F = Mat2::identity() + grad_u;
  k.J = det(k.F);
  k.degenerate = !(k.J > 0.0);
  if (!k.degenerate) {
    k.F_inv = inverse(k.F);
    k.F_inv_T = transpose(k.F_inv);
  }
  return k;
}

FluidStress fluid_stress_split(const Mat2 &grad_v, double p, const Kinematics &kin,
                               const MaterialParams &params) {
  const double eta = params.rho_f * params.nu_f;
  return {eta * (grad_v * kin.F_inv + kin.F_inv_T * transpose(grad_v)), -p * Mat2::identity()};
}

Mat2 solid_pk2(const Mat2 &grad_u, const Lame &lame) {
  const Mat2 F = Mat2::identity() + grad_u;
  const Mat2 E = 0.5 * (transpose(F) * F - Mat2::identity());
  return 2.0 * lame.mu * E + lame.lambda * trace(E) * Mat2::identity();
}

Mat2 solid_pk1(const Mat2 &grad_u, const Lame &lame) {
  return (Mat2::identity() + grad_u) * solid_pk2(grad_u, lame);
}

Fluxes &Fluxes::add(double s, const Fluxes &o) {
  f_v += s * o.f_v;
  f_u += s * o.f_u;
  f_w += s * o.f_w;
  G_v += s * o.G_v;
  G_u += s * o.G_u;
  G_w += s * o.G_w;
  f_p += s * o.f_p;
  return *this;
}

namespace {

/// Derivatives of J and F^-1 along d(grad u).
struct KinematicsVariation {
  double dJ;
  Mat2 dF_inv;
  Mat2 dF_inv_T;
};

KinematicsVariation vary(const Kinematics &k, const Mat2 &d_grad_u) {
  KinematicsVariation d;
  d.dJ = k.J * trace(k.F_inv * d_grad_u);
  d.dF_inv = -1.0 * (k.F_inv * d_grad_u * k.F_inv);
  d.dF_inv_T = transpose(d.dF_inv);
  return d;
}

Fluxes time_fluid(const PointState &s, const PointState &o, const PointMaterial &m) {
  const auto &P = *m.params;
  const Kinematics k = kinematics(s.grad_u);
  const double J_old = det(Mat2::identity() + o.grad_u);
  const double J_avg = m.jacobian_average * k.J + (1.0 - m.jacobian_average) * J_old;
  Fluxes f;
  const Vec2 mesh_shift = k.J * (k.F_inv * (s.u - o.u));
  f.f_v = P.rho_f * (J_avg * (s.v - o.v) - s.grad_v * mesh_shift);
  return f;
}

Fluxes time_solid(const PointState &s, const PointState &o, const PointMaterial &m) {
  const double rho = m.params->rho_s;
  Fluxes f;
  f.f_v = rho * (s.v - o.v);
  f.f_u = rho * (s.u - o.u);
  return f;
}

Fluxes implicit_terms(const PointState &s, const PointMaterial &m) {
  const double alpha = m.params->alpha_mesh;
  Fluxes f;
  f.f_w = alpha * s.w;
  f.G_w = -alpha * s.grad_u;
  if (m.subdomain == Subdomain::Fluid) {
    const Kinematics k = kinematics(s.grad_u);
    f.G_u = alpha * s.grad_w;
    f.f_p = k.J * trace(k.F_inv * s.grad_v);
  }
  return f;
}

Fluxes pressure_terms(const PointState &s, const PointMaterial &m) {
  Fluxes f;
  if (m.subdomain == Subdomain::Fluid) {
    const Kinematics k = kinematics(s.grad_u);
    f.G_v = (-s.p * k.J) * k.F_inv_T;
  }
  return f;
}

Fluxes explicit_terms(const PointState &s, const PointMaterial &m) {
  const auto &P = *m.params;
  Fluxes f;
  if (m.subdomain == Subdomain::Fluid) {
    const Kinematics k = kinematics(s.grad_u);
    f.f_v = (P.rho_f * k.J) * (s.grad_v * (k.F_inv * s.v));
    const FluidStress sigma = fluid_stress_split(s.grad_v, s.p, k, P);
    f.G_v = k.J * (sigma.velocity * k.F_inv_T);
  } else {
    f.G_v = solid_pk1(s.grad_u, m.lame);
    f.f_u = -P.rho_s * s.v;
  }
  return f;
}

} // namespace

Fluxes group_flux(Group g, const PointState &u, const PointState &u_old, const PointMaterial &m) {
  switch (g) {
  case Group::T:
    return m.subdomain == Subdomain::Fluid ? time_fluid(u, u_old, m) : time_solid(u, u_old, m);
  case Group::I:
    return implicit_terms(u, m);
  case Group::P:
    return pressure_terms(u, m);
  case Group::E:
    return explicit_terms(u, m);
  }
  return {};
}

Fluxes group_flux_derivative(Group g, const PointState &s, const PointState &o,
                             const PointState &d, const PointMaterial &m) {
  const auto &P = *m.params;
  const bool fluid = m.subdomain == Subdomain::Fluid;
  Fluxes f;
  switch (g) {
  case Group::T: {
    if (!fluid) {
      f.f_v = P.rho_s * d.v;
      f.f_u = P.rho_s * d.u;
      break;
    }
    const Kinematics k = kinematics(s.grad_u);
    const KinematicsVariation dk = vary(k, d.grad_u);
    const double J_old = det(Mat2::identity() + o.grad_u);
    const double J_avg = m.jacobian_average * k.J + (1.0 - m.jacobian_average) * J_old;
    const Vec2 shift = s.u - o.u;
    const Vec2 mesh_shift = k.J * (k.F_inv * shift);
    const Vec2 d_mesh_shift =
        dk.dJ * (k.F_inv * shift) + k.J * (dk.dF_inv * shift) + k.J * (k.F_inv * d.u);
    f.f_v = P.rho_f * ((m.jacobian_average * dk.dJ) * (s.v - o.v) + J_avg * d.v -
                       d.grad_v * mesh_shift - s.grad_v * d_mesh_shift);
    break;
  }
  case Group::I: {
    const double alpha = P.alpha_mesh;
    f.f_w = alpha * d.w;
    f.G_w = -alpha * d.grad_u;
    if (fluid) {
      const Kinematics k = kinematics(s.grad_u);
      const KinematicsVariation dk = vary(k, d.grad_u);
      f.G_u = alpha * d.grad_w;
      f.f_p = dk.dJ * trace(k.F_inv * s.grad_v) + k.J * trace(dk.dF_inv * s.grad_v) +
              k.J * trace(k.F_inv * d.grad_v);
    }
    break;
  }
  case Group::P: {
    if (!fluid)
      break;
    const Kinematics k = kinematics(s.grad_u);
    const KinematicsVariation dk = vary(k, d.grad_u);
    f.G_v = -1.0 * ((d.p * k.J + s.p * dk.dJ) * k.F_inv_T + (s.p * k.J) * dk.dF_inv_T);
    break;
  }
  case Group::E: {
    if (!fluid) {
      const Mat2 F = Mat2::identity() + s.grad_u;
      const Mat2 E = 0.5 * (transpose(F) * F - Mat2::identity());
      const Mat2 S = 2.0 * m.lame.mu * E + m.lame.lambda * trace(E) * Mat2::identity();
      const Mat2 dE = 0.5 * (transpose(d.grad_u) * F + transpose(F) * d.grad_u);
      const Mat2 dS = 2.0 * m.lame.mu * dE + m.lame.lambda * trace(dE) * Mat2::identity();
      f.G_v = d.grad_u * S + F * dS;
      f.f_u = -P.rho_s * d.v;
      break;
    }
    const Kinematics k = kinematics(s.grad_u);
    const KinematicsVariation dk = vary(k, d.grad_u);
    const Vec2 a = k.F_inv * s.v;
    const Vec2 da = dk.dF_inv * s.v + k.F_inv * d.v;
    f.f_v = P.rho_f * (dk.dJ * (s.grad_v * a) + k.J * (d.grad_v * a) + k.J * (s.grad_v * da));
    const double eta = P.rho_f * P.nu_f;
    const Mat2 sigma = eta * (s.grad_v * k.F_inv + k.F_inv_T * transpose(s.grad_v));
    const Mat2 d_sigma = eta * (d.grad_v * k.F_inv + s.grad_v * dk.dF_inv +
                                dk.dF_inv_T * transpose(s.grad_v) +
                                k.F_inv_T * transpose(d.grad_v));
    f.G_v = dk.dJ * (sigma * k.F_inv_T) + k.J * (d_sigma * k.F_inv_T) +
            k.J * (sigma * dk.dF_inv_T);
    break;
  }
  }
  return f;
}

Fluxes time_flux_derivative_old(const PointState &s, const PointState &o,
                                const PointState &d, const PointMaterial &m) {
  const auto &P = *m.params;
  Fluxes f;
  if (m.subdomain == Subdomain::Solid) {
    f.f_v = -P.rho_s * d.v;
    f.f_u = -P.rho_s * d.u;
    return f;
  }
  const Kinematics k = kinematics(s.grad_u);
  const Kinematics k_old = kinematics(o.grad_u);
  const double dJ_old = k_old.J * trace(k_old.F_inv * d.grad_u);
  const double J_avg = m.jacobian_average * k.J + (1.0 - m.jacobian_average) * k_old.J;
  f.f_v = P.rho_f * (((1.0 - m.jacobian_average) * dJ_old) * (s.v - o.v) - J_avg * d.v +
                     s.grad_v * (k.J * (k.F_inv * d.u)));
  return f;
}

Vec2 outflow_flux(const PointState &s, const Vec2 &normal, const MaterialParams &params) {
  const Kinematics k = kinematics(s.grad_u);
  const Mat2 M = k.F_inv_T * transpose(s.grad_v) * k.F_inv_T;
  return (params.rho_f * params.nu_f * k.J) * (M * normal);
}

Vec2 outflow_flux_derivative(const PointState &s, const PointState &d, const Vec2 &normal,
                             const MaterialParams &params) {
  const Kinematics k = kinematics(s.grad_u);
  const KinematicsVariation dk = vary(k, d.grad_u);
  const Mat2 gT = transpose(s.grad_v);
  const Mat2 M = k.F_inv_T * gT * k.F_inv_T;
  const Mat2 dM = dk.dF_inv_T * gT * k.F_inv_T + k.F_inv_T * transpose(d.grad_v) * k.F_inv_T +
                  k.F_inv_T * gT * dk.dF_inv_T;
  const double eta = params.rho_f * params.nu_f;
  return eta * ((dk.dJ * M + k.J * dM) * normal);
}

Mat2 solid_stress_control_derivative(const Mat2 &grad_u, const MaterialParams &params) {
  const Mat2 F = Mat2::identity() + grad_u;
  const Mat2 E = 0.5 * (transpose(F) * F - Mat2::identity());
  return F * (2.0 * E + params.dlambda_dmu() * trace(E) * Mat2::identity());
}

double traction_component(const PointState &s, const Vec2 &normal, int dir,
                          const MaterialParams &params) {
  const Kinematics k = kinematics(s.grad_u);
  const FluidStress sigma = fluid_stress_split(s.grad_v, s.p, k, params);
  const Vec2 t = k.J * ((sigma.velocity + sigma.pressure) * (k.F_inv_T * normal));
  return t[dir];
}

double traction_component_derivative(const PointState &s, const PointState &d,
                                      const Vec2 &normal, int dir, const MaterialParams &params) {
  const Kinematics k = kinematics(s.grad_u);
  const KinematicsVariation dk = vary(k, d.grad_u);
  const double eta = params.rho_f * params.nu_f;
  const Mat2 sigma = eta * (s.grad_v * k.F_inv + k.F_inv_T * transpose(s.grad_v)) -
                     s.p * Mat2::identity();
  const Mat2 d_sigma = eta * (d.grad_v * k.F_inv + s.grad_v * dk.dF_inv +
                              dk.dF_inv_T * transpose(s.grad_v) +
                              k.F_inv_T * transpose(d.grad_v)) -
                       d.p * Mat2::identity();
  const Vec2 t = dk.dJ * (sigma * (k.F_inv_T * normal)) +
                 k.J * (d_sigma * (k.F_inv_T * normal)) +
                 k.J * (sigma * (dk.dF_inv_T * normal));
  return t[dir];
}

} // namespace fsiopt
