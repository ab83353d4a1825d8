#include "doctest.h"

#include "fsiopt/assembly.hpp"
#include "fsiopt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace fsiopt;

namespace {

BoundaryConditions fsi_bc() {
  return BoundaryConditions::from_names({{"Inflow", {VelocityCondition::Inflow, true}},
                                         {"Outflow", {VelocityCondition::Free, true}},
                                         {"Wall", {VelocityCondition::Zero, true}},
                                         {"Cylinder", {VelocityCondition::Zero, true}}});
}

std::vector<double> random_state(const DofMap &dofs, unsigned seed, double vs = 0.3,
                                 double us = 2e-3, double ps = 1.0) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> u(dofs.n_dofs());
  for (std::size_t i = 0; i < u.size(); ++i) {
    switch (dofs.field_of(static_cast<int>(i))) {
    case Field::Velocity:
      u[i] = vs * dist(rng);
      break;
    case Field::Displacement:
      u[i] = us * dist(rng);
      break;
    case Field::Auxiliary:
      u[i] = 10 * us * dist(rng);
      break;
    case Field::Pressure:
      u[i] = ps * dist(rng);
      break;
    }
  }
  dofs.apply_constraints(u, 0.2);
  return u;
}

std::vector<double> combine(const std::vector<double> &u, double h, const std::vector<double> &d) {
  std::vector<double> r = u;
  axpy(h, d, r);
  return r;
}

double rel_diff(const std::vector<double> &a, const std::vector<double> &b) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    d[i] = a[i] - b[i];
  return norm2(d) / std::max(norm2(b), 1e-300);
}

/// Two cells, fluid left, solid right, skewed so the map is not affine.
Mesh two_cell_mesh() {
  Mesh m;
  m.vertices = {{0, 0}, {1, 0}, {2, 0.1}, {-0.1, 1}, {1.1, 1}, {2, 1.2}};
  m.cells = {{0, 1, 4, 3}, {1, 2, 5, 4}};
  m.cell_subdomain = {Subdomain::Fluid, Subdomain::Solid};
  m.cell_region = {0, 0};
  m.facets = {{{0, 1}, bit(Marker::Wall)},  {{1, 2}, bit(Marker::Wall)},
              {{2, 5}, bit(Marker::Wall)},  {{5, 4}, bit(Marker::Wall)},
              {{4, 3}, bit(Marker::Wall)},  {{3, 0}, bit(Marker::Outflow)},
              {{1, 4}, bit(Marker::Interface)}};
  return m;
}

/// Brute-force assembly: every global test function is integrated
/// separately, fields are evaluated from the global vector at each point.
std::vector<double> reference_group(const DofMap &dofs, const MaterialParams &params, Group g,
                                    const std::vector<double> &u, const std::vector<double> &uo) {
  const Mesh &mesh = dofs.mesh();
  const auto rule = gauss_square(3);
  const auto line = gauss_line(3);
  std::vector<double> r(dofs.n_dofs(), 0.0);

  auto state_at = [&](std::size_t c, const Point &xi, const std::vector<double> &U) {
    const CellMap map(mesh, c);
    const Mat2 jit = transpose(inverse(map.jacobian(xi)));
    PointState s;
    const auto &nodes = dofs.cell_nodes(c);
    for (int a = 0; a < 9; ++a) {
      const double phi = q2::value(a, xi);
      const Vec2 gr = jit * q2::gradient(a, xi);
      for (int comp = 0; comp < 2; ++comp) {
        const double vv = U[dofs.node_dof(nodes[a], Field::Velocity, comp)];
        const double uu = U[dofs.node_dof(nodes[a], Field::Displacement, comp)];
        const double ww = U[dofs.node_dof(nodes[a], Field::Auxiliary, comp)];
        s.v[comp] += vv * phi;
        s.u[comp] += uu * phi;
        s.w[comp] += ww * phi;
        for (int j = 0; j < 2; ++j) {
          s.grad_v(comp, j) += vv * gr[j];
          s.grad_u(comp, j) += uu * gr[j];
          s.grad_w(comp, j) += ww * gr[j];
        }
      }
    }
    if (mesh.cell_subdomain[c] == Subdomain::Fluid) {
      const P1dcBasis pb(map);
      for (int j = 0; j < 3; ++j)
        s.p += U[dofs.cell_pressure_dof(c) + j] * pb.value(j, map.map(xi));
    }
    return s;
  };

  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    const CellMap map(mesh, c);
    const bool fluid = mesh.cell_subdomain[c] == Subdomain::Fluid;
    PointMaterial m{mesh.cell_subdomain[c], &params, params.lame(params.mu), 0.5};
    const auto &nodes = dofs.cell_nodes(c);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Point xi = rule.points[q];
      const Mat2 jac = map.jacobian(xi);
      const double dx = rule.weights[q] * det(jac);
      const Mat2 jit = transpose(inverse(jac));
      const Fluxes f = group_flux(g, state_at(c, xi, u), state_at(c, xi, uo), m);
      for (int a = 0; a < 9; ++a) {
        const double phi = q2::value(a, xi);
        const Vec2 gr = jit * q2::gradient(a, xi);
        for (int comp = 0; comp < 2; ++comp) {
          const Vec2 e_row_v{f.G_v(comp, 0), f.G_v(comp, 1)};
          const Vec2 e_row_u{f.G_u(comp, 0), f.G_u(comp, 1)};
          const Vec2 e_row_w{f.G_w(comp, 0), f.G_w(comp, 1)};
          r[dofs.node_dof(nodes[a], Field::Velocity, comp)] +=
              dx * (f.f_v[comp] * phi + dot(e_row_v, gr));
          double ru = f.f_u[comp] * phi;
          if (!dofs.node_in_solid(nodes[a]))
            ru += dot(e_row_u, gr);
          r[dofs.node_dof(nodes[a], Field::Displacement, comp)] += dx * ru;
          r[dofs.node_dof(nodes[a], Field::Auxiliary, comp)] +=
              dx * (f.f_w[comp] * phi + dot(e_row_w, gr));
        }
      }
      if (fluid) {
        const P1dcBasis pb(map);
        for (int j = 0; j < 3; ++j)
          r[dofs.cell_pressure_dof(c) + j] += dx * f.f_p * pb.value(j, map.map(xi));
      }
    }
    if (g != Group::E || !fluid)
      continue;
    // outflow facets: cell edge k joins vertices k, k+1
    for (int k = 0; k < 4; ++k) {
      const int va = mesh.cells[c][k], vb = mesh.cells[c][(k + 1) % 4];
      if (!has(mesh.facet_markers(va, vb), Marker::Outflow))
        continue;
      const Vec2 t = mesh.vertices[vb] - mesh.vertices[va];
      const Vec2 n{t.y / norm(t), -t.x / norm(t)};
      for (std::size_t q = 0; q < line.size(); ++q) {
        const double s = line.points[q].x;
        const Point corners[4] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
        const Point xi = (1 - s) * corners[k] + s * corners[(k + 1) % 4];
        const Vec2 flux = outflow_flux(state_at(c, xi, u), n, params);
        for (int a = 0; a < 9; ++a)
          for (int comp = 0; comp < 2; ++comp)
            r[dofs.node_dof(nodes[a], Field::Velocity, comp)] +=
                line.weights[q] * norm(t) * flux[comp] * q2::value(a, xi);
      }
    }
  }
  return r;
}

struct Fixture {
  Mesh mesh = build_fsi_benchmark_mesh(0);
  DofMap dofs{mesh, fsi_bc()};
  MaterialParams params;
  FsiOperator op{dofs, params};
};

} // namespace

TEST_CASE("zero states give zero residuals") {
  Fixture f;
  const std::vector<double> z(f.dofs.n_dofs(), 0.0);
  for (Group g : {Group::T, Group::I, Group::P, Group::E})
    CHECK(norm2(f.op.group_residual(g, z, z)) == 0.0);
  CHECK(norm2(f.op.residual(z, z, {1.0, 1.0})) == 0.0);
}

TEST_CASE("solid at rest has no solid T or E contributions") {
  Fixture f;
  std::vector<double> u = random_state(f.dofs, 3);
  // zero velocity and displacement everywhere, random pressure and w
  for (std::size_t i = 0; i < u.size(); ++i) {
    const Field fld = f.dofs.field_of(static_cast<int>(i));
    if (fld == Field::Velocity || fld == Field::Displacement)
      u[i] = 0.0;
  }
  const auto e = f.op.group_residual(Group::E, u, u);
  const auto t = f.op.group_residual(Group::T, u, u);
  for (std::size_t c = 0; c < f.mesh.n_cells(); ++c) {
    if (f.mesh.cell_subdomain[c] != Subdomain::Solid)
      continue;
    for (int n : f.dofs.cell_nodes(c))
      for (int comp = 0; comp < 2; ++comp) {
        CHECK(e[f.dofs.node_dof(n, Field::Displacement, comp)] == 0.0);
        CHECK(t[f.dofs.node_dof(n, Field::Displacement, comp)] == 0.0);
      }
  }
}

TEST_CASE("group residuals against brute-force reference on two cells") {
  const Mesh mesh = two_cell_mesh();
  REQUIRE(validate(mesh).empty());
  const DofMap dofs(mesh, BoundaryConditions{});
  MaterialParams params;
  params.rho_f = 1.3;
  params.nu_f = 0.2;
  params.mu = 3.0;
  const FsiOperator op(dofs, params);
  const auto u = random_state(dofs, 5, 1.0, 0.03, 1.0);
  const auto uo = random_state(dofs, 6, 1.0, 0.03, 1.0);
  for (Group g : {Group::T, Group::I, Group::P, Group::E}) {
    const auto a = op.group_residual(g, u, uo);
    const auto b = reference_group(dofs, params, g, u, uo);
    CHECK(rel_diff(a, b) < 1e-12);
  }
}

TEST_CASE("residual equals the weighted group sum and is affine in theta") {
  Fixture f;
  const auto u = random_state(f.dofs, 1);
  const auto uo = random_state(f.dofs, 2);
  const double k = 0.05;
  for (double theta : {0.0, 0.55, 1.0}) {
    const auto r = f.op.residual(u, uo, {k, theta, 0.5});
    auto s = f.op.group_residual(Group::T, u, uo);
    axpy(theta * k, f.op.group_residual(Group::E, u, uo), s);
    axpy(k, f.op.group_residual(Group::P, u, uo), s);
    axpy(k, f.op.group_residual(Group::I, u, uo), s);
    axpy((1 - theta) * k, f.op.group_residual(Group::E, uo, uo), s);
    f.dofs.zero_constrained(s);
    CHECK(rel_diff(r, s) < 1e-14);
  }
  const auto r0 = f.op.residual(u, uo, {k, 0.0, 0.5});
  const auto r1 = f.op.residual(u, uo, {k, 1.0, 0.5});
  const auto rt = f.op.residual(u, uo, {k, 0.3, 0.5});
  std::vector<double> lin = r0;
  for (std::size_t i = 0; i < lin.size(); ++i)
    lin[i] += 0.3 * (r1[i] - r0[i]);
  CHECK(rel_diff(rt, lin) < 1e-13);
}

TEST_CASE("jacobians match central finite differences") {
  Fixture f;
  const StepWeights w{0.5, 0.6, 0.5};
  for (unsigned s = 0; s < 5; ++s) {
    const auto u = random_state(f.dofs, 100 + s);
    const auto uo = random_state(f.dofs, 200 + s);
    REQUIRE(f.op.min_jacobian(u) > 0.1);
    const auto J = f.op.jacobian(u, uo, w);
    const auto Jo = f.op.jacobian_old(u, uo, w);
    for (unsigned dir = 0; dir < 5; ++dir) {
      auto d = random_state(f.dofs, 300 + 10 * s + dir);
      f.dofs.zero_constrained(d);
      const double h = 1e-6 * norm2(u) / norm2(d);
      std::vector<double> jd(d.size()), fd(d.size());
      J.multiply(d, jd);
      f.dofs.zero_constrained(jd);
      const auto rp = f.op.residual(combine(u, h, d), uo, w);
      const auto rm = f.op.residual(combine(u, -h, d), uo, w);
      for (std::size_t i = 0; i < fd.size(); ++i)
        fd[i] = (rp[i] - rm[i]) / (2 * h);
      CHECK(rel_diff(jd, fd) < 1e-5);

      Jo.multiply(d, jd);
      f.dofs.zero_constrained(jd);
      const auto op_ = f.op.residual(u, combine(uo, h, d), w);
      const auto om = f.op.residual(u, combine(uo, -h, d), w);
      for (std::size_t i = 0; i < fd.size(); ++i)
        fd[i] = (op_[i] - om[i]) / (2 * h);
      CHECK(rel_diff(jd, fd) < 1e-5);
    }
  }
}

TEST_CASE("Stokes structure at rest") {
  Fixture f;
  const std::vector<double> z(f.dofs.n_dofs(), 0.0);
  const auto J = f.op.jacobian(z, z, {1.0, 1.0, 0.5});
  const auto offsets = J.row_offsets();
  const auto cols = J.column_indices();
  const auto vals = J.values();
  // the outflow correction is not symmetric; skip nodes on x = 2.5
  auto on_outflow = [&](int dof) {
    return dof < DofMap::dofs_per_node * static_cast<int>(f.dofs.n_nodes()) &&
           f.dofs.node_point(dof / DofMap::dofs_per_node).x > 2.5 - 1e-12;
  };
  int vp = 0;
  for (std::size_t r = 0; r < J.size(); ++r) {
    const Field fr = f.dofs.field_of(static_cast<int>(r));
    if (on_outflow(static_cast<int>(r)))
      continue;
    for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) {
      const int c = cols[k];
      const Field fc = f.dofs.field_of(c);
      if (on_outflow(c))
        continue;
      if (fr == Field::Velocity && fc == Field::Velocity)
        CHECK(std::abs(vals[k] - J(c, static_cast<int>(r))) <= 1e-12 * std::abs(vals[k]) + 1e-15);
      if (fr == Field::Velocity && fc == Field::Pressure) {
        CHECK(std::abs(vals[k] + J(c, static_cast<int>(r))) <= 1e-12 * std::abs(vals[k]) + 1e-15);
        vp += vals[k] != 0.0;
      }
    }
  }
  CHECK(vp > 0);
}

TEST_CASE("divergence-free fields satisfy incompressibility") {
  Fixture f;
  std::vector<double> u(f.dofs.n_dofs(), 0.0);
  for (std::size_t n = 0; n < f.dofs.n_nodes(); ++n) {
    const Point x = f.dofs.node_point(static_cast<int>(n));
    u[f.dofs.node_dof(static_cast<int>(n), Field::Velocity, 0)] = x.y - 0.3 * (x.y - 0.2);
    u[f.dofs.node_dof(static_cast<int>(n), Field::Velocity, 1)] = 0.7 * (x.x - 0.2);
  }
  const auto r = f.op.group_residual(Group::I, u, u);
  for (std::size_t i = 0; i < r.size(); ++i)
    if (f.dofs.field_of(static_cast<int>(i)) == Field::Pressure)
      CHECK(std::abs(r[i]) < 1e-14);
}

TEST_CASE("parallel and serial assembly are bitwise identical and deterministic") {
  Fixture f;
  const auto u = random_state(f.dofs, 8);
  const auto uo = random_state(f.dofs, 9);
  const StepWeights w{0.1, 0.6, 0.5};
  AssemblyOptions serial;
  serial.execution = Execution::Serial;
  const FsiOperator ref(f.dofs, f.params, serial);
  CHECK(f.op.residual(u, uo, w) == ref.residual(u, uo, w));
  CHECK(f.op.residual(u, uo, w) == f.op.residual(u, uo, w));
  const auto a = f.op.jacobian(u, uo, w);
  const auto b = ref.jacobian(u, uo, w);
  CHECK(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
  const auto ao = f.op.jacobian_old(u, uo, w);
  const auto bo = ref.jacobian_old(u, uo, w);
  CHECK(std::equal(ao.values().begin(), ao.values().end(), bo.values().begin()));
}

TEST_CASE("interface residual is independent of cell visitation order") {
  Fixture f;
  const auto u = random_state(f.dofs, 10);
  const auto uo = random_state(f.dofs, 11);
  const StepWeights w{0.1, 1.0, 0.5};
  const auto natural = f.op.residual(u, uo, w);
  AssemblyOptions opts;
  for (Subdomain first : {Subdomain::Solid, Subdomain::Fluid})
    for (std::size_t c = 0; c < f.mesh.n_cells(); ++c)
      if (f.mesh.cell_subdomain[c] == first)
        opts.cell_order.push_back(c);
  std::reverse(opts.cell_order.begin(), opts.cell_order.end());
  const FsiOperator reordered(f.dofs, f.params, opts);
  const auto r = reordered.residual(u, uo, w);
  for (std::size_t i = 0; i < r.size(); ++i)
    CHECK(std::abs(r[i] - natural[i]) <= 1e-13 * (std::abs(natural[i]) + 1e-3));
}

TEST_CASE("control derivative matches finite differences") {
  Fixture f;
  const auto u = random_state(f.dofs, 12, 0.3, 5e-3);
  const auto z = random_state(f.dofs, 13);
  const double q = 4e5, h = 10.0;
  FsiOperator op(f.dofs, f.params);
  const auto b = op.control_derivative_E(u);
  op.set_control(q + h);
  const auto ep = op.group_residual(Group::E, u, u);
  op.set_control(q - h);
  const auto em = op.group_residual(Group::E, u, u);
  double fd = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i)
    fd += z[i] * (ep[i] - em[i]) / (2 * h);
  CHECK(dot(b, z) == doctest::Approx(fd).epsilon(1e-6));

  const std::vector<double> zero(f.dofs.n_dofs(), 0.0);
  CHECK(norm2(op.control_derivative_E(zero)) == 0.0);
}

TEST_CASE("entangled state is reported with its cell") {
  Fixture f;
  std::vector<double> u(f.dofs.n_dofs(), 0.0);
  const auto &nodes = f.dofs.cell_nodes(40);
  const Point c = f.dofs.node_point(nodes[8]);
  for (int a = 0; a < 9; ++a) {
    const Point x = f.dofs.node_point(nodes[a]);
    // reflect the cell through its centre line: det F = -1
    u[f.dofs.node_dof(nodes[a], Field::Displacement, 0)] = -2.0 * (x.x - c.x);
  }
  try {
    f.op.check_admissible(u);
    FAIL("no entanglement reported");
  } catch (const MeshEntanglementError &e) {
    CHECK(e.jacobian() <= 0.0);
  }
  CHECK_THROWS_AS(f.op.residual(u, u, {1.0, 1.0}), MeshEntanglementError);
  CHECK(f.op.min_jacobian(u) <= 0.0);
}
