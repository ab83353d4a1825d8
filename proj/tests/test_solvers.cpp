#include "doctest.h"

#include "fsiopt/errors.hpp"
#include "fsiopt/functionals.hpp"
#include "fsiopt/newton.hpp"
#include "fsiopt/timestepper.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace fsiopt;

namespace {

BoundaryConditions fsi_bc() {
  return BoundaryConditions::from_names({{"Inflow", {VelocityCondition::Inflow, true}},
                                         {"Outflow", {VelocityCondition::Free, true}},
                                         {"Wall", {VelocityCondition::Zero, true}},
                                         {"Cylinder", {VelocityCondition::Zero, true}}});
}

SparseOperator tridiagonal(std::size_t n) {
  std::vector<SparseOperator::Triplet> t;
  for (std::size_t i = 0; i < n; ++i) {
    t.push_back({int(i), int(i), 4.0});
    if (i + 1 < n) {
      t.push_back({int(i), int(i + 1), -1.0});
      t.push_back({int(i + 1), int(i), -2.0});
    }
  }
  return SparseOperator::from_triplets(n, t);
}

SparseOperator scalar(double a) {
  const std::vector<SparseOperator::Triplet> t{{0, 0, a}};
  return SparseOperator::from_triplets(1, t);
}

} // namespace

TEST_CASE("Newton on a linear system converges in one step") {
  const auto a = tridiagonal(20);
  std::vector<double> b(20);
  for (std::size_t i = 0; i < b.size(); ++i)
    b[i] = std::sin(double(i));
  NonlinearSystem sys;
  sys.residual = [&](std::span<const double> x) {
    std::vector<double> r(x.size());
    a.multiply(x, r);
    for (std::size_t i = 0; i < r.size(); ++i)
      r[i] -= b[i];
    return r;
  };
  sys.jacobian = [&](std::span<const double>) { return a; };
  std::vector<double> x(20, 0.0);
  const auto rep = newton_solve(sys, x, {});
  CHECK(rep.converged);
  CHECK(rep.iterations() == 1);
  CHECK(rep.history[0].lambda == 1.0);
  CHECK(rep.factorizations == 1);

  // already converged
  const auto again = newton_solve(sys, x, {});
  CHECK(again.iterations() == 0);
  CHECK(again.converged);
}

TEST_CASE("Newton on a scalar cubic") {
  // r(x) = x^3 - 8, root 2
  NonlinearSystem sys;
  sys.residual = [](std::span<const double> x) { return std::vector<double>{x[0] * x[0] * x[0] - 8.0}; };
  sys.jacobian = [](std::span<const double> x) {
    return scalar(3 * x[0] * x[0]);
  };
  for (bool rebuild : {true, false}) {
    NewtonSettings s;
    s.always_rebuild = rebuild;
    std::vector<double> x{5.0};
    const auto rep = newton_solve(sys, x, s);
    CHECK(rep.converged);
    CHECK(x[0] == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(rep.monotone());
    CHECK(rep.final_residual <= 1e-8 * rep.initial_residual);
  }
}

TEST_CASE("Newton damping and failure") {
  // r(x) = atan(x): the full step overshoots from x = 1.5
  NonlinearSystem sys;
  sys.residual = [](std::span<const double> x) { return std::vector<double>{std::atan(x[0])}; };
  sys.jacobian = [](std::span<const double> x) {
    return scalar(1.0 / (1.0 + x[0] * x[0]));
  };
  std::vector<double> x{1.5};
  const auto rep = newton_solve(sys, x, {});
  CHECK(rep.converged);
  CHECK(rep.history[0].lambda < 1.0);
  CHECK(std::abs(x[0]) < 1e-8);

  // a wrong-sign Jacobian never decreases the residual
  NonlinearSystem bad = sys;
  bad.jacobian = [](std::span<const double>) { return scalar(-1.0); };
  x = {0.5};
  try {
    newton_solve(bad, x, {});
    FAIL("no exception");
  } catch (const NewtonError &e) {
    CHECK(e.kind() == NewtonError::Kind::LineSearchFailure);
  }

  NewtonSettings few;
  few.max_iterations = 1;
  x = {1.5};
  try {
    newton_solve(sys, x, few);
    FAIL("no exception");
  } catch (const NewtonError &e) {
    CHECK(e.kind() == NewtonError::Kind::NonConvergence);
  }
}

TEST_CASE("entangled trial counts as rejection") {
  // residual x - 1 with a Jacobian of 1/4 proposes x = 4; states above 2
  // are "entangled", so the first accepted step is damped
  NonlinearSystem sys;
  sys.residual = [](std::span<const double> x) {
    if (x[0] > 2.0)
      throw MeshEntanglementError(0, -1.0);
    return std::vector<double>{x[0] - 1.0};
  };
  sys.jacobian = [](std::span<const double>) { return scalar(0.25); };
  std::vector<double> x{0.0};
  NewtonSettings s;
  const auto rep = newton_solve(sys, x, s);
  CHECK(rep.converged);
  CHECK(rep.history[0].lambda < 0.5);
}

TEST_CASE("theta scheme") {
  ThetaScheme be{ThetaVariant::BackwardEuler, 0.1, 10};
  CHECK(be.theta() == 1.0);
  CHECK(be.end_time() == doctest::Approx(1.0));
  ThetaScheme cn{ThetaVariant::ShiftedCrankNicolson, 1e-3, 5};
  CHECK(cn.theta() == doctest::Approx(0.501));
  CHECK_NOTHROW(cn.check());
  cn.k = 0.6;
  CHECK_THROWS_AS(cn.check(), std::invalid_argument);
  be.steps = 0;
  CHECK_THROWS_AS(be.check(), std::invalid_argument);
  CHECK(parse_theta_variant("CNs") == ThetaVariant::ShiftedCrankNicolson);
  CHECK(parse_theta_variant(theta_variant_name(ThetaVariant::BackwardEuler)) == ThetaVariant::BackwardEuler);
  CHECK_THROWS_AS(parse_theta_variant("RK4"), std::invalid_argument);
}

TEST_CASE("inflow schedule") {
  const InflowSchedule ramp{2.0, 2.0, {}};
  CHECK(ramp(0.0) == 0.0);
  CHECK(ramp(1.0) == doctest::Approx(1.0));
  CHECK(ramp(0.5) == doctest::Approx(1.0 - std::cos(std::numbers::pi / 4)));
  CHECK(ramp(3.0) == 2.0);
  const InflowSchedule flat{0.2, 0.0, {}};
  CHECK(flat(0.0) == 0.2);
  const InflowSchedule table{0.0, 0.0, {{0.0, 1.0}, {1.0, 3.0}, {2.0, 0.0}}};
  CHECK(table(-1.0) == 1.0);
  CHECK(table(0.25) == doctest::Approx(1.5));
  CHECK(table(1.5) == doctest::Approx(1.5));
  CHECK(table(5.0) == 0.0);
}

TEST_CASE("trajectory storage") {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> d(-1, 1);
  std::vector<std::vector<double>> states(6, std::vector<double>(100));
  for (auto &s : states)
    for (auto &x : s)
      x = d(rng);
  Trajectory tr(2 * 100 * sizeof(double));
  for (std::size_t n = 0; n < states.size(); ++n)
    tr.push_back(0.1 * n, states[n]);
  CHECK(tr.size() == 6);
  CHECK(tr.spilled() == 4);
  for (std::size_t n = 0; n < states.size(); ++n)
    CHECK(tr.state(n) == states[n]);
  CHECK(tr.back() == states.back());
  CHECK(tr.time(3) == doctest::Approx(0.3));
  CHECK_THROWS_AS(tr.state(6), std::out_of_range);

  Trajectory moved = std::move(tr);
  CHECK(moved.state(5) == states[5]);
}

TEST_CASE("forward solve without inflow stays at rest") {
  const Mesh mesh = build_fsi_benchmark_mesh(0);
  const DofMap dofs(mesh, fsi_bc());
  FsiOperator op(dofs, MaterialParams{});
  op.set_control(0.5e6);
  const std::vector<double> u0(dofs.n_dofs(), 0.0);
  const auto fw = run_forward(op, {ThetaVariant::BackwardEuler, 0.5, 3}, InflowSchedule{}, u0);
  REQUIRE(fw.trajectory.size() == 4);
  for (std::size_t n = 0; n < 4; ++n)
    CHECK(norm2(fw.trajectory.state(n)) == 0.0);
  CHECK(fw.min_jacobian() == doctest::Approx(1.0));
}

TEST_CASE("forward solve is deterministic and meets the Newton tolerance") {
  const Mesh mesh = build_fsi_benchmark_mesh(0);
  const DofMap dofs(mesh, fsi_bc());
  FsiOperator op(dofs, MaterialParams{});
  op.set_control(0.5e6);
  const std::vector<double> u0(dofs.n_dofs(), 0.0);
  const ThetaScheme scheme{ThetaVariant::ShiftedCrankNicolson, 0.2, 3};
  int observed = 0;
  ForwardOptions opts;
  opts.observer = [&](int, double, std::span<const double>) { ++observed; };
  const auto a = run_forward(op, scheme, InflowSchedule{0.2, 0.0, {}}, u0, opts);
  const auto b = run_forward(op, scheme, InflowSchedule{0.2, 0.0, {}}, u0);
  CHECK(observed == 4);
  CHECK(a.trajectory.back() == b.trajectory.back());
  for (const auto &s : a.steps) {
    CHECK(s.newton.converged);
    CHECK(s.newton.final_residual <= std::max(1e-8 * s.newton.initial_residual, 1e-12));
    CHECK(s.min_jacobian > 0.0);
  }
  // Dirichlet data are met exactly
  std::vector<double> g(dofs.n_dofs(), 0.0);
  dofs.apply_constraints(g, 0.2);
  const auto end = a.trajectory.back();
  for (const auto &c : dofs.constraints())
    CHECK(end[c.dof] == g[c.dof]);
  // the flow pushes the structure downstream
  CHECK(evaluate_at_point(dofs, end, Field::Displacement, {0.6, 0.2}).x > 0.0);
}

TEST_CASE("forward failure reports the step") {
  const Mesh mesh = build_fsi_benchmark_mesh(0);
  const DofMap dofs(mesh, fsi_bc());
  FsiOperator op(dofs, MaterialParams{});
  op.set_control(0.5e6);
  ForwardOptions opts;
  opts.newton.max_iterations = 0;
  const std::vector<double> u0(dofs.n_dofs(), 0.0);
  try {
    run_forward(op, {ThetaVariant::BackwardEuler, 0.5, 3}, InflowSchedule{0.2, 0.0, {}}, u0, opts);
    FAIL("no exception");
  } catch (const ForwardSolveError &e) {
    CHECK(e.step() == 1);
  }
}

TEST_CASE("cost functionals") {
  const Mesh mesh = build_fsi_benchmark_mesh(0);
  const DofMap dofs(mesh, fsi_bc());
  FsiOperator op(dofs, MaterialParams{});
  op.set_control(0.5e6);

  CostFunctional f;
  f.alpha = 0.1;
  f.q_ref = 5e5;
  // 0.1 / 2 * (2e6 - 5e5)^2
  CHECK(f.regularization(2e6) == doctest::Approx(1.125e11));
  CHECK(f.control_derivative(2e6) == doctest::Approx(1.5e5));
  CostFunctional g;
  g.alpha = 1.0;
  g.q_ref = 5e5;
  const double dq = 5000.0 - 5e5;
  CHECK(g.regularization(5000.0) == doctest::Approx(0.5 * dq * dq).epsilon(1e-15));
  CHECK(g.regularization(5000.0) == doctest::Approx(1.22512e11).epsilon(1e-5));
  CHECK(g.control_derivative(5000.0) == -495000.0);
  CHECK(parse_functional_kind("drag") == FunctionalKind::DragAtEndTime);
  CHECK_THROWS_AS(parse_functional_kind("lift"), std::invalid_argument);

  // tracking of a linear displacement field u_x = x - 2y
  std::vector<double> u(dofs.n_dofs(), 0.0);
  for (std::size_t n = 0; n < dofs.n_nodes(); ++n) {
    const Point x = dofs.node_point(int(n));
    u[dofs.node_dof(int(n), Field::Displacement, 0)] = 1e-3 * (x.x - 2 * x.y);
  }
  f.target = 1e-4;
  const double d = 1e-3 * (0.6 - 0.4) - 1e-4;
  CHECK(f.state_value(op, u) == doctest::Approx(0.5 * d * d).epsilon(1e-10));

  // quiescent fluid: zero drag with or without pressure offset along x
  CostFunctional drag;
  drag.kind = FunctionalKind::DragAtEndTime;
  drag.drag_markers = bit(Marker::Cylinder) | bit(Marker::Interface);
  const std::vector<double> zero(dofs.n_dofs(), 0.0);
  CHECK(drag.state_value(op, zero) == 0.0);
  std::vector<double> p = zero;
  for (std::size_t c = 0; c < mesh.n_cells(); ++c)
    if (dofs.cell_pressure_dof(c) >= 0)
      p[dofs.cell_pressure_dof(c)] = 7.0; // constant pressure on P1dc
  // a constant pressure acting on a closed obstacle has zero net force
  CHECK(std::abs(drag.state_value(op, p)) < 1e-10);

  // derivatives against central differences
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> dist(-1, 1);
  std::vector<double> s(dofs.n_dofs()), dir(dofs.n_dofs());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const bool disp = dofs.field_of(int(i)) == Field::Displacement;
    s[i] = (disp ? 1e-3 : 0.2) * dist(rng);
    dir[i] = (disp ? 1e-3 : 0.2) * dist(rng);
  }
  for (const CostFunctional &func : {f, drag}) {
    const auto g = func.state_derivative(op, s);
    double an = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
      an += g[i] * dir[i];
    const double h = 1e-4;
    std::vector<double> sp = s, sm = s;
    for (std::size_t i = 0; i < s.size(); ++i) {
      sp[i] += h * dir[i];
      sm[i] -= h * dir[i];
    }
    const double fd = (func.state_value(op, sp) - func.state_value(op, sm)) / (2 * h);
    CHECK(an == doctest::Approx(fd).epsilon(1e-6));
  }
}
