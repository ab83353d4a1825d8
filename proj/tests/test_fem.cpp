#include "doctest.h"

#include "fsiopt/fem.hpp"

#include <cmath>
#include <random>
#include <set>

using namespace fsiopt;

namespace {

BoundaryConditions channel_bc() {
  return BoundaryConditions::from_names({{"Inflow", {VelocityCondition::Inflow, true}},
                                         {"Outflow", {VelocityCondition::Free, true}},
                                         {"Wall", {VelocityCondition::Zero, true}},
                                         {"Cylinder", {VelocityCondition::Zero, true}}});
}

} // namespace

TEST_CASE("gauss rules") {
  for (int n = 1; n <= 5; ++n) {
    const auto line = gauss_line(n);
    double s = 0.0;
    for (double w : line.weights) {
      CHECK(w > 0.0);
      s += w;
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
  }
  // 3x3 integrates x^a y^b exactly for a, b <= 5
  const auto sq = gauss_square(3);
  for (int a = 0; a <= 5; ++a)
    for (int b = 0; b <= 5 - a; ++b) {
      double s = 0.0;
      for (std::size_t q = 0; q < sq.size(); ++q)
        s += sq.weights[q] * std::pow(sq.points[q].x, a) * std::pow(sq.points[q].y, b);
      CHECK(std::abs(s - 1.0 / ((a + 1) * (b + 1))) < 1e-12);
    }
  CHECK_THROWS(gauss_line(9));
}

TEST_CASE("Q2 basis") {
  const auto rule = gauss_square(3);
  for (const auto &xi : rule.points) {
    double s = 0.0;
    Vec2 g;
    for (int a = 0; a < 9; ++a) {
      s += q2::value(a, xi);
      g += q2::gradient(a, xi);
    }
    CHECK(std::abs(s - 1.0) < 1e-14);
    CHECK(norm(g) < 1e-13);
  }
  for (int a = 0; a < 9; ++a)
    for (int b = 0; b < 9; ++b)
      CHECK(q2::value(a, q2::nodes[b]) == doctest::Approx(a == b ? 1.0 : 0.0));
  // gradient against central differences
  const Point xi{0.3, 0.7};
  const double h = 1e-6;
  for (int a = 0; a < 9; ++a) {
    const Vec2 g = q2::gradient(a, xi);
    const double gx = (q2::value(a, {xi.x + h, xi.y}) - q2::value(a, {xi.x - h, xi.y})) / (2 * h);
    const double gy = (q2::value(a, {xi.x, xi.y + h}) - q2::value(a, {xi.x, xi.y - h})) / (2 * h);
    CHECK(g.x == doctest::Approx(gx).epsilon(1e-8));
    CHECK(g.y == doctest::Approx(gy).epsilon(1e-8));
  }
}

TEST_CASE("cell map inverse") {
  const CellMap cell({Point{0, 0}, Point{2, 0.2}, Point{2.2, 1.5}, Point{-0.1, 1}});
  for (const Point xi : {Point{0.1, 0.2}, Point{0.9, 0.5}, Point{1, 1}, Point{0, 0}}) {
    const auto back = cell.inverse(cell.map(xi));
    REQUIRE(back.has_value());
    CHECK(norm(*back - xi) < 1e-12);
  }
  CHECK_FALSE(cell.inverse({5, 5}).has_value());
}

TEST_CASE("dof map counts and constraints") {
  const Mesh mesh = build_fsi_benchmark_mesh(0);
  const DofMap dofs(mesh, channel_bc());
  CHECK(dofs.n_pressure_dofs() == 3 * mesh.count(Subdomain::Fluid));
  for (std::size_t c = 0; c < mesh.n_cells(); ++c)
    CHECK((dofs.cell_pressure_dof(c) >= 0) == (mesh.cell_subdomain[c] == Subdomain::Fluid));

  std::set<int> seen;
  for (const auto &c : dofs.constraints())
    CHECK(seen.insert(c.dof).second);

  // outflow vertex: displacement fixed, velocity free
  int outflow_vertex = -1;
  for (std::size_t v = 0; v < mesh.n_vertices(); ++v)
    if (std::abs(mesh.vertices[v].x - 2.5) < 1e-12 && mesh.vertices[v].y > 0.05 &&
        mesh.vertices[v].y < 0.36)
      outflow_vertex = static_cast<int>(v);
  REQUIRE(outflow_vertex >= 0);
  CHECK(dofs.is_constrained(dofs.node_dof(outflow_vertex, Field::Displacement, 0)));
  CHECK(dofs.is_constrained(dofs.node_dof(outflow_vertex, Field::Displacement, 1)));
  CHECK_FALSE(dofs.is_constrained(dofs.node_dof(outflow_vertex, Field::Velocity, 0)));
  CHECK_FALSE(dofs.is_constrained(dofs.node_dof(outflow_vertex, Field::Velocity, 1)));
  CHECK_FALSE(dofs.is_constrained(dofs.node_dof(outflow_vertex, Field::Auxiliary, 0)));

  // interface node shared by a fluid and a solid cell
  std::map<int, std::set<Subdomain>> owners;
  for (std::size_t c = 0; c < mesh.n_cells(); ++c)
    for (int n : dofs.cell_nodes(c))
      owners[n].insert(mesh.cell_subdomain[c]);
  int shared = 0;
  for (const auto &[n, s] : owners)
    if (s.size() == 2) {
      ++shared;
      CHECK(dofs.node_in_solid(n));
    }
  CHECK(shared > 0);

  const DofMap again(mesh, channel_bc());
  CHECK(again.n_dofs() == dofs.n_dofs());
  for (std::size_t c = 0; c < mesh.n_cells(); ++c)
    CHECK(again.cell_dofs(c) == dofs.cell_dofs(c));
}

TEST_CASE("unknown marker in boundary table") {
  CHECK_THROWS_AS(BoundaryConditions::from_names({{"Outlet", {}}}), std::invalid_argument);
}

TEST_CASE("inflow profile peak") {
  const InflowProfile p{1.5, 0.0, 0.41};
  CHECK(p.shape({0.0, 0.205}) * 0.2 == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(p.shape({0.0, 0.0}) == 0.0);
  CHECK(p.shape({0.0, 0.5}) == 0.0);
}

TEST_CASE("point evaluation") {
  const Mesh mesh = build_beam_mesh(4, 2, 1.0, 0.2, 0);
  const DofMap dofs(mesh, BoundaryConditions{});
  std::vector<double> u(dofs.n_dofs(), 0.0);
  for (std::size_t n = 0; n < dofs.n_nodes(); ++n) {
    const Point x = dofs.node_point(static_cast<int>(n));
    u[dofs.node_dof(static_cast<int>(n), Field::Velocity, 0)] = 3.0;
    u[dofs.node_dof(static_cast<int>(n), Field::Displacement, 0)] = x.x * x.x;
    u[dofs.node_dof(static_cast<int>(n), Field::Displacement, 1)] = x.x * x.y - x.y * x.y;
  }
  for (const Point x : {Point{0.33, 0.07}, Point{1.0, 0.2}, Point{0.0, 0.0}, Point{0.71, 0.19}}) {
    CHECK(evaluate_at_point(dofs, u, Field::Velocity, x).x == doctest::Approx(3.0));
    const Vec2 d = evaluate_at_point(dofs, u, Field::Displacement, x);
    CHECK(std::abs(d.x - x.x * x.x) < 1e-12);
    CHECK(std::abs(d.y - (x.x * x.y - x.y * x.y)) < 1e-12);
  }
  CHECK_THROWS_AS(evaluation_row(dofs, Field::Displacement, 0, {1.5, 0.1}), std::out_of_range);

  std::mt19937 rng(7);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const auto row = evaluation_row(dofs, Field::Displacement, 1, {0.6, 0.13});
  for (int trial = 0; trial < 10; ++trial) {
    for (auto &x : u)
      x = dist(rng);
    CHECK(row.apply(u) == doctest::Approx(evaluate_at_point(dofs, u, Field::Displacement, {0.6, 0.13}).y));
  }
}

TEST_CASE("constraint application") {
  const Mesh mesh = build_fsi_benchmark_mesh(0);
  const DofMap dofs(mesh, channel_bc());
  const std::size_t n = dofs.n_dofs();
  std::vector<SparseOperator::Triplet> t;
  for (std::size_t i = 0; i < n; ++i) {
    t.push_back({static_cast<int>(i), static_cast<int>(i), 4.0});
    if (i + 1 < n) {
      t.push_back({static_cast<int>(i), static_cast<int>(i + 1), -1.0});
      t.push_back({static_cast<int>(i + 1), static_cast<int>(i), -1.5});
    }
  }
  SparseOperator a = SparseOperator::from_triplets(n, t);
  std::vector<double> rhs(n, 1.0);
  const auto fixed = apply_constraints(a, rhs, dofs, 0.2);
  CHECK(fixed.size() == dofs.constraints().size());
  const auto x = LUFactorization(a).solve(rhs);
  std::vector<double> g(n, 0.0);
  dofs.apply_constraints(g, 0.2);
  double max_inflow = 0.0;
  for (const auto &c : dofs.constraints()) {
    CHECK(x[c.dof] == g[c.dof]);
    max_inflow = std::max(max_inflow, x[c.dof]);
  }
  CHECK(max_inflow > 0.25);
  CHECK(max_inflow <= 0.3 + 1e-15);

  SparseOperator b = SparseOperator::from_triplets(n, t);
  std::vector<double> zero_rhs(n, 0.0);
  apply_constraints(b, zero_rhs, dofs, 0.0);
  for (const auto &c : dofs.constraints())
    CHECK(zero_rhs[c.dof] == 0.0);
}
