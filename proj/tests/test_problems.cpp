#include "doctest.h"

#include "fsiopt/errors.hpp"
#include "fsiopt/io.hpp"
#include "fsiopt/problems.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace fsiopt;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string &name) {
  const fs::path dir = fs::temp_directory_path() / "fsiopt-test-problems";
  fs::create_directories(dir);
  return dir / name;
}

} // namespace

TEST_CASE("FSI1 defaults") {
  const auto c = default_config(ProblemKind::FSI1);
  CHECK(c.scheme.theta() == 1.0);
  CHECK(c.scheme.end_time() == doctest::Approx(25.0));
  CHECK(c.material.nu_f == 1e-3);
  CHECK(c.material.rho_f == 1e3);
  CHECK(c.material.rho_s == 1e3);
  CHECK(c.material.lame(0.5e6).lambda == doctest::Approx(2e6));
  // 1.5 * 0.2 at the channel midline
  CHECK(c.inflow_profile.shape({0.0, 0.205}) * c.inflow_mean == doctest::Approx(0.3));
  CHECK(c.auto_target);
  CHECK(c.functional.point.x == 0.6);
  CHECK(c.functional.point.y == 0.2);
}

TEST_CASE("FSI3 and flapping defaults") {
  const auto c3 = default_config(ProblemKind::FSI3);
  CHECK(c3.scheme.theta() == doctest::Approx(0.501));
  CHECK(c3.inflow_mean == 2.0);
  CHECK(c3.q0 == 2e6);
  CHECK(c3.functional.q_ref == 5e5);
  CHECK(c3.functional.alpha == 0.1);

  const auto cf = default_config(ProblemKind::Flapping);
  CHECK(cf.scheme.k == doctest::Approx(9.375e-4).epsilon(1e-12));
  CHECK(cf.scheme.steps == 618);
  CHECK(cf.q0 == 2e7);
  CHECK(cf.functional.q_ref == 5e6);
  CHECK(cf.functional.kind == FunctionalKind::DragAtEndTime);
  CHECK(cf.functional.drag_markers == bit(Marker::DragBoundary));
  CHECK(cf.material.control_region == 1);
  double peak = 0.0;
  for (const auto &[t, v] : cf.inflow_table)
    peak = std::max(peak, v);
  CHECK(peak == doctest::Approx(20.0));
  const Mesh mesh = build_mesh(cf);
  int flap_cells = 0;
  for (std::size_t c = 0; c < mesh.n_cells(); ++c)
    if (mesh.cell_region[c] == 1) {
      ++flap_cells;
      CHECK(mesh.cell_subdomain[c] == Subdomain::Solid);
    }
  CHECK(flap_cells > 0);
}

TEST_CASE("config round trip and overrides") {
  for (ProblemKind k : {ProblemKind::FSI1, ProblemKind::FSI3, ProblemKind::Flapping, ProblemKind::Beam}) {
    ProblemConfig c = default_config(k);
    c.refinements = 1;
    c.newton.tolerance = 3e-9;
    c.fd_steps = {0.5, 0.25};
    const auto path = scratch("round-trip.ini");
    std::ofstream(path) << config_to_ini(c);
    const auto back = load_config(path);
    CHECK(config_to_ini(back) == config_to_ini(c));
  }

  const auto path = scratch("small.ini");
  std::ofstream(path) << "[problem]\nname = FSI3\n\n[time]\nsteps = 7\n";
  auto c = load_config(path, {"time.k=0.002", "functional.target=auto", "material.control_mode = mu-only"});
  CHECK(c.kind == ProblemKind::FSI3);
  CHECK(c.scheme.steps == 7);
  CHECK(c.scheme.k == 0.002);
  CHECK(c.auto_target);
  CHECK(c.material.control_mode == ControlMode::MuOnly);
  CHECK(c.inflow_mean == 2.0); // FSI3 default kept

  // problem.name given only as override selects the defaults
  CHECK(load_config({}, {"problem.name=flapping"}).kind == ProblemKind::Flapping);
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(load_config({}, {"time.kk=1"}), ConfigError);
  CHECK_THROWS_AS(load_config({}, {"time.k=fast"}), ConfigError);
  CHECK_THROWS_AS(load_config({}, {"time.k=-1"}), ConfigError);
  CHECK_THROWS_AS(load_config({}, {"time.steps"}), ConfigError);
  CHECK_THROWS_AS(load_config({}, {"problem.name=FSI2"}), ConfigError);
  CHECK_THROWS_AS(load_config({}, {"material.nu_s=0.5"}), ConfigError);
  CHECK_THROWS_AS(load_config({}, {"functional.drag_markers=Hull"}), ConfigError);
  CHECK_THROWS_AS(load_config({}, {"problem.quadrature_points=6"}), ConfigError);
  CHECK_THROWS_AS(load_config({}, {"problem.pin_pressure=maybe"}), ConfigError);
  CHECK_THROWS_AS(load_config({}, {"time.scheme=CNs", "time.k=0.5"}), ConfigError);
  CHECK_THROWS_AS(load_config({}, {"inflow.table=0:1, 0:2"}), ConfigError);
  CHECK_THROWS_AS(load_config({}, {"inflow.table=missing-file.csv"}), ConfigError);
  const auto path = scratch("bad.ini");
  std::ofstream(path) << "[time\nsteps = 3\n";
  CHECK_THROWS_AS(load_config(path), ConfigError);
}

TEST_CASE("inflow tables") {
  const auto table = scratch("pulse.csv");
  std::ofstream(table) << "t,v\n# sample\n0, 0\n0.1, 4\n0.2, 0\n";
  const auto ini = scratch("with-table.ini");
  std::ofstream(ini) << "[problem]\nname = Flapping\n[inflow]\ntable = pulse.csv\n";
  const auto c = load_config(ini);
  REQUIRE(c.inflow_table.size() == 3);
  CHECK(c.inflow_table[1].second == 4.0);
  const InflowSchedule s{c.inflow_mean, c.inflow_ramp, c.inflow_table};
  CHECK(s(0.05) == doctest::Approx(2.0));

  const auto inl = load_config({}, {"inflow.table=0:1, 2:3"});
  CHECK(inl.inflow_table.size() == 2);
  CHECK(load_config({}, {"problem.name=Flapping", "inflow.table=none"}).inflow_table.empty());
}

TEST_CASE("zero inflow forward stays at rest") {
  auto c = load_config({}, {"inflow.mean=0", "time.steps=2"});
  Problem p(c);
  const auto fw = p.forward(c.q0);
  CHECK(norm2(fw.trajectory.back()) == 0.0);
  const auto row = point_series_row(p.op(), fw.trajectory.back(), 2.0, c.functional.point,
                                    c.functional.drag_markers);
  CHECK(row.u1 == 0.0);
  CHECK(row.drag == 0.0);
}

TEST_CASE("pressure pin and quadrature switches") {
  Problem plain(load_config({}, {"time.steps=1"}));
  Problem pinned(load_config({}, {"time.steps=1", "inflow.mean=1e-3", "problem.pin_pressure=true",
                                  "problem.quadrature_points=4"}));
  const int first_pressure = static_cast<int>(pinned.dofs().n_dofs() - pinned.dofs().n_pressure_dofs());
  CHECK_FALSE(plain.dofs().is_constrained(first_pressure));
  CHECK(pinned.dofs().is_constrained(first_pressure));
  CHECK(pinned.dofs().constraints().size() == plain.dofs().constraints().size() + 1);
  CHECK(pinned.op().options().cell_points == 4);
  CHECK(pinned.op().geometry()[0].points.size() == 16);
  const auto fw = pinned.forward(pinned.config().q0);
  CHECK(fw.trajectory.back()[first_pressure] == 0.0);
}

TEST_CASE("mesh file import") {
  const auto dir = scratch("meshes");
  fs::create_directories(dir);
  std::ofstream out(dir / "beam.txt");
  write_mesh(out, build_beam_mesh(4, 1, 1.0, 0.1, 0));
  out.close();
  std::ofstream(dir / "beam.ini") << "[problem]\nname = Beam\nmesh_file = beam.txt\nrefinements = 1\n";
  const auto c = load_config(dir / "beam.ini");
  CHECK(c.mesh_file == dir / "beam.txt");
  const Mesh m = build_mesh(c);
  CHECK(m.n_cells() == 16);
  CHECK(config_to_ini(load_config(dir / "beam.ini")) == config_to_ini(c));

  std::ofstream(dir / "broken.txt") << "fsiopt-mesh 1\nvertices 1\n0 0\ncells 1\n0 0 0 0 Rock 0\n";
  CHECK_THROWS_AS(build_mesh(load_config({}, {"problem.mesh_file=" + (dir / "broken.txt").string()})),
                  ConfigError);
  CHECK_THROWS_AS(build_mesh(load_config({}, {"problem.mesh_file=" + (dir / "nope.txt").string()})),
                  ConfigError);
}

TEST_CASE("automatic tracking target") {
  auto c = load_config({}, {"time.steps=2", "control.q0=1e5"});
  Problem p(c);
  const double target = p.functional().target;
  // the reference run at mu = 0.5e6 leaves the control untouched
  CHECK(p.op().control() == 1e5);
  const auto ref = p.forward(0.5e6);
  CHECK(target == evaluate_at_point(p.dofs(), ref.trajectory.back(), Field::Displacement, {0.6, 0.2}).x);
  CHECK(target > 0.0);
}

TEST_CASE("beam initial mode and frequency") {
  auto c = load_config({}, {"problem.name=Beam", "time.scheme=CNs", "time.k=0.005", "time.steps=100"});
  Problem p(c);
  const auto &u0 = p.initial_state();
  CHECK(evaluate_at_point(p.dofs(), u0, Field::Displacement, c.functional.point).y ==
        doctest::Approx(c.beam_deflection));
  CHECK(std::abs(evaluate_at_point(p.dofs(), u0, Field::Displacement, {0.0, 0.05}).y) < 1e-18);
  CHECK(evaluate_at_point(p.dofs(), u0, Field::Velocity, {0.5, 0.05}).y == 0.0);
  const auto fw = p.forward(c.q0);
  const double ratio =
      evaluate_at_point(p.dofs(), fw.trajectory.back(), Field::Displacement, c.functional.point).y /
      c.beam_deflection;
  const double omega = std::acos(ratio) / c.scheme.end_time();
  // Euler-Bernoulli cantilever in plane strain: 1.8751^2 sqrt(E' I / (rho A)) / L^2
  const double mu = c.material.mu, nu = c.material.nu_s;
  const double e_plane = 2 * mu * (1 + nu) / (1 - nu * nu);
  const double t = c.beam_thickness;
  const double omega_eb = 1.8751 * 1.8751 * std::sqrt(e_plane * t * t * t / 12.0 / (c.material.rho_s * t)) /
                          (c.beam_length * c.beam_length);
  CHECK(omega == doctest::Approx(omega_eb).epsilon(0.02));
}

TEST_CASE("vtk output") {
  auto c = load_config({}, {"time.steps=1"});
  Problem p(c);
  std::vector<double> u(p.dofs().n_dofs(), 0.0);
  for (std::size_t n = 0; n < p.dofs().n_nodes(); ++n)
    u[p.dofs().node_dof(static_cast<int>(n), Field::Displacement, 1)] = 0.01;
  for (std::size_t cell = 0; cell < p.mesh().n_cells(); ++cell)
    if (p.dofs().cell_pressure_dof(cell) >= 0)
      u[p.dofs().cell_pressure_dof(cell)] = 2.5;
  for (double pv : vertex_pressure(p.dofs(), u))
    CHECK((pv == doctest::Approx(2.5) || pv == 0.0));

  std::ostringstream out;
  write_vtk(out, p.dofs(), u, 1.0);
  std::istringstream in(out.str());
  std::string line, word;
  std::getline(in, line);
  CHECK(line == "# vtk DataFile Version 3.0");
  while (in >> word && word != "POINTS") {
  }
  std::size_t n = 0;
  in >> n >> word;
  CHECK(n == p.mesh().n_vertices());
  double x = 0, y = 0, z = 0;
  in >> x >> y >> z;
  CHECK(x == doctest::Approx(p.mesh().vertices[0].x));
  CHECK(y == doctest::Approx(p.mesh().vertices[0].y + 0.01));
  const std::string text = out.str();
  std::ostringstream ref;
  write_vtk(ref, p.dofs(), u, 1.0, false);
  std::istringstream rin(ref.str());
  while (rin >> word && word != "POINTS") {
  }
  rin >> n >> word >> x >> y;
  CHECK(y == doctest::Approx(p.mesh().vertices[0].y));
  CHECK(text.find("CELL_TYPES " + std::to_string(p.mesh().n_cells())) != std::string::npos);
  CHECK(text.find("VECTORS v double") != std::string::npos);
  CHECK(text.find("VECTORS u double") != std::string::npos);
  CHECK(text.find("SCALARS p double 1") != std::string::npos);
}
