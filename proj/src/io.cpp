#include "fsiopt/io.hpp"

#include <iomanip>
#include <stdexcept>

namespace fsiopt {

std::vector<double> vertex_pressure(const DofMap &dofs, std::span<const double> u) {
  const Mesh &mesh = dofs.mesh();
  std::vector<double> sum(mesh.n_vertices(), 0.0);
  std::vector<int> count(mesh.n_vertices(), 0);
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    const int p0 = dofs.cell_pressure_dof(c);
    if (p0 < 0)
      continue;
    const CellMap map(mesh, c);
    const P1dcBasis basis(map);
    for (int v : mesh.cells[c]) {
      double p = 0.0;
      for (int i = 0; i < 3; ++i)
        p += u[p0 + i] * basis.value(i, mesh.vertices[v]);
      sum[v] += p;
      ++count[v];
    }
  }
  for (std::size_t v = 0; v < sum.size(); ++v)
    if (count[v] > 0)
      sum[v] /= count[v];
  return sum;
}

void write_vtk(std::ostream &out, const DofMap &dofs, std::span<const double> u, double time,
               bool deformed) {
  const Mesh &mesh = dofs.mesh();
  const std::size_t nv = mesh.n_vertices();
  out << std::setprecision(10);
  out << "# vtk DataFile Version 3.0\n"
      << "fsiopt t=" << time << "\n"
      << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << nv << " double\n";
  for (std::size_t v = 0; v < nv; ++v) {
    const int n = static_cast<int>(v);
    const Point &x = mesh.vertices[v];
    const double s = deformed ? 1.0 : 0.0;
    out << x.x + s * u[dofs.node_dof(n, Field::Displacement, 0)] << ' '
        << x.y + s * u[dofs.node_dof(n, Field::Displacement, 1)] << " 0\n";
  }
  out << "CELLS " << mesh.n_cells() << ' ' << 5 * mesh.n_cells() << '\n';
  for (const auto &c : mesh.cells)
    out << "4 " << c[0] << ' ' << c[1] << ' ' << c[2] << ' ' << c[3] << '\n';
  out << "CELL_TYPES " << mesh.n_cells() << '\n';
  for (std::size_t c = 0; c < mesh.n_cells(); ++c)
    out << "9\n";
  out << "CELL_DATA " << mesh.n_cells() << "\nSCALARS subdomain int 1\nLOOKUP_TABLE default\n";
  for (auto s : mesh.cell_subdomain)
    out << (s == Subdomain::Solid ? 1 : 0) << '\n';
  out << "POINT_DATA " << nv << '\n';
  for (Field f : {Field::Velocity, Field::Displacement}) {
    out << "VECTORS " << (f == Field::Velocity ? "v" : "u") << " double\n";
    for (std::size_t v = 0; v < nv; ++v) {
      const int n = static_cast<int>(v);
      out << u[dofs.node_dof(n, f, 0)] << ' ' << u[dofs.node_dof(n, f, 1)] << " 0\n";
    }
  }
  out << "SCALARS p double 1\nLOOKUP_TABLE default\n";
  for (double p : vertex_pressure(dofs, u))
    out << p << '\n';
}

void write_vtk(const std::filesystem::path &path, const DofMap &dofs, std::span<const double> u,
               double time, bool deformed) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot write " + path.string());
  write_vtk(out, dofs, u, time, deformed);
}

PointSeriesRow point_series_row(const FsiOperator &op, std::span<const double> u, double t,
                                const Point &point, MarkerSet drag_markers) {
  PointSeriesRow r;
  r.t = t;
  const Vec2 d = evaluate_at_point(op.dofs(), u, Field::Displacement, point);
  r.u1 = d.x;
  r.u2 = d.y;
  r.drag = drag_markers ? op.boundary_traction(u, drag_markers, 0) : 0.0;
  return r;
}

TimeSeriesWriter::TimeSeriesWriter(const std::filesystem::path &path) : out_(path) {
  if (!out_)
    throw std::runtime_error("cannot write " + path.string());
  out_ << "t,u1_A,u2_A,drag\n" << std::setprecision(12);
}

void TimeSeriesWriter::write(const PointSeriesRow &row) {
  out_ << row.t << ',' << row.u1 << ',' << row.u2 << ',' << row.drag << '\n';
  out_.flush();
}

} // namespace fsiopt
