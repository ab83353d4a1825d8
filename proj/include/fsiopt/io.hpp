#pragma once

#include "fsiopt/assembly.hpp"

#include <filesystem>
#include <fstream>
#include <span>
#include <vector>

namespace fsiopt {

/// Legacy ASCII VTK unstructured grid of the deformed configuration x + u
/// with point data v, u (vertex values) and p (average over the adjacent
/// fluid cells, 0 elsewhere). Cell data: subdomain (0 fluid, 1 solid).
/// Points are moved by the displacement field unless deformed is false
/// (adjoint fields are written on the reference mesh).
void write_vtk(std::ostream &out, const DofMap &dofs, std::span<const double> u, double time,
               bool deformed = true);
void write_vtk(const std::filesystem::path &path, const DofMap &dofs, std::span<const double> u,
               double time, bool deformed = true);

/// Vertex pressure as written by write_vtk.
std::vector<double> vertex_pressure(const DofMap &dofs, std::span<const double> u);

struct PointSeriesRow {
  double t = 0.0;
  double u1 = 0.0;
  double u2 = 0.0;
  double drag = 0.0;
};

PointSeriesRow point_series_row(const FsiOperator &op, std::span<const double> u, double t,
                                const Point &point, MarkerSet drag_markers);

/// CSV with columns t,u1_A,u2_A,drag.
class TimeSeriesWriter {
public:
  explicit TimeSeriesWriter(const std::filesystem::path &path);
  void write(const PointSeriesRow &row);

private:
  std::ofstream out_;
};

} // namespace fsiopt
