#include "fsiopt/assembly.hpp"

#include "fsiopt/errors.hpp"

#include <algorithm>
#include <exception>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fsiopt {

namespace {

constexpr int n_nodal = DofMap::dofs_per_node * q2::n_nodes;

Point edge_point(int edge, double t) {
  Point xi;
  switch (edge) {
  case 0:
    xi = {t, 0.0};
    break;
  case 1:
    xi = {1.0, t};
    break;
  case 2:
    xi = {1.0 - t, 1.0};
    break;
  default:
    xi = {0.0, 1.0 - t};
    break;
  }
  return xi;
}

CellGeometry::PointData point_data(const CellMap &map, const P1dcBasis &basis, const Point &xi,
                                   double weight) {
  CellGeometry::PointData pt;
  pt.x = map.map(xi);
  const Mat2 jac = map.jacobian(xi);
  const Mat2 jac_inv_T = transpose(inverse(jac));
  pt.JxW = weight * det(jac);
  for (int a = 0; a < q2::n_nodes; ++a) {
    pt.phi[a] = q2::value(a, xi);
    pt.grad_phi[a] = jac_inv_T * q2::gradient(a, xi);
  }
  for (int j = 0; j < DofMap::pressure_per_cell; ++j)
    pt.psi[j] = basis.value(j, pt.x);
  return pt;
}

std::vector<CellGeometry> build_geometry(const Mesh &mesh, int cell_points, int facet_points) {
  const QuadratureRule cell_rule = gauss_square(cell_points);
  const QuadratureRule line = gauss_line(facet_points);
  const MeshTopology topo(mesh);
  std::vector<CellGeometry> geo(mesh.n_cells());
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    const CellMap map(mesh, c);
    const P1dcBasis basis(map);
    for (std::size_t q = 0; q < cell_rule.size(); ++q)
      geo[c].points.push_back(point_data(map, basis, cell_rule.points[q], cell_rule.weights[q]));
    for (int k = 0; k < 4; ++k) {
      const MarkerSet markers = topo.edge_markers[topo.cell_edges[c][k]];
      if (markers == 0)
        continue;
      const Vec2 tangent = map.p[(k + 1) % 4] - map.p[k];
      const double length = norm(tangent);
      const Vec2 normal{tangent.y / length, -tangent.x / length};
      for (std::size_t q = 0; q < line.size(); ++q) {
        CellGeometry::FacetPoint fp;
        fp.point = point_data(map, basis, edge_point(k, line.points[q].x), 1.0);
        fp.point.JxW = line.weights[q] * length;
        fp.normal = normal;
        fp.markers = markers;
        geo[c].facet_points.push_back(fp);
      }
    }
  }
  return geo;
}

/// Basis direction of local dof b at a point.
PointState trial_state(const CellGeometry::PointData &pt, int b) {
  PointState d;
  if (b >= n_nodal) {
    d.p = pt.psi[b - n_nodal];
    return d;
  }
  const int a = b / DofMap::dofs_per_node;
  const int k = b % DofMap::dofs_per_node;
  const int comp = k % 2;
  Vec2 value;
  value[comp] = pt.phi[a];
  Mat2 grad;
  grad(comp, 0) = pt.grad_phi[a].x;
  grad(comp, 1) = pt.grad_phi[a].y;
  switch (k / 2) {
  case 0:
    d.v = value;
    d.grad_v = grad;
    break;
  case 1:
    d.u = value;
    d.grad_u = grad;
    break;
  default:
    d.w = value;
    d.grad_w = grad;
    break;
  }
  return d;
}

/// out_i += JxW * (fluxes tested with local basis function i).
void contract(const Fluxes &f, const CellGeometry::PointData &pt, double JxW,
              const std::array<char, 9> &mask_u, bool has_pressure, double *out) {
  for (int a = 0; a < q2::n_nodes; ++a) {
    const double phi = pt.phi[a];
    const Vec2 &g = pt.grad_phi[a];
    double *row = out + DofMap::dofs_per_node * a;
    for (int c = 0; c < 2; ++c) {
      row[c] += JxW * (f.f_v[c] * phi + f.G_v(c, 0) * g.x + f.G_v(c, 1) * g.y);
      double ru = f.f_u[c] * phi;
      if (!mask_u[a])
        ru += f.G_u(c, 0) * g.x + f.G_u(c, 1) * g.y;
      row[2 + c] += JxW * ru;
      row[4 + c] += JxW * (f.f_w[c] * phi + f.G_w(c, 0) * g.x + f.G_w(c, 1) * g.y);
    }
  }
  if (has_pressure)
    for (int j = 0; j < DofMap::pressure_per_cell; ++j)
      out[n_nodal + j] += JxW * f.f_p * pt.psi[j];
}

void contract_boundary(const Vec2 &t, const CellGeometry::PointData &pt, double JxW,
                       double *out) {
  for (int a = 0; a < q2::n_nodes; ++a)
    for (int c = 0; c < 2; ++c)
      out[DofMap::dofs_per_node * a + c] += JxW * t[c] * pt.phi[a];
}

} // namespace

PointState point_state(const CellGeometry::PointData &pt, std::span<const double> local,
                       bool has_pressure) {
  PointState s;
  for (int a = 0; a < q2::n_nodes; ++a) {
    const double *n = local.data() + DofMap::dofs_per_node * a;
    const double phi = pt.phi[a];
    const Vec2 &g = pt.grad_phi[a];
    for (int c = 0; c < 2; ++c) {
      s.v[c] += n[c] * phi;
      s.u[c] += n[2 + c] * phi;
      s.w[c] += n[4 + c] * phi;
      for (int j = 0; j < 2; ++j) {
        s.grad_v(c, j) += n[c] * g[j];
        s.grad_u(c, j) += n[2 + c] * g[j];
        s.grad_w(c, j) += n[4 + c] * g[j];
      }
    }
  }
  if (has_pressure)
    for (int j = 0; j < DofMap::pressure_per_cell; ++j)
      s.p += local[n_nodal + j] * pt.psi[j];
  return s;
}

struct FsiOperator::Request {
  Mode mode = Mode::Residual;
  Group group = Group::T;
  std::span<const double> u;
  std::span<const double> u_old;
  StepWeights w;
};

FsiOperator::FsiOperator(const DofMap &dofs, const MaterialParams &params, AssemblyOptions options)
    : dofs_(&dofs), params_(params), options_(std::move(options)), control_(params.mu),
      pattern_(make_sparsity(dofs)) {
  params_.check();
  geometry_ = build_geometry(dofs.mesh(), options_.cell_points, options_.facet_points);
  cell_dofs_.resize(dofs.mesh().n_cells());
  for (std::size_t c = 0; c < cell_dofs_.size(); ++c)
    cell_dofs_[c] = dofs.cell_dofs(c);
}

void FsiOperator::set_options(AssemblyOptions options) {
  const bool rebuild = options.cell_points != options_.cell_points ||
                       options.facet_points != options_.facet_points;
  options_ = std::move(options);
  if (rebuild)
    geometry_ = build_geometry(dofs_->mesh(), options_.cell_points, options_.facet_points);
}

Lame FsiOperator::cell_lame(std::size_t cell) const {
  const Mesh &mesh = dofs_->mesh();
  if (mesh.cell_subdomain[cell] == Subdomain::Solid && params_.controls(mesh.cell_region[cell]))
    return params_.lame(control_);
  return params_.lame(params_.mu);
}

void FsiOperator::compute_cell(std::size_t cell, const Request &req, LocalResult &out) const {
  const Mesh &mesh = dofs_->mesh();
  const bool fluid = mesh.cell_subdomain[cell] == Subdomain::Fluid;
  const auto &ldofs = cell_dofs_[cell];
  const int n = static_cast<int>(ldofs.size());
  const CellGeometry &geo = geometry_[cell];

  std::vector<double> lu(n, 0.0), lo(n, 0.0);
  for (int i = 0; i < n; ++i) {
    if (!req.u.empty())
      lu[i] = req.u[ldofs[i]];
    if (!req.u_old.empty())
      lo[i] = req.u_old[ldofs[i]];
  }
  std::array<char, 9> mask_u{};
  const auto &nodes = dofs_->cell_nodes(cell);
  for (int a = 0; a < q2::n_nodes; ++a)
    mask_u[a] = static_cast<char>(dofs_->node_in_solid(nodes[a]));

  PointMaterial m;
  m.subdomain = fluid ? Subdomain::Fluid : Subdomain::Solid;
  m.params = &params_;
  m.lame = cell_lame(cell);
  m.jacobian_average = req.w.jacobian_average;
  const double k = req.w.k;
  const double theta = req.w.theta;

  const bool matrix = req.mode == Mode::Jacobian || req.mode == Mode::JacobianOld;
  out.vector.assign(matrix ? 0 : n, 0.0);
  out.matrix.assign(matrix ? static_cast<std::size_t>(n) * n : 0, 0.0);
  std::vector<double> column(n);

  auto check = [&](const PointState &s) {
    const double J = det(Mat2::identity() + s.grad_u);
    if (!(J > 0.0))
      throw MeshEntanglementError(cell, J);
  };
  auto scatter_column = [&](int b) {
    for (int i = 0; i < n; ++i)
      out.matrix[static_cast<std::size_t>(i) * n + b] += column[i];
  };

  if (req.mode == Mode::Control) {
    if (fluid || !params_.controls(mesh.cell_region[cell]))
      return;
    for (const auto &pt : geo.points) {
      const PointState s = point_state(pt, lu, false);
      Fluxes f;
      f.G_v = solid_stress_control_derivative(s.grad_u, params_);
      contract(f, pt, pt.JxW, mask_u, false, out.vector.data());
    }
    return;
  }

  for (const auto &pt : geo.points) {
    const PointState s = point_state(pt, lu, fluid);
    const PointState o = point_state(pt, lo, fluid);
    check(s);
    switch (req.mode) {
    case Mode::Residual: {
      Fluxes f = group_flux(Group::T, s, o, m);
      f.add(theta * k, group_flux(Group::E, s, o, m));
      f.add(k, group_flux(Group::P, s, o, m));
      f.add(k, group_flux(Group::I, s, o, m));
      if (theta < 1.0)
        f.add((1.0 - theta) * k, group_flux(Group::E, o, o, m));
      contract(f, pt, pt.JxW, mask_u, fluid, out.vector.data());
      break;
    }
    case Mode::Group:
      contract(group_flux(req.group, s, o, m), pt, pt.JxW, mask_u, fluid, out.vector.data());
      break;
    case Mode::Jacobian:
      for (int b = 0; b < n; ++b) {
        const PointState d = trial_state(pt, b);
        Fluxes f = group_flux_derivative(Group::T, s, o, d, m);
        f.add(theta * k, group_flux_derivative(Group::E, s, o, d, m));
        f.add(k, group_flux_derivative(Group::P, s, o, d, m));
        f.add(k, group_flux_derivative(Group::I, s, o, d, m));
        std::fill(column.begin(), column.end(), 0.0);
        contract(f, pt, pt.JxW, mask_u, fluid, column.data());
        scatter_column(b);
      }
      break;
    case Mode::JacobianOld:
      for (int b = 0; b < n; ++b) {
        const PointState d = trial_state(pt, b);
        Fluxes f = time_flux_derivative_old(s, o, d, m);
        if (theta < 1.0)
          f.add((1.0 - theta) * k, group_flux_derivative(Group::E, o, o, d, m));
        std::fill(column.begin(), column.end(), 0.0);
        contract(f, pt, pt.JxW, mask_u, fluid, column.data());
        scatter_column(b);
      }
      break;
    case Mode::Control:
      break;
    }
  }

  if (!fluid)
    return;
  for (const auto &fp : geo.facet_points) {
    if (!has(fp.markers, Marker::Outflow))
      continue;
    const auto &pt = fp.point;
    const PointState s = point_state(pt, lu, true);
    const PointState o = point_state(pt, lo, true);
    switch (req.mode) {
    case Mode::Residual: {
      Vec2 t = (theta * k) * outflow_flux(s, fp.normal, params_);
      if (theta < 1.0)
        t += ((1.0 - theta) * k) * outflow_flux(o, fp.normal, params_);
      contract_boundary(t, pt, pt.JxW, out.vector.data());
      break;
    }
    case Mode::Group:
      if (req.group == Group::E)
        contract_boundary(outflow_flux(s, fp.normal, params_), pt, pt.JxW, out.vector.data());
      break;
    case Mode::Jacobian:
    case Mode::JacobianOld: {
      const double scale = req.mode == Mode::Jacobian ? theta * k : (1.0 - theta) * k;
      if (scale == 0.0)
        break;
      const PointState &at = req.mode == Mode::Jacobian ? s : o;
      for (int b = 0; b < n; ++b) {
        const PointState d = trial_state(pt, b);
        std::fill(column.begin(), column.end(), 0.0);
        contract_boundary(scale * outflow_flux_derivative(at, d, fp.normal, params_), pt, pt.JxW,
                          column.data());
        scatter_column(b);
      }
      break;
    }
    case Mode::Control:
      break;
    }
  }
}

template <class Scatter> void FsiOperator::run(const Request &req, Scatter &&scatter) const {
  const std::size_t nc = dofs_->mesh().n_cells();
  std::vector<LocalResult> local(nc);
  if (options_.execution == Execution::Parallel) {
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(nc); ++c) {
      try {
        compute_cell(static_cast<std::size_t>(c), req, local[c]);
      } catch (...) {
#pragma omp critical(fsiopt_assembly_error)
        if (!error)
          error = std::current_exception();
      }
    }
    if (error)
      std::rethrow_exception(error);
  } else {
    for (std::size_t c = 0; c < nc; ++c)
      compute_cell(c, req, local[c]);
  }
  if (options_.cell_order.empty()) {
    for (std::size_t c = 0; c < nc; ++c)
      scatter(c, local[c]);
  } else {
    for (std::size_t c : options_.cell_order)
      scatter(c, local[c]);
  }
}

std::vector<double> FsiOperator::assemble_vector(const Request &req) const {
  std::vector<double> r(dofs_->n_dofs(), 0.0);
  run(req, [&](std::size_t c, const LocalResult &l) {
    const auto &ld = cell_dofs_[c];
    for (std::size_t i = 0; i < ld.size(); ++i)
      r[ld[i]] += l.vector[i];
  });
  return r;
}

SparseOperator FsiOperator::assemble_matrix(const Request &req) const {
  SparseOperator a = pattern_.zero_like();
  auto vals = a.values();
  run(req, [&](std::size_t c, const LocalResult &l) {
    const auto &ld = cell_dofs_[c];
    const std::size_t n = ld.size();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double v = l.matrix[i * n + j];
        if (v != 0.0)
          vals[static_cast<std::size_t>(a.find(ld[i], ld[j]))] += v;
      }
  });
  return a;
}

std::vector<double> FsiOperator::group_residual(Group g, std::span<const double> u,
                                                std::span<const double> u_old,
                                                double jacobian_average) const {
  Request req;
  req.mode = Mode::Group;
  req.group = g;
  req.u = u;
  req.u_old = u_old;
  req.w.jacobian_average = jacobian_average;
  return assemble_vector(req);
}

std::vector<double> FsiOperator::residual(std::span<const double> u, std::span<const double> u_old,
                                          const StepWeights &w) const {
  Request req;
  req.mode = Mode::Residual;
  req.u = u;
  req.u_old = u_old;
  req.w = w;
  auto r = assemble_vector(req);
  dofs_->zero_constrained(r);
  return r;
}

SparseOperator FsiOperator::jacobian(std::span<const double> u, std::span<const double> u_old,
                                     const StepWeights &w) const {
  Request req;
  req.mode = Mode::Jacobian;
  req.u = u;
  req.u_old = u_old;
  req.w = w;
  return assemble_matrix(req);
}

SparseOperator FsiOperator::jacobian_old(std::span<const double> u,
                                         std::span<const double> u_old,
                                         const StepWeights &w) const {
  Request req;
  req.mode = Mode::JacobianOld;
  req.u = u;
  req.u_old = u_old;
  req.w = w;
  return assemble_matrix(req);
}

std::vector<double> FsiOperator::control_derivative_E(std::span<const double> u) const {
  Request req;
  req.mode = Mode::Control;
  req.u = u;
  return assemble_vector(req);
}

double FsiOperator::min_jacobian(std::span<const double> u) const {
  double jmin = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < geometry_.size(); ++c) {
    const auto &ld = cell_dofs_[c];
    std::vector<double> lu(ld.size());
    for (std::size_t i = 0; i < ld.size(); ++i)
      lu[i] = u[ld[i]];
    for (const auto &pt : geometry_[c].points)
      jmin = std::min(jmin, det(Mat2::identity() + point_state(pt, lu, false).grad_u));
  }
  return jmin;
}

void FsiOperator::check_admissible(std::span<const double> u) const {
  for (std::size_t c = 0; c < geometry_.size(); ++c) {
    const auto &ld = cell_dofs_[c];
    std::vector<double> lu(ld.size());
    for (std::size_t i = 0; i < ld.size(); ++i)
      lu[i] = u[ld[i]];
    for (const auto &pt : geometry_[c].points) {
      const double J = det(Mat2::identity() + point_state(pt, lu, false).grad_u);
      if (!(J > 0.0))
        throw MeshEntanglementError(c, J);
    }
  }
}

double FsiOperator::boundary_traction(std::span<const double> u, MarkerSet markers,
                                      int dir) const {
  const Mesh &mesh = dofs_->mesh();
  double total = 0.0;
  for (std::size_t c = 0; c < geometry_.size(); ++c) {
    if (mesh.cell_subdomain[c] != Subdomain::Fluid)
      continue;
    const auto &ld = cell_dofs_[c];
    std::vector<double> lu;
    for (const auto &fp : geometry_[c].facet_points) {
      if ((fp.markers & markers) == 0)
        continue;
      if (lu.empty())
        for (int i : ld)
          lu.push_back(u[i]);
      const PointState s = point_state(fp.point, lu, true);
      total += fp.point.JxW * traction_component(s, -1.0 * fp.normal, dir, params_);
    }
  }
  return total;
}

std::vector<double> FsiOperator::boundary_traction_derivative(std::span<const double> u,
                                                              MarkerSet markers, int dir) const {
  const Mesh &mesh = dofs_->mesh();
  std::vector<double> g(dofs_->n_dofs(), 0.0);
  for (std::size_t c = 0; c < geometry_.size(); ++c) {
    if (mesh.cell_subdomain[c] != Subdomain::Fluid)
      continue;
    const auto &ld = cell_dofs_[c];
    std::vector<double> lu;
    for (const auto &fp : geometry_[c].facet_points) {
      if ((fp.markers & markers) == 0)
        continue;
      if (lu.empty())
        for (int i : ld)
          lu.push_back(u[i]);
      const PointState s = point_state(fp.point, lu, true);
      for (std::size_t b = 0; b < ld.size(); ++b)
        g[ld[b]] += fp.point.JxW * traction_component_derivative(
                                       s, trial_state(fp.point, static_cast<int>(b)),
                                       -1.0 * fp.normal, dir, params_);
    }
  }
  return g;
}

void constrain_homogeneous(SparseOperator &a, const DofMap &dofs) {
  const auto offsets = a.row_offsets();
  const auto cols = a.column_indices();
  auto vals = a.values();
  for (std::size_t r = 0; r < a.size(); ++r) {
    const bool row_fixed = dofs.is_constrained(static_cast<int>(r));
    for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) {
      const int c = cols[k];
      if (row_fixed)
        vals[k] = c == static_cast<int>(r) ? 1.0 : 0.0;
      else if (dofs.is_constrained(c))
        vals[k] = 0.0;
    }
  }
}

} // namespace fsiopt
