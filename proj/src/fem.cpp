#include "fsiopt/fem.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fsiopt {

QuadratureRule gauss_line(int n) {
  std::vector<double> x, w;
  switch (n) {
  case 1:
    x = {0.0};
    w = {2.0};
    break;
  case 2:
    x = {-1.0 / std::sqrt(3.0), 1.0 / std::sqrt(3.0)};
    w = {1.0, 1.0};
    break;
  case 3:
    x = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
    w = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    break;
  case 4: {
    const double a = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(1.2));
    const double b = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(1.2));
    const double wa = (18.0 + std::sqrt(30.0)) / 36.0;
    const double wb = (18.0 - std::sqrt(30.0)) / 36.0;
    x = {-b, -a, a, b};
    w = {wb, wa, wa, wb};
    break;
  }
  case 5: {
    const double a = std::sqrt(5.0 - 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
    const double b = std::sqrt(5.0 + 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
    const double wa = (322.0 + 13.0 * std::sqrt(70.0)) / 900.0;
    const double wb = (322.0 - 13.0 * std::sqrt(70.0)) / 900.0;
    x = {-b, -a, 0.0, a, b};
    w = {wb, wa, 128.0 / 225.0, wa, wb};
    break;
  }
  default:
    throw std::invalid_argument("gauss_line: supported orders are 1..5");
  }
  QuadratureRule rule;
  for (std::size_t i = 0; i < x.size(); ++i) {
    rule.points.push_back({0.5 * (x[i] + 1.0), 0.0});
    rule.weights.push_back(0.5 * w[i]);
  }
  return rule;
}

QuadratureRule gauss_square(int n) {
  const QuadratureRule line = gauss_line(n);
  QuadratureRule rule;
  for (std::size_t j = 0; j < line.size(); ++j)
    for (std::size_t i = 0; i < line.size(); ++i) {
      rule.points.push_back({line.points[i].x, line.points[j].x});
      rule.weights.push_back(line.weights[i] * line.weights[j]);
    }
  return rule;
}

namespace q2 {
namespace {

// 1D quadratic Lagrange basis on the nodes 0, 1/2, 1.
double l(int k, double t) {
  switch (k) {
  case 0:
    return (1.0 - t) * (1.0 - 2.0 * t);
  case 1:
    return 4.0 * t * (1.0 - t);
  default:
    return t * (2.0 * t - 1.0);
  }
}
double dl(int k, double t) {
  switch (k) {
  case 0:
    return 4.0 * t - 3.0;
  case 1:
    return 4.0 - 8.0 * t;
  default:
    return 4.0 * t - 1.0;
  }
}

// 1D indices (in x, in y) of each local node; 0 -> t=0, 1 -> t=1/2, 2 -> t=1.
constexpr std::array<std::array<int, 2>, 9> index{
    {{0, 0}, {2, 0}, {2, 2}, {0, 2}, {1, 0}, {2, 1}, {1, 2}, {0, 1}, {1, 1}}};

} // namespace

double value(int node, const Point &xi) {
  const auto [i, j] = index[node];
  return l(i, xi.x) * l(j, xi.y);
}

Vec2 gradient(int node, const Point &xi) {
  const auto [i, j] = index[node];
  return {dl(i, xi.x) * l(j, xi.y), l(i, xi.x) * dl(j, xi.y)};
}

} // namespace q2

int ReferenceElement::dofs_per_cell() const {
  switch (kind) {
  case ElementKind::Q2Scalar:
    return 9;
  case ElementKind::Q2Vector:
    return 18;
  case ElementKind::P1dcScalar:
    return 3;
  }
  return 0;
}

double ReferenceElement::value(int i, const Point &xi) const {
  switch (kind) {
  case ElementKind::Q2Scalar:
    return q2::value(i, xi);
  case ElementKind::Q2Vector:
    return q2::value(i / 2, xi);
  case ElementKind::P1dcScalar:
    return i == 0 ? 1.0 : (i == 1 ? xi.x - 0.5 : xi.y - 0.5);
  }
  return 0.0;
}

Vec2 ReferenceElement::gradient(int i, const Point &xi) const {
  switch (kind) {
  case ElementKind::Q2Scalar:
    return q2::gradient(i, xi);
  case ElementKind::Q2Vector:
    return q2::gradient(i / 2, xi);
  case ElementKind::P1dcScalar:
    return i == 0 ? Vec2{0, 0} : (i == 1 ? Vec2{1, 0} : Vec2{0, 1});
  }
  return {};
}

CellMap::CellMap(const Mesh &mesh, std::size_t cell) {
  for (int k = 0; k < 4; ++k)
    p[k] = mesh.vertices[mesh.cells[cell][k]];
}

Point CellMap::map(const Point &xi) const {
  const double s = xi.x, t = xi.y;
  return (1 - s) * (1 - t) * p[0] + s * (1 - t) * p[1] + s * t * p[2] + (1 - s) * t * p[3];
}

Mat2 CellMap::jacobian(const Point &xi) const {
  const double s = xi.x, t = xi.y;
  const Vec2 ds = (1 - t) * (p[1] - p[0]) + t * (p[2] - p[3]);
  const Vec2 dt = (1 - s) * (p[3] - p[0]) + s * (p[2] - p[1]);
  return Mat2{{ds.x, dt.x, ds.y, dt.y}};
}

Point CellMap::centre() const { return 0.25 * (p[0] + p[1] + p[2] + p[3]); }

double CellMap::diameter() const { return std::max(norm(p[2] - p[0]), norm(p[3] - p[1])); }

std::optional<Point> CellMap::inverse(const Point &x, double tol) const {
  double xmin = p[0].x, xmax = p[0].x, ymin = p[0].y, ymax = p[0].y;
  for (const auto &q : p) {
    xmin = std::min(xmin, q.x);
    xmax = std::max(xmax, q.x);
    ymin = std::min(ymin, q.y);
    ymax = std::max(ymax, q.y);
  }
  const double h = diameter();
  if (x.x < xmin - tol * h || x.x > xmax + tol * h || x.y < ymin - tol * h || x.y > ymax + tol * h)
    return std::nullopt;
  Point xi{0.5, 0.5};
  for (int it = 0; it < 30; ++it) {
    const Vec2 r = map(xi) - x;
    if (norm(r) < 1e-14 * h)
      break;
    xi -= fsiopt::inverse(jacobian(xi)) * r;
  }
  if (norm(map(xi) - x) > 1e-10 * h)
    return std::nullopt;
  if (xi.x < -tol || xi.x > 1 + tol || xi.y < -tol || xi.y > 1 + tol)
    return std::nullopt;
  return Point{std::clamp(xi.x, 0.0, 1.0), std::clamp(xi.y, 0.0, 1.0)};
}

double P1dcBasis::value(int i, const Point &x) const {
  switch (i) {
  case 0:
    return 1.0;
  case 1:
    return (x.x - centre.x) / scale;
  default:
    return (x.y - centre.y) / scale;
  }
}

Vec2 P1dcBasis::gradient(int i) const {
  switch (i) {
  case 0:
    return {0.0, 0.0};
  case 1:
    return {1.0 / scale, 0.0};
  default:
    return {0.0, 1.0 / scale};
  }
}

double InflowProfile::shape(const Point &x) const {
  if (x.y < y_min || x.y > y_max)
    return 0.0;
  const double h = y_max - y_min;
  return peak_factor * 4.0 * (x.y - y_min) * (y_max - x.y) / (h * h);
}

BoundaryConditions
BoundaryConditions::from_names(const std::vector<std::pair<std::string, BoundaryRule>> &table,
                               const InflowProfile &inflow) {
  BoundaryConditions bc;
  bc.inflow = inflow;
  for (const auto &[name, rule] : table)
    bc.rules[parse_marker(name)] = rule;
  return bc;
}

DofMap::DofMap(const Mesh &mesh, const BoundaryConditions &bc) : mesh_(&mesh) {
  const MeshTopology topo(mesh);
  const int nv = static_cast<int>(mesh.n_vertices());
  const int ne = static_cast<int>(topo.edges.size());
  const std::size_t nc = mesh.n_cells();

  node_points_.resize(static_cast<std::size_t>(nv + ne) + nc);
  node_solid_.assign(node_points_.size(), 0);
  for (int v = 0; v < nv; ++v)
    node_points_[v] = mesh.vertices[v];
  for (int e = 0; e < ne; ++e)
    node_points_[nv + e] =
        0.5 * (mesh.vertices[topo.edges[e][0]] + mesh.vertices[topo.edges[e][1]]);

  cell_nodes_.resize(nc);
  cell_pressure_.assign(nc, -1);
  int next_pressure = dofs_per_node * static_cast<int>(node_points_.size());
  for (std::size_t c = 0; c < nc; ++c) {
    auto &nodes = cell_nodes_[c];
    for (int k = 0; k < 4; ++k) {
      nodes[k] = mesh.cells[c][k];
      nodes[4 + k] = nv + topo.cell_edges[c][k];
    }
    nodes[8] = nv + ne + static_cast<int>(c);
    node_points_[nodes[8]] = CellMap(mesh, c).centre();
    if (mesh.cell_subdomain[c] == Subdomain::Solid) {
      for (int n : nodes)
        node_solid_[n] = 1;
    } else {
      cell_pressure_[c] = next_pressure;
      next_pressure += pressure_per_cell;
    }
  }
  n_dofs_ = static_cast<std::size_t>(next_pressure);

  // Per node: strongest velocity condition (Zero > Inflow > Free) and
  // displacement condition over all marked edges touching it.
  std::vector<int> vel(node_points_.size(), 0); // 0 free, 1 inflow, 2 zero
  std::vector<char> disp(node_points_.size(), 0);
  for (int e = 0; e < ne; ++e) {
    const MarkerSet m = topo.edge_markers[e];
    if (m == 0)
      continue;
    for (const auto &[marker, rule] : bc.rules) {
      if (!has(m, marker))
        continue;
      const int level = rule.velocity == VelocityCondition::Zero     ? 2
                        : rule.velocity == VelocityCondition::Inflow ? 1
                                                                     : 0;
      for (int n : {topo.edges[e][0], topo.edges[e][1], nv + e}) {
        vel[n] = std::max(vel[n], level);
        disp[n] = static_cast<char>(disp[n] || rule.displacement_zero);
      }
    }
  }
  constrained_.assign(n_dofs_, 0);
  for (int n = 0; n < static_cast<int>(node_points_.size()); ++n) {
    if (vel[n] > 0) {
      const double inflow = vel[n] == 1 ? bc.inflow.shape(node_points_[n]) : 0.0;
      constraints_.push_back({node_dof(n, Field::Velocity, 0), inflow, vel[n] == 1});
      constraints_.push_back({node_dof(n, Field::Velocity, 1), 0.0, false});
    }
    if (disp[n]) {
      constraints_.push_back({node_dof(n, Field::Displacement, 0), 0.0, false});
      constraints_.push_back({node_dof(n, Field::Displacement, 1), 0.0, false});
    }
  }
  for (const auto &c : constraints_)
    constrained_[c.dof] = 1;
}

std::vector<int> DofMap::cell_dofs(std::size_t cell) const {
  std::vector<int> dofs;
  dofs.reserve(dofs_per_node * 9 + pressure_per_cell);
  for (int n : cell_nodes_[cell])
    for (int k = 0; k < dofs_per_node; ++k)
      dofs.push_back(dofs_per_node * n + k);
  if (cell_pressure_[cell] >= 0)
    for (int k = 0; k < pressure_per_cell; ++k)
      dofs.push_back(cell_pressure_[cell] + k);
  return dofs;
}

Field DofMap::field_of(int dof) const {
  if (dof >= dofs_per_node * static_cast<int>(n_nodes()))
    return Field::Pressure;
  return static_cast<Field>((dof % dofs_per_node) / 2);
}

void DofMap::apply_constraints(std::span<double> u, double inflow_mean) const {
  for (const auto &c : constraints_)
    u[c.dof] = c.time_dependent ? c.value * inflow_mean : c.value;
}

void DofMap::zero_constrained(std::span<double> v) const {
  for (const auto &c : constraints_)
    v[c.dof] = 0.0;
}

void DofMap::add_constraint(int dof, double value) {
  if (dof < 0 || static_cast<std::size_t>(dof) >= n_dofs_)
    throw std::out_of_range("constraint dof out of range");
  if (constrained_[dof])
    throw std::invalid_argument("dof " + std::to_string(dof) + " is already constrained");
  constraints_.push_back({dof, value, false});
  constrained_[dof] = 1;
}

SparseOperator make_sparsity(const DofMap &dofs) {
  std::vector<std::vector<int>> rows(dofs.n_dofs());
  for (std::size_t c = 0; c < dofs.mesh().n_cells(); ++c) {
    const auto local = dofs.cell_dofs(c);
    for (int r : local)
      rows[r].insert(rows[r].end(), local.begin(), local.end());
  }
  std::vector<std::size_t> offsets(dofs.n_dofs() + 1, 0);
  std::vector<int> cols;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto &row = rows[r];
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    cols.insert(cols.end(), row.begin(), row.end());
    offsets[r + 1] = cols.size();
  }
  return SparseOperator(dofs.n_dofs(), std::move(offsets), std::move(cols));
}

std::vector<int> apply_constraints(SparseOperator &a, std::span<double> rhs, const DofMap &dofs,
                                   double inflow_mean) {
  std::vector<double> g(dofs.n_dofs(), 0.0);
  dofs.apply_constraints(g, inflow_mean);
  const auto offsets = a.row_offsets();
  const auto cols = a.column_indices();
  auto vals = a.values();
  for (std::size_t r = 0; r < a.size(); ++r) {
    const bool row_fixed = dofs.is_constrained(static_cast<int>(r));
    for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) {
      const int c = cols[k];
      if (row_fixed) {
        vals[k] = c == static_cast<int>(r) ? 1.0 : 0.0;
      } else if (dofs.is_constrained(c)) {
        rhs[r] -= vals[k] * g[c];
        vals[k] = 0.0;
      }
    }
  }
  std::vector<int> fixed;
  for (const auto &c : dofs.constraints()) {
    rhs[c.dof] = g[c.dof];
    fixed.push_back(c.dof);
  }
  return fixed;
}

double EvaluationRow::apply(std::span<const double> u) const {
  double s = 0.0;
  for (std::size_t k = 0; k < dofs.size(); ++k)
    s += weights[k] * u[dofs[k]];
  return s;
}

EvaluationRow evaluation_row(const DofMap &dofs, Field field, int component, const Point &x) {
  const Mesh &mesh = dofs.mesh();
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    if (field == Field::Pressure && mesh.cell_subdomain[c] != Subdomain::Fluid)
      continue;
    const CellMap cell(mesh, c);
    const auto xi = cell.inverse(x);
    if (!xi)
      continue;
    EvaluationRow row;
    if (field == Field::Pressure) {
      const P1dcBasis basis(cell);
      for (int k = 0; k < DofMap::pressure_per_cell; ++k) {
        row.dofs.push_back(dofs.cell_pressure_dof(c) + k);
        row.weights.push_back(basis.value(k, x));
      }
    } else {
      const auto &nodes = dofs.cell_nodes(c);
      for (int a = 0; a < q2::n_nodes; ++a) {
        row.dofs.push_back(dofs.node_dof(nodes[a], field, component));
        row.weights.push_back(q2::value(a, *xi));
      }
    }
    return row;
  }
  throw std::out_of_range("point (" + std::to_string(x.x) + ", " + std::to_string(x.y) +
                          ") lies outside the mesh");
}

Vec2 evaluate_at_point(const DofMap &dofs, std::span<const double> u, Field field,
                       const Point &x) {
  if (field == Field::Pressure)
    return {evaluation_row(dofs, field, 0, x).apply(u), 0.0};
  return {evaluation_row(dofs, field, 0, x).apply(u), evaluation_row(dofs, field, 1, x).apply(u)};
}

} // namespace fsiopt
