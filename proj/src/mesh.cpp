#include "fsiopt/mesh.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace fsiopt {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::pair<int, int> edge_key(int a, int b) { return a < b ? std::pair{a, b} : std::pair{b, a}; }

/// Collects quads, merging vertices that coincide up to round-off.
class MeshBuilder {
public:
  int vertex(const Point &p) {
    const auto key = std::pair{std::llround(p.x * 1e9), std::llround(p.y * 1e9)};
    auto it = index_.find(key);
    if (it != index_.end())
      return it->second;
    const int id = static_cast<int>(mesh_.vertices.size());
    mesh_.vertices.push_back(p);
    index_.emplace(key, id);
    return id;
  }

  void quad(const Point &p0, const Point &p1, const Point &p2, const Point &p3, Subdomain s,
            int region = 0) {
    mesh_.cells.push_back({vertex(p0), vertex(p1), vertex(p2), vertex(p3)});
    mesh_.cell_subdomain.push_back(s);
    mesh_.cell_region.push_back(region);
  }

  /// Marks every boundary edge (one adjacent cell) with classify(a, b, cell)
  /// and every fluid/solid edge with Interface plus extra(a, b).
  Mesh finish(const std::function<MarkerSet(const Point &, const Point &, std::size_t)> &classify,
              const std::function<MarkerSet(const Point &, const Point &)> &interface_extra) {
    MeshTopology topo(mesh_);
    for (std::size_t e = 0; e < topo.edges.size(); ++e) {
      const auto [a, b] = topo.edges[e];
      const auto [c0, c1] = topo.edge_cells[e];
      const Point &pa = mesh_.vertices[a];
      const Point &pb = mesh_.vertices[b];
      MarkerSet m = 0;
      if (c1 < 0) {
        m = classify(pa, pb, static_cast<std::size_t>(c0));
      } else if (mesh_.cell_subdomain[c0] != mesh_.cell_subdomain[c1]) {
        m = bit(Marker::Interface);
        if (interface_extra)
          m |= interface_extra(pa, pb);
      }
      if (m != 0)
        mesh_.facets.push_back({{a, b}, m});
    }
    return std::move(mesh_);
  }

  Mesh &mesh() { return mesh_; }

private:
  Mesh mesh_;
  std::map<std::pair<long long, long long>, int> index_;
};

Point lerp(const Point &a, const Point &b, double t) { return a + t * (b - a); }

/// Jacobian of the bilinear cell map at reference point (xi, eta).
Mat2 bilinear_jacobian(const std::array<Point, 4> &p, double xi, double eta) {
  Mat2 J;
  const double dxi[4] = {-(1 - eta), (1 - eta), eta, -eta};
  const double deta[4] = {-(1 - xi), -xi, xi, (1 - xi)};
  for (int k = 0; k < 4; ++k) {
    J(0, 0) += p[k].x * dxi[k];
    J(0, 1) += p[k].x * deta[k];
    J(1, 0) += p[k].y * dxi[k];
    J(1, 1) += p[k].y * deta[k];
  }
  return J;
}

} // namespace

std::string_view marker_name(Marker m) {
  switch (m) {
  case Marker::Inflow:
    return "Inflow";
  case Marker::Outflow:
    return "Outflow";
  case Marker::Wall:
    return "Wall";
  case Marker::Cylinder:
    return "Cylinder";
  case Marker::Interface:
    return "Interface";
  case Marker::DragBoundary:
    return "DragBoundary";
  case Marker::Clamp:
    return "Clamp";
  case Marker::Free:
    return "Free";
  }
  return "?";
}

Marker parse_marker(std::string_view name) {
  const std::string key = lower(name);
  for (Marker m : all_markers)
    if (lower(marker_name(m)) == key)
      return m;
  throw std::invalid_argument("unknown boundary marker '" + std::string(name) + "'");
}

std::string marker_set_names(MarkerSet s) {
  std::string out;
  for (Marker m : all_markers) {
    if (!has(s, m))
      continue;
    if (!out.empty())
      out += ',';
    out += marker_name(m);
  }
  return out;
}

MarkerSet parse_marker_set(std::string_view names) {
  MarkerSet s = 0;
  std::size_t pos = 0;
  while (pos <= names.size()) {
    const std::size_t next = std::min(names.find(',', pos), names.size());
    auto token = names.substr(pos, next - pos);
    while (!token.empty() && std::isspace(static_cast<unsigned char>(token.front())))
      token.remove_prefix(1);
    while (!token.empty() && std::isspace(static_cast<unsigned char>(token.back())))
      token.remove_suffix(1);
    if (!token.empty())
      s |= bit(parse_marker(token));
    pos = next + 1;
  }
  return s;
}

Point CircleBoundary::snap(const Point &p) const {
  const Point d = p - center;
  const double r = norm(d);
  return center + (radius / r) * d;
}

std::size_t Mesh::count(Subdomain s) const {
  return static_cast<std::size_t>(std::count(cell_subdomain.begin(), cell_subdomain.end(), s));
}

MarkerSet Mesh::facet_markers(int a, int b) const {
  const auto key = edge_key(a, b);
  for (const auto &f : facets)
    if (edge_key(f.vertices[0], f.vertices[1]) == key)
      return f.markers;
  return 0;
}

double Mesh::cell_diameter(std::size_t c) const {
  const auto &v = cells[c];
  return std::max(norm(vertices[v[2]] - vertices[v[0]]), norm(vertices[v[3]] - vertices[v[1]]));
}

double Mesh::cell_area(std::size_t c) const {
  const auto &v = cells[c];
  double a = 0.0;
  for (int k = 0; k < 4; ++k) {
    const Point &p = vertices[v[k]];
    const Point &q = vertices[v[(k + 1) % 4]];
    a += p.x * q.y - q.x * p.y;
  }
  return 0.5 * a;
}

MeshTopology::MeshTopology(const Mesh &mesh) {
  cell_edges.resize(mesh.n_cells());
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    for (int k = 0; k < 4; ++k) {
      const int a = mesh.cells[c][k];
      const int b = mesh.cells[c][(k + 1) % 4];
      const auto key = edge_key(a, b);
      auto [it, inserted] = lookup_.emplace(key, static_cast<int>(edges.size()));
      if (inserted) {
        edges.push_back({key.first, key.second});
        edge_cells.push_back({static_cast<int>(c), -1});
      } else {
        auto &adj = edge_cells[it->second];
        // a third cell on one edge is reported by validate()
        if (adj[1] < 0)
          adj[1] = static_cast<int>(c);
      }
      cell_edges[c][k] = it->second;
    }
  }
  edge_markers.assign(edges.size(), 0);
  for (const auto &f : mesh.facets) {
    const int e = find_edge(f.vertices[0], f.vertices[1]);
    if (e >= 0)
      edge_markers[e] |= f.markers;
  }
}

int MeshTopology::find_edge(int a, int b) const {
  auto it = lookup_.find(edge_key(a, b));
  return it == lookup_.end() ? -1 : it->second;
}

Mesh build_fsi_benchmark_mesh(int refinements) {
  if (refinements < 0)
    throw std::invalid_argument("refinements must be >= 0");
  constexpr double H = 0.41;
  constexpr double L = 2.5;
  const Point C{0.2, 0.2};
  constexpr double r = 0.05;
  constexpr double beam_lo = 0.19;
  constexpr double beam_hi = 0.21;
  constexpr double pi = std::numbers::pi;
  // Beam attaches where the circle meets y = 0.2 -/+ 0.01.
  const double attach = std::asin((beam_hi - C.y) / r);

  MeshBuilder b;

  // O-grid: six sectors around the cylinder between the circle and the box
  // [0.1,0.3]^2, two cell layers each. Sector 0 is the beam root.
  const std::array<double, 6> angles{-attach, attach, pi / 4, 3 * pi / 4, 5 * pi / 4, 7 * pi / 4};
  const std::array<Point, 6> box{Point{0.3, beam_lo}, Point{0.3, beam_hi}, Point{0.3, 0.3},
                                 Point{0.1, 0.3},     Point{0.1, 0.1},     Point{0.3, 0.1}};
  std::array<Point, 6> ring0, ring1;
  for (int j = 0; j < 6; ++j) {
    ring0[j] = C + r * Point{std::cos(angles[j]), std::sin(angles[j])};
    ring1[j] = lerp(ring0[j], box[j], 0.5);
  }
  for (int j = 0; j < 6; ++j) {
    const int n = (j + 1) % 6;
    const Subdomain s = j == 0 ? Subdomain::Solid : Subdomain::Fluid;
    b.quad(ring0[j], ring1[j], ring1[n], ring0[n], s);
    b.quad(ring1[j], box[j], box[n], ring1[n], s);
  }

  // Structured blocks left of, above and below the box.
  const std::array<double, 4> y_left{0.0, 0.1, 0.3, H};
  for (int i = 0; i < 3; ++i)
    b.quad({0.0, y_left[i]}, {0.1, y_left[i]}, {0.1, y_left[i + 1]}, {0.0, y_left[i + 1]},
           Subdomain::Fluid);
  b.quad({0.1, 0.0}, {0.3, 0.0}, {0.3, 0.1}, {0.1, 0.1}, Subdomain::Fluid);
  b.quad({0.1, 0.3}, {0.3, 0.3}, {0.3, H}, {0.1, H}, Subdomain::Fluid);

  // Beam section and wake, tensor grid right of the box.
  const std::vector<double> xs{0.3, 0.35, 0.4, 0.45, 0.5, 0.55, 0.6,
                               0.7, 0.85, 1.05, 1.3, 1.6, 2.0, L};
  const std::array<double, 6> ys{0.0, 0.1, beam_lo, beam_hi, 0.3, H};
  for (std::size_t i = 0; i + 1 < xs.size(); ++i)
    for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
      const bool beam = j == 2 && xs[i + 1] <= 0.6 + 1e-12;
      b.quad({xs[i], ys[j]}, {xs[i + 1], ys[j]}, {xs[i + 1], ys[j + 1]}, {xs[i], ys[j + 1]},
             beam ? Subdomain::Solid : Subdomain::Fluid);
    }

  b.mesh().circle = CircleBoundary{C, r};
  const double tol = 1e-10;
  auto classify = [&](const Point &pa, const Point &pb, std::size_t) -> MarkerSet {
    if (std::abs(pa.x) < tol && std::abs(pb.x) < tol)
      return bit(Marker::Inflow);
    if (std::abs(pa.x - L) < tol && std::abs(pb.x - L) < tol)
      return bit(Marker::Outflow);
    if ((std::abs(pa.y) < tol && std::abs(pb.y) < tol) ||
        (std::abs(pa.y - H) < tol && std::abs(pb.y - H) < tol))
      return bit(Marker::Wall);
    return bit(Marker::Cylinder);
  };
  Mesh mesh = b.finish(classify, {});
  for (int k = 0; k < refinements; ++k)
    mesh = refine_uniform(mesh);
  return mesh;
}

Mesh build_flapping_mesh(int refinements, const FlappingGeometry &geo) {
  if (refinements < 0)
    throw std::invalid_argument("refinements must be >= 0");
  if (geo.gap <= 0.0 || geo.gap >= geo.fluid_height)
    throw std::invalid_argument("flap gap must lie inside the channel");
  const double flap = 0.5 * (geo.fluid_height - geo.gap);
  const double Hf = geo.fluid_height;
  const std::vector<double> xs{0.0, 0.5, 1.0, 1.5, geo.flap_x0, geo.flap_x1, 2.5,
                               3.0, 4.0, 5.0, 6.5, geo.length};
  const std::vector<double> ys{-geo.wall_thickness,
                               0.0,
                               0.5 * flap,
                               flap,
                               0.5 * Hf,
                               Hf - flap,
                               Hf - 0.5 * flap,
                               Hf,
                               Hf + geo.wall_thickness};
  MeshBuilder b;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i)
    for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
      const double ym = 0.5 * (ys[j] + ys[j + 1]);
      const double xm = 0.5 * (xs[i] + xs[i + 1]);
      const bool wall = ym < 0.0 || ym > Hf;
      const bool in_flap = xm > geo.flap_x0 && xm < geo.flap_x1 && (ym < flap || ym > Hf - flap);
      const Subdomain s = (wall || in_flap) ? Subdomain::Solid : Subdomain::Fluid;
      b.quad({xs[i], ys[j]}, {xs[i + 1], ys[j]}, {xs[i + 1], ys[j + 1]}, {xs[i], ys[j + 1]}, s,
             in_flap ? 1 : 0);
    }
  const double tol = 1e-10;
  Mesh &raw = b.mesh();
  auto classify = [&](const Point &pa, const Point &pb, std::size_t cell) -> MarkerSet {
    const bool solid = raw.cell_subdomain[cell] == Subdomain::Solid;
    if (std::abs(pa.x) < tol && std::abs(pb.x) < tol)
      return bit(solid ? Marker::Clamp : Marker::Inflow);
    if (std::abs(pa.x - geo.length) < tol && std::abs(pb.x - geo.length) < tol)
      return bit(solid ? Marker::Clamp : Marker::Outflow);
    return bit(Marker::Wall);
  };
  auto drag = [&](const Point &pa, const Point &pb) -> MarkerSet {
    const bool on_floor = std::abs(pa.y) < tol && std::abs(pb.y) < tol;
    const bool downstream = std::min(pa.x, pb.x) >= geo.flap_x1 - tol;
    return (on_floor && downstream) ? bit(Marker::DragBoundary) : MarkerSet{0};
  };
  Mesh mesh = b.finish(classify, drag);
  for (int k = 0; k < refinements; ++k)
    mesh = refine_uniform(mesh);
  return mesh;
}

Mesh build_beam_mesh(int nx, int ny, double length, double thickness, int refinements) {
  if (nx < 1 || ny < 1 || refinements < 0)
    throw std::invalid_argument("invalid beam mesh resolution");
  MeshBuilder b;
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) {
      const double x0 = length * i / nx, x1 = length * (i + 1) / nx;
      const double y0 = thickness * j / ny, y1 = thickness * (j + 1) / ny;
      b.quad({x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, Subdomain::Solid);
    }
  auto classify = [](const Point &pa, const Point &pb, std::size_t) -> MarkerSet {
    if (std::abs(pa.x) < 1e-12 && std::abs(pb.x) < 1e-12)
      return bit(Marker::Clamp);
    return bit(Marker::Free);
  };
  Mesh mesh = b.finish(classify, {});
  for (int k = 0; k < refinements; ++k)
    mesh = refine_uniform(mesh);
  return mesh;
}

Mesh refine_uniform(const Mesh &mesh) {
  const MeshTopology topo(mesh);
  Mesh fine;
  fine.circle = mesh.circle;
  fine.refinement_level = mesh.refinement_level + 1;
  fine.vertices = mesh.vertices;

  std::vector<int> edge_mid(topo.edges.size());
  for (std::size_t e = 0; e < topo.edges.size(); ++e) {
    const auto [a, b] = topo.edges[e];
    Point m = 0.5 * (mesh.vertices[a] + mesh.vertices[b]);
    if (mesh.circle && has(topo.edge_markers[e], Marker::Cylinder))
      m = mesh.circle->snap(m);
    edge_mid[e] = static_cast<int>(fine.vertices.size());
    fine.vertices.push_back(m);
  }

  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    const auto &v = mesh.cells[c];
    const auto &ce = topo.cell_edges[c];
    Point centre{};
    for (int k = 0; k < 4; ++k)
      centre += 0.25 * mesh.vertices[v[k]];
    const int ctr = static_cast<int>(fine.vertices.size());
    fine.vertices.push_back(centre);
    const int m0 = edge_mid[ce[0]], m1 = edge_mid[ce[1]], m2 = edge_mid[ce[2]],
              m3 = edge_mid[ce[3]];
    const std::array<std::array<int, 4>, 4> children{{{v[0], m0, ctr, m3},
                                                      {m0, v[1], m1, ctr},
                                                      {ctr, m1, v[2], m2},
                                                      {m3, ctr, m2, v[3]}}};
    for (const auto &child : children) {
      fine.cells.push_back(child);
      fine.cell_subdomain.push_back(mesh.cell_subdomain[c]);
      fine.cell_region.push_back(mesh.cell_region[c]);
    }
  }

  for (const auto &f : mesh.facets) {
    const int e = topo.find_edge(f.vertices[0], f.vertices[1]);
    if (e < 0)
      continue;
    const int m = edge_mid[e];
    fine.facets.push_back({{f.vertices[0], m}, f.markers});
    fine.facets.push_back({{m, f.vertices[1]}, f.markers});
  }
  return fine;
}

void mark_interfaces(Mesh &mesh) {
  const MeshTopology topo(mesh);
  for (auto &f : mesh.facets)
    f.markers &= static_cast<MarkerSet>(~bit(Marker::Interface));
  for (std::size_t e = 0; e < topo.edges.size(); ++e) {
    const auto [c0, c1] = topo.edge_cells[e];
    if (c1 < 0 || mesh.cell_subdomain[c0] == mesh.cell_subdomain[c1])
      continue;
    const auto [a, b] = topo.edges[e];
    auto it = std::find_if(mesh.facets.begin(), mesh.facets.end(), [&](const Facet &f) {
      return edge_key(f.vertices[0], f.vertices[1]) == std::pair{a, b};
    });
    if (it == mesh.facets.end())
      mesh.facets.push_back({{a, b}, bit(Marker::Interface)});
    else
      it->markers |= bit(Marker::Interface);
  }
  std::erase_if(mesh.facets, [](const Facet &f) { return f.markers == 0; });
}

std::vector<std::string> validate(const Mesh &mesh) {
  std::vector<std::string> report;
  auto say = [&](const std::string &s) { report.push_back(s); };
  const auto nv = static_cast<int>(mesh.n_vertices());

  if (mesh.cell_subdomain.size() != mesh.n_cells() || mesh.cell_region.size() != mesh.n_cells()) {
    say("cell attribute arrays do not match the cell count");
    return report;
  }
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    const auto &v = mesh.cells[c];
    bool ok = true;
    for (int k = 0; k < 4; ++k)
      ok = ok && v[k] >= 0 && v[k] < nv;
    if (!ok || v[0] == v[1] || v[0] == v[2] || v[0] == v[3] || v[1] == v[2] || v[1] == v[3] ||
        v[2] == v[3]) {
      say("cell " + std::to_string(c) + ": invalid vertex indices");
      continue;
    }
    const std::array<Point, 4> p{mesh.vertices[v[0]], mesh.vertices[v[1]], mesh.vertices[v[2]],
                                 mesh.vertices[v[3]]};
    static constexpr std::array<double, 5> samples{0.0, 0.1127016653792583, 0.5,
                                                   0.8872983346207417, 1.0};
    double min_det = 1e300;
    for (double xi : samples)
      for (double eta : samples)
        min_det = std::min(min_det, det(bilinear_jacobian(p, xi, eta)));
    if (!(min_det > 0.0)) {
      std::ostringstream s;
      s << "cell " << c << ": non-positive geometry Jacobian (min " << min_det << ")";
      say(s.str());
    }
  }

  const MeshTopology topo(mesh);
  std::vector<int> edge_use(topo.edges.size(), 0);
  for (const auto &ce : topo.cell_edges)
    for (int e : ce)
      ++edge_use[e];
  for (std::size_t e = 0; e < topo.edges.size(); ++e) {
    const auto [a, b] = topo.edges[e];
    const std::string name = "facet (" + std::to_string(a) + "," + std::to_string(b) + ")";
    if (edge_use[e] > 2) {
      say(name + ": shared by more than two cells");
      continue;
    }
    const auto [c0, c1] = topo.edge_cells[e];
    const MarkerSet m = topo.edge_markers[e];
    if (c1 < 0) {
      if (m == 0)
        say(name + ": boundary facet without marker (gap or hanging node)");
      if (has(m, Marker::Interface))
        say(name + ": Interface marker on an outer boundary facet");
      continue;
    }
    const bool mixed = mesh.cell_subdomain[c0] != mesh.cell_subdomain[c1];
    if (mixed && !has(m, Marker::Interface))
      say(name + ": fluid/solid facet not marked Interface");
    if (!mixed && has(m, Marker::Interface))
      say(name + ": Interface marker between cells of one subdomain");
  }
  for (const auto &f : mesh.facets)
    if (topo.find_edge(f.vertices[0], f.vertices[1]) < 0)
      say("marked facet (" + std::to_string(f.vertices[0]) + "," + std::to_string(f.vertices[1]) +
          ") is not a cell edge");

  // Hanging nodes show up as vertices lying inside a boundary edge.
  std::vector<char> used(mesh.n_vertices(), 0);
  for (const auto &c : mesh.cells)
    for (int v : c)
      if (v >= 0 && v < nv)
        used[v] = 1;
  for (std::size_t e = 0; e < topo.edges.size(); ++e) {
    if (topo.edge_cells[e][1] >= 0)
      continue;
    const Point &a = mesh.vertices[topo.edges[e][0]];
    const Point &b = mesh.vertices[topo.edges[e][1]];
    const Point d = b - a;
    const double len2 = dot(d, d);
    for (int v = 0; v < nv; ++v) {
      if (!used[v] || v == topo.edges[e][0] || v == topo.edges[e][1])
        continue;
      const Point w = mesh.vertices[v] - a;
      const double t = dot(w, d) / len2;
      if (t <= 1e-9 || t >= 1 - 1e-9)
        continue;
      const double cross = w.x * d.y - w.y * d.x;
      if (std::abs(cross) < 1e-9 * len2)
        say("vertex " + std::to_string(v) + " hangs on facet (" +
            std::to_string(topo.edges[e][0]) + "," + std::to_string(topo.edges[e][1]) + ")");
    }
  }
  return report;
}

// Line grammar:
//   fsiopt-mesh 1
//   refinement <level>
//   circle <cx> <cy> <r>            (optional)
//   vertices <n>      then n lines: <x> <y>
//   cells <n>         then n lines: <v0> <v1> <v2> <v3> <Fluid|Solid> <region>
//   facets <n>        then n lines: <a> <b> <Marker[,Marker...]>
void write_mesh(std::ostream &out, const Mesh &mesh) {
  out.precision(17);
  out << "fsiopt-mesh 1\n";
  out << "refinement " << mesh.refinement_level << "\n";
  if (mesh.circle)
    out << "circle " << mesh.circle->center.x << " " << mesh.circle->center.y << " "
        << mesh.circle->radius << "\n";
  out << "vertices " << mesh.n_vertices() << "\n";
  for (const auto &p : mesh.vertices)
    out << p.x << " " << p.y << "\n";
  out << "cells " << mesh.n_cells() << "\n";
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    const auto &v = mesh.cells[c];
    out << v[0] << " " << v[1] << " " << v[2] << " " << v[3] << " "
        << (mesh.cell_subdomain[c] == Subdomain::Fluid ? "Fluid" : "Solid") << " "
        << mesh.cell_region[c] << "\n";
  }
  out << "facets " << mesh.facets.size() << "\n";
  for (const auto &f : mesh.facets)
    out << f.vertices[0] << " " << f.vertices[1] << " " << marker_set_names(f.markers) << "\n";
}

Mesh read_mesh(std::istream &in) {
  auto fail = [](const std::string &what) {
    throw std::runtime_error("mesh file: " + what);
  };
  Mesh mesh;
  std::string word;
  int version = 0;
  if (!(in >> word >> version) || word != "fsiopt-mesh" || version != 1)
    fail("missing 'fsiopt-mesh 1' header");
  while (in >> word) {
    std::size_t n = 0;
    if (word == "refinement") {
      in >> mesh.refinement_level;
    } else if (word == "circle") {
      CircleBoundary c;
      in >> c.center.x >> c.center.y >> c.radius;
      mesh.circle = c;
    } else if (word == "vertices") {
      in >> n;
      mesh.vertices.resize(n);
      for (auto &p : mesh.vertices)
        in >> p.x >> p.y;
    } else if (word == "cells") {
      in >> n;
      for (std::size_t c = 0; c < n; ++c) {
        std::array<int, 4> v{};
        std::string sub;
        int region = 0;
        in >> v[0] >> v[1] >> v[2] >> v[3] >> sub >> region;
        mesh.cells.push_back(v);
        if (sub == "Fluid")
          mesh.cell_subdomain.push_back(Subdomain::Fluid);
        else if (sub == "Solid")
          mesh.cell_subdomain.push_back(Subdomain::Solid);
        else
          fail("unknown subdomain '" + sub + "'");
        mesh.cell_region.push_back(region);
      }
    } else if (word == "facets") {
      in >> n;
      for (std::size_t f = 0; f < n; ++f) {
        Facet facet;
        std::string names;
        in >> facet.vertices[0] >> facet.vertices[1] >> names;
        facet.markers = parse_marker_set(names);
        mesh.facets.push_back(facet);
      }
    } else {
      fail("unexpected token '" + word + "'");
    }
    if (!in)
      fail("truncated section '" + word + "'");
  }
  return mesh;
}

} // namespace fsiopt
