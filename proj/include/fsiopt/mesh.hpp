#pragma once

#include "fsiopt/tensor.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fsiopt {

using Point = Vec2;

enum class Subdomain : std::uint8_t { Fluid, Solid };

/// Boundary and interface facet markers. A facet may carry several
/// (e.g. a fluid/solid facet that is also part of the drag boundary).
enum class Marker : std::uint16_t {
  Inflow = 1u << 0,
  Outflow = 1u << 1,
  Wall = 1u << 2,
  Cylinder = 1u << 3,
  Interface = 1u << 4,
  DragBoundary = 1u << 5,
  Clamp = 1u << 6,
  Free = 1u << 7,
};

using MarkerSet = std::uint16_t;

inline constexpr MarkerSet bit(Marker m) { return static_cast<MarkerSet>(m); }
inline constexpr bool has(MarkerSet s, Marker m) { return (s & bit(m)) != 0; }

std::string_view marker_name(Marker m);
/// Parses a marker name ("Inflow", "wall", ...); throws std::invalid_argument.
Marker parse_marker(std::string_view name);
/// Comma separated marker names.
std::string marker_set_names(MarkerSet s);
MarkerSet parse_marker_set(std::string_view names);

inline constexpr std::array<Marker, 8> all_markers{
    Marker::Inflow, Marker::Outflow,      Marker::Wall,  Marker::Cylinder,
    Marker::Interface, Marker::DragBoundary, Marker::Clamp, Marker::Free};

struct CircleBoundary {
  Point center;
  double radius = 0.0;

  Point snap(const Point &p) const;
};

/// Marked facet given by its two end vertices.
struct Facet {
  std::array<int, 2> vertices{};
  MarkerSet markers = 0;
};

/// Conforming quadrilateral mesh of the reference domain with fluid/solid
/// labels. Cells list their vertices counterclockwise.
struct Mesh {
  std::vector<Point> vertices;
  std::vector<std::array<int, 4>> cells;
  std::vector<Subdomain> cell_subdomain;
  /// Control region id per cell (0 = none); solid material parameters can be
  /// bound to a region.
  std::vector<int> cell_region;
  std::vector<Facet> facets;
  /// Curved boundary; vertices on Cylinder facets are snapped to it.
  std::optional<CircleBoundary> circle;
  int refinement_level = 0;

  std::size_t n_cells() const { return cells.size(); }
  std::size_t n_vertices() const { return vertices.size(); }
  std::size_t count(Subdomain s) const;

  /// Markers of the facet joining vertices a and b (0 if unmarked).
  MarkerSet facet_markers(int a, int b) const;

  double cell_diameter(std::size_t c) const;
  double cell_area(std::size_t c) const;
};

/// Edge-based connectivity derived from a Mesh.
struct MeshTopology {
  /// Edge vertex pairs, smaller index first, in order of first appearance.
  std::vector<std::array<int, 2>> edges;
  /// cell_edges[c][k] joins cell vertices k and (k+1)%4.
  std::vector<std::array<int, 4>> cell_edges;
  /// Up to two adjacent cells per edge (-1 if absent).
  std::vector<std::array<int, 2>> edge_cells;
  std::vector<MarkerSet> edge_markers;

  explicit MeshTopology(const Mesh &mesh);
  int find_edge(int a, int b) const;

private:
  std::map<std::pair<int, int>, int> lookup_;
};

/// Channel with cylinder and attached elastic beam. Fluid in the channel
/// [0,2.5]x[0,0.41]; circle C=(0.2,0.2), r=0.05; beam up to x=0.6 with
/// 0.19 <= y <= 0.21.
Mesh build_fsi_benchmark_mesh(int refinements);

struct FlappingGeometry {
  double length = 8.0;
  double fluid_height = 1.51;
  double wall_thickness = 0.1;
  double flap_x0 = 1.9788;
  double flap_x1 = 2.0;
  /// Open gap between the two flap tips.
  double gap = 0.61;
};

/// Channel [0,8]x[-0.1,1.61] (cm) with elastic wall layers and two flaps in
/// control region 1.
Mesh build_flapping_mesh(int refinements, const FlappingGeometry &geo = {});

/// Solid-only cantilever [0,length]x[0,thickness] clamped at x=0.
Mesh build_beam_mesh(int nx, int ny, double length, double thickness, int refinements);

/// Splits every quad into four; markers are inherited, circle vertices
/// snapped.
Mesh refine_uniform(const Mesh &mesh);

/// Returns one human readable line per invariant violation.
std::vector<std::string> validate(const Mesh &mesh);

/// Recomputes Interface markers from cell subdomains (adds missing, removes
/// stale ones).
void mark_interfaces(Mesh &mesh);

void write_mesh(std::ostream &out, const Mesh &mesh);
Mesh read_mesh(std::istream &in);

} // namespace fsiopt
