#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "vishape/common.hpp"

namespace vishape {

enum class CellLabel : std::uint8_t { Outer = 0, Inner = 1 };

// Conforming P1 triangulation of the hold-all domain (0,1)^2 with labeled
// subdomains. The interface is the set of edges separating Inner from Outer
// cells; it is derived from the labels, not stored as a separate curve.
// Instances are immutable after construction.
class TriangleMesh {
 public:
  TriangleMesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> cells,
               std::vector<CellLabel> labels);

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_cells() const { return static_cast<int>(cells_.size()); }
  const Vec2& vertex(int v) const { return vertices_[v]; }
  const std::array<int, 3>& cell(int c) const { return cells_[c]; }
  CellLabel label(int c) const { return labels_[c]; }
  const std::vector<Vec2>& vertices() const { return vertices_; }
  const std::vector<std::array<int, 3>>& cells() const { return cells_; }
  const std::vector<CellLabel>& labels() const { return labels_; }

  double cell_area(int c) const { return areas_[c]; }
  double cell_diameter(int c) const;
  double min_cell_diameter() const;
  double max_cell_diameter() const;

  // Vertex ids on the boundary of the unit square, sorted ascending.
  const std::vector<int>& outer_boundary() const { return outer_boundary_; }
  bool on_outer_boundary(int v) const { return is_boundary_[v] != 0; }

  // Interface edges ordered into closed loops, each edge oriented with the
  // Inner side on its left. loop_offsets() partitions the edge list.
  const std::vector<std::array<int, 2>>& interface_edges() const { return interface_edges_; }
  const std::vector<int>& interface_loop_offsets() const { return loop_offsets_; }
  int interface_loop_count() const { return static_cast<int>(loop_offsets_.size()) - 1; }
  bool on_interface(int v) const { return is_interface_vertex_[v] != 0; }

  // Neighbor cell across the edge opposite to local vertex i, or -1.
  const std::array<int, 3>& cell_neighbors(int c) const { return neighbors_[c]; }

  std::vector<int> cells_around_vertex(int v) const;
  std::vector<int> vertex_neighbors(int v) const;

  // True if any cell incident to v is Inner (v lies in the closure of the
  // inner subdomain).
  bool vertex_touches_inner(int v) const { return touches_inner_[v] != 0; }

 private:
  std::vector<Vec2> vertices_;
  std::vector<std::array<int, 3>> cells_;
  std::vector<CellLabel> labels_;

  std::vector<double> areas_;
  std::vector<std::array<int, 3>> neighbors_;
  std::vector<int> outer_boundary_;
  std::vector<std::uint8_t> is_boundary_;
  std::vector<std::array<int, 2>> interface_edges_;
  std::vector<int> loop_offsets_;
  std::vector<std::uint8_t> is_interface_vertex_;
  std::vector<std::uint8_t> touches_inner_;
  std::vector<int> vtx_cell_offsets_, vtx_cell_data_;
  std::vector<int> vtx_vtx_offsets_, vtx_vtx_data_;

  void build_derived();
  void validate() const;
};

// Vertex transport x -> x + d(x). Throws CellInversionError if any deformed
// cell has non-positive signed area; throws MeshError if the displacement is
// nonzero on the outer boundary.
TriangleMesh deform_mesh(const TriangleMesh& mesh, const std::vector<Vec2>& displacement);

// Total Euclidean length of the interface polygon(s).
double interface_length(const TriangleMesh& mesh);

// Interface vertices plus their one-ring neighbors, sorted ascending.
std::vector<int> interface_adjacent_vertices(const TriangleMesh& mesh);

// Closed analytic curve used to seed fitted interfaces (circles/ellipses).
class InterfaceCurve {
 public:
  static InterfaceCurve circle(const Vec2& center, double radius);
  static InterfaceCurve ellipse(const Vec2& center, double semi_x, double semi_y);

  double perimeter() const { return perimeter_; }
  bool contains(const Vec2& p) const;
  // Point at arc length s from the parameter origin, s in [0, perimeter).
  Vec2 point_at(double s) const;
  // Approximate unsigned distance to the curve, used for lattice banding.
  double band_distance(const Vec2& p) const;

 private:
  InterfaceCurve() = default;
  Vec2 center_{0.5, 0.5};
  double a_ = 0, b_ = 0;
  double perimeter_ = 0;
  std::vector<double> arclen_table_;  // cumulative arc length at uniform parameters
};

// Deterministic fitted mesh of (0,1)^2 with the given interface curve.
// Edge lengths target h; cell diameters land within [0.4, 2.5]*h.
TriangleMesh generate_interface_mesh(const InterfaceCurve& curve, double target_edge_length);

// Circle of the given radius centered at (0.5, 0.5).
TriangleMesh generate_disk_mesh(double radius, double target_edge_length);

// Structured n x n grid of the unit square, split into 2n^2 cells, all Outer.
TriangleMesh generate_unit_square_mesh(int n);

// Global 4-way refinement by edge midpoints; labels inherit.
TriangleMesh refine_uniform(const TriangleMesh& mesh);

// Conforming longest-edge bisection of the marked cells (with the usual
// compatibility recursion into neighbors); labels inherit.
TriangleMesh refine_cells(const TriangleMesh& mesh, const std::vector<int>& marked);

}  // namespace vishape
