#include "vishape/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace vishape {

namespace {

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x()));
}

bool on_unit_square_boundary(const Vec2& p, double tol = 1e-12) {
  return std::abs(p.x()) <= tol || std::abs(p.x() - 1.0) <= tol || std::abs(p.y()) <= tol ||
         std::abs(p.y() - 1.0) <= tol;
}

}  // namespace

TriangleMesh::TriangleMesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> cells,
                           std::vector<CellLabel> labels)
    : vertices_(std::move(vertices)), cells_(std::move(cells)), labels_(std::move(labels)) {
  if (labels_.size() != cells_.size())
    throw MeshError("label count does not match cell count");
  build_derived();
  validate();
}

void TriangleMesh::build_derived() {
  const int nv = num_vertices();
  const int nc = num_cells();

  areas_.resize(nc);
  for (int c = 0; c < nc; ++c) {
    const auto& t = cells_[c];
    for (int k = 0; k < 3; ++k)
      if (t[k] < 0 || t[k] >= nv) throw MeshError("cell references invalid vertex");
    areas_[c] = signed_area(vertices_[t[0]], vertices_[t[1]], vertices_[t[2]]);
  }

  // cell adjacency via shared edges
  neighbors_.assign(nc, {-1, -1, -1});
  std::map<std::pair<int, int>, std::pair<int, int>> edge_owner;  // edge -> (cell, local)
  for (int c = 0; c < nc; ++c) {
    const auto& t = cells_[c];
    for (int k = 0; k < 3; ++k) {
      int u = t[(k + 1) % 3], v = t[(k + 2) % 3];
      auto key = std::minmax(u, v);
      auto it = edge_owner.find(key);
      if (it == edge_owner.end()) {
        edge_owner[key] = {c, k};
      } else {
        if (it->second.first == -2) throw MeshError("edge shared by more than two cells");
        neighbors_[c][k] = it->second.first;
        neighbors_[it->second.first][it->second.second] = c;
        it->second.first = -2;
      }
    }
  }

  is_boundary_.assign(nv, 0);
  outer_boundary_.clear();
  for (int v = 0; v < nv; ++v) {
    if (on_unit_square_boundary(vertices_[v])) {
      is_boundary_[v] = 1;
      outer_boundary_.push_back(v);
    }
  }

  // vertex -> cells CSR
  vtx_cell_offsets_.assign(nv + 1, 0);
  for (int c = 0; c < nc; ++c)
    for (int k = 0; k < 3; ++k) ++vtx_cell_offsets_[cells_[c][k] + 1];
  for (int v = 0; v < nv; ++v) vtx_cell_offsets_[v + 1] += vtx_cell_offsets_[v];
  vtx_cell_data_.resize(vtx_cell_offsets_[nv]);
  {
    std::vector<int> cursor(vtx_cell_offsets_.begin(), vtx_cell_offsets_.end() - 1);
    for (int c = 0; c < nc; ++c)
      for (int k = 0; k < 3; ++k) vtx_cell_data_[cursor[cells_[c][k]]++] = c;
  }

  // vertex -> vertex CSR (unique, sorted)
  {
    std::vector<std::set<int>> nb(nv);
    for (int c = 0; c < nc; ++c) {
      const auto& t = cells_[c];
      for (int k = 0; k < 3; ++k) {
        nb[t[k]].insert(t[(k + 1) % 3]);
        nb[t[k]].insert(t[(k + 2) % 3]);
      }
    }
    vtx_vtx_offsets_.assign(nv + 1, 0);
    for (int v = 0; v < nv; ++v) vtx_vtx_offsets_[v + 1] = vtx_vtx_offsets_[v] + static_cast<int>(nb[v].size());
    vtx_vtx_data_.resize(vtx_vtx_offsets_[nv]);
    for (int v = 0; v < nv; ++v)
      std::copy(nb[v].begin(), nb[v].end(), vtx_vtx_data_.begin() + vtx_vtx_offsets_[v]);
  }

  touches_inner_.assign(nv, 0);
  for (int c = 0; c < nc; ++c)
    if (labels_[c] == CellLabel::Inner)
      for (int k = 0; k < 3; ++k) touches_inner_[cells_[c][k]] = 1;

  // interface edges: label changes across an edge; oriented Inner-on-left
  std::vector<std::array<int, 2>> raw;
  for (int c = 0; c < nc; ++c) {
    if (labels_[c] != CellLabel::Inner) continue;
    const auto& t = cells_[c];
    for (int k = 0; k < 3; ++k) {
      int n = neighbors_[c][k];
      if (n >= 0 && labels_[n] == CellLabel::Outer) {
        // edge opposite local vertex k, traversed CCW within cell c keeps the
        // cell (Inner) on the left
        raw.push_back({t[(k + 1) % 3], t[(k + 2) % 3]});
      }
    }
  }

  is_interface_vertex_.assign(nv, 0);
  for (const auto& e : raw) {
    is_interface_vertex_[e[0]] = 1;
    is_interface_vertex_[e[1]] = 1;
  }

  // chain oriented edges into loops
  interface_edges_.clear();
  loop_offsets_.clear();
  loop_offsets_.push_back(0);
  std::multimap<int, int> start_of;  // start vertex -> raw edge index
  for (int i = 0; i < static_cast<int>(raw.size()); ++i) start_of.insert({raw[i][0], i});
  std::vector<char> used(raw.size(), 0);
  for (int i = 0; i < static_cast<int>(raw.size()); ++i) {
    if (used[i]) continue;
    int cur = i;
    int loop_start_vertex = raw[i][0];
    while (true) {
      used[cur] = 1;
      interface_edges_.push_back(raw[cur]);
      int next_vertex = raw[cur][1];
      if (next_vertex == loop_start_vertex) break;
      auto range = start_of.equal_range(next_vertex);
      int next = -1;
      for (auto it = range.first; it != range.second; ++it)
        if (!used[it->second]) {
          next = it->second;
          break;
        }
      if (next < 0) throw MeshError("interface edges do not close into loops");
      cur = next;
    }
    loop_offsets_.push_back(static_cast<int>(interface_edges_.size()));
  }
}

void TriangleMesh::validate() const {
  for (int c = 0; c < num_cells(); ++c)
    if (areas_[c] <= 0.0) throw MeshError("cell " + std::to_string(c) + " has non-positive area");
  // every interface edge must separate exactly one Inner and one Outer cell;
  // guaranteed by construction of the edge list, loops checked during chaining
}

double TriangleMesh::cell_diameter(int c) const {
  const auto& t = cells_[c];
  double d = 0;
  for (int k = 0; k < 3; ++k)
    d = std::max(d, (vertices_[t[k]] - vertices_[t[(k + 1) % 3]]).norm());
  return d;
}

double TriangleMesh::min_cell_diameter() const {
  double d = std::numeric_limits<double>::max();
  for (int c = 0; c < num_cells(); ++c) d = std::min(d, cell_diameter(c));
  return d;
}

double TriangleMesh::max_cell_diameter() const {
  double d = 0;
  for (int c = 0; c < num_cells(); ++c) d = std::max(d, cell_diameter(c));
  return d;
}

std::vector<int> TriangleMesh::cells_around_vertex(int v) const {
  return {vtx_cell_data_.begin() + vtx_cell_offsets_[v], vtx_cell_data_.begin() + vtx_cell_offsets_[v + 1]};
}

std::vector<int> TriangleMesh::vertex_neighbors(int v) const {
  return {vtx_vtx_data_.begin() + vtx_vtx_offsets_[v], vtx_vtx_data_.begin() + vtx_vtx_offsets_[v + 1]};
}

TriangleMesh deform_mesh(const TriangleMesh& mesh, const std::vector<Vec2>& displacement) {
  if (static_cast<int>(displacement.size()) != mesh.num_vertices())
    throw MeshError("displacement size does not match vertex count");
  for (int v : mesh.outer_boundary())
    if (displacement[v].norm() > 1e-13)
      throw MeshError("displacement must vanish on the outer boundary");

  std::vector<Vec2> moved(mesh.vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) moved[v] += displacement[v];

  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& t = mesh.cell(c);
    if (signed_area(moved[t[0]], moved[t[1]], moved[t[2]]) <= 0.0)
      throw CellInversionError("deformation inverts cell " + std::to_string(c));
  }
  return TriangleMesh(std::move(moved), mesh.cells(), mesh.labels());
}

double interface_length(const TriangleMesh& mesh) {
  double len = 0;
  for (const auto& e : mesh.interface_edges())
    len += (mesh.vertex(e[0]) - mesh.vertex(e[1])).norm();
  return len;
}

std::vector<int> interface_adjacent_vertices(const TriangleMesh& mesh) {
  std::set<int> result;
  for (const auto& e : mesh.interface_edges()) {
    for (int v : {e[0], e[1]}) {
      result.insert(v);
      for (int w : mesh.vertex_neighbors(v)) result.insert(w);
    }
  }
  return {result.begin(), result.end()};
}

}  // namespace vishape
