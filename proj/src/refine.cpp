#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "vishape/mesh.hpp"

namespace vishape {

TriangleMesh refine_uniform(const TriangleMesh& mesh) {
  std::vector<Vec2> pts(mesh.vertices());
  std::map<std::pair<int, int>, int> midpoint;
  auto mid = [&](int u, int v) {
    auto key = std::minmax(u, v);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    int id = static_cast<int>(pts.size());
    pts.push_back(0.5 * (mesh.vertex(u) + mesh.vertex(v)));
    midpoint[key] = id;
    return id;
  };

  std::vector<std::array<int, 3>> cells;
  std::vector<CellLabel> labels;
  cells.reserve(4 * mesh.num_cells());
  labels.reserve(4 * mesh.num_cells());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& t = mesh.cell(c);
    const int m01 = mid(t[0], t[1]), m12 = mid(t[1], t[2]), m20 = mid(t[2], t[0]);
    const CellLabel lab = mesh.label(c);
    for (const auto& child : {std::array<int, 3>{t[0], m01, m20}, {m01, t[1], m12},
                              {m20, m12, t[2]}, {m01, m12, m20}}) {
      cells.push_back(child);
      labels.push_back(lab);
    }
  }
  return TriangleMesh(std::move(pts), std::move(cells), std::move(labels));
}

namespace {

struct Working {
  std::vector<Vec2> pts;
  std::vector<std::array<int, 3>> cells;
  std::vector<CellLabel> labels;
  std::vector<char> alive;
  std::map<std::pair<int, int>, std::array<int, 2>> edge_cells;  // up to 2 alive cells

  void edge_add(int u, int v, int c) {
    auto [it, inserted] = edge_cells.try_emplace(std::minmax(u, v), std::array<int, 2>{-1, -1});
    auto& slots = it->second;
    if (slots[0] < 0)
      slots[0] = c;
    else if (slots[1] < 0)
      slots[1] = c;
    else
      throw MeshError("edge shared by more than two cells during refinement");
  }

  void edge_remove(int u, int v, int c) {
    auto it = edge_cells.find(std::minmax(u, v));
    if (it == edge_cells.end()) return;
    auto& slots = it->second;
    if (slots[0] == c)
      slots[0] = -1;
    else if (slots[1] == c)
      slots[1] = -1;
  }

  int edge_other_cell(int u, int v, int c) const {
    auto it = edge_cells.find(std::minmax(u, v));
    if (it == edge_cells.end()) return -1;
    if (it->second[0] == c) return it->second[1];
    return it->second[0];
  }

  int add_cell(const std::array<int, 3>& t, CellLabel lab) {
    int id = static_cast<int>(cells.size());
    cells.push_back(t);
    labels.push_back(lab);
    alive.push_back(1);
    for (int k = 0; k < 3; ++k) edge_add(t[(k + 1) % 3], t[(k + 2) % 3], id);
    return id;
  }

  void kill_cell(int c) {
    const auto& t = cells[c];
    for (int k = 0; k < 3; ++k) edge_remove(t[(k + 1) % 3], t[(k + 2) % 3], c);
    alive[c] = 0;
  }

  // longest edge with deterministic tie-breaking; returned as (u, v) sorted
  std::pair<int, int> longest_edge(int c) const {
    const auto& t = cells[c];
    std::pair<int, int> best{-1, -1};
    std::tuple<double, int, int> best_key{-1.0, 0, 0};
    for (int k = 0; k < 3; ++k) {
      auto e = std::minmax(t[(k + 1) % 3], t[(k + 2) % 3]);
      const double len = (pts[e.first] - pts[e.second]).norm();
      std::tuple<double, int, int> key{len, -e.first, -e.second};
      if (key > best_key) {
        best_key = key;
        best = e;
      }
    }
    return best;
  }

  // split cell c at edge (u, v) with new midpoint vertex m
  void bisect_at(int c, int u, int v, int m) {
    const auto t = cells[c];
    const CellLabel lab = labels[c];
    int k = -1;
    for (int i = 0; i < 3; ++i) {
      auto e = std::minmax(t[(i + 1) % 3], t[(i + 2) % 3]);
      if (e == std::minmax(u, v)) k = i;
    }
    if (k < 0) throw MeshError("bisection edge not found in cell");
    kill_cell(c);
    add_cell({t[k], t[(k + 1) % 3], m}, lab);
    add_cell({t[k], m, t[(k + 2) % 3]}, lab);
  }
};

}  // namespace

TriangleMesh refine_cells(const TriangleMesh& mesh, const std::vector<int>& marked) {
  Working w;
  w.pts = mesh.vertices();
  w.cells.reserve(2 * mesh.num_cells());
  for (int c = 0; c < mesh.num_cells(); ++c) w.add_cell(mesh.cell(c), mesh.label(c));

  std::vector<int> stack;
  for (int c : marked) {
    if (c < 0 || c >= mesh.num_cells()) throw MeshError("marked cell index out of range");
    stack.assign(1, c);
    while (!stack.empty()) {
      int cur = stack.back();
      if (!w.alive[cur]) {
        stack.pop_back();
        continue;
      }
      auto e = w.longest_edge(cur);
      int nbr = w.edge_other_cell(e.first, e.second, cur);
      if (nbr >= 0 && w.longest_edge(nbr) != e) {
        stack.push_back(nbr);  // make the neighbor compatible first
        continue;
      }
      int m = static_cast<int>(w.pts.size());
      w.pts.push_back(0.5 * (w.pts[e.first] + w.pts[e.second]));
      w.bisect_at(cur, e.first, e.second, m);
      if (nbr >= 0) w.bisect_at(nbr, e.first, e.second, m);
      stack.pop_back();
    }
  }

  std::vector<std::array<int, 3>> cells;
  std::vector<CellLabel> labels;
  for (size_t c = 0; c < w.cells.size(); ++c) {
    if (!w.alive[c]) continue;
    cells.push_back(w.cells[c]);
    labels.push_back(w.labels[c]);
  }
  return TriangleMesh(w.pts, std::move(cells), std::move(labels));
}

}  // namespace vishape
