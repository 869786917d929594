#include "delaunay.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace vishape::detail {

namespace {

struct Tri {
  std::array<int, 3> v;
  std::array<int, 3> nbr;  // neighbor across edge opposite v[i], -1 if none
  bool alive = true;
};

double orient(const Vec2& a, const Vec2& b, const Vec2& p) {
  return (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
}

// > 0 iff p lies strictly inside the circumcircle of CCW triangle (a, b, c).
long double incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& p) {
  const long double ax = a.x() - p.x(), ay = a.y() - p.y();
  const long double bx = b.x() - p.x(), by = b.y() - p.y();
  const long double cx = c.x() - p.x(), cy = c.y() - p.y();
  const long double a2 = ax * ax + ay * ay;
  const long double b2 = bx * bx + by * by;
  const long double c2 = cx * cx + cy * cy;
  return ax * (by * c2 - b2 * cy) - ay * (bx * c2 - b2 * cx) + a2 * (bx * cy - by * cx);
}

}  // namespace

std::vector<std::array<int, 3>> delaunay_triangulate(const std::vector<Vec2>& points) {
  const int n = static_cast<int>(points.size());
  if (n < 3) throw MeshError("need at least 3 points to triangulate");

  std::vector<Vec2> pts = points;
  pts.emplace_back(0.5 - 3000.0, -2000.0);
  pts.emplace_back(0.5 + 3000.0, -2000.0);
  pts.emplace_back(0.5, 4000.0);

  std::vector<Tri> tris;
  tris.push_back({{n, n + 1, n + 2}, {-1, -1, -1}, true});

  int last = 0;  // walk seed

  std::vector<int> cavity, stack;
  std::vector<char> in_cavity;

  for (int ip = 0; ip < n; ++ip) {
    const Vec2& p = pts[ip];

    // locate containing triangle by orientation walk
    int cur = last;
    if (!tris[cur].alive) {
      cur = -1;
      for (int t = static_cast<int>(tris.size()) - 1; t >= 0; --t)
        if (tris[t].alive) {
          cur = t;
          break;
        }
    }
    bool found = false;
    for (int step = 0; step < 4 * static_cast<int>(tris.size()) + 64; ++step) {
      const Tri& t = tris[cur];
      int move = -2;  // -2: no violated edge, point is inside
      for (int k = 0; k < 3; ++k) {
        const Vec2& a = pts[t.v[(k + 1) % 3]];
        const Vec2& b = pts[t.v[(k + 2) % 3]];
        if (orient(a, b, p) < -1e-30) {
          move = t.nbr[k];
          break;
        }
      }
      if (move == -2) {
        found = true;
        break;
      }
      if (move == -1) break;  // walked out of the hull; use fallback
      cur = move;
    }
    if (!found) {
      // exhaustive fallback
      cur = -1;
      for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
        if (!tris[t].alive) continue;
        const Tri& tt = tris[t];
        bool inside = true;
        for (int k = 0; k < 3 && inside; ++k)
          inside = orient(pts[tt.v[(k + 1) % 3]], pts[tt.v[(k + 2) % 3]], p) >= -1e-14;
        if (inside) {
          cur = t;
          break;
        }
      }
      if (cur < 0) throw MeshError("point location failed during triangulation");
    }

    // grow cavity of triangles whose circumcircle contains p
    cavity.clear();
    stack.assign(1, cur);
    in_cavity.assign(tris.size(), 0);
    in_cavity[cur] = 1;
    while (!stack.empty()) {
      int t = stack.back();
      stack.pop_back();
      cavity.push_back(t);
      for (int k = 0; k < 3; ++k) {
        int nb = tris[t].nbr[k];
        if (nb < 0 || in_cavity[nb]) continue;
        const Tri& tt = tris[nb];
        if (incircle(pts[tt.v[0]], pts[tt.v[1]], pts[tt.v[2]], p) > 0.0L) {
          in_cavity[nb] = 1;
          stack.push_back(nb);
        }
      }
    }

    // collect boundary edges (a, b, outside neighbor), CCW around cavity
    struct BEdge {
      int a, b, outside;
    };
    std::vector<BEdge> boundary;
    for (int t : cavity) {
      for (int k = 0; k < 3; ++k) {
        int nb = tris[t].nbr[k];
        if (nb >= 0 && in_cavity[nb]) continue;
        boundary.push_back({tris[t].v[(k + 1) % 3], tris[t].v[(k + 2) % 3], nb});
      }
    }
    for (int t : cavity) tris[t].alive = false;

    // retriangulate cavity with a fan from p
    std::map<int, std::pair<int, int>> open_edge;  // other endpoint -> (tri, slot)
    int first_new = -1;
    for (const BEdge& e : boundary) {
      Tri nt;
      nt.v = {ip, e.a, e.b};
      nt.nbr = {e.outside, -1, -1};
      int id = static_cast<int>(tris.size());
      tris.push_back(nt);
      if (first_new < 0) first_new = id;
      if (e.outside >= 0) {
        Tri& out = tris[e.outside];
        for (int k = 0; k < 3; ++k) {
          int u = out.v[(k + 1) % 3], w = out.v[(k + 2) % 3];
          if ((u == e.b && w == e.a) || (u == e.a && w == e.b)) out.nbr[k] = id;
        }
      }
      // link radial edges (p, e.a) and (p, e.b) with sibling fan triangles
      for (int side = 1; side <= 2; ++side) {
        int other = (side == 1) ? e.b : e.a;  // edge (p, other) is opposite v[side]
        auto it = open_edge.find(other);
        if (it == open_edge.end()) {
          open_edge[other] = {id, side};
        } else {
          tris[id].nbr[side] = it->second.first;
          tris[it->second.first].nbr[it->second.second] = id;
          open_edge.erase(it);
        }
      }
    }
    if (!open_edge.empty()) throw MeshError("cavity retriangulation failed");
    last = first_new;
  }

  std::vector<std::array<int, 3>> result;
  for (const Tri& t : tris) {
    if (!t.alive) continue;
    if (t.v[0] >= n || t.v[1] >= n || t.v[2] >= n) continue;
    result.push_back(t.v);
  }
  return result;
}

}  // namespace vishape::detail
