#include <cmath>
#include <cstdint>
#include <numbers>

#include "delaunay.hpp"
#include "vishape/mesh.hpp"

namespace vishape {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// deterministic jitter in [-0.5, 0.5); breaks lattice cocircularity
double hash_centered(std::uint64_t k) {
  return static_cast<double>(splitmix64(k) >> 11) * 0x1.0p-53 - 0.5;
}

constexpr int kArcSamples = 8192;

}  // namespace

InterfaceCurve InterfaceCurve::circle(const Vec2& center, double radius) {
  return ellipse(center, radius, radius);
}

InterfaceCurve InterfaceCurve::ellipse(const Vec2& center, double semi_x, double semi_y) {
  if (semi_x <= 0 || semi_y <= 0) throw MeshError("ellipse semi-axes must be positive");
  InterfaceCurve c;
  c.center_ = center;
  c.a_ = semi_x;
  c.b_ = semi_y;
  c.arclen_table_.resize(kArcSamples + 1);
  c.arclen_table_[0] = 0.0;
  const double dt = 2.0 * std::numbers::pi / kArcSamples;
  Vec2 prev = center + Vec2(semi_x, 0.0);
  for (int i = 1; i <= kArcSamples; ++i) {
    const double t = i * dt;
    Vec2 p = center + Vec2(semi_x * std::cos(t), semi_y * std::sin(t));
    c.arclen_table_[i] = c.arclen_table_[i - 1] + (p - prev).norm();
    prev = p;
  }
  c.perimeter_ = c.arclen_table_.back();
  return c;
}

bool InterfaceCurve::contains(const Vec2& p) const {
  const double qx = (p.x() - center_.x()) / a_;
  const double qy = (p.y() - center_.y()) / b_;
  return qx * qx + qy * qy < 1.0;
}

Vec2 InterfaceCurve::point_at(double s) const {
  s = std::fmod(s, perimeter_);
  if (s < 0) s += perimeter_;
  auto it = std::upper_bound(arclen_table_.begin(), arclen_table_.end(), s);
  int i = static_cast<int>(it - arclen_table_.begin()) - 1;
  i = std::clamp(i, 0, kArcSamples - 1);
  const double seg = arclen_table_[i + 1] - arclen_table_[i];
  const double frac = seg > 0 ? (s - arclen_table_[i]) / seg : 0.0;
  const double dt = 2.0 * std::numbers::pi / kArcSamples;
  const double t = (i + frac) * dt;
  return center_ + Vec2(a_ * std::cos(t), b_ * std::sin(t));
}

double InterfaceCurve::band_distance(const Vec2& p) const {
  const double qx = (p.x() - center_.x()) / a_;
  const double qy = (p.y() - center_.y()) / b_;
  const double q = std::sqrt(qx * qx + qy * qy);
  if (q < 1e-12) return std::min(a_, b_);
  // first-order distance estimate |q - 1| / |grad q|
  const double gx = qx / (a_ * q), gy = qy / (b_ * q);
  return std::abs(q - 1.0) / std::hypot(gx, gy);
}

TriangleMesh generate_interface_mesh(const InterfaceCurve& curve, double h) {
  if (h <= 0) throw MeshError("target edge length must be positive");

  std::vector<Vec2> pts;

  // square corners and boundary points, coordinates exact
  const int nb = std::max(1, static_cast<int>(std::llround(1.0 / h)));
  pts.emplace_back(0.0, 0.0);
  pts.emplace_back(1.0, 0.0);
  pts.emplace_back(1.0, 1.0);
  pts.emplace_back(0.0, 1.0);
  for (int i = 1; i < nb; ++i) {
    const double s = static_cast<double>(i) / nb;
    pts.emplace_back(s, 0.0);
    pts.emplace_back(1.0, s);
    pts.emplace_back(1.0 - s, 1.0);
    pts.emplace_back(0.0, 1.0 - s);
  }

  // interface points, equally spaced in arc length
  const int ncv = std::max(12, static_cast<int>(std::llround(curve.perimeter() / h)));
  const int first_curve_point = static_cast<int>(pts.size());
  for (int i = 0; i < ncv; ++i) pts.push_back(curve.point_at(curve.perimeter() * i / ncv));
  for (int i = first_curve_point; i < static_cast<int>(pts.size()); ++i) {
    const Vec2& p = pts[i];
    if (p.x() < h || p.x() > 1 - h || p.y() < h || p.y() > 1 - h)
      throw MeshError("interface curve too close to the hold-all boundary");
  }

  // hexagonal interior lattice, kept away from boundary and interface bands
  const double dy = h * std::sqrt(3.0) / 2.0;
  std::uint64_t idx = 0;
  for (int j = 1;; ++j) {
    const double y = j * dy;
    if (y > 1.0 - 0.55 * h) break;
    const double x0 = (j % 2 == 0) ? h : 0.5 * h;
    for (double x = x0; x < 1.0 - 0.55 * h + 1e-15; x += h) {
      ++idx;
      const double bd = std::min(std::min(x, 1.0 - x), std::min(y, 1.0 - y));
      if (bd < 0.60 * h) continue;
      if (curve.band_distance({x, y}) < 0.55 * h) continue;
      const double jx = 2e-4 * h * hash_centered(2 * idx);
      const double jy = 2e-4 * h * hash_centered(2 * idx + 1);
      pts.emplace_back(x + jx, y + jy);
    }
  }

  auto tris = detail::delaunay_triangulate(pts);

  std::vector<std::array<int, 3>> cells(tris.begin(), tris.end());
  std::vector<CellLabel> labels(cells.size());
  for (size_t c = 0; c < cells.size(); ++c) {
    const Vec2 centroid =
        (pts[cells[c][0]] + pts[cells[c][1]] + pts[cells[c][2]]) / 3.0;
    labels[c] = curve.contains(centroid) ? CellLabel::Inner : CellLabel::Outer;
  }

  TriangleMesh mesh(std::move(pts), std::move(cells), std::move(labels));

  const double dmin = mesh.min_cell_diameter();
  const double dmax = mesh.max_cell_diameter();
  if (dmin < 0.4 * h || dmax > 2.5 * h)
    throw MeshError("generated mesh violates cell size bounds: diameters in [" +
                    std::to_string(dmin) + ", " + std::to_string(dmax) + "] for h = " +
                    std::to_string(h));
  return mesh;
}

TriangleMesh generate_disk_mesh(double radius, double target_edge_length) {
  if (!(radius > 0 && radius < 0.5))
    throw MeshError("disk radius must lie in (0, 0.5)");
  if (!(target_edge_length > 0 && target_edge_length < radius))
    throw MeshError("target edge length must lie in (0, radius)");
  return generate_interface_mesh(InterfaceCurve::circle({0.5, 0.5}, radius), target_edge_length);
}

TriangleMesh generate_unit_square_mesh(int n) {
  if (n < 1) throw MeshError("grid resolution must be at least 1");
  std::vector<Vec2> pts;
  pts.reserve((n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      pts.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  std::vector<std::array<int, 3>> cells;
  cells.reserve(2 * n * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      cells.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  std::vector<CellLabel> labels(cells.size(), CellLabel::Outer);
  return TriangleMesh(std::move(pts), std::move(cells), std::move(labels));
}

}  // namespace vishape
