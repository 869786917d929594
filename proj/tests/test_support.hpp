#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <memory>

#include "vishape/fem.hpp"
#include "vishape/mesh.hpp"

namespace testsupport {

using vishape::MeshPtr;
using vishape::TriangleMesh;
using vishape::Vec2;

inline MeshPtr share(TriangleMesh mesh) {
  return std::make_shared<TriangleMesh>(std::move(mesh));
}

inline double max_abs_entry_diff(const vishape::SparseMatrix& A, const vishape::SparseMatrix& B) {
  vishape::SparseMatrix D = A - B;
  double m = 0;
  for (int k = 0; k < D.outerSize(); ++k)
    for (vishape::SparseMatrix::InnerIterator it(D, k); it; ++it)
      m = std::max(m, std::abs(it.value()));
  return m;
}

// 7-point degree-5 Gauss rule on a triangle; independent oracle against the
// production midpoint rule.
inline double integrate_triangle(const Vec2& a, const Vec2& b, const Vec2& c,
                                 const std::function<double(const Vec2&)>& f) {
  static const double w0 = 9.0 / 40.0;
  static const double w1 = (155.0 - std::sqrt(15.0)) / 1200.0;
  static const double w2 = (155.0 + std::sqrt(15.0)) / 1200.0;
  static const double g1 = (6.0 - std::sqrt(15.0)) / 21.0;
  static const double g2 = (6.0 + std::sqrt(15.0)) / 21.0;
  struct QP {
    double l1, l2, l3, w;
  };
  const QP pts[7] = {
      {1.0 / 3, 1.0 / 3, 1.0 / 3, w0},
      {g1, g1, 1 - 2 * g1, w1},
      {g1, 1 - 2 * g1, g1, w1},
      {1 - 2 * g1, g1, g1, w1},
      {g2, g2, 1 - 2 * g2, w2},
      {g2, 1 - 2 * g2, g2, w2},
      {1 - 2 * g2, g2, g2, w2},
  };
  const double area =
      0.5 * std::abs((b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x()));
  double sum = 0;
  for (const QP& q : pts) {
    const Vec2 x = q.l1 * a + q.l2 * b + q.l3 * c;
    sum += area * q.w * f(x);
  }
  return sum;
}

// hat function of local vertex k on triangle (a, b, c), evaluated anywhere
inline double hat_value(const Vec2& a, const Vec2& b, const Vec2& c, int k, const Vec2& x) {
  auto cross = [](const Vec2& u, const Vec2& v) { return u.x() * v.y() - u.y() * v.x(); };
  const double A2 = cross(b - a, c - a);
  const std::array<double, 3> lambda = {cross(b - x, c - x) / A2, cross(c - x, a - x) / A2,
                                        cross(a - x, b - x) / A2};
  return lambda[static_cast<size_t>(k)];
}

// series solution of -lap u = 1 on the unit square, homogeneous Dirichlet
inline double poisson_unit_square_series(double x, double y) {
  const double pi = std::acos(-1.0);
  double sum = 0;
  for (int m = 1; m <= 199; m += 2) {
    for (int n = 1; n <= 199; n += 2) {
      const double coeff = 16.0 / (pi * pi * pi * pi * m * n * (m * m + n * n));
      sum += coeff * std::sin(m * pi * x) * std::sin(n * pi * y);
    }
  }
  return sum;
}

}  // namespace testsupport
