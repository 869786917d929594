#include "vishape/fem.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>

namespace vishape {

ScalarField::ScalarField(MeshPtr mesh, Eigen::VectorXd values)
    : mesh_(std::move(mesh)), values_(std::move(values)) {
  if (!mesh_) throw Error("field requires a mesh");
  if (values_.size() != mesh_->num_vertices())
    throw Error("field value count does not match vertex count");
  if (!values_.allFinite()) throw Error("field contains non-finite values");
}

ScalarField ScalarField::zero(MeshPtr mesh) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(mesh->num_vertices());
  return ScalarField(std::move(mesh), std::move(v));
}

ScalarField ScalarField::interpolate(MeshPtr mesh, const std::function<double(const Vec2&)>& f) {
  Eigen::VectorXd v(mesh->num_vertices());
  for (int i = 0; i < mesh->num_vertices(); ++i) v[i] = f(mesh->vertex(i));
  return ScalarField(std::move(mesh), std::move(v));
}

VectorField::VectorField(MeshPtr mesh, Eigen::VectorXd values)
    : mesh_(std::move(mesh)), values_(std::move(values)) {
  if (!mesh_) throw Error("field requires a mesh");
  if (values_.size() != 2 * mesh_->num_vertices())
    throw Error("vector field value count does not match vertex count");
  if (!values_.allFinite()) throw Error("field contains non-finite values");
}

VectorField VectorField::zero(MeshPtr mesh) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(2 * mesh->num_vertices());
  return VectorField(std::move(mesh), std::move(v));
}

std::vector<Vec2> VectorField::as_points() const {
  std::vector<Vec2> out(mesh_->num_vertices());
  for (int v = 0; v < mesh_->num_vertices(); ++v) out[v] = at(v);
  return out;
}

EllipticCoefficients EllipticCoefficients::laplacian() {
  return constant(Mat2::Identity(), Vec2::Zero(), 0.0);
}

EllipticCoefficients EllipticCoefficients::constant(const Mat2& M, const Vec2& d, double b) {
  EllipticCoefficients c;
  c.a11 = [v = M(0, 0)](const Vec2&) { return v; };
  c.a12 = [v = 0.5 * (M(0, 1) + M(1, 0))](const Vec2&) { return v; };
  c.a22 = [v = M(1, 1)](const Vec2&) { return v; };
  c.d1 = [v = d.x()](const Vec2&) { return v; };
  c.d2 = [v = d.y()](const Vec2&) { return v; };
  c.b = [b](const Vec2&) { return b; };
  auto zero_grad = [](const Vec2&) { return Vec2::Zero().eval(); };
  c.grad_a11 = c.grad_a12 = c.grad_a22 = c.grad_d1 = c.grad_d2 = c.grad_b = zero_grad;
  c.identity_leading_order =
      M.isIdentity(0.0) && d.isZero(0.0) && b == 0.0;
  return c;
}

Mat2 EllipticCoefficients::matrix_at(const Vec2& x) const {
  Mat2 M;
  const double offdiag = a12(x);
  M << a11(x), offdiag, offdiag, a22(x);
  return M;
}

Vec2 EllipticCoefficients::d_at(const Vec2& x) const { return {d1(x), d2(x)}; }

std::array<std::array<Vec2, 2>, 2> EllipticCoefficients::grad_matrix_at(const Vec2& x) const {
  const Vec2 g12 = grad_a12(x);
  return {{{grad_a11(x), g12}, {g12, grad_a22(x)}}};
}

std::array<Vec2, 3> hat_gradients(const TriangleMesh& mesh, int c) {
  const auto& t = mesh.cell(c);
  const Vec2& p0 = mesh.vertex(t[0]);
  const Vec2& p1 = mesh.vertex(t[1]);
  const Vec2& p2 = mesh.vertex(t[2]);
  const double inv2A = 1.0 / (2.0 * mesh.cell_area(c));
  return {Vec2{(p1.y() - p2.y()) * inv2A, (p2.x() - p1.x()) * inv2A},
          Vec2{(p2.y() - p0.y()) * inv2A, (p0.x() - p2.x()) * inv2A},
          Vec2{(p0.y() - p1.y()) * inv2A, (p1.x() - p0.x()) * inv2A}};
}

namespace {

// order-2 rule at edge midpoints; phi[k][q] = hat_k at quadrature point q
constexpr double kMidHat[3][3] = {{0.5, 0.0, 0.5}, {0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}};

std::array<Vec2, 3> edge_midpoints(const TriangleMesh& mesh, int c) {
  const auto& t = mesh.cell(c);
  const Vec2& p0 = mesh.vertex(t[0]);
  const Vec2& p1 = mesh.vertex(t[1]);
  const Vec2& p2 = mesh.vertex(t[2]);
  return {0.5 * (p0 + p1), 0.5 * (p1 + p2), 0.5 * (p2 + p0)};
}

}  // namespace

SparseMatrix assemble_bilinear(const TriangleMesh& mesh, const EllipticCoefficients& coeffs) {
  const int nv = mesh.num_vertices();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(9 * mesh.num_cells());

  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& t = mesh.cell(c);
    const double w = mesh.cell_area(c) / 3.0;
    const auto grads = hat_gradients(mesh, c);
    const auto qpts = edge_midpoints(mesh, c);

    double K[3][3] = {};
    for (int q = 0; q < 3; ++q) {
      const Mat2 M = coeffs.matrix_at(qpts[q]);
      const Vec2 d = coeffs.d_at(qpts[q]);
      const double b = coeffs.b(qpts[q]);
      if (!M.allFinite() || !d.allFinite() || !std::isfinite(b))
        throw SolveError("non-finite coefficient evaluation during assembly");
      for (int k = 0; k < 3; ++k) {
        for (int l = 0; l < 3; ++l) {
          const double leading = grads[l].dot(M * grads[k]);
          const double first =
              d.dot(grads[l]) * kMidHat[k][q] + kMidHat[l][q] * d.dot(grads[k]);
          const double zeroth = b * kMidHat[l][q] * kMidHat[k][q];
          K[k][l] += w * (leading + first + zeroth);
        }
      }
    }
    for (int k = 0; k < 3; ++k)
      for (int l = 0; l < 3; ++l) trips.emplace_back(t[k], t[l], K[k][l]);
  }

  SparseMatrix A(nv, nv);
  A.setFromTriplets(trips.begin(), trips.end());
  return A;
}

SparseMatrix assemble_mass(const TriangleMesh& mesh) {
  const int nv = mesh.num_vertices();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(9 * mesh.num_cells());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& t = mesh.cell(c);
    const double s = mesh.cell_area(c) / 12.0;
    for (int k = 0; k < 3; ++k)
      for (int l = 0; l < 3; ++l) trips.emplace_back(t[k], t[l], k == l ? 2.0 * s : s);
  }
  SparseMatrix M(nv, nv);
  M.setFromTriplets(trips.begin(), trips.end());
  return M;
}

Eigen::VectorXd assemble_load(const TriangleMesh& mesh, const PiecewiseSource& f) {
  Eigen::VectorXd F = Eigen::VectorXd::Zero(mesh.num_vertices());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const double contrib = f.on_cell(mesh, c) * mesh.cell_area(c) / 3.0;
    for (int k = 0; k < 3; ++k) F[mesh.cell(c)[k]] += contrib;
  }
  return F;
}

Eigen::VectorXd assemble_load(const TriangleMesh& mesh,
                              const std::function<double(const Vec2&)>& f) {
  Eigen::VectorXd F = Eigen::VectorXd::Zero(mesh.num_vertices());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& t = mesh.cell(c);
    const double w = mesh.cell_area(c) / 3.0;
    const auto qpts = edge_midpoints(mesh, c);
    for (int q = 0; q < 3; ++q) {
      const double fq = f(qpts[q]);
      for (int k = 0; k < 3; ++k) F[t[k]] += w * fq * kMidHat[k][q];
    }
  }
  return F;
}

Eigen::VectorXd lumped_mass(const TriangleMesh& mesh) {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(mesh.num_vertices());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const double third = mesh.cell_area(c) / 3.0;
    for (int k = 0; k < 3; ++k) m[mesh.cell(c)[k]] += third;
  }
  return m;
}

SparseSystem apply_dirichlet(SparseSystem system, const std::vector<int>& nodes,
                             const Eigen::VectorXd& values) {
  if (static_cast<int>(nodes.size()) != values.size())
    throw Error("dirichlet node and value counts differ");
  const int n = static_cast<int>(system.matrix.rows());
  if (system.constrained.empty()) system.constrained.assign(n, 0);

  Eigen::VectorXd bc = Eigen::VectorXd::Zero(n);
  std::vector<std::uint8_t> mark(n, 0);
  for (size_t i = 0; i < nodes.size(); ++i) {
    const int v = nodes[i];
    if (v < 0 || v >= n) throw Error("dirichlet node out of range");
    if ((mark[v] || system.constrained[v]) && bc[v] != values[i] &&
        !(system.constrained[v] && system.rhs[v] == values[i]))
      throw Error("conflicting dirichlet values at node " + std::to_string(v));
    mark[v] = 1;
    bc[v] = values[i];
  }

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(system.matrix.nonZeros() + nodes.size());
  for (int col = 0; col < system.matrix.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(system.matrix, col); it; ++it) {
      const int r = static_cast<int>(it.row());
      const int cidx = static_cast<int>(it.col());
      if (mark[r]) continue;  // row replaced by identity below
      if (mark[cidx]) {
        system.rhs[r] -= it.value() * bc[cidx];
        continue;
      }
      trips.emplace_back(r, cidx, it.value());
    }
  }
  for (int v = 0; v < n; ++v) {
    if (!mark[v]) continue;
    trips.emplace_back(v, v, 1.0);
    system.rhs[v] = bc[v];
    system.constrained[v] = 1;
  }
  SparseMatrix A(n, n);
  A.setFromTriplets(trips.begin(), trips.end());
  system.matrix.swap(A);
  return system;
}

SparseSystem apply_dirichlet(SparseSystem system, const std::vector<int>& nodes, double value) {
  return apply_dirichlet(std::move(system), nodes,
                         Eigen::VectorXd::Constant(static_cast<int>(nodes.size()), value));
}

Eigen::VectorXd solve_linear(const SparseMatrix& A, const Eigen::VectorXd& rhs, double tol,
                             bool symmetric_positive_definite) {
  const double bnorm = rhs.norm();
  if (bnorm == 0.0) return Eigen::VectorXd::Zero(rhs.size());

  if (symmetric_positive_definite) {
    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper,
                             Eigen::DiagonalPreconditioner<double>>
        cg;
    cg.setTolerance(tol);
    cg.setMaxIterations(10 * rhs.size());
    cg.compute(A);
    Eigen::VectorXd x = cg.solve(rhs);
    if (cg.info() == Eigen::Success && (A * x - rhs).norm() <= 10 * tol * bnorm) return x;
  }

  Eigen::SimplicialLDLT<SparseMatrix> ldlt(A);
  if (ldlt.info() == Eigen::Success) {
    Eigen::VectorXd x = ldlt.solve(rhs);
    if ((A * x - rhs).norm() <= std::max(tol, 1e-9) * bnorm) return x;
  }

  Eigen::SparseLU<SparseMatrix> lu(A);
  if (lu.info() == Eigen::Success) {
    Eigen::VectorXd x = lu.solve(rhs);
    if ((A * x - rhs).norm() <= std::max(tol, 1e-9) * bnorm) return x;
  }
  throw SolveError("linear solver failed to reach the requested residual");
}

ScalarField solve_sparse(const SparseSystem& system, MeshPtr mesh, double tol) {
  Eigen::VectorXd x = solve_linear(system.matrix, system.rhs, tol);
  // constrained rows are identity rows; pin their values exactly
  if (!system.constrained.empty())
    for (int v = 0; v < x.size(); ++v)
      if (system.constrained[v]) x[v] = system.rhs[v];
  return ScalarField(std::move(mesh), std::move(x));
}

FieldNorms field_norms(const ScalarField& field) {
  const TriangleMesh& mesh = field.mesh();
  const auto& u = field.values();
  double l1 = 0, l2sq = 0, h1semi = 0;

  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& t = mesh.cell(c);
    const double A = mesh.cell_area(c);
    double v[3] = {u[t[0]], u[t[1]], u[t[2]]};

    l2sq += A / 6.0 *
            (v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[0] * v[1] + v[1] * v[2] + v[0] * v[2]);

    const auto grads = hat_gradients(mesh, c);
    const Vec2 g = v[0] * grads[0] + v[1] * grads[1] + v[2] * grads[2];
    h1semi += A * g.squaredNorm();

    // exact integral of |linear| via sign splitting
    const double mean_int = A * (v[0] + v[1] + v[2]) / 3.0;
    int pos = 0, neg = 0;
    for (double x : v) {
      if (x > 0) ++pos;
      if (x < 0) --neg;
    }
    if (neg == 0) {
      l1 += mean_int;
    } else if (pos == 0) {
      l1 += -mean_int;
    } else {
      // isolate the odd-signed vertex
      bool isolate_positive = (pos == 1);
      int i = 0;
      for (int k = 0; k < 3; ++k)
        if ((isolate_positive && v[k] > 0) || (!isolate_positive && v[k] < 0)) i = k;
      const int j = (i + 1) % 3, k = (i + 2) % 3;
      const double tj = v[i] / (v[i] - v[j]);
      const double tk = v[i] / (v[i] - v[k]);
      const double corner = A * tj * tk * v[i] / 3.0;  // integral over the sub-triangle at i
      if (isolate_positive)
        l1 += 2.0 * corner - mean_int;
      else
        l1 += mean_int - 2.0 * corner;
    }
  }
  FieldNorms n;
  n.l1 = l1;
  n.l2 = std::sqrt(std::max(0.0, l2sq));
  n.h1 = std::sqrt(std::max(0.0, l2sq + h1semi));
  return n;
}

std::vector<Vec2> cellwise_gradient(const ScalarField& field) {
  const TriangleMesh& mesh = field.mesh();
  std::vector<Vec2> g(mesh.num_cells());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& t = mesh.cell(c);
    const auto grads = hat_gradients(mesh, c);
    g[c] = field[t[0]] * grads[0] + field[t[1]] * grads[1] + field[t[2]] * grads[2];
  }
  return g;
}

PointLocator::PointLocator(const TriangleMesh& mesh) : mesh_(&mesh) {
  const int target = std::max(1, static_cast<int>(std::sqrt(mesh.num_cells() / 2.0)));
  nx_ = ny_ = target;
  bins_.assign(static_cast<size_t>(nx_) * ny_, {});
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& t = mesh.cell(c);
    double xmin = 1, xmax = 0, ymin = 1, ymax = 0;
    for (int k = 0; k < 3; ++k) {
      const Vec2& p = mesh.vertex(t[k]);
      xmin = std::min(xmin, p.x());
      xmax = std::max(xmax, p.x());
      ymin = std::min(ymin, p.y());
      ymax = std::max(ymax, p.y());
    }
    const int i0 = std::clamp(static_cast<int>(xmin * nx_), 0, nx_ - 1);
    const int i1 = std::clamp(static_cast<int>(xmax * nx_), 0, nx_ - 1);
    const int j0 = std::clamp(static_cast<int>(ymin * ny_), 0, ny_ - 1);
    const int j1 = std::clamp(static_cast<int>(ymax * ny_), 0, ny_ - 1);
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i) bins_[static_cast<size_t>(j) * nx_ + i].push_back(c);
  }
}

int PointLocator::locate(const Vec2& p, std::array<double, 3>& bary) const {
  const int i = std::clamp(static_cast<int>(p.x() * nx_), 0, nx_ - 1);
  const int j = std::clamp(static_cast<int>(p.y() * ny_), 0, ny_ - 1);

  int best_cell = -1;
  double best_min = -std::numeric_limits<double>::max();
  std::array<double, 3> best_bary{};

  auto consider = [&](int c) {
    const auto& t = mesh_->cell(c);
    const Vec2& a = mesh_->vertex(t[0]);
    const Vec2& b = mesh_->vertex(t[1]);
    const Vec2& d = mesh_->vertex(t[2]);
    const double inv2A = 1.0 / (2.0 * mesh_->cell_area(c));
    const double l0 = ((b.x() - p.x()) * (d.y() - p.y()) - (b.y() - p.y()) * (d.x() - p.x())) * inv2A;
    const double l1 = ((d.x() - p.x()) * (a.y() - p.y()) - (d.y() - p.y()) * (a.x() - p.x())) * inv2A;
    const double l2 = 1.0 - l0 - l1;
    const double m = std::min({l0, l1, l2});
    if (m > best_min) {
      best_min = m;
      best_cell = c;
      best_bary = {l0, l1, l2};
    }
  };

  for (int c : bins_[static_cast<size_t>(j) * nx_ + i]) consider(c);
  if (best_min < -1e-12) {
    // check the neighboring bins, then fall back to an exhaustive scan
    for (int dj = -1; dj <= 1 && best_min < -1e-12; ++dj)
      for (int di = -1; di <= 1; ++di) {
        const int ii = i + di, jj = j + dj;
        if (ii < 0 || jj < 0 || ii >= nx_ || jj >= ny_ || (di == 0 && dj == 0)) continue;
        for (int c : bins_[static_cast<size_t>(jj) * nx_ + ii]) consider(c);
      }
    if (best_min < -1e-12)
      for (int c = 0; c < mesh_->num_cells(); ++c) consider(c);
  }
  if (best_cell < 0 || best_min < -1e-10)
    throw Error("point (" + std::to_string(p.x()) + ", " + std::to_string(p.y()) +
                ") lies outside the mesh");
  // clamp tiny negatives from roundoff
  double s = 0;
  for (int k = 0; k < 3; ++k) {
    bary[k] = std::max(0.0, best_bary[k]);
    s += bary[k];
  }
  for (int k = 0; k < 3; ++k) bary[k] /= s;
  return best_cell;
}

double PointLocator::evaluate(const ScalarField& field, const Vec2& p) const {
  std::array<double, 3> bary;
  const int c = locate(p, bary);
  const auto& t = mesh_->cell(c);
  return bary[0] * field[t[0]] + bary[1] * field[t[1]] + bary[2] * field[t[2]];
}

Vec2 PointLocator::evaluate_gradient(const std::vector<Vec2>& cell_gradients, const Vec2& p) const {
  std::array<double, 3> bary;
  const int c = locate(p, bary);
  return cell_gradients[c];
}

Eigen::VectorXd evaluate_at_points(const ScalarField& field, const std::vector<Vec2>& points) {
  PointLocator locator(field.mesh());
  Eigen::VectorXd out(points.size());
  for (size_t i = 0; i < points.size(); ++i) out[static_cast<int>(i)] = locator.evaluate(field, points[i]);
  return out;
}

}  // namespace vishape
