#pragma once

#include <Eigen/Sparse>
#include <array>
#include <functional>
#include <memory>
#include <vector>

#include "vishape/mesh.hpp"

namespace vishape {

using MeshPtr = std::shared_ptr<const TriangleMesh>;
using SparseMatrix = Eigen::SparseMatrix<double>;

// P1 nodal scalar field.
class ScalarField {
 public:
  ScalarField(MeshPtr mesh, Eigen::VectorXd values);
  static ScalarField zero(MeshPtr mesh);
  static ScalarField interpolate(MeshPtr mesh, const std::function<double(const Vec2&)>& f);

  const TriangleMesh& mesh() const { return *mesh_; }
  const MeshPtr& mesh_ptr() const { return mesh_; }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd& values() { return values_; }
  double operator[](int v) const { return values_[v]; }
  int size() const { return static_cast<int>(values_.size()); }

 private:
  MeshPtr mesh_;
  Eigen::VectorXd values_;
};

// P1 nodal 2-vector field, components interleaved (x0, y0, x1, y1, ...).
class VectorField {
 public:
  VectorField(MeshPtr mesh, Eigen::VectorXd values);
  static VectorField zero(MeshPtr mesh);

  const TriangleMesh& mesh() const { return *mesh_; }
  const MeshPtr& mesh_ptr() const { return mesh_; }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd& values() { return values_; }
  Vec2 at(int v) const { return {values_[2 * v], values_[2 * v + 1]}; }
  void set(int v, const Vec2& u) {
    values_[2 * v] = u.x();
    values_[2 * v + 1] = u.y();
  }
  std::vector<Vec2> as_points() const;

 private:
  MeshPtr mesh_;
  Eigen::VectorXd values_;
};

// Coefficients of the bilinear form
//   a(y, v) = int_Omega sum_ij a_ij dy_i dv_j + sum_i d_i (dy_i v + y dv_i) + b y v dx
// with M = (a_ij) symmetric positive definite. Gradients of the coefficient
// functions feed the shape-derivative assembly.
struct EllipticCoefficients {
  using ScalarFn = std::function<double(const Vec2&)>;
  using GradFn = std::function<Vec2(const Vec2&)>;

  ScalarFn a11, a12, a22, d1, d2, b;
  GradFn grad_a11, grad_a12, grad_a22, grad_d1, grad_d2, grad_b;
  bool identity_leading_order = false;  // M == I, d == 0, b == 0

  static EllipticCoefficients laplacian();
  static EllipticCoefficients constant(const Mat2& M, const Vec2& d, double b);

  Mat2 matrix_at(const Vec2& x) const;
  Vec2 d_at(const Vec2& x) const;
  // gradient of each entry of M, as grad_M[i][j] = grad a_ij
  std::array<std::array<Vec2, 2>, 2> grad_matrix_at(const Vec2& x) const;
};

// Piecewise-constant source by subdomain label.
struct PiecewiseSource {
  double inner = 0.0;
  double outer = 0.0;

  double on_cell(const TriangleMesh& mesh, int c) const {
    return mesh.label(c) == CellLabel::Inner ? inner : outer;
  }
  // vertex rule: a vertex in the closure of the inner subdomain gets the
  // inner value
  double at_vertex(const TriangleMesh& mesh, int v) const {
    return mesh.vertex_touches_inner(v) ? inner : outer;
  }
};

struct SparseSystem {
  SparseMatrix matrix;
  Eigen::VectorXd rhs;
  std::vector<std::uint8_t> constrained;  // per-row flag after apply_dirichlet
};

SparseMatrix assemble_bilinear(const TriangleMesh& mesh, const EllipticCoefficients& coeffs);
SparseMatrix assemble_mass(const TriangleMesh& mesh);
Eigen::VectorXd assemble_load(const TriangleMesh& mesh, const PiecewiseSource& f);
Eigen::VectorXd assemble_load(const TriangleMesh& mesh, const std::function<double(const Vec2&)>& f);
// diagonal of the lumped mass matrix (vertex patch areas / 3)
Eigen::VectorXd lumped_mass(const TriangleMesh& mesh);

// Eliminates the listed rows/columns symmetrically: constrained rows become
// identity rows with the given value, couplings move to the right-hand side.
SparseSystem apply_dirichlet(SparseSystem system, const std::vector<int>& nodes,
                             const Eigen::VectorXd& values);
SparseSystem apply_dirichlet(SparseSystem system, const std::vector<int>& nodes, double value);

// Diagonal-preconditioned CG (relative residual <= tol, cap 10N iterations)
// with a sparse direct fallback; throws SolveError if neither converges.
Eigen::VectorXd solve_linear(const SparseMatrix& A, const Eigen::VectorXd& rhs, double tol,
                             bool symmetric_positive_definite = true);
ScalarField solve_sparse(const SparseSystem& system, MeshPtr mesh, double tol);

struct FieldNorms {
  double l1 = 0, l2 = 0, h1 = 0;
};
// L1/L2 by exact integration of the P1 interpolant, H1 adds the
// cellwise-gradient seminorm.
FieldNorms field_norms(const ScalarField& field);

std::vector<Vec2> cellwise_gradient(const ScalarField& field);

// Bin-grid point location with barycentric interpolation.
class PointLocator {
 public:
  explicit PointLocator(const TriangleMesh& mesh);
  // Returns the containing cell and barycentric coordinates; tolerates points
  // outside by up to 1e-10, otherwise throws.
  int locate(const Vec2& p, std::array<double, 3>& bary) const;
  double evaluate(const ScalarField& field, const Vec2& p) const;
  Vec2 evaluate_gradient(const std::vector<Vec2>& cell_gradients, const Vec2& p) const;

 private:
  const TriangleMesh* mesh_;
  int nx_ = 1, ny_ = 1;
  std::vector<std::vector<int>> bins_;
};

Eigen::VectorXd evaluate_at_points(const ScalarField& field, const std::vector<Vec2>& points);

// P1 gradients of the three hat functions on a cell.
std::array<Vec2, 3> hat_gradients(const TriangleMesh& mesh, int c);

}  // namespace vishape
