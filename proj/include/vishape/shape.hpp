#pragma once

#include "vishape/adjoint.hpp"

namespace vishape {

// Discrete shape-derivative functional V -> DJ(Omega)[V], stored as its dual
// vector against the P1 vector basis (interleaved components).
struct ShapeFunctional {
  MeshPtr mesh;
  Eigen::VectorXd dual;  // size 2 * num_vertices

  double apply(const VectorField& V) const;
  ShapeFunctional& operator+=(const ShapeFunctional& other);
  ShapeFunctional scaled(double s) const;
};

ShapeFunctional zero_functional(MeshPtr mesh);

// Tracking-part shape derivative of the fully regularized problem (smoothed
// max term and its sign-weighted obstacle term included). grad_ybar holds the
// reference-mesh gradient of the data evaluated at the current vertices.
ShapeFunctional assemble_dj_smoothed(const ScalarField& y, const ScalarField& p,
                                     const ScalarField& ybar, const std::vector<Vec2>& grad_ybar,
                                     const PiecewiseSource& f, const Obstacle& obstacle,
                                     const EllipticCoefficients& coeffs, const Regularization& reg,
                                     const Smoother& smoother);

// Limit counterpart: obstacle terms are replaced by the active-set volume
// term int_A (phi - ybar) grad(phi)^T V dx; cells contribute by their active
// vertex fraction.
ShapeFunctional assemble_dj_limit(const ScalarField& y, const ScalarField& p,
                                  const ScalarField& ybar, const std::vector<Vec2>& grad_ybar,
                                  const PiecewiseSource& f, const Obstacle& obstacle,
                                  const EllipticCoefficients& coeffs, const ActiveSet& active);

// Specializations for the pure Laplacian form (M = I, d = 0, b = 0),
// assembled through an independent code path.
ShapeFunctional assemble_dj_laplacian_smoothed(const ScalarField& y, const ScalarField& p,
                                               const ScalarField& ybar,
                                               const std::vector<Vec2>& grad_ybar,
                                               const PiecewiseSource& f, const Obstacle& obstacle,
                                               const Regularization& reg, const Smoother& smoother);

ShapeFunctional assemble_dj_laplacian(const ScalarField& y, const ScalarField& p,
                                      const ScalarField& ybar, const std::vector<Vec2>& grad_ybar,
                                      const PiecewiseSource& f, const Obstacle& obstacle,
                                      const ActiveSet& active);

// Exact derivative of nu * interface length under vertex transport.
ShapeFunctional perimeter_derivative_functional(MeshPtr mesh, double nu);
double perimeter_derivative(const TriangleMesh& mesh, const VectorField& V, double nu);

// Zeroes all dual entries away from the interface one-ring.
ShapeFunctional mask_to_interface(ShapeFunctional func);

// Harmonic Lame coefficient: mu = mu_max on the interface, mu_min on the
// outer boundary.
ScalarField solve_mu_elas(MeshPtr mesh, double mu_min, double mu_max, double tol = 1e-10);

struct ShapeGradient {
  VectorField U;
  double norm = 0;  // Steklov-Poincare norm sqrt(DJ[U])
};

// Riesz representative of the functional in the linear-elasticity inner
// product sigma(U) : eps(V) with sigma = lambda tr(eps) I + 2 mu eps,
// homogeneous Dirichlet on the outer boundary.
ShapeGradient shape_gradient(const ShapeFunctional& func, const ScalarField& mu,
                             double lambda_elas, double tol = 1e-10);

}  // namespace vishape
