#pragma once

#include "vishape/vi.hpp"

namespace vishape {

struct ActiveSet {
  std::vector<int> vertices;  // sorted ascending
  std::vector<std::uint8_t> mask;
  double eps_adj = 0.0;

  bool contains(int v) const { return mask[v] != 0; }
  int size() const { return static_cast<int>(vertices.size()); }
};

// A = { x : y(x) - phi(x) >= -eps_adj }
ActiveSet detect_active_set(const ScalarField& y, const Obstacle& obstacle, double eps_adj);

// A_c = { x : lambda_bar(x) + c (y_c(x) - phi(x)) >= 0 }
ActiveSet detect_active_set_c(const ScalarField& y_c, const Regularization& reg,
                              const Obstacle& obstacle);

// a(p, v) + c (sign_gamma(lambda_bar + c (y - phi)) p, v) = -(y - ybar, v), p = 0 on the
// outer boundary; the reaction term is assembled nodally.
ScalarField solve_adjoint_smoothed(const ScalarField& y_gc, const ScalarField& ybar,
                                   const Obstacle& obstacle, const Regularization& reg,
                                   const Smoother& smoother, double tol = 1e-10,
                                   const EllipticCoefficients& coeffs = EllipticCoefficients::laplacian());

// a(p, v) + c (1_{A_c} p, v) = -(y_c - ybar, v) with the indicator realized by
// nodal masking.
ScalarField solve_adjoint_regularized_limit(const ScalarField& y_c, const ScalarField& ybar,
                                            const Regularization& reg, const ActiveSet& active_c,
                                            double tol = 1e-10,
                                            const EllipticCoefficients& coeffs = EllipticCoefficients::laplacian());

// Limit adjoint: assemble a(p, v) = -(y - ybar, v) ignoring the active set,
// then impose p = 0 on all active vertices and the outer boundary by
// elimination (extension-by-zero structure).
ScalarField solve_adjoint_limit(const ScalarField& y, const ScalarField& ybar,
                                const ActiveSet& active, double tol = 1e-10,
                                const EllipticCoefficients& coeffs = EllipticCoefficients::laplacian());

// || sign_gamma(lambda_bar + c (y_gc - phi)) - sign(lambda_bar + c (y_c - phi)) ||_L1
// with the same nodal quadrature as the nonlinear terms; sign(t) = 1 for t >= 0.
double sign_l1_distance(const ScalarField& y_gc, const ScalarField& y_c,
                        const Regularization& reg, const Obstacle& obstacle, double gamma);

}  // namespace vishape
