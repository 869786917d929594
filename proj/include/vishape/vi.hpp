#pragma once

#include "vishape/fem.hpp"
#include "vishape/obstacle.hpp"

namespace vishape {

// C^1 smoothing of max(0, x): identity outside [-1/gamma, 1/gamma], quadratic
// blend inside; |smoothed_max - max| <= 1/(4 gamma) everywhere.
double smoothed_max(double x, double gamma);
// derivative of smoothed_max, values in [0, 1]
double smoothed_sign(double x, double gamma);

struct Smoother {
  double gamma = 1.0;
};

// Penalty data of the relaxed obstacle problem: multiplier shift lambda_bar
// (nodal, >= 0) and penalty scale c.
struct Regularization {
  double c = 1.0;
  ScalarField lambda_bar;
};

// lambda_bar = max(0, f + laplacian(phi)) nodally; with this choice the
// regularized states stay below the unregularized one (feasibility chain).
ScalarField lambda_bar(MeshPtr mesh, const PiecewiseSource& f, const Obstacle& obstacle);

Regularization make_regularization(double c, MeshPtr mesh, const PiecewiseSource& f,
                                   const Obstacle& obstacle);

// Carries nodal lambda_bar values onto a deformed copy of the same mesh
// (material transport; vertex order is preserved by deform_mesh).
Regularization transport_regularization(const Regularization& reg, MeshPtr deformed_mesh);

// Fully regularized state: a(y, v) + (max_gamma(lambda_bar + c (y - phi)), v) = (f, v),
// y = 0 on the outer boundary. Damped Newton with the smoothed reaction
// term assembled nodally (mass lumping).
ScalarField solve_state_smoothed(MeshPtr mesh, const PiecewiseSource& f, const Obstacle& obstacle,
                                 const Regularization& reg, const Smoother& smoother, double tol,
                                 const EllipticCoefficients& coeffs = EllipticCoefficients::laplacian(),
                                 const ScalarField* initial_guess = nullptr);

// Regularized state with the exact max(0, .); semi-smooth Newton, stops when
// the nodal active set is unchanged and the residual is below tol.
ScalarField solve_state_regularized(MeshPtr mesh, const PiecewiseSource& f,
                                    const Obstacle& obstacle, const Regularization& reg, double tol,
                                    const EllipticCoefficients& coeffs = EllipticCoefficients::laplacian(),
                                    const ScalarField* initial_guess = nullptr);

struct ViSolution {
  ScalarField y;
  ScalarField lambda;  // multiplier density, zero off the active set
  int iterations = 0;
};

// Unregularized obstacle problem by the primal-dual active set method with
// internal c = 1; ties at lambda + (y - phi) = 0 classify as inactive.
ViSolution solve_vi_pdas(MeshPtr mesh, const PiecewiseSource& f, const Obstacle& obstacle,
                         double tol,
                         const EllipticCoefficients& coeffs = EllipticCoefficients::laplacian());

// Projected SOR sweep for the same discrete complementarity system;
// independent iteration used as a cross-check of the PDAS solver.
ScalarField psor_solve(MeshPtr mesh, const PiecewiseSource& f, const Obstacle& obstacle, double tol,
                       int max_iter,
                       const EllipticCoefficients& coeffs = EllipticCoefficients::laplacian());

}  // namespace vishape
