#include "vishape/vi.hpp"

#include <cmath>

namespace vishape {

double smoothed_max(double x, double gamma) {
  if (x > 1.0 / gamma) return x;
  if (x < -1.0 / gamma) return 0.0;
  return 0.25 * gamma * x * x + 0.5 * x + 0.25 / gamma;
}

double smoothed_sign(double x, double gamma) {
  if (x > 1.0 / gamma) return 1.0;
  if (x < -1.0 / gamma) return 0.0;
  return 0.5 * gamma * x + 0.5;
}

ScalarField lambda_bar(MeshPtr mesh, const PiecewiseSource& f, const Obstacle& obstacle) {
  Eigen::VectorXd v(mesh->num_vertices());
  for (int i = 0; i < mesh->num_vertices(); ++i)
    v[i] = std::max(0.0, f.at_vertex(*mesh, i) + obstacle.laplacian(mesh->vertex(i)));
  return ScalarField(std::move(mesh), std::move(v));
}

Regularization make_regularization(double c, MeshPtr mesh, const PiecewiseSource& f,
                                   const Obstacle& obstacle) {
  if (c <= 0) throw Error("penalty scale c must be positive");
  return Regularization{c, lambda_bar(std::move(mesh), f, obstacle)};
}

Regularization transport_regularization(const Regularization& reg, MeshPtr deformed_mesh) {
  if (deformed_mesh->num_vertices() != reg.lambda_bar.size())
    throw Error("cannot transport lambda_bar across meshes with different vertex counts");
  return Regularization{reg.c, ScalarField(std::move(deformed_mesh), reg.lambda_bar.values())};
}

namespace {

struct NewtonWorkspace {
  SparseMatrix A;
  Eigen::VectorXd F, m, phi, lbar;
  std::vector<int> boundary;
  std::vector<std::uint8_t> is_boundary;
};

NewtonWorkspace make_workspace(const TriangleMesh& mesh, const PiecewiseSource& f,
                               const Obstacle& obstacle, const ScalarField* lambda_bar_field,
                               const EllipticCoefficients& coeffs) {
  NewtonWorkspace w;
  w.A = assemble_bilinear(mesh, coeffs);
  w.F = assemble_load(mesh, f);
  w.m = lumped_mass(mesh);
  w.phi.resize(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) w.phi[v] = obstacle.value(mesh.vertex(v));
  if (lambda_bar_field)
    w.lbar = lambda_bar_field->values();
  else
    w.lbar = Eigen::VectorXd::Zero(mesh.num_vertices());
  w.boundary = mesh.outer_boundary();
  w.is_boundary.assign(mesh.num_vertices(), 0);
  for (int v : w.boundary) w.is_boundary[v] = 1;
  return w;
}

// residual of the (possibly smoothed) penalized state equation with the
// nonlinearity assembled nodally; boundary rows are zeroed
Eigen::VectorXd penalized_residual(const NewtonWorkspace& w, const Eigen::VectorXd& y, double c,
                                   double gamma /* <= 0 means exact max */) {
  Eigen::VectorXd r = w.A * y - w.F;
  for (int v = 0; v < y.size(); ++v) {
    const double arg = w.lbar[v] + c * (y[v] - w.phi[v]);
    const double nl = gamma > 0 ? smoothed_max(arg, gamma) : std::max(0.0, arg);
    r[v] += w.m[v] * nl;
  }
  for (int v : w.boundary) r[v] = 0.0;
  return r;
}

ScalarField newton_penalized(MeshPtr mesh, const PiecewiseSource& f, const Obstacle& obstacle,
                             const Regularization& reg, double gamma, double tol,
                             const EllipticCoefficients& coeffs, const ScalarField* initial) {
  if (tol <= 0) throw Error("state tolerance must be positive");
  NewtonWorkspace w = make_workspace(*mesh, f, obstacle, &reg.lambda_bar, coeffs);
  const int nv = mesh->num_vertices();
  const double c = reg.c;
  const bool smoothed = gamma > 0;

  Eigen::VectorXd y = Eigen::VectorXd::Zero(nv);
  if (initial) {
    if (initial->size() != nv) throw Error("initial guess size mismatch");
    y = initial->values();
    for (int v : w.boundary) y[v] = 0.0;
  }
  Eigen::VectorXd r = penalized_residual(w, y, c, gamma);
  double rnorm = r.norm();

  std::vector<std::uint8_t> active(nv, 0), prev_active(nv, 2);

  for (int it = 0; it < 50; ++it) {
    bool set_stable = true;
    if (!smoothed) {
      for (int v = 0; v < nv; ++v) {
        active[v] = w.lbar[v] + c * (y[v] - w.phi[v]) >= 0.0 ? 1 : 0;
        if (active[v] != prev_active[v]) set_stable = false;
      }
    }
    if (rnorm <= tol && (smoothed || set_stable)) return ScalarField(std::move(mesh), std::move(y));
    prev_active = active;

    // Jacobian: A + diag(m * c * sign-term)
    SparseMatrix J = w.A;
    for (int v = 0; v < nv; ++v) {
      const double arg = w.lbar[v] + c * (y[v] - w.phi[v]);
      const double s = smoothed ? smoothed_sign(arg, gamma) : (arg >= 0.0 ? 1.0 : 0.0);
      J.coeffRef(v, v) += w.m[v] * c * s;
    }

    SparseSystem sys{std::move(J), -r, {}};
    sys = apply_dirichlet(std::move(sys), w.boundary, 0.0);
    Eigen::VectorXd step = solve_linear(sys.matrix, sys.rhs, 1e-12);

    if (!smoothed) {
      // full steps: the semi-smooth Newton on the piecewise-affine system is
      // an active-set iteration with finite convergence; damping would land
      // between kinks
      y += step;
      r = penalized_residual(w, y, c, gamma);
      rnorm = r.norm();
      continue;
    }

    // residual-monotone damping, factor 1/2 down to 2^-10; if no damped step
    // decreases the residual (happens when the smoothing band is thinner than
    // the mesh can feel and the problem is effectively piecewise affine),
    // fall back to the full step and let the active-set mechanics converge
    double s = 1.0;
    Eigen::VectorXd y_try, r_try;
    double rnorm_try = rnorm;
    bool improved = false;
    while (s >= 0.5 / 1024.0) {
      y_try = y + s * step;
      r_try = penalized_residual(w, y_try, c, gamma);
      rnorm_try = r_try.norm();
      if (rnorm_try <= rnorm) {
        improved = true;
        break;
      }
      s *= 0.5;
    }
    if (!improved) {
      y_try = y + step;
      r_try = penalized_residual(w, y_try, c, gamma);
      rnorm_try = r_try.norm();
    }
    y.swap(y_try);
    r.swap(r_try);
    rnorm = rnorm_try;
  }
  throw SolveError("state Newton iteration failed to converge (residual " +
                   std::to_string(rnorm) + ")");
}

}  // namespace

ScalarField solve_state_smoothed(MeshPtr mesh, const PiecewiseSource& f, const Obstacle& obstacle,
                                 const Regularization& reg, const Smoother& smoother, double tol,
                                 const EllipticCoefficients& coeffs, const ScalarField* initial) {
  if (smoother.gamma <= 0) throw Error("smoothing parameter gamma must be positive");
  return newton_penalized(std::move(mesh), f, obstacle, reg, smoother.gamma, tol, coeffs, initial);
}

ScalarField solve_state_regularized(MeshPtr mesh, const PiecewiseSource& f,
                                    const Obstacle& obstacle, const Regularization& reg, double tol,
                                    const EllipticCoefficients& coeffs, const ScalarField* initial) {
  return newton_penalized(std::move(mesh), f, obstacle, reg, -1.0, tol, coeffs, initial);
}

ViSolution solve_vi_pdas(MeshPtr mesh, const PiecewiseSource& f, const Obstacle& obstacle,
                         double tol, const EllipticCoefficients& coeffs) {
  if (tol <= 0) throw Error("tolerance must be positive");
  NewtonWorkspace w = make_workspace(*mesh, f, obstacle, nullptr, coeffs);
  const int nv = mesh->num_vertices();

  auto solve_with_active = [&](const std::vector<std::uint8_t>& active) {
    std::vector<int> nodes = w.boundary;
    std::vector<double> vals(nodes.size(), 0.0);
    for (int v = 0; v < nv; ++v) {
      if (active[v] && !w.is_boundary[v]) {
        nodes.push_back(v);
        vals.push_back(w.phi[v]);
      }
    }
    SparseSystem sys{w.A, w.F, {}};
    sys = apply_dirichlet(std::move(sys), nodes,
                          Eigen::Map<const Eigen::VectorXd>(vals.data(), vals.size()));
    return solve_linear(sys.matrix, sys.rhs, 1e-12);
  };

  // initial guess: violation set of the unconstrained solve
  std::vector<std::uint8_t> active(nv, 0);
  {
    SparseSystem sys{w.A, w.F, {}};
    sys = apply_dirichlet(std::move(sys), w.boundary, 0.0);
    Eigen::VectorXd y0 = solve_linear(sys.matrix, sys.rhs, 1e-12);
    for (int v = 0; v < nv; ++v)
      if (!w.is_boundary[v] && y0[v] > w.phi[v]) active[v] = 1;
  }

  Eigen::VectorXd y, lambda = Eigen::VectorXd::Zero(nv);
  for (int it = 1; it <= 100; ++it) {
    y = solve_with_active(active);
    Eigen::VectorXd residual = w.F - w.A * y;
    lambda.setZero();
    for (int v = 0; v < nv; ++v)
      if (active[v] && !w.is_boundary[v]) lambda[v] = residual[v] / w.m[v];

    // active set update with internal penalty scale 1; strict inequality so
    // ties classify as inactive
    std::vector<std::uint8_t> next(nv, 0);
    bool changed = false;
    for (int v = 0; v < nv; ++v) {
      if (!w.is_boundary[v]) next[v] = lambda[v] + (y[v] - w.phi[v]) > 0.0 ? 1 : 0;
      if (next[v] != active[v]) changed = true;
    }
    if (!changed) {
      for (int v = 0; v < nv; ++v) {
        if (y[v] > w.phi[v] + tol)
          throw SolveError("PDAS solution violates the obstacle beyond tolerance");
        if (lambda[v] < -tol) throw SolveError("PDAS multiplier negative beyond tolerance");
      }
      return ViSolution{ScalarField(mesh, std::move(y)), ScalarField(mesh, std::move(lambda)), it};
    }
    active.swap(next);
  }
  throw SolveError("PDAS active set failed to stabilize within 100 iterations");
}

ScalarField psor_solve(MeshPtr mesh, const PiecewiseSource& f, const Obstacle& obstacle, double tol,
                       int max_iter, const EllipticCoefficients& coeffs) {
  NewtonWorkspace w = make_workspace(*mesh, f, obstacle, nullptr, coeffs);
  const int nv = mesh->num_vertices();
  Eigen::SparseMatrix<double, Eigen::RowMajor> A = w.A;

  for (int v = 0; v < nv; ++v)
    if (A.coeff(v, v) <= 0.0) throw SolveError("PSOR requires positive diagonal entries");

  const double omega = 1.5;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(nv);
  for (int it = 0; it < max_iter; ++it) {
    double max_change = 0.0;
    for (int v = 0; v < nv; ++v) {
      if (w.is_boundary[v]) continue;
      double diag = 0.0, off = 0.0;
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it2(A, v); it2; ++it2) {
        if (it2.col() == v)
          diag = it2.value();
        else
          off += it2.value() * u[it2.col()];
      }
      const double gs = (w.F[v] - off) / diag;
      const double candidate = u[v] + omega * (gs - u[v]);
      const double projected = std::min(w.phi[v], candidate);
      max_change = std::max(max_change, std::abs(projected - u[v]));
      u[v] = projected;
    }
    if (max_change <= tol) return ScalarField(std::move(mesh), std::move(u));
  }
  throw SolveError("projected SOR failed to converge within the iteration cap");
}

}  // namespace vishape
