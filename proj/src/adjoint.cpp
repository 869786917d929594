#include "vishape/adjoint.hpp"

#include <cmath>

namespace vishape {

namespace {

ActiveSet build_set(const TriangleMesh& mesh, const std::function<bool(int)>& predicate,
                    double eps_adj) {
  ActiveSet s;
  s.eps_adj = eps_adj;
  s.mask.assign(mesh.num_vertices(), 0);
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    if (predicate(v)) {
      s.mask[v] = 1;
      s.vertices.push_back(v);
    }
  }
  return s;
}

void check_same_mesh(const ScalarField& a, const ScalarField& b) {
  if (&a.mesh() != &b.mesh())
    throw Error("fields must live on the same mesh");
}

ScalarField solve_reaction_adjoint(const ScalarField& y, const ScalarField& ybar,
                                   const Eigen::VectorXd& reaction_diag, double tol,
                                   const EllipticCoefficients& coeffs,
                                   const std::vector<int>& extra_zero_nodes) {
  const TriangleMesh& mesh = y.mesh();
  SparseMatrix A = assemble_bilinear(mesh, coeffs);
  for (int v = 0; v < mesh.num_vertices(); ++v)
    if (reaction_diag[v] != 0.0) A.coeffRef(v, v) += reaction_diag[v];

  const SparseMatrix M = assemble_mass(mesh);
  Eigen::VectorXd rhs = -(M * (y.values() - ybar.values()));

  std::vector<int> nodes = mesh.outer_boundary();
  for (int v : extra_zero_nodes)
    if (!mesh.on_outer_boundary(v)) nodes.push_back(v);

  SparseSystem sys{std::move(A), std::move(rhs), {}};
  sys = apply_dirichlet(std::move(sys), nodes, 0.0);
  return solve_sparse(sys, y.mesh_ptr(), tol);
}

}  // namespace

ActiveSet detect_active_set(const ScalarField& y, const Obstacle& obstacle, double eps_adj) {
  if (eps_adj < 0) throw Error("eps_adj must be nonnegative");
  const TriangleMesh& mesh = y.mesh();
  return build_set(
      mesh, [&](int v) { return y[v] - obstacle.value(mesh.vertex(v)) >= -eps_adj; }, eps_adj);
}

ActiveSet detect_active_set_c(const ScalarField& y_c, const Regularization& reg,
                              const Obstacle& obstacle) {
  const TriangleMesh& mesh = y_c.mesh();
  return build_set(
      mesh,
      [&](int v) {
        return reg.lambda_bar[v] + reg.c * (y_c[v] - obstacle.value(mesh.vertex(v))) >= 0.0;
      },
      0.0);
}

ScalarField solve_adjoint_smoothed(const ScalarField& y_gc, const ScalarField& ybar,
                                   const Obstacle& obstacle, const Regularization& reg,
                                   const Smoother& smoother, double tol,
                                   const EllipticCoefficients& coeffs) {
  check_same_mesh(y_gc, ybar);
  const TriangleMesh& mesh = y_gc.mesh();
  const Eigen::VectorXd m = lumped_mass(mesh);
  Eigen::VectorXd reaction(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    const double arg =
        reg.lambda_bar[v] + reg.c * (y_gc[v] - obstacle.value(mesh.vertex(v)));
    reaction[v] = m[v] * reg.c * smoothed_sign(arg, smoother.gamma);
  }
  return solve_reaction_adjoint(y_gc, ybar, reaction, tol, coeffs, {});
}

ScalarField solve_adjoint_regularized_limit(const ScalarField& y_c, const ScalarField& ybar,
                                            const Regularization& reg, const ActiveSet& active_c,
                                            double tol, const EllipticCoefficients& coeffs) {
  check_same_mesh(y_c, ybar);
  const TriangleMesh& mesh = y_c.mesh();
  const Eigen::VectorXd m = lumped_mass(mesh);
  Eigen::VectorXd reaction = Eigen::VectorXd::Zero(mesh.num_vertices());
  for (int v : active_c.vertices) reaction[v] = m[v] * reg.c;
  return solve_reaction_adjoint(y_c, ybar, reaction, tol, coeffs, {});
}

ScalarField solve_adjoint_limit(const ScalarField& y, const ScalarField& ybar,
                                const ActiveSet& active, double tol,
                                const EllipticCoefficients& coeffs) {
  check_same_mesh(y, ybar);
  Eigen::VectorXd no_reaction = Eigen::VectorXd::Zero(y.mesh().num_vertices());
  return solve_reaction_adjoint(y, ybar, no_reaction, tol, coeffs, active.vertices);
}

double sign_l1_distance(const ScalarField& y_gc, const ScalarField& y_c,
                        const Regularization& reg, const Obstacle& obstacle, double gamma) {
  check_same_mesh(y_gc, y_c);
  const TriangleMesh& mesh = y_gc.mesh();
  const Eigen::VectorXd m = lumped_mass(mesh);
  double total = 0;
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    const double phi = obstacle.value(mesh.vertex(v));
    const double arg_gc = reg.lambda_bar[v] + reg.c * (y_gc[v] - phi);
    const double arg_c = reg.lambda_bar[v] + reg.c * (y_c[v] - phi);
    const double s_gamma = smoothed_sign(arg_gc, gamma);
    const double s_exact = arg_c >= 0.0 ? 1.0 : 0.0;
    total += m[v] * std::abs(s_gamma - s_exact);
  }
  return total;
}

}  // namespace vishape
