#include "vishape/optim.hpp"

#include <cmath>

namespace vishape {

void RunConfig::validate() const {
  if (nu < 0) throw ConfigError("nu must be nonnegative");
  if (gamma <= 0 || c <= 0) throw ConfigError("gamma and c must be positive");
  if (eps_state <= 0 || eps_shape <= 0 || lin_tol <= 0)
    throw ConfigError("tolerances must be positive");
  if (eps_adj < 0) throw ConfigError("eps_adj must be nonnegative");
  if (!(ls_shrink > 0 && ls_shrink < 1)) throw ConfigError("ls_shrink must lie in (0,1)");
  if (!(ls_accept > 0 && ls_accept < 1)) throw ConfigError("ls_accept must lie in (0,1)");
  if (ls_max_halvings < 1 || max_iters < 1) throw ConfigError("iteration caps must be positive");
  if (!(mu_max >= mu_min && mu_min >= 0)) throw ConfigError("need mu_max >= mu_min >= 0");
}

ObjectiveValue evaluate_objective(const ScalarField& y, const ScalarField& ybar, double nu) {
  if (&y.mesh() != &ybar.mesh()) throw Error("objective fields must share one mesh");
  const Eigen::VectorXd diff = y.values() - ybar.values();
  const double tracking = 0.5 * diff.dot(assemble_mass(y.mesh()) * diff);
  const double perimeter = interface_length(y.mesh());
  return {tracking + nu * perimeter, tracking, perimeter};
}

ReferenceData::ReferenceData(ScalarField ybar_ref)
    : ref_(std::move(ybar_ref)), locator_(ref_.mesh()), cell_grads_(cellwise_gradient(ref_)) {}

ScalarField ReferenceData::values_on(MeshPtr mesh) const {
  Eigen::VectorXd v(mesh->num_vertices());
  for (int i = 0; i < mesh->num_vertices(); ++i) v[i] = locator_.evaluate(ref_, mesh->vertex(i));
  return ScalarField(std::move(mesh), std::move(v));
}

std::vector<Vec2> ReferenceData::gradients_at_vertices(const TriangleMesh& mesh) const {
  std::vector<Vec2> g(mesh.num_vertices());
  for (int i = 0; i < mesh.num_vertices(); ++i)
    g[i] = locator_.evaluate_gradient(cell_grads_, mesh.vertex(i));
  return g;
}

LinesearchResult linesearch(MeshPtr mesh, const VectorField& U, const ObjectiveValue& current,
                            const TrialStateSolver& solve_state, const ReferenceData& ref,
                            const RunConfig& cfg) {
  LinesearchResult result;
  result.mesh = mesh;

  const double reference =
      cfg.ls_include_perimeter ? current.J : current.tracking;

  double scale = 1.0;
  std::vector<Vec2> displacement(mesh->num_vertices());
  for (int halvings = 0; halvings <= cfg.ls_max_halvings; ++halvings) {
    for (int v = 0; v < mesh->num_vertices(); ++v) displacement[v] = scale * U.at(v);
    scale *= cfg.ls_shrink;
    result.halvings = halvings;
    MeshPtr trial;
    try {
      trial = std::make_shared<TriangleMesh>(deform_mesh(*mesh, displacement));
    } catch (const CellInversionError&) {
      continue;  // treated as a rejected trial, shrink and retry
    }
    ScalarField y_trial = solve_state(trial);
    ScalarField ybar_trial = ref.values_on(trial);
    ObjectiveValue obj = evaluate_objective(y_trial, ybar_trial, cfg.nu);
    const double measured = cfg.ls_include_perimeter ? obj.J : obj.tracking;
    if (measured <= cfg.ls_accept * reference) {
      result.success = true;
      result.mesh = trial;
      result.y = std::move(y_trial);
      result.ybar = std::move(ybar_trial);
      result.objective = obj;
      return result;
    }
  }
  result.success = false;
  return result;
}

namespace {

struct GradientEval {
  ShapeGradient gradient;
  ShapeFunctional masked;
};

GradientEval build_gradient(const ShapeFunctional& tracking_part, const RunConfig& cfg) {
  ShapeFunctional total = tracking_part;
  total += perimeter_derivative_functional(total.mesh, cfg.nu);
  ShapeFunctional masked = mask_to_interface(std::move(total));
  ScalarField mu = solve_mu_elas(masked.mesh, cfg.mu_min, cfg.mu_max, cfg.lin_tol);
  ShapeGradient grad = shape_gradient(masked, mu, cfg.lambda_elas, cfg.lin_tol);
  return {std::move(grad), std::move(masked)};
}

VectorField negated(const VectorField& U) {
  return VectorField(U.mesh_ptr(), -U.values());
}

}  // namespace

OptimizeResult optimize(const RunConfig& cfg, MeshPtr mesh, const ReferenceData& ybar_ref,
                        const Obstacle& obstacle, const PiecewiseSource& f,
                        const EllipticCoefficients& coeffs,
                        const std::function<void(int, const TriangleMesh&)>& snapshot_hook) {
  cfg.validate();
  OptimizeResult out;

  // lambda_bar is fixed on the initial mesh and transported with the vertices
  const Regularization reg0 = make_regularization(cfg.c, mesh, f, obstacle);
  const Smoother smoother{cfg.gamma};
  const bool laplacian = coeffs.identity_leading_order;

  ScalarField ybar = ybar_ref.values_on(mesh);
  ScalarField y = solve_vi_pdas(mesh, f, obstacle, cfg.eps_state, coeffs).y;
  ObjectiveValue obj = evaluate_objective(y, ybar, cfg.nu);

  auto pdas_solver = [&](MeshPtr m) {
    return solve_vi_pdas(std::move(m), f, obstacle, cfg.eps_state, coeffs).y;
  };
  auto smoothed_solver = [&](MeshPtr m) {
    Regularization reg = transport_regularization(reg0, m);
    return solve_state_smoothed(std::move(m), f, obstacle, reg, smoother, cfg.eps_state, coeffs);
  };

  for (int step = 0; step < cfg.max_iters; ++step) {
    if (snapshot_hook) snapshot_hook(step, *mesh);

    IterationRecord rec;
    rec.step = step;
    rec.J = obj.J;
    rec.tracking = obj.tracking;
    rec.perimeter = obj.perimeter;

    // unregularized branch: PDAS state, limit adjoint, limit shape derivative
    ActiveSet active = detect_active_set(y, obstacle, cfg.eps_adj);
    ScalarField p = solve_adjoint_limit(y, ybar, active, cfg.lin_tol, coeffs);
    const std::vector<Vec2> grad_ybar = ybar_ref.gradients_at_vertices(*mesh);
    ShapeFunctional dj =
        laplacian ? assemble_dj_laplacian(y, p, ybar, grad_ybar, f, obstacle, active)
                  : assemble_dj_limit(y, p, ybar, grad_ybar, f, obstacle, coeffs, active);
    GradientEval ge = build_gradient(dj, cfg);
    rec.grad_norm = ge.gradient.norm;

    bool stepped = false;
    bool ls_failed = false;
    if (ge.gradient.norm > cfg.eps_shape) {
      LinesearchResult ls =
          linesearch(mesh, negated(ge.gradient.U), obj, pdas_solver, ybar_ref, cfg);
      rec.halvings = ls.halvings;
      if (ls.success) {
        mesh = ls.mesh;
        y = std::move(*ls.y);
        ybar = std::move(*ls.ybar);
        obj = ls.objective;
        stepped = true;
      } else {
        ls_failed = true;
      }
    }

    if (!stepped) {
      // safeguard: consult the fully regularized model before declaring
      // convergence (or after a failed linesearch)
      Regularization reg = transport_regularization(reg0, mesh);
      ScalarField y_gc =
          solve_state_smoothed(mesh, f, obstacle, reg, smoother, cfg.eps_state, coeffs, &y);
      ScalarField p_gc =
          solve_adjoint_smoothed(y_gc, ybar, obstacle, reg, smoother, cfg.lin_tol, coeffs);
      ShapeFunctional dj_gc =
          laplacian
              ? assemble_dj_laplacian_smoothed(y_gc, p_gc, ybar, grad_ybar, f, obstacle, reg,
                                               smoother)
              : assemble_dj_smoothed(y_gc, p_gc, ybar, grad_ybar, f, obstacle, coeffs, reg,
                                     smoother);
      GradientEval ge_gc = build_gradient(dj_gc, cfg);
      rec.grad_norm_smoothed = ge_gc.gradient.norm;

      if (ge_gc.gradient.norm <= cfg.eps_shape) {
        if (!ls_failed) {
          // both norms below tolerance: converged
          out.history.push_back(rec);
          out.converged = true;
          out.stop_reason = "gradient norms below eps_shape";
          break;
        }
        out.history.push_back(rec);
        out.stop_reason = "linesearch failed and smoothed gradient below tolerance";
        break;
      }

      rec.safeguard_activated = true;
      ObjectiveValue obj_gc = evaluate_objective(y_gc, ybar, cfg.nu);
      LinesearchResult ls =
          linesearch(mesh, negated(ge_gc.gradient.U), obj_gc, smoothed_solver, ybar_ref, cfg);
      rec.halvings = ls.halvings;
      if (!ls.success) {
        out.history.push_back(rec);
        out.stop_reason = "safeguard linesearch failed";
        break;
      }
      mesh = ls.mesh;
      ybar = std::move(*ls.ybar);
      y = pdas_solver(mesh);
      obj = evaluate_objective(y, ybar, cfg.nu);
      stepped = true;
    }

    rec.accepted = stepped;
    out.history.push_back(rec);
  }

  if (!out.converged && out.stop_reason.empty()) out.stop_reason = "iteration cap reached";
  out.final_mesh = mesh;
  out.final_state = std::move(y);

  // closing record with the final objective so histories always end at the
  // reached configuration
  IterationRecord last;
  last.step = static_cast<int>(out.history.size());
  ObjectiveValue final_obj = evaluate_objective(*out.final_state, ybar_ref.values_on(mesh), cfg.nu);
  last.J = final_obj.J;
  last.tracking = final_obj.tracking;
  last.perimeter = final_obj.perimeter;
  if (!out.history.empty()) {
    last.grad_norm = out.history.back().grad_norm;
    last.grad_norm_smoothed = out.history.back().grad_norm_smoothed;
  }
  out.history.push_back(last);
  return out;
}

}  // namespace vishape
