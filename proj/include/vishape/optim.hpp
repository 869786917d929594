#pragma once

#include <functional>
#include <optional>

#include "vishape/shape.hpp"

namespace vishape {

// Scalar parameters of the optimization runs; defaults follow the reference
// experiment set (nu, eps_state, eps_adj, mu bounds, linesearch constants).
struct RunConfig {
  double nu = 1e-5;          // perimeter weight
  double gamma = 1e4;        // smoothing parameter (safeguard branch)
  double c = 1e4;            // penalty scale (safeguard branch)
  double eps_state = 3e-4;   // state solve tolerance
  double eps_adj = 1e-9;     // active set detection tolerance
  double eps_shape = 1e-6;   // gradient norm stopping tolerance
  double mu_min = 0.0;
  double mu_max = 25.0;
  double lambda_elas = 0.0;
  int max_iters = 500;
  double ls_shrink = 0.5;
  double ls_accept = 0.995;
  int ls_max_halvings = 30;
  bool ls_include_perimeter = false;  // acceptance tests the tracking part only
  double lin_tol = 1e-10;             // linear solver tolerance

  void validate() const;
};

struct ObjectiveValue {
  double J = 0, tracking = 0, perimeter = 0;
};

// tracking = 1/2 ||y - ybar||_L2^2 (consistent mass), perimeter = interface
// length, J = tracking + nu * perimeter. ybar must already live on y's mesh.
ObjectiveValue evaluate_objective(const ScalarField& y, const ScalarField& ybar, double nu);

// Target data on its fixed reference mesh plus the transfer machinery onto
// deformed meshes (nodal values by point evaluation, gradients cellwise).
class ReferenceData {
 public:
  explicit ReferenceData(ScalarField ybar_ref);

  const ScalarField& field() const { return ref_; }
  ScalarField values_on(MeshPtr mesh) const;
  std::vector<Vec2> gradients_at_vertices(const TriangleMesh& mesh) const;

 private:
  ScalarField ref_;
  PointLocator locator_;
  std::vector<Vec2> cell_grads_;
};

struct IterationRecord {
  int step = 0;
  double J = 0, tracking = 0, perimeter = 0;
  double grad_norm = 0;                   // ||DJ|| (limit branch)
  double grad_norm_smoothed = -1;         // ||DJ_gc|| when the safeguard evaluated it
  int halvings = 0;
  bool safeguard_activated = false;       // safeguard had to act (discrepancy found)
  bool accepted = false;                  // a step was taken this iteration
};

using TrialStateSolver = std::function<ScalarField(MeshPtr)>;

struct LinesearchResult {
  bool success = false;
  MeshPtr mesh;
  std::optional<ScalarField> y;
  std::optional<ScalarField> ybar;
  ObjectiveValue objective;
  int halvings = 0;
};

// Backtracking linesearch: starts at the full step U as trial displacement,
// halves while the (tracking) objective exceeds ls_accept times the current
// value; cell inversions count as rejections.
LinesearchResult linesearch(MeshPtr mesh, const VectorField& U, const ObjectiveValue& current,
                            const TrialStateSolver& solve_state, const ReferenceData& ref,
                            const RunConfig& cfg);

struct OptimizeResult {
  std::vector<IterationRecord> history;
  MeshPtr final_mesh;
  std::optional<ScalarField> final_state;
  bool converged = false;
  std::string stop_reason;
};

// Safeguarded steepest descent: per step solves the unregularized state
// (PDAS), limit adjoint and limit shape derivative, masks the functional to
// the interface ring and steps along the negative elasticity gradient; on
// linesearch failure or gradient-norm convergence the fully regularized
// model is consulted (and stepped) before termination is declared.
OptimizeResult optimize(const RunConfig& cfg, MeshPtr initial_mesh, const ReferenceData& ybar_ref,
                        const Obstacle& obstacle, const PiecewiseSource& f,
                        const EllipticCoefficients& coeffs = EllipticCoefficients::laplacian(),
                        const std::function<void(int, const TriangleMesh&)>& snapshot_hook = {});

}  // namespace vishape
