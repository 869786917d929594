#pragma once

#include <string>

#include "vishape/optim.hpp"

namespace vishape {

// Simple numeric table with one status note per row; rows of failed solves
// stay in place flagged instead of being dropped.
struct StudyTable {
  std::string name;
  std::string config_echo;  // key=value summary embedded as a CSV comment
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> status;  // "ok" or a short failure note
};

// Solves the unregularized VI on the target-interface mesh; the result is the
// tracking data ybar.
ScalarField generate_target(MeshPtr target_mesh, const Obstacle& obstacle,
                            const PiecewiseSource& f, double tol);

// L1 distance of the smoothed and exact sign terms per (c, gamma) pair.
// Columns: gamma, c, l1_sign_error.
StudyTable study_sign_convergence(MeshPtr mesh, const Obstacle& obstacle, const PiecewiseSource& f,
                                  const std::vector<double>& c_list,
                                  const std::vector<double>& gamma_list, double eps_state);

// H1 errors of the regularization chain per (c, gamma):
// ||y_gc - y_c||, ||y_c - y||, ||p_gc - p_c||, ||p_c - p||, and the count of
// vertices violating the nominal inclusion A_c within A.
StudyTable study_state_adjoint_convergence(MeshPtr mesh, const Obstacle& obstacle,
                                           const PiecewiseSource& f, const ScalarField& ybar,
                                           const std::vector<double>& c_list,
                                           const std::vector<double>& gamma_list, double eps_state,
                                           double eps_adj = 1e-9);

// Sign L1 plateau across meshes refined near the free boundary.
// Columns: level, vertices, free_boundary_vertices, l1_sign_error.
StudyTable study_mesh_refinement_sign(MeshPtr base_mesh, const Obstacle& obstacle,
                                      const PiecewiseSource& f, int levels, double gamma, double c,
                                      double eps_state, int vertex_cap = 50000);

}  // namespace vishape
