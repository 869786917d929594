#include "vishape/lab.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace vishape {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double h1_distance(const ScalarField& a, const ScalarField& b) {
  ScalarField diff(a.mesh_ptr(), a.values() - b.values());
  return field_norms(diff).h1;
}

// vertices of cells with mixed active/inactive corners (discrete free
// boundary), used both for the refinement marking and the Fig.-style count
std::vector<int> free_boundary_cells(const TriangleMesh& mesh, const ActiveSet& active) {
  std::vector<int> cells;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    int n = 0;
    for (int k = 0; k < 3; ++k) n += active.contains(mesh.cell(c)[k]) ? 1 : 0;
    if (n > 0 && n < 3) cells.push_back(c);
  }
  return cells;
}

}  // namespace

ScalarField generate_target(MeshPtr target_mesh, const Obstacle& obstacle,
                            const PiecewiseSource& f, double tol) {
  return solve_vi_pdas(std::move(target_mesh), f, obstacle, tol).y;
}

StudyTable study_sign_convergence(MeshPtr mesh, const Obstacle& obstacle, const PiecewiseSource& f,
                                  const std::vector<double>& c_list,
                                  const std::vector<double>& gamma_list, double eps_state) {
  if (c_list.empty() || gamma_list.empty()) throw Error("parameter lists must be nonempty");
  StudyTable t;
  t.name = "sign_convergence";
  {
    std::ostringstream os;
    os << "eps_state=" << eps_state << " vertices=" << mesh->num_vertices();
    t.config_echo = os.str();
  }
  t.columns = {"gamma", "c", "l1_sign_error"};

  for (double c : c_list) {
    Regularization reg = make_regularization(c, mesh, f, obstacle);
    std::optional<ScalarField> y_c;
    std::string c_error;
    try {
      y_c = solve_state_regularized(mesh, f, obstacle, reg, eps_state);
    } catch (const Error& e) {
      c_error = e.what();
    }
    for (double gamma : gamma_list) {
      if (!y_c) {
        t.rows.push_back({gamma, c, kNaN});
        t.status.push_back(c_error);
        continue;
      }
      try {
        ScalarField y_gc = solve_state_smoothed(mesh, f, obstacle, reg, Smoother{gamma},
                                                eps_state, EllipticCoefficients::laplacian(),
                                                &*y_c);
        t.rows.push_back({gamma, c, sign_l1_distance(y_gc, *y_c, reg, obstacle, gamma)});
        t.status.push_back("ok");
      } catch (const Error& e) {
        t.rows.push_back({gamma, c, kNaN});
        t.status.push_back(e.what());
      }
    }
  }
  return t;
}

StudyTable study_state_adjoint_convergence(MeshPtr mesh, const Obstacle& obstacle,
                                           const PiecewiseSource& f, const ScalarField& ybar,
                                           const std::vector<double>& c_list,
                                           const std::vector<double>& gamma_list, double eps_state,
                                           double eps_adj) {
  if (c_list.empty() || gamma_list.empty()) throw Error("parameter lists must be nonempty");
  if (&ybar.mesh() != mesh.get()) throw Error("ybar must live on the study mesh");

  StudyTable t;
  t.name = "state_adjoint_convergence";
  {
    std::ostringstream os;
    os << "eps_state=" << eps_state << " eps_adj=" << eps_adj
       << " vertices=" << mesh->num_vertices();
    t.config_echo = os.str();
  }
  t.columns = {"gamma",
               "c",
               "h1_state_error",
               "h1_state_error_c",
               "h1_adjoint_error",
               "h1_adjoint_error_c",
               "ac_violations"};

  // unregularized references
  ViSolution vi = solve_vi_pdas(mesh, f, obstacle, eps_state);
  ActiveSet active = detect_active_set(vi.y, obstacle, eps_adj);
  ScalarField p = solve_adjoint_limit(vi.y, ybar, active);

  for (double c : c_list) {
    Regularization reg = make_regularization(c, mesh, f, obstacle);
    std::optional<ScalarField> y_c, p_c;
    double state_err_c = kNaN, adjoint_err_c = kNaN;
    int violations = -1;
    std::string c_error;
    try {
      y_c = solve_state_regularized(mesh, f, obstacle, reg, eps_state);
      ActiveSet active_c = detect_active_set_c(*y_c, reg, obstacle);
      p_c = solve_adjoint_regularized_limit(*y_c, ybar, reg, active_c);
      state_err_c = h1_distance(*y_c, vi.y);
      adjoint_err_c = h1_distance(*p_c, p);
      violations = 0;
      for (int v : active_c.vertices)
        if (!active.contains(v)) ++violations;
    } catch (const Error& e) {
      c_error = e.what();
    }

    for (double gamma : gamma_list) {
      if (!y_c) {
        t.rows.push_back({gamma, c, kNaN, kNaN, kNaN, kNaN, kNaN});
        t.status.push_back(c_error);
        continue;
      }
      try {
        ScalarField y_gc = solve_state_smoothed(mesh, f, obstacle, reg, Smoother{gamma},
                                                eps_state, EllipticCoefficients::laplacian(),
                                                &*y_c);
        ScalarField p_gc = solve_adjoint_smoothed(y_gc, ybar, obstacle, reg, Smoother{gamma});
        t.rows.push_back({gamma, c, h1_distance(y_gc, *y_c), state_err_c,
                          h1_distance(p_gc, *p_c), adjoint_err_c,
                          static_cast<double>(violations)});
        t.status.push_back("ok");
      } catch (const Error& e) {
        t.rows.push_back({gamma, c, kNaN, state_err_c, kNaN, adjoint_err_c,
                          static_cast<double>(violations)});
        t.status.push_back(e.what());
      }
    }
  }
  return t;
}

StudyTable study_mesh_refinement_sign(MeshPtr base_mesh, const Obstacle& obstacle,
                                      const PiecewiseSource& f, int levels, double gamma, double c,
                                      double eps_state, int vertex_cap) {
  if (levels < 2) throw Error("refinement study needs at least 2 levels");
  StudyTable t;
  t.name = "mesh_refinement_sign";
  {
    std::ostringstream os;
    os << "gamma=" << gamma << " c=" << c << " eps_state=" << eps_state
       << " vertex_cap=" << vertex_cap;
    t.config_echo = os.str();
  }
  t.columns = {"level", "vertices", "free_boundary_vertices", "l1_sign_error"};

  MeshPtr mesh = std::move(base_mesh);
  for (int level = 0; level < levels; ++level) {
    if (mesh->num_vertices() > vertex_cap) {
      t.rows.push_back({static_cast<double>(level), static_cast<double>(mesh->num_vertices()),
                        kNaN, kNaN});
      t.status.push_back("vertex cap reached");
      break;
    }
    Regularization reg = make_regularization(c, mesh, f, obstacle);
    std::vector<int> marked;
    try {
      ScalarField y_c = solve_state_regularized(mesh, f, obstacle, reg, eps_state);
      ScalarField y_gc = solve_state_smoothed(mesh, f, obstacle, reg, Smoother{gamma}, eps_state,
                                              EllipticCoefficients::laplacian(), &y_c);
      const double err = sign_l1_distance(y_gc, y_c, reg, obstacle, gamma);
      ActiveSet active_c = detect_active_set_c(y_c, reg, obstacle);
      marked = free_boundary_cells(*mesh, active_c);
      std::vector<std::uint8_t> fb_vertex(mesh->num_vertices(), 0);
      for (int cell : marked)
        for (int k = 0; k < 3; ++k) fb_vertex[mesh->cell(cell)[k]] = 1;
      int fb_count = 0;
      for (auto flag : fb_vertex) fb_count += flag;
      t.rows.push_back({static_cast<double>(level), static_cast<double>(mesh->num_vertices()),
                        static_cast<double>(fb_count), err});
      t.status.push_back("ok");
    } catch (const Error& e) {
      t.rows.push_back({static_cast<double>(level), static_cast<double>(mesh->num_vertices()),
                        kNaN, kNaN});
      t.status.push_back(e.what());
      break;
    }
    if (level + 1 < levels) {
      // bisect the free-boundary band grown by one vertex ring
      std::vector<std::uint8_t> near(mesh->num_vertices(), 0);
      for (int cell : marked)
        for (int k = 0; k < 3; ++k) near[mesh->cell(cell)[k]] = 1;
      std::vector<int> band;
      for (int cell = 0; cell < mesh->num_cells(); ++cell)
        for (int k = 0; k < 3; ++k)
          if (near[mesh->cell(cell)[k]]) {
            band.push_back(cell);
            break;
          }
      mesh = std::make_shared<TriangleMesh>(refine_cells(*mesh, band));
    }
  }
  return t;
}

}  // namespace vishape
