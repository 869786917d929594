// Command-line front end: wires configs to the solvers, studies and the
// optimizer. Every run writes a resolved-config echo and a deterministic
// summary next to its outputs; wall time goes to stderr so reruns stay
// bit-identical.
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "vishape/config.hpp"
#include "vishape/io.hpp"

using namespace vishape;
namespace fs = std::filesystem;

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "mesh.radius", "mesh.h", "mesh.target_kind", "mesh.target_radius", "mesh.target_a",
      "mesh.target_b", "mesh.target_h",
      "problem.obstacle", "problem.f_inner", "problem.f_outer",
      "vi.c", "vi.gamma", "vi.eps_state", "vi.mode",
      "adjoint.eps_adj", "adjoint.variant",
      "optim.nu", "optim.eps_shape", "optim.mu_min", "optim.mu_max", "optim.lambda_elas",
      "optim.max_iters", "optim.ls_shrink", "optim.ls_accept", "optim.ls_max_halvings",
      "optim.include_perimeter", "optim.snapshot_every",
      "study.c_list", "study.gamma_list", "study.levels", "study.vertex_cap",
      "study.refine_gamma", "study.refine_c",
      "out.vtk", "out.tag",
  };
  return keys;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  if (out.empty()) throw ConfigError("empty numeric list: '" + text + "'");
  return out;
}

struct Problem {
  ConfigMap cfg;
  fs::path out;
  Obstacle obstacle;
  std::string obstacle_name;
  PiecewiseSource f;
  bool vtk = false;

  explicit Problem(ConfigMap c, const std::string& outdir)
      : cfg(std::move(c)), out(outdir), obstacle(Obstacle::phi1()) {
    cfg.require_known(known_keys());
    obstacle_name = cfg.get_string("problem.obstacle", "phi1");
    obstacle = Obstacle::named(obstacle_name);
    f.inner = cfg.get_double("problem.f_inner", 100.0);
    f.outer = cfg.get_double("problem.f_outer", -10.0);
    vtk = cfg.get_bool("out.vtk", false);
    fs::create_directories(out);
  }

  MeshPtr initial_mesh() const {
    const double r = cfg.get_double("mesh.radius", 0.15);
    const double h = cfg.get_double("mesh.h", 0.025);
    return std::make_shared<TriangleMesh>(generate_disk_mesh(r, h));
  }

  MeshPtr target_mesh() const {
    const double h = cfg.get_double("mesh.h", 0.025);
    // default offset keeps target lattices off the initial-mesh vertices
    const double th = cfg.get_double("mesh.target_h", 0.92 * h);
    const std::string kind = cfg.get_string("mesh.target_kind", "ellipse");
    if (kind == "circle") {
      const double r = cfg.get_double("mesh.target_radius", 0.25);
      return std::make_shared<TriangleMesh>(
          generate_interface_mesh(InterfaceCurve::circle({0.5, 0.5}, r), th));
    }
    if (kind != "ellipse") throw ConfigError("mesh.target_kind must be circle or ellipse");
    const double a = cfg.get_double("mesh.target_a", 0.25);
    const double b = cfg.get_double("mesh.target_b", 0.18);
    return std::make_shared<TriangleMesh>(
        generate_interface_mesh(InterfaceCurve::ellipse({0.5, 0.5}, a, b), th));
  }

  RunConfig run_config() const {
    RunConfig rc;
    rc.nu = cfg.get_double("optim.nu", 1e-5);
    rc.gamma = cfg.get_double("vi.gamma", 1e4);
    rc.c = cfg.get_double("vi.c", 1e4);
    rc.eps_state = cfg.get_double("vi.eps_state", 3e-4);
    rc.eps_adj = cfg.get_double("adjoint.eps_adj", 1e-9);
    rc.eps_shape = cfg.get_double("optim.eps_shape", 1e-6);
    rc.mu_min = cfg.get_double("optim.mu_min", 0.0);
    rc.mu_max = cfg.get_double("optim.mu_max", obstacle_name == "phi2" ? 55.0 : 25.0);
    rc.lambda_elas = cfg.get_double("optim.lambda_elas", 0.0);
    rc.max_iters = cfg.get_int("optim.max_iters", 500);
    rc.ls_shrink = cfg.get_double("optim.ls_shrink", 0.5);
    rc.ls_accept = cfg.get_double("optim.ls_accept", 0.995);
    rc.ls_max_halvings = cfg.get_int("optim.ls_max_halvings", 30);
    rc.ls_include_perimeter = cfg.get_bool("optim.include_perimeter", false);
    rc.validate();
    return rc;
  }

  std::string tag() const {
    std::string t = cfg.get_string("out.tag", "");
    if (!t.empty()) return t;
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%d%H%M%S", std::gmtime(&now));
    return buf;
  }

  void write_resolved_config() const {
    std::ofstream os(out / "resolved_config.txt");
    os << cfg.echo();
  }

  void write_summary(const std::vector<std::pair<std::string, std::string>>& rows) const {
    std::ofstream os(out / "summary.txt");
    for (const auto& [k, v] : rows) os << k << " = " << v << "\n";
  }

  void maybe_vtk(const std::string& name, const TriangleMesh& mesh,
                 const std::vector<std::pair<std::string, const ScalarField*>>& scalars = {},
                 const std::vector<std::pair<std::string, const VectorField*>>& vectors = {}) const {
    if (vtk) write_vtk((out / (name + ".vtk")).string(), mesh, scalars, vectors);
  }
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

int cmd_generate_target(const Problem& prob) {
  MeshPtr mesh = prob.target_mesh();
  ScalarField ybar =
      generate_target(mesh, prob.obstacle, prob.f, prob.cfg.get_double("vi.eps_state", 3e-4));
  save_mesh((prob.out / "target_mesh.txt").string(), *mesh);
  save_field((prob.out / "target_ybar.txt").string(), ybar);
  prob.maybe_vtk("target", *mesh, {{"ybar", &ybar}});
  prob.write_resolved_config();
  prob.write_summary({{"vertices", std::to_string(mesh->num_vertices())},
                      {"cells", std::to_string(mesh->num_cells())},
                      {"ybar_max", fmt(ybar.values().maxCoeff())}});
  return 0;
}

int cmd_solve_state(const Problem& prob) {
  MeshPtr mesh = prob.initial_mesh();
  const double tol = prob.cfg.get_double("vi.eps_state", 3e-4);
  const std::string mode = prob.cfg.get_string("vi.mode", "pdas");
  std::vector<std::pair<std::string, std::string>> summary;
  save_mesh((prob.out / "mesh.txt").string(), *mesh);

  if (mode == "pdas") {
    ViSolution vi = solve_vi_pdas(mesh, prob.f, prob.obstacle, tol);
    save_field((prob.out / "state.txt").string(), vi.y);
    save_field((prob.out / "lambda.txt").string(), vi.lambda);
    prob.maybe_vtk("state", *mesh, {{"y", &vi.y}, {"lambda", &vi.lambda}});
    summary = {{"mode", mode},
               {"pdas_iterations", std::to_string(vi.iterations)},
               {"y_max", fmt(vi.y.values().maxCoeff())}};
  } else {
    Regularization reg =
        make_regularization(prob.cfg.get_double("vi.c", 1e4), mesh, prob.f, prob.obstacle);
    ScalarField y =
        mode == "smoothed"
            ? solve_state_smoothed(mesh, prob.f, prob.obstacle, reg,
                                   Smoother{prob.cfg.get_double("vi.gamma", 1e4)}, tol)
            : solve_state_regularized(mesh, prob.f, prob.obstacle, reg, tol);
    if (mode != "smoothed" && mode != "regularized")
      throw ConfigError("vi.mode must be pdas, regularized or smoothed");
    save_field((prob.out / "state.txt").string(), y);
    prob.maybe_vtk("state", *mesh, {{"y", &y}});
    summary = {{"mode", mode}, {"y_max", fmt(y.values().maxCoeff())}};
  }
  prob.write_resolved_config();
  prob.write_summary(summary);
  return 0;
}

int cmd_solve_adjoint(const Problem& prob) {
  MeshPtr mesh = prob.initial_mesh();
  ReferenceData ref(generate_target(prob.target_mesh(), prob.obstacle, prob.f,
                                    prob.cfg.get_double("vi.eps_state", 3e-4)));
  ScalarField ybar = ref.values_on(mesh);
  const double tol = prob.cfg.get_double("vi.eps_state", 3e-4);
  const std::string variant = prob.cfg.get_string("adjoint.variant", "limit");
  save_mesh((prob.out / "mesh.txt").string(), *mesh);

  ScalarField p = ScalarField::zero(mesh);
  if (variant == "limit") {
    ScalarField y = solve_vi_pdas(mesh, prob.f, prob.obstacle, tol).y;
    ActiveSet a =
        detect_active_set(y, prob.obstacle, prob.cfg.get_double("adjoint.eps_adj", 1e-9));
    p = solve_adjoint_limit(y, ybar, a);
    save_field((prob.out / "state.txt").string(), y);
  } else {
    Regularization reg =
        make_regularization(prob.cfg.get_double("vi.c", 1e4), mesh, prob.f, prob.obstacle);
    if (variant == "smoothed") {
      Smoother sm{prob.cfg.get_double("vi.gamma", 1e4)};
      ScalarField y = solve_state_smoothed(mesh, prob.f, prob.obstacle, reg, sm, tol);
      p = solve_adjoint_smoothed(y, ybar, prob.obstacle, reg, sm);
      save_field((prob.out / "state.txt").string(), y);
    } else if (variant == "regularized") {
      ScalarField y = solve_state_regularized(mesh, prob.f, prob.obstacle, reg, tol);
      ActiveSet ac = detect_active_set_c(y, reg, prob.obstacle);
      p = solve_adjoint_regularized_limit(y, ybar, reg, ac);
      save_field((prob.out / "state.txt").string(), y);
    } else {
      throw ConfigError("adjoint.variant must be limit, regularized or smoothed");
    }
  }
  save_field((prob.out / "adjoint.txt").string(), p);
  prob.maybe_vtk("adjoint", *mesh, {{"p", &p}});
  prob.write_resolved_config();
  prob.write_summary({{"variant", variant},
                      {"p_min", fmt(p.values().minCoeff())},
                      {"p_max", fmt(p.values().maxCoeff())}});
  return 0;
}

int cmd_gradient(const Problem& prob) {
  MeshPtr mesh = prob.initial_mesh();
  RunConfig rc = prob.run_config();
  ReferenceData ref(
      generate_target(prob.target_mesh(), prob.obstacle, prob.f, rc.eps_state));
  ScalarField ybar = ref.values_on(mesh);

  ScalarField y = solve_vi_pdas(mesh, prob.f, prob.obstacle, rc.eps_state).y;
  ActiveSet a = detect_active_set(y, prob.obstacle, rc.eps_adj);
  ScalarField p = solve_adjoint_limit(y, ybar, a);
  ShapeFunctional dj = assemble_dj_laplacian(y, p, ybar, ref.gradients_at_vertices(*mesh),
                                             prob.f, prob.obstacle, a);
  dj += perimeter_derivative_functional(mesh, rc.nu);
  ShapeFunctional masked = mask_to_interface(std::move(dj));
  ScalarField mu = solve_mu_elas(mesh, rc.mu_min, rc.mu_max);
  ShapeGradient g = shape_gradient(masked, mu, rc.lambda_elas);

  save_mesh((prob.out / "mesh.txt").string(), *mesh);
  save_field((prob.out / "state.txt").string(), y);
  save_field((prob.out / "adjoint.txt").string(), p);
  save_vector_field((prob.out / "gradient.txt").string(), g.U);
  prob.maybe_vtk("gradient", *mesh, {{"y", &y}, {"p", &p}}, {{"U", &g.U}});
  prob.write_resolved_config();
  prob.write_summary({{"grad_norm", fmt(g.norm)},
                      {"active_vertices", std::to_string(a.size())}});
  return 0;
}

int cmd_optimize(const Problem& prob) {
  MeshPtr mesh = prob.initial_mesh();
  RunConfig rc = prob.run_config();
  MeshPtr target = prob.target_mesh();
  ReferenceData ref(generate_target(target, prob.obstacle, prob.f, rc.eps_state));
  save_mesh((prob.out / "target_mesh.txt").string(), *target);

  const int every = prob.cfg.get_int("optim.snapshot_every", 0);
  auto hook = [&](int step, const TriangleMesh& m) {
    if (every > 0 && step % every == 0) {
      save_mesh((prob.out / ("mesh_step_" + std::to_string(step) + ".txt")).string(), m);
      write_interface_csv(
          (prob.out / ("interface_step_" + std::to_string(step) + ".csv")).string(), m);
    }
  };

  OptimizeResult res = optimize(rc, mesh, ref, prob.obstacle, prob.f,
                                EllipticCoefficients::laplacian(), hook);

  write_history_csv((prob.out / "history.csv").string(), res.history);
  save_mesh((prob.out / "final_mesh.txt").string(), *res.final_mesh);
  write_interface_csv((prob.out / "final_interface.csv").string(), *res.final_mesh);
  if (res.final_state) {
    save_field((prob.out / "final_state.txt").string(), *res.final_state);
    prob.maybe_vtk("final", *res.final_mesh, {{"y", &*res.final_state}});
  }
  prob.write_resolved_config();
  prob.write_summary({{"iterations", std::to_string(res.history.size() - 1)},
                      {"converged", res.converged ? "1" : "0"},
                      {"stop_reason", res.stop_reason},
                      {"final_J", fmt(res.history.back().J)},
                      {"final_tracking", fmt(res.history.back().tracking)}});
  return 0;
}

int cmd_study_sign(const Problem& prob) {
  MeshPtr mesh = prob.initial_mesh();
  StudyTable t = study_sign_convergence(
      mesh, prob.obstacle, prob.f,
      parse_list(prob.cfg.get_string("study.c_list", "1000")),
      parse_list(prob.cfg.get_string("study.gamma_list",
                                     "0.001,0.01,0.1,1,10,100,10000,1e6,1e8")),
      prob.cfg.get_double("vi.eps_state", 3e-4));
  write_study_csv((prob.out / ("study_sign_" + prob.tag() + ".csv")).string(), t);
  prob.write_resolved_config();
  prob.write_summary({{"rows", std::to_string(t.rows.size())}});
  return 0;
}

int cmd_study_convergence(const Problem& prob) {
  MeshPtr mesh = prob.initial_mesh();
  ReferenceData ref(generate_target(prob.target_mesh(), prob.obstacle, prob.f,
                                    prob.cfg.get_double("vi.eps_state", 3e-4)));
  ScalarField ybar = ref.values_on(mesh);
  StudyTable t = study_state_adjoint_convergence(
      mesh, prob.obstacle, prob.f, ybar,
      parse_list(prob.cfg.get_string("study.c_list", "100,1000,10000,100000")),
      parse_list(prob.cfg.get_string("study.gamma_list", "10,100,1000,10000,100000")),
      prob.cfg.get_double("vi.eps_state", 3e-4), prob.cfg.get_double("adjoint.eps_adj", 1e-9));
  write_study_csv((prob.out / ("study_convergence_" + prob.tag() + ".csv")).string(), t);
  prob.write_resolved_config();
  prob.write_summary({{"rows", std::to_string(t.rows.size())}});
  return 0;
}

int cmd_study_refinement(const Problem& prob) {
  MeshPtr mesh = prob.initial_mesh();
  StudyTable t = study_mesh_refinement_sign(
      mesh, prob.obstacle, prob.f, prob.cfg.get_int("study.levels", 3),
      prob.cfg.get_double("study.refine_gamma", 1e8), prob.cfg.get_double("study.refine_c", 1e5),
      prob.cfg.get_double("vi.eps_state", 3e-4), prob.cfg.get_int("study.vertex_cap", 50000));
  write_study_csv((prob.out / ("study_refinement_" + prob.tag() + ".csv")).string(), t);
  prob.write_resolved_config();
  prob.write_summary({{"rows", std::to_string(t.rows.size())}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shape optimization for obstacle-type variational inequalities"};
  app.require_subcommand(1);

  std::string config_path, outdir = "out", obstacle_flag;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "flat key=value config file with [sections]");
  app.add_option("--out", outdir, "output directory");
  app.add_option("--set", overrides, "config overrides key=value (repeatable)");
  app.add_option("--obstacle", obstacle_flag, "obstacle name or expression (phi1, phi2, ...)");

  const std::vector<std::pair<std::string, int (*)(const Problem&)>> commands = {
      {"generate-target", cmd_generate_target}, {"solve-state", cmd_solve_state},
      {"solve-adjoint", cmd_solve_adjoint},     {"gradient", cmd_gradient},
      {"optimize", cmd_optimize},               {"study-sign", cmd_study_sign},
      {"study-convergence", cmd_study_convergence}, {"study-refinement", cmd_study_refinement},
  };
  for (const auto& [name, fn] : commands) app.add_subcommand(name)->fallthrough();

  CLI11_PARSE(app, argc, argv);

  const auto t0 = std::chrono::steady_clock::now();
  try {
    ConfigMap cfg =
        config_path.empty() ? ConfigMap() : ConfigMap::parse_file(config_path);
    for (const std::string& kv : overrides) cfg.set_override(kv);
    if (!obstacle_flag.empty()) cfg.set("problem.obstacle", obstacle_flag);

    Problem prob(std::move(cfg), outdir);
    int rc = 1;
    for (const auto& [name, fn] : commands)
      if (app.got_subcommand(name)) rc = fn(prob);

    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cerr << "wall_time_s=" << secs << "\n";
    return rc;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const SolveError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
