#include "vishape/shape.hpp"

#include <cmath>

namespace vishape {

double ShapeFunctional::apply(const VectorField& V) const { return dual.dot(V.values()); }

ShapeFunctional& ShapeFunctional::operator+=(const ShapeFunctional& other) {
  if (mesh.get() != other.mesh.get()) throw Error("cannot combine functionals on different meshes");
  dual += other.dual;
  return *this;
}

ShapeFunctional ShapeFunctional::scaled(double s) const { return {mesh, s * dual}; }

ShapeFunctional zero_functional(MeshPtr mesh) {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(2 * mesh->num_vertices());
  return {std::move(mesh), std::move(d)};
}

namespace {

constexpr double kMidHat[3][3] = {{0.5, 0.0, 0.5}, {0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}};

struct SmoothedTerms {
  const Regularization* reg;
  const Smoother* smoother;
};

void check_inputs(const ScalarField& y, const ScalarField& p, const ScalarField& ybar) {
  if (&y.mesh() != &p.mesh() || &y.mesh() != &ybar.mesh())
    throw Error("shape derivative inputs must share one mesh");
}

// Shared nodal pieces: the data term -(y - ybar) grad(ybar)^T V paired with
// the consistent mass (so it matches the adjoint right-hand side exactly),
// and for the smoothed variant the lumped obstacle terms
//   -c sign_gamma(arg) grad(phi)^T V p   and   div(V) max_gamma(arg) p.
void add_nodal_terms(Eigen::VectorXd& G, const ScalarField& y, const ScalarField& p,
                     const ScalarField& ybar, const std::vector<Vec2>& grad_ybar,
                     const Obstacle& obstacle, const SmoothedTerms* smoothed) {
  const TriangleMesh& mesh = y.mesh();
  const int nv = mesh.num_vertices();
  if (static_cast<int>(grad_ybar.size()) != nv)
    throw Error("grad_ybar must hold one vector per vertex");

  const Eigen::VectorXd r = assemble_mass(mesh) * (y.values() - ybar.values());
  for (int v = 0; v < nv; ++v) {
    G[2 * v] -= r[v] * grad_ybar[v].x();
    G[2 * v + 1] -= r[v] * grad_ybar[v].y();
  }

  if (!smoothed) return;
  const double c = smoothed->reg->c;
  const double gamma = smoothed->smoother->gamma;
  const Eigen::VectorXd m = lumped_mass(mesh);

  Eigen::VectorXd arg(nv), maxg_p(nv);
  for (int v = 0; v < nv; ++v) {
    arg[v] = smoothed->reg->lambda_bar[v] + c * (y[v] - obstacle.value(mesh.vertex(v)));
    maxg_p[v] = smoothed_max(arg[v], gamma) * p[v];
  }
  for (int v = 0; v < nv; ++v) {
    const Vec2 gphi = obstacle.gradient(mesh.vertex(v));
    const double s = m[v] * c * smoothed_sign(arg[v], gamma) * p[v];
    G[2 * v] -= s * gphi.x();
    G[2 * v + 1] -= s * gphi.y();
  }
  // div(V) max_gamma(...) p with the same lumped rule as the state equation:
  // the lumped vertex mass m_k changes at rate sum_{cells at k} (A_c/3) div V|_c
  for (int cid = 0; cid < mesh.num_cells(); ++cid) {
    const auto& t = mesh.cell(cid);
    const double third = mesh.cell_area(cid) / 3.0;
    const auto grads = hat_gradients(mesh, cid);
    double cell_sum = 0;
    for (int k = 0; k < 3; ++k) cell_sum += maxg_p[t[k]];
    for (int i = 0; i < 3; ++i) {
      G[2 * t[i]] += third * grads[i].x() * cell_sum;
      G[2 * t[i] + 1] += third * grads[i].y() * cell_sum;
    }
  }
}

void zero_boundary_rows(Eigen::VectorXd& G, const TriangleMesh& mesh) {
  for (int v : mesh.outer_boundary()) {
    G[2 * v] = 0.0;
    G[2 * v + 1] = 0.0;
  }
}

}  // namespace

ShapeFunctional assemble_dj_smoothed(const ScalarField& y, const ScalarField& p,
                                     const ScalarField& ybar, const std::vector<Vec2>& grad_ybar,
                                     const PiecewiseSource& f, const Obstacle& obstacle,
                                     const EllipticCoefficients& coeffs, const Regularization& reg,
                                     const Smoother& smoother) {
  check_inputs(y, p, ybar);
  const TriangleMesh& mesh = y.mesh();
  Eigen::VectorXd G = Eigen::VectorXd::Zero(2 * mesh.num_vertices());

  for (int cid = 0; cid < mesh.num_cells(); ++cid) {
    const auto& t = mesh.cell(cid);
    const double w = mesh.cell_area(cid) / 3.0;
    const auto grads = hat_gradients(mesh, cid);
    const Vec2& p0 = mesh.vertex(t[0]);
    const Vec2& p1 = mesh.vertex(t[1]);
    const Vec2& p2 = mesh.vertex(t[2]);
    const std::array<Vec2, 3> qpts = {0.5 * (p0 + p1), 0.5 * (p1 + p2), 0.5 * (p2 + p0)};

    Vec2 gy = Vec2::Zero(), gp = Vec2::Zero();
    for (int k = 0; k < 3; ++k) {
      gy += y[t[k]] * grads[k];
      gp += p[t[k]] * grads[k];
    }
    const double fc = f.on_cell(mesh, cid);

    for (int q = 0; q < 3; ++q) {
      const Vec2& xq = qpts[q];
      double yq = 0, pq = 0, ybq = 0;
      for (int k = 0; k < 3; ++k) {
        yq += kMidHat[k][q] * y[t[k]];
        pq += kMidHat[k][q] * p[t[k]];
        ybq += kMidHat[k][q] * ybar[t[k]];
      }
      const Mat2 M = coeffs.matrix_at(xq);
      const Vec2 d = coeffs.d_at(xq);
      const double b = coeffs.b(xq);
      const auto gM = coeffs.grad_matrix_at(xq);
      const Vec2 gd1 = coeffs.grad_d1(xq), gd2 = coeffs.grad_d2(xq), gb = coeffs.grad_b(xq);

      const Vec2 Mgp = M * gp;
      const Vec2 Mgy = M * gy;
      const double diff = yq - ybq;
      const double div_payload = 0.5 * diff * diff + gy.dot(Mgp) +
                                 d.x() * (gy.x() * pq + yq * gp.x()) +
                                 d.y() * (gy.y() * pq + yq * gp.y()) + b * yq * pq - fc * pq;

      for (int i = 0; i < 3; ++i) {
        const double hi = kMidHat[i][q];
        const double gidot_Mgp = grads[i].dot(Mgp);
        const double gidot_Mgy = grads[i].dot(Mgy);
        const double gid_d = d.dot(grads[i]);
        for (int a = 0; a < 2; ++a) {
          double val = 0;
          // leading-order Jacobian terms -grad(y)^T (grad(V)^T M + M^T grad(V)) grad(p)
          val -= gy[a] * gidot_Mgp + gp[a] * gidot_Mgy;
          // + grad(y)^T (grad(M) . V) grad(p)
          val += hi * (gM[0][0][a] * gy.x() * gp.x() + gM[0][1][a] * gy.x() * gp.y() +
                       gM[1][0][a] * gy.y() * gp.x() + gM[1][1][a] * gy.y() * gp.y());
          // first-order coefficient terms
          val += yq * (hi * (gd1[a] * gp.x() + gd2[a] * gp.y()) - gid_d * gp[a]);
          val += pq * (hi * (gd1[a] * gy.x() + gd2[a] * gy.y()) - gid_d * gy[a]);
          // zeroth-order coefficient term
          val += hi * gb[a] * yq * pq;
          // div(V) payload
          val += grads[i][a] * div_payload;
          G[2 * t[i] + a] += w * val;
        }
      }
    }
  }

  SmoothedTerms st{&reg, &smoother};
  add_nodal_terms(G, y, p, ybar, grad_ybar, obstacle, &st);
  zero_boundary_rows(G, mesh);
  return {y.mesh_ptr(), std::move(G)};
}

ShapeFunctional assemble_dj_limit(const ScalarField& y, const ScalarField& p,
                                  const ScalarField& ybar, const std::vector<Vec2>& grad_ybar,
                                  const PiecewiseSource& f, const Obstacle& obstacle,
                                  const EllipticCoefficients& coeffs, const ActiveSet& active) {
  check_inputs(y, p, ybar);
  const TriangleMesh& mesh = y.mesh();
  Eigen::VectorXd G = Eigen::VectorXd::Zero(2 * mesh.num_vertices());

  for (int cid = 0; cid < mesh.num_cells(); ++cid) {
    const auto& t = mesh.cell(cid);
    const double w = mesh.cell_area(cid) / 3.0;
    const auto grads = hat_gradients(mesh, cid);
    const Vec2& p0 = mesh.vertex(t[0]);
    const Vec2& p1 = mesh.vertex(t[1]);
    const Vec2& p2 = mesh.vertex(t[2]);
    const std::array<Vec2, 3> qpts = {0.5 * (p0 + p1), 0.5 * (p1 + p2), 0.5 * (p2 + p0)};

    Vec2 gy = Vec2::Zero(), gp = Vec2::Zero();
    for (int k = 0; k < 3; ++k) {
      gy += y[t[k]] * grads[k];
      gp += p[t[k]] * grads[k];
    }
    const double fc = f.on_cell(mesh, cid);
    int n_active = 0;
    for (int k = 0; k < 3; ++k) n_active += active.contains(t[k]) ? 1 : 0;
    const double active_frac = n_active / 3.0;

    for (int q = 0; q < 3; ++q) {
      const Vec2& xq = qpts[q];
      double yq = 0, pq = 0, ybq = 0;
      for (int k = 0; k < 3; ++k) {
        yq += kMidHat[k][q] * y[t[k]];
        pq += kMidHat[k][q] * p[t[k]];
        ybq += kMidHat[k][q] * ybar[t[k]];
      }
      const Mat2 M = coeffs.matrix_at(xq);
      const Vec2 d = coeffs.d_at(xq);
      const double b = coeffs.b(xq);
      const auto gM = coeffs.grad_matrix_at(xq);
      const Vec2 gd1 = coeffs.grad_d1(xq), gd2 = coeffs.grad_d2(xq), gb = coeffs.grad_b(xq);

      const Vec2 Mgp = M * gp;
      const Vec2 Mgy = M * gy;
      const double diff = yq - ybq;
      const double div_payload = 0.5 * diff * diff + gy.dot(Mgp) +
                                 d.x() * (gy.x() * pq + yq * gp.x()) +
                                 d.y() * (gy.y() * pq + yq * gp.y()) + b * yq * pq - fc * pq;

      Vec2 active_term = Vec2::Zero();
      if (active_frac > 0) {
        const double phi_q = obstacle.value(xq);
        active_term = active_frac * (phi_q - ybq) * obstacle.gradient(xq);
      }

      for (int i = 0; i < 3; ++i) {
        const double hi = kMidHat[i][q];
        const double gidot_Mgp = grads[i].dot(Mgp);
        const double gidot_Mgy = grads[i].dot(Mgy);
        const double gid_d = d.dot(grads[i]);
        for (int a = 0; a < 2; ++a) {
          double val = 0;
          val -= gy[a] * gidot_Mgp + gp[a] * gidot_Mgy;
          val += hi * (gM[0][0][a] * gy.x() * gp.x() + gM[0][1][a] * gy.x() * gp.y() +
                       gM[1][0][a] * gy.y() * gp.x() + gM[1][1][a] * gy.y() * gp.y());
          val += yq * (hi * (gd1[a] * gp.x() + gd2[a] * gp.y()) - gid_d * gp[a]);
          val += pq * (hi * (gd1[a] * gy.x() + gd2[a] * gy.y()) - gid_d * gy[a]);
          val += hi * gb[a] * yq * pq;
          val += grads[i][a] * div_payload;
          val += hi * active_term[a];
          G[2 * t[i] + a] += w * val;
        }
      }
    }
  }

  add_nodal_terms(G, y, p, ybar, grad_ybar, obstacle, nullptr);
  zero_boundary_rows(G, mesh);
  return {y.mesh_ptr(), std::move(G)};
}

ShapeFunctional assemble_dj_laplacian_smoothed(const ScalarField& y, const ScalarField& p,
                                               const ScalarField& ybar,
                                               const std::vector<Vec2>& grad_ybar,
                                               const PiecewiseSource& f, const Obstacle& obstacle,
                                               const Regularization& reg,
                                               const Smoother& smoother) {
  check_inputs(y, p, ybar);
  const TriangleMesh& mesh = y.mesh();
  Eigen::VectorXd G = Eigen::VectorXd::Zero(2 * mesh.num_vertices());

  for (int cid = 0; cid < mesh.num_cells(); ++cid) {
    const auto& t = mesh.cell(cid);
    const double w = mesh.cell_area(cid) / 3.0;
    const auto grads = hat_gradients(mesh, cid);

    Vec2 gy = Vec2::Zero(), gp = Vec2::Zero();
    for (int k = 0; k < 3; ++k) {
      gy += y[t[k]] * grads[k];
      gp += p[t[k]] * grads[k];
    }
    const double fc = f.on_cell(mesh, cid);
    const double gygp = gy.dot(gp);

    for (int q = 0; q < 3; ++q) {
      double yq = 0, pq = 0, ybq = 0;
      for (int k = 0; k < 3; ++k) {
        yq += kMidHat[k][q] * y[t[k]];
        pq += kMidHat[k][q] * p[t[k]];
        ybq += kMidHat[k][q] * ybar[t[k]];
      }
      const double diff = yq - ybq;
      const double div_payload = 0.5 * diff * diff + gygp - fc * pq;
      for (int i = 0; i < 3; ++i) {
        const double gidot_gp = grads[i].dot(gp);
        const double gidot_gy = grads[i].dot(gy);
        for (int a = 0; a < 2; ++a) {
          double val = -(gy[a] * gidot_gp + gp[a] * gidot_gy);
          val += grads[i][a] * div_payload;
          G[2 * t[i] + a] += w * val;
        }
      }
    }
  }

  SmoothedTerms st{&reg, &smoother};
  add_nodal_terms(G, y, p, ybar, grad_ybar, obstacle, &st);
  zero_boundary_rows(G, mesh);
  return {y.mesh_ptr(), std::move(G)};
}

ShapeFunctional assemble_dj_laplacian(const ScalarField& y, const ScalarField& p,
                                      const ScalarField& ybar, const std::vector<Vec2>& grad_ybar,
                                      const PiecewiseSource& f, const Obstacle& obstacle,
                                      const ActiveSet& active) {
  check_inputs(y, p, ybar);
  const TriangleMesh& mesh = y.mesh();
  Eigen::VectorXd G = Eigen::VectorXd::Zero(2 * mesh.num_vertices());

  for (int cid = 0; cid < mesh.num_cells(); ++cid) {
    const auto& t = mesh.cell(cid);
    const double w = mesh.cell_area(cid) / 3.0;
    const auto grads = hat_gradients(mesh, cid);
    const Vec2& p0 = mesh.vertex(t[0]);
    const Vec2& p1 = mesh.vertex(t[1]);
    const Vec2& p2 = mesh.vertex(t[2]);
    const std::array<Vec2, 3> qpts = {0.5 * (p0 + p1), 0.5 * (p1 + p2), 0.5 * (p2 + p0)};

    Vec2 gy = Vec2::Zero(), gp = Vec2::Zero();
    for (int k = 0; k < 3; ++k) {
      gy += y[t[k]] * grads[k];
      gp += p[t[k]] * grads[k];
    }
    const double fc = f.on_cell(mesh, cid);
    const double gygp = gy.dot(gp);
    int n_active = 0;
    for (int k = 0; k < 3; ++k) n_active += active.contains(t[k]) ? 1 : 0;
    const double active_frac = n_active / 3.0;

    for (int q = 0; q < 3; ++q) {
      double yq = 0, pq = 0, ybq = 0;
      for (int k = 0; k < 3; ++k) {
        yq += kMidHat[k][q] * y[t[k]];
        pq += kMidHat[k][q] * p[t[k]];
        ybq += kMidHat[k][q] * ybar[t[k]];
      }
      const double diff = yq - ybq;
      const double div_payload = 0.5 * diff * diff + gygp - fc * pq;
      Vec2 active_term = Vec2::Zero();
      if (active_frac > 0)
        active_term = active_frac * (obstacle.value(qpts[q]) - ybq) * obstacle.gradient(qpts[q]);
      for (int i = 0; i < 3; ++i) {
        const double gidot_gp = grads[i].dot(gp);
        const double gidot_gy = grads[i].dot(gy);
        const double hi = kMidHat[i][q];
        for (int a = 0; a < 2; ++a) {
          double val = -(gy[a] * gidot_gp + gp[a] * gidot_gy);
          val += grads[i][a] * div_payload;
          val += hi * active_term[a];
          G[2 * t[i] + a] += w * val;
        }
      }
    }
  }

  add_nodal_terms(G, y, p, ybar, grad_ybar, obstacle, nullptr);
  zero_boundary_rows(G, mesh);
  return {y.mesh_ptr(), std::move(G)};
}

ShapeFunctional perimeter_derivative_functional(MeshPtr mesh, double nu) {
  Eigen::VectorXd G = Eigen::VectorXd::Zero(2 * mesh->num_vertices());
  for (const auto& e : mesh->interface_edges()) {
    const Vec2 diff = mesh->vertex(e[0]) - mesh->vertex(e[1]);
    const Vec2 unit = diff / diff.norm();
    G[2 * e[0]] += nu * unit.x();
    G[2 * e[0] + 1] += nu * unit.y();
    G[2 * e[1]] -= nu * unit.x();
    G[2 * e[1] + 1] -= nu * unit.y();
  }
  zero_boundary_rows(G, *mesh);
  return {std::move(mesh), std::move(G)};
}

double perimeter_derivative(const TriangleMesh& mesh, const VectorField& V, double nu) {
  double total = 0;
  for (const auto& e : mesh.interface_edges()) {
    const Vec2 diff = mesh.vertex(e[0]) - mesh.vertex(e[1]);
    total += nu * diff.dot(V.at(e[0]) - V.at(e[1])) / diff.norm();
  }
  return total;
}

ShapeFunctional mask_to_interface(ShapeFunctional func) {
  const TriangleMesh& mesh = *func.mesh;
  std::vector<std::uint8_t> keep(mesh.num_vertices(), 0);
  for (int v : interface_adjacent_vertices(mesh)) keep[v] = 1;
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    if (!keep[v]) {
      func.dual[2 * v] = 0.0;
      func.dual[2 * v + 1] = 0.0;
    }
  }
  return func;
}

ScalarField solve_mu_elas(MeshPtr mesh, double mu_min, double mu_max, double tol) {
  if (!(mu_max >= mu_min && mu_min >= 0))
    throw Error("need mu_max >= mu_min >= 0");
  SparseMatrix A = assemble_bilinear(*mesh, EllipticCoefficients::laplacian());
  std::vector<int> nodes;
  std::vector<double> vals;
  for (int v = 0; v < mesh->num_vertices(); ++v) {
    if (mesh->on_interface(v)) {
      nodes.push_back(v);
      vals.push_back(mu_max);
    } else if (mesh->on_outer_boundary(v)) {
      nodes.push_back(v);
      vals.push_back(mu_min);
    }
  }
  SparseSystem sys{std::move(A), Eigen::VectorXd::Zero(mesh->num_vertices()), {}};
  sys = apply_dirichlet(std::move(sys), nodes,
                        Eigen::Map<const Eigen::VectorXd>(vals.data(), vals.size()));
  return solve_sparse(sys, std::move(mesh), tol);
}

ShapeGradient shape_gradient(const ShapeFunctional& func, const ScalarField& mu,
                             double lambda_elas, double tol) {
  const TriangleMesh& mesh = *func.mesh;
  if (&mu.mesh() != &mesh) throw Error("mu must live on the functional's mesh");
  const int nv = mesh.num_vertices();

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(36 * mesh.num_cells());
  for (int cid = 0; cid < mesh.num_cells(); ++cid) {
    const auto& t = mesh.cell(cid);
    const double w = mesh.cell_area(cid) / 3.0;
    const auto grads = hat_gradients(mesh, cid);
    double mu_int = 0;  // integral of mu over the cell via the midpoint rule
    for (int q = 0; q < 3; ++q) {
      double muq = 0;
      for (int k = 0; k < 3; ++k) muq += kMidHat[k][q] * mu[t[k]];
      mu_int += w * muq;
    }
    const double area = mesh.cell_area(cid);
    for (int k = 0; k < 3; ++k) {
      for (int l = 0; l < 3; ++l) {
        const double gkl = grads[k].dot(grads[l]);
        for (int a = 0; a < 2; ++a) {
          for (int b = 0; b < 2; ++b) {
            // 2 mu eps:eps = mu (delta_ab grad_k . grad_l + grad_l[a] grad_k[b])
            double val = mu_int * ((a == b ? gkl : 0.0) + grads[l][a] * grads[k][b]);
            if (lambda_elas != 0.0)
              val += lambda_elas * area * grads[l][b] * grads[k][a];
            if (val != 0.0) trips.emplace_back(2 * t[k] + a, 2 * t[l] + b, val);
          }
        }
      }
    }
  }
  SparseMatrix K(2 * nv, 2 * nv);
  K.setFromTriplets(trips.begin(), trips.end());

  std::vector<int> nodes;
  for (int v : mesh.outer_boundary()) {
    nodes.push_back(2 * v);
    nodes.push_back(2 * v + 1);
  }
  SparseSystem sys{std::move(K), func.dual, {}};
  sys = apply_dirichlet(std::move(sys), nodes, 0.0);

  Eigen::VectorXd u = solve_linear(sys.matrix, sys.rhs, tol);
  const double energy = func.dual.dot(u);
  ShapeGradient g{VectorField(func.mesh, std::move(u)), std::sqrt(std::max(0.0, energy))};
  return g;
}

}  // namespace vishape
