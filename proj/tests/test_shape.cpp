#include <cmath>
#include <numbers>

#include "doctest.h"
#include "test_support.hpp"
#include "vishape/io.hpp"
#include "vishape/optim.hpp"

using namespace vishape;
using testsupport::share;

namespace {

const PiecewiseSource kSource{100.0, -10.0};

// C1 bump field with compact support, vanishing outside radius r around c
Vec2 bump_field(const Vec2& x, const Vec2& center, double r, const Vec2& dir) {
  const double q = (x - center).squaredNorm() / (r * r);
  if (q >= 1.0) return Vec2::Zero();
  const double s = (1.0 - q) * (1.0 - q);
  return s * dir;
}

VectorField nodal_field(MeshPtr mesh, const std::function<Vec2(const Vec2&)>& f) {
  VectorField V = VectorField::zero(mesh);
  for (int v = 0; v < mesh->num_vertices(); ++v) V.set(v, f(mesh->vertex(v)));
  return V;
}

struct FdProblem {
  MeshPtr mesh;
  ReferenceData ref;
  Regularization reg0;
  Smoother smoother;
  Obstacle obstacle;

  // the reference mesh uses a different edge length so its lattice vertices
  // do not coincide with the disk mesh's (coincident vertices sit on kinks of
  // the piecewise-linear data, where the transferred gradient is one-sided)
  FdProblem(double h, const Obstacle& obs, double c, double gamma)
      : mesh(share(generate_disk_mesh(0.15, h))),
        ref(generate_target(
            share(generate_interface_mesh(InterfaceCurve::ellipse({0.5, 0.5}, 0.22, 0.17),
                                          0.82 * h)),
            obs, kSource, 1e-12)),
        reg0(make_regularization(c, mesh, kSource, obs)),
        smoother{gamma},
        obstacle(obs) {}

  double smoothed_tracking(const TriangleMesh& base, const VectorField& V, double t) const {
    std::vector<Vec2> d(base.num_vertices());
    for (int v = 0; v < base.num_vertices(); ++v) d[v] = t * V.at(v);
    MeshPtr trial = share(deform_mesh(base, d));
    Regularization reg = transport_regularization(reg0, trial);
    ScalarField y = solve_state_smoothed(trial, kSource, obstacle, reg, smoother, 1e-12);
    ScalarField ybar = ref.values_on(trial);
    return evaluate_objective(y, ybar, 0.0).tracking;
  }

  ShapeFunctional assembled(bool laplacian_path) const {
    ScalarField y = solve_state_smoothed(mesh, kSource, obstacle, reg0, smoother, 1e-12);
    ScalarField ybar = ref.values_on(mesh);
    ScalarField p = solve_adjoint_smoothed(y, ybar, obstacle, reg0, smoother, 1e-12);
    const std::vector<Vec2> gyb = ref.gradients_at_vertices(*mesh);
    if (laplacian_path)
      return assemble_dj_laplacian_smoothed(y, p, ybar, gyb, kSource, obstacle, reg0, smoother);
    return assemble_dj_smoothed(y, p, ybar, gyb, kSource, obstacle,
                                EllipticCoefficients::laplacian(), reg0, smoother);
  }
};

}  // namespace

TEST_CASE("shape functional is linear in the test field") {
  FdProblem prob(0.05, Obstacle::phi1(), 1e3, 50.0);
  ShapeFunctional G = prob.assembled(true);

  VectorField V1 =
      nodal_field(prob.mesh, [](const Vec2& x) { return bump_field(x, {0.45, 0.5}, 0.3, {1, 0.3}); });
  VectorField V2 =
      nodal_field(prob.mesh, [](const Vec2& x) { return bump_field(x, {0.6, 0.45}, 0.25, {-0.2, 1}); });
  CHECK(G.apply(VectorField::zero(prob.mesh)) == 0.0);

  VectorField combo(prob.mesh, 2.0 * V1.values() - 3.0 * V2.values());
  CHECK(G.apply(combo) ==
        doctest::Approx(2.0 * G.apply(V1) - 3.0 * G.apply(V2)).epsilon(1e-12));
}

TEST_CASE("general and laplacian assemblers agree for identity coefficients") {
  FdProblem prob(0.05, Obstacle::phi2(), 1e3, 50.0);
  ShapeFunctional general = prob.assembled(false);
  ShapeFunctional special = prob.assembled(true);
  const double scale = special.dual.lpNorm<Eigen::Infinity>();
  CHECK((general.dual - special.dual).lpNorm<Eigen::Infinity>() <= 1e-12 * std::max(1.0, scale));

  // limit pair on the same data
  ScalarField y = solve_vi_pdas(prob.mesh, kSource, prob.obstacle, 1e-10).y;
  ScalarField ybar = prob.ref.values_on(prob.mesh);
  ActiveSet a = detect_active_set(y, prob.obstacle, 1e-9);
  ScalarField p = solve_adjoint_limit(y, ybar, a);
  const std::vector<Vec2> gyb = prob.ref.gradients_at_vertices(*prob.mesh);
  ShapeFunctional lim_general = assemble_dj_limit(y, p, ybar, gyb, kSource, prob.obstacle,
                                                  EllipticCoefficients::laplacian(), a);
  ShapeFunctional lim_special =
      assemble_dj_laplacian(y, p, ybar, gyb, kSource, prob.obstacle, a);
  const double lscale = lim_special.dual.lpNorm<Eigen::Infinity>();
  CHECK((lim_general.dual - lim_special.dual).lpNorm<Eigen::Infinity>() <=
        1e-12 * std::max(1.0, lscale));
}

TEST_CASE("constant obstacle kills the active-set term") {
  FdProblem prob(0.05, Obstacle::phi1(), 1e3, 50.0);
  ScalarField y = solve_vi_pdas(prob.mesh, kSource, prob.obstacle, 1e-10).y;
  ScalarField ybar = prob.ref.values_on(prob.mesh);
  ActiveSet a = detect_active_set(y, prob.obstacle, 1e-9);
  REQUIRE(a.size() > 0);
  ScalarField p = solve_adjoint_limit(y, ybar, a);
  const std::vector<Vec2> gyb = prob.ref.gradients_at_vertices(*prob.mesh);
  ShapeFunctional with_set = assemble_dj_laplacian(y, p, ybar, gyb, kSource, prob.obstacle, a);
  ActiveSet empty;
  empty.mask.assign(prob.mesh->num_vertices(), 0);
  ShapeFunctional without =
      assemble_dj_laplacian(y, p, ybar, gyb, kSource, prob.obstacle, empty);
  CHECK((with_set.dual - without.dual).lpNorm<Eigen::Infinity>() <= 1e-14);
}

TEST_CASE("smoothed shape derivative matches central differences") {
  // both obstacles, a battery of smooth compactly supported fields
  for (int obscase = 0; obscase < 2; ++obscase) {
    FdProblem prob(0.05, obscase == 0 ? Obstacle::phi1() : Obstacle::phi2(), 1e3, 50.0);
    ShapeFunctional G = prob.assembled(true);

    const std::vector<std::function<Vec2(const Vec2&)>> battery = {
        [](const Vec2& x) { return bump_field(x, {0.45, 0.5}, 0.3, {1.0, 0.3}); },
        [](const Vec2& x) { return bump_field(x, {0.55, 0.55}, 0.25, {-0.4, 1.0}); },
        [](const Vec2& x) {
          const Vec2 r = x - Vec2(0.5, 0.5);
          return Vec2(bump_field(x, {0.5, 0.5}, 0.35, {1, 0}).x() * (-r.y()),
                      bump_field(x, {0.5, 0.5}, 0.35, {1, 0}).x() * r.x());
        },
    };

    const double t = 1e-5;
    for (const auto& fn : battery) {
      VectorField V = nodal_field(prob.mesh, fn);
      const double dj = G.apply(V);
      const double fd = (prob.smoothed_tracking(*prob.mesh, V, t) -
                         prob.smoothed_tracking(*prob.mesh, V, -t)) /
                        (2.0 * t);
      REQUIRE(std::abs(dj) > 1e-12);
      CHECK(std::abs(fd - dj) / std::abs(dj) <= 1e-2);
    }
  }
}

TEST_CASE("perimeter derivative") {
  MeshPtr mesh = share(generate_disk_mesh(0.15, 0.04));
  const double nu = 1e-5;

  SUBCASE("zero field gives zero") {
    CHECK(perimeter_derivative(*mesh, VectorField::zero(mesh), nu) == 0.0);
  }

  SUBCASE("rigid translation leaves the length stationary") {
    VectorField V = nodal_field(mesh, [](const Vec2&) { return Vec2(0.7, -0.2); });
    CHECK(std::abs(perimeter_derivative(*mesh, V, nu)) <= 1e-12);
  }

  SUBCASE("radial field scales the perimeter") {
    VectorField V = nodal_field(mesh, [](const Vec2& x) {
      return Vec2(x.x() - 0.5, x.y() - 0.5);
    });
    const double expected = nu * interface_length(*mesh);
    CHECK(perimeter_derivative(*mesh, V, nu) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(perimeter_derivative(*mesh, V, nu) ==
          doctest::Approx(nu * 2.0 * std::numbers::pi * 0.15).epsilon(0.02));
  }

  SUBCASE("functional and direct evaluation agree, and match finite differences") {
    ShapeFunctional P = perimeter_derivative_functional(mesh, nu);
    VectorField V = nodal_field(
        mesh, [](const Vec2& x) { return bump_field(x, {0.52, 0.47}, 0.3, {0.8, -0.5}); });
    const double direct = perimeter_derivative(*mesh, V, nu);
    CHECK(P.apply(V) == doctest::Approx(direct).epsilon(1e-12));

    const double t = 1e-6;
    auto perimeter_at = [&](double s) {
      std::vector<Vec2> d(mesh->num_vertices());
      for (int v = 0; v < mesh->num_vertices(); ++v) d[v] = s * V.at(v);
      return nu * interface_length(deform_mesh(*mesh, d));
    };
    const double fd = (perimeter_at(t) - perimeter_at(-t)) / (2.0 * t);
    CHECK(direct == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("interface masking") {
  FdProblem prob(0.05, Obstacle::phi1(), 1e3, 50.0);
  ShapeFunctional G = prob.assembled(true);
  ShapeFunctional masked = mask_to_interface(G);

  const auto ring = interface_adjacent_vertices(*prob.mesh);
  std::vector<std::uint8_t> in_ring(prob.mesh->num_vertices(), 0);
  for (int v : ring) in_ring[v] = 1;
  int support = 0;
  for (int v = 0; v < prob.mesh->num_vertices(); ++v) {
    const bool nonzero = masked.dual[2 * v] != 0.0 || masked.dual[2 * v + 1] != 0.0;
    if (nonzero) {
      ++support;
      CHECK(in_ring[v]);
    }
  }
  CHECK(support > 0);

  // a functional already supported on the ring is unchanged
  ShapeFunctional again = mask_to_interface(masked);
  CHECK((again.dual - masked.dual).norm() == 0.0);

  // no interface: everything masks to zero
  MeshPtr square = share(generate_unit_square_mesh(8));
  ShapeFunctional Z = zero_functional(square);
  for (int i = 0; i < Z.dual.size(); ++i) Z.dual[i] = 1.0;
  CHECK(mask_to_interface(Z).dual.norm() == 0.0);
}

TEST_CASE("harmonic Lame coefficient") {
  MeshPtr mesh = share(generate_disk_mesh(0.15, 0.05));

  ScalarField constant = solve_mu_elas(mesh, 1.0, 1.0);
  for (int v = 0; v < mesh->num_vertices(); ++v)
    CHECK(constant[v] == doctest::Approx(1.0).epsilon(1e-8));

  for (double mu_max : {25.0, 55.0}) {
    ScalarField mu = solve_mu_elas(mesh, 0.0, mu_max);
    // bounds hold up to the relative tolerance of the linear solve
    CHECK(mu.values().minCoeff() >= -1e-7 * mu_max);
    CHECK(mu.values().maxCoeff() <= mu_max * (1.0 + 1e-7));
    for (int v = 0; v < mesh->num_vertices(); ++v)
      if (mesh->on_interface(v)) CHECK(mu[v] == mu_max);
  }

  CHECK_THROWS_AS(solve_mu_elas(mesh, 2.0, 1.0), Error);
}

TEST_CASE("shape gradient solve") {
  FdProblem prob(0.05, Obstacle::phi1(), 1e3, 50.0);
  ScalarField mu = solve_mu_elas(prob.mesh, 0.0, 25.0);

  SUBCASE("zero functional gives zero gradient") {
    ShapeGradient g = shape_gradient(zero_functional(prob.mesh), mu, 0.0);
    CHECK(g.U.values().norm() == 0.0);
    CHECK(g.norm == 0.0);
  }

  SUBCASE("descent property of the Riesz representative") {
    ShapeFunctional G = mask_to_interface(prob.assembled(true));
    ShapeGradient g = shape_gradient(G, mu, 0.0);
    const double energy = G.apply(g.U);
    CHECK(energy >= 0.0);
    CHECK(g.norm == doctest::Approx(std::sqrt(energy)).epsilon(1e-12));
    VectorField minus(prob.mesh, (-g.U.values()).eval());
    CHECK(G.apply(minus) == doctest::Approx(-energy).epsilon(1e-12));
    CHECK(g.norm > 0.0);
  }
}

TEST_CASE("elasticity gradient inherits mirror symmetry") {
  // union-jack grid: mirror symmetric about x = 0.5 including connectivity
  const int n = 8;
  std::vector<Vec2> pts;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) pts.emplace_back(double(i) / n, double(j) / n);
  auto vid = [n](int i, int j) { return j * (n + 1) + i; };
  std::vector<std::array<int, 3>> cells;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int center = static_cast<int>(pts.size());
      pts.emplace_back((i + 0.5) / n, (j + 0.5) / n);
      cells.push_back({vid(i, j), vid(i + 1, j), center});
      cells.push_back({vid(i + 1, j), vid(i + 1, j + 1), center});
      cells.push_back({vid(i + 1, j + 1), vid(i, j + 1), center});
      cells.push_back({vid(i, j + 1), vid(i, j), center});
    }
  }
  std::vector<CellLabel> labels(cells.size(), CellLabel::Outer);
  MeshPtr mesh = share(TriangleMesh(std::move(pts), std::move(cells), std::move(labels)));

  ShapeFunctional G = zero_functional(mesh);
  for (int v = 0; v < mesh->num_vertices(); ++v) {
    const Vec2& x = mesh->vertex(v);
    const double s = x.x() * (1 - x.x()) * x.y() * (1 - x.y());
    G.dual[2 * v] = s * (x.x() - 0.5);  // antisymmetric x-component
    G.dual[2 * v + 1] = s;              // symmetric y-component
  }
  ScalarField mu = ScalarField::interpolate(mesh, [](const Vec2&) { return 1.0; });
  ShapeGradient g = shape_gradient(G, mu, 0.0, 1e-12);

  // locate mirror partners by coordinates
  for (int v = 0; v < mesh->num_vertices(); ++v) {
    const Vec2 m(1.0 - mesh->vertex(v).x(), mesh->vertex(v).y());
    int partner = -1;
    for (int w = 0; w < mesh->num_vertices(); ++w)
      if ((mesh->vertex(w) - m).norm() < 1e-12) partner = w;
    REQUIRE(partner >= 0);
    CHECK(g.U.at(partner).x() == doctest::Approx(-g.U.at(v).x()).epsilon(1e-7).scale(1.0));
    CHECK(g.U.at(partner).y() == doctest::Approx(g.U.at(v).y()).epsilon(1e-7).scale(1.0));
  }
}

TEST_CASE("smoothed functional approaches the limit functional") {
  MeshPtr mesh = share(generate_disk_mesh(0.15, 0.05));
  const Obstacle obstacle = Obstacle::phi2();
  ReferenceData ref(generate_target(
      share(generate_interface_mesh(InterfaceCurve::ellipse({0.5, 0.5}, 0.22, 0.17), 0.041)),
      obstacle, kSource, 1e-12));
  ScalarField ybar = ref.values_on(mesh);
  const std::vector<Vec2> gyb = ref.gradients_at_vertices(*mesh);

  ScalarField y = solve_vi_pdas(mesh, kSource, obstacle, 1e-10).y;
  ActiveSet a = detect_active_set(y, obstacle, 1e-9);
  ScalarField p = solve_adjoint_limit(y, ybar, a);
  ShapeFunctional limit = assemble_dj_laplacian(y, p, ybar, gyb, kSource, obstacle, a);

  VectorField V = nodal_field(
      mesh, [](const Vec2& x) { return bump_field(x, {0.5, 0.5}, 0.35, {1.0, 0.4}); });
  const double ref_value = limit.apply(V);

  double prev = std::numeric_limits<double>::max();
  for (double gc : {1e2, 1e3, 1e4}) {
    Regularization reg = make_regularization(gc, mesh, kSource, obstacle);
    Smoother sm{gc};
    ScalarField y_gc = solve_state_smoothed(mesh, kSource, obstacle, reg, sm, 1e-11);
    ScalarField p_gc = solve_adjoint_smoothed(y_gc, ybar, obstacle, reg, sm, 1e-11);
    ShapeFunctional smoothed =
        assemble_dj_laplacian_smoothed(y_gc, p_gc, ybar, gyb, kSource, obstacle, reg, sm);
    const double err = std::abs(smoothed.apply(V) - ref_value);
    CHECK(err <= prev * 1.05 + 1e-15);
    prev = err;
  }
}
