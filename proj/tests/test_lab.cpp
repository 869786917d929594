#include <cmath>

#include "doctest.h"
#include "test_support.hpp"
#include "vishape/lab.hpp"

using namespace vishape;
using testsupport::share;

namespace {
const PiecewiseSource kSource{100.0, -10.0};
}

TEST_CASE("target generation") {
  MeshPtr mesh = share(generate_disk_mesh(0.15, 0.05));

  SUBCASE("zero source gives the zero target") {
    ScalarField ybar = generate_target(mesh, Obstacle::phi1(), PiecewiseSource{0.0, 0.0}, 1e-10);
    CHECK(ybar.values().norm() == 0.0);
  }

  SUBCASE("phi1 target respects the bound") {
    ScalarField ybar = generate_target(mesh, Obstacle::phi1(), kSource, 1e-8);
    CHECK(ybar.values().maxCoeff() <= 0.5 + 1e-8);
    CHECK(ybar.values().maxCoeff() > 0.4);  // the obstacle actually binds
  }

  SUBCASE("phi2 target shows the truncated plateau") {
    const Obstacle phi2 = Obstacle::phi2();
    ScalarField ybar = generate_target(mesh, phi2, kSource, 1e-8);
    int active = 0;
    for (int v = 0; v < mesh->num_vertices(); ++v) {
      const double bound = phi2.value(mesh->vertex(v));
      CHECK(ybar[v] <= bound + 1e-8);
      if (ybar[v] >= bound - 1e-6) ++active;
    }
    CHECK(active > 0);
  }
}

TEST_CASE("sign convergence study") {
  MeshPtr mesh = share(generate_disk_mesh(0.15, 0.06));

  SUBCASE("single pair gives a single row") {
    StudyTable t = study_sign_convergence(mesh, Obstacle::phi1(), kSource, {1e3}, {10.0}, 3e-4);
    CHECK(t.rows.size() == 1);
    CHECK(t.columns.size() == 3);
    CHECK(t.status[0] == "ok");
    CHECK(t.rows[0][0] == 10.0);
    CHECK(t.rows[0][1] == 1e3);
    CHECK(std::isfinite(t.rows[0][2]));
  }

  SUBCASE("gamma sweep is nonincreasing and reaches a plateau") {
    const std::vector<double> gammas = {1e-3, 1e-2, 1e-1, 1.0, 1e2, 1e4, 1e6, 1e8};
    StudyTable t = study_sign_convergence(mesh, Obstacle::phi1(), kSource, {1e3}, gammas, 3e-4);
    REQUIRE(t.rows.size() == gammas.size());
    for (size_t i = 0; i + 1 < t.rows.size(); ++i)
      CHECK(t.rows[i + 1][2] <= t.rows[i][2] * 1.05 + 1e-12);
    CHECK(t.rows.front()[2] > 0.0);
    // plateau: the last two values agree
    CHECK(t.rows[t.rows.size() - 1][2] ==
          doctest::Approx(t.rows[t.rows.size() - 2][2]).epsilon(0.2).scale(1e-12));
  }

  SUBCASE("study tables are deterministic") {
    StudyTable a = study_sign_convergence(mesh, Obstacle::phi2(), kSource, {1e2}, {0.1, 10.0}, 3e-4);
    StudyTable b = study_sign_convergence(mesh, Obstacle::phi2(), kSource, {1e2}, {0.1, 10.0}, 3e-4);
    REQUIRE(a.rows.size() == b.rows.size());
    for (size_t r = 0; r < a.rows.size(); ++r)
      for (size_t k = 0; k < a.rows[r].size(); ++k) CHECK(a.rows[r][k] == b.rows[r][k]);
  }

  SUBCASE("empty parameter lists are rejected") {
    CHECK_THROWS_AS(study_sign_convergence(mesh, Obstacle::phi1(), kSource, {}, {1.0}, 3e-4),
                    Error);
  }
}

TEST_CASE("state and adjoint convergence study") {
  MeshPtr mesh = share(generate_disk_mesh(0.15, 0.06));
  ScalarField ybar = generate_target(mesh, Obstacle::phi1(), kSource, 1e-10);

  StudyTable t = study_state_adjoint_convergence(mesh, Obstacle::phi1(), kSource, ybar,
                                                 {1e2, 1e3, 1e4}, {1e1, 1e3}, 3e-4);
  REQUIRE(t.rows.size() == 6);
  REQUIRE(t.columns.size() == 7);
  for (size_t r = 0; r < t.rows.size(); ++r) {
    CHECK(t.status[r] == "ok");
    for (double v : t.rows[r]) CHECK(std::isfinite(v));
  }
  // ||y_c - y|| (column 3) decreases along c at fixed gamma
  CHECK(t.rows[2][3] < t.rows[0][3]);
  CHECK(t.rows[4][3] < t.rows[2][3]);
  // ||p_c - p|| (column 5) decreases along c as well
  CHECK(t.rows[2][5] < t.rows[0][5]);
  CHECK(t.rows[4][5] < t.rows[2][5]);
}

TEST_CASE("mesh refinement sign study") {
  MeshPtr mesh = share(generate_disk_mesh(0.15, 0.07));
  StudyTable t =
      study_mesh_refinement_sign(mesh, Obstacle::phi1(), kSource, 3, 1e8, 1e5, 3e-4, 50000);
  REQUIRE(t.rows.size() == 3);
  // strictly more vertices per level
  CHECK(t.rows[1][1] > t.rows[0][1]);
  CHECK(t.rows[2][1] > t.rows[1][1]);
  // plateau value nonincreasing with refinement
  CHECK(t.rows[1][3] <= t.rows[0][3] * 1.05 + 1e-12);
  CHECK(t.rows[2][3] <= t.rows[1][3] * 1.05 + 1e-12);
  // parameters echoed
  CHECK(t.config_echo.find("gamma=1e+08") != std::string::npos);
  CHECK(t.config_echo.find("c=100000") != std::string::npos);

  SUBCASE("vertex cap halts the study") {
    StudyTable capped =
        study_mesh_refinement_sign(mesh, Obstacle::phi1(), kSource, 4, 1e8, 1e5, 3e-4, 100);
    CHECK(capped.rows.size() == 1);
    CHECK(capped.status[0] == "vertex cap reached");
  }
}
