#include <cstdio>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "test_support.hpp"
#include "vishape/config.hpp"
#include "vishape/io.hpp"

using namespace vishape;
using testsupport::share;

TEST_CASE("config parsing") {
  ConfigMap cfg = ConfigMap::parse_text(
      "# comment\n"
      "nu = 1e-5\n"
      "[mesh]\n"
      "h = 0.025  # trailing comment\n"
      "radius=0.15\n"
      "[optim]\n"
      "max_iters = 500\n"
      "include_perimeter = false\n");

  CHECK(cfg.get_double("nu", 0.0) == 1e-5);
  CHECK(cfg.get_double("mesh.h", 0.0) == 0.025);
  CHECK(cfg.get_double("mesh.radius", 0.0) == 0.15);
  CHECK(cfg.get_int("optim.max_iters", 0) == 500);
  CHECK(cfg.get_bool("optim.include_perimeter", true) == false);
  CHECK(cfg.get_string("missing", "fallback") == "fallback");

  SUBCASE("overrides replace values") {
    cfg.set_override("mesh.h=0.05");
    CHECK(cfg.get_double("mesh.h", 0.0) == 0.05);
    CHECK_THROWS_AS(cfg.set_override("no_equals_sign"), ConfigError);
  }

  SUBCASE("unknown keys are rejected") {
    CHECK_NOTHROW(cfg.require_known({"nu", "mesh.h", "mesh.radius", "optim.max_iters",
                                     "optim.include_perimeter"}));
    CHECK_THROWS_AS(cfg.require_known({"nu"}), ConfigError);
  }

  SUBCASE("malformed input is rejected") {
    CHECK_THROWS_AS(ConfigMap::parse_text("[unterminated\n"), ConfigError);
    CHECK_THROWS_AS(ConfigMap::parse_text("novalue\n"), ConfigError);
    CHECK_THROWS_AS(ConfigMap::parse_text("k =\n"), ConfigError);
  }

  SUBCASE("typed getters validate") {
    ConfigMap c2 = ConfigMap::parse_text("x = abc\n");
    CHECK_THROWS_AS(c2.get_double("x", 0.0), ConfigError);
    CHECK_THROWS_AS(c2.get_int("x", 0), ConfigError);
    CHECK_THROWS_AS(c2.get_bool("x", false), ConfigError);
  }

  SUBCASE("echo is sorted and deterministic") {
    const std::string echo = cfg.echo();
    CHECK(echo.find("mesh.h = ") != std::string::npos);
    CHECK(ConfigMap::parse_text(echo).echo() == echo);
  }
}

TEST_CASE("field round trip") {
  MeshPtr mesh = share(generate_disk_mesh(0.2, 0.07));
  ScalarField f = ScalarField::interpolate(
      mesh, [](const Vec2& x) { return std::sin(7.0 * x.x()) * x.y() + 1.0 / 3.0; });
  const std::string path = "roundtrip_field.txt";
  save_field(path, f);
  ScalarField g = load_field(path, mesh);
  CHECK((f.values() - g.values()).lpNorm<Eigen::Infinity>() == 0.0);
  std::remove(path.c_str());
}

TEST_CASE("vector field export uses interleaved components") {
  MeshPtr mesh = share(generate_unit_square_mesh(3));
  VectorField V = VectorField::zero(mesh);
  V.set(1, {0.5, -0.25});
  const std::string path = "roundtrip_vfield.txt";
  save_vector_field(path, V);
  std::ifstream in(path);
  std::string kw;
  int n = 0;
  in >> kw >> n;
  CHECK(kw == "field");
  CHECK(n == 2 * mesh->num_vertices());
  std::vector<double> vals(n);
  for (double& v : vals) in >> v;
  CHECK(vals[2] == 0.5);
  CHECK(vals[3] == -0.25);
  std::remove(path.c_str());
}

TEST_CASE("vtk export smoke test") {
  MeshPtr mesh = share(generate_disk_mesh(0.2, 0.08));
  ScalarField f = ScalarField::interpolate(mesh, [](const Vec2& x) { return x.x(); });
  const std::string path = "export.vtk";
  write_vtk(path, *mesh, {{"state", &f}});
  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  CHECK(first == "# vtk DataFile Version 3.0");
  std::stringstream all;
  all << in.rdbuf();
  CHECK(all.str().find("CELL_TYPES") != std::string::npos);
  CHECK(all.str().find("SCALARS state double 1") != std::string::npos);
  std::remove(path.c_str());
}

TEST_CASE("csv writers") {
  StudyTable t;
  t.name = "demo";
  t.config_echo = "alpha=1";
  t.columns = {"a", "b"};
  t.rows = {{1.0, 2.0}, {3.0, std::numeric_limits<double>::quiet_NaN()}};
  t.status = {"ok", "solver failed"};
  const std::string path = "study.csv";
  write_study_csv(path, t);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "# study=demo alpha=1");
  std::getline(in, line);
  CHECK(line == "a,b,status");
  std::getline(in, line);
  CHECK(line == "1,2,ok");
  std::getline(in, line);
  CHECK(line == "3,nan,solver failed");
  std::remove(path.c_str());

  std::vector<IterationRecord> hist(2);
  hist[1].step = 1;
  hist[1].J = 0.25;
  hist[1].accepted = true;
  const std::string hpath = "history.csv";
  write_history_csv(hpath, hist);
  std::ifstream hin(hpath);
  std::getline(hin, line);
  CHECK(line ==
        "step,J,tracking,perimeter,grad_norm,grad_norm_smoothed,halvings,safeguard,accepted");
  std::getline(hin, line);
  std::getline(hin, line);
  CHECK(line.substr(0, 7) == "1,0.25,");
  std::remove(hpath.c_str());
}

TEST_CASE("interface polyline export") {
  MeshPtr mesh = share(generate_disk_mesh(0.15, 0.05));
  const std::string path = "interface.csv";
  write_interface_csv(path, *mesh);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "loop,x,y");
  int count = 0;
  while (std::getline(in, line)) ++count;
  CHECK(count == static_cast<int>(mesh->interface_edges().size()));
  std::remove(path.c_str());
}
