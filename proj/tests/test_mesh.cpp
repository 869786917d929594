#include <cmath>
#include <numbers>
#include <set>

#include "doctest.h"
#include "vishape/io.hpp"
#include "vishape/mesh.hpp"

using namespace vishape;

TEST_CASE("disk mesh matches the documented scale") {
  TriangleMesh mesh = generate_disk_mesh(0.15, 0.025);

  CHECK(mesh.num_vertices() >= 1500);
  CHECK(mesh.num_vertices() <= 3500);
  CHECK(mesh.interface_loop_count() == 1);

  for (int c = 0; c < mesh.num_cells(); ++c) CHECK(mesh.cell_area(c) > 0.0);

  const double target = 2.0 * std::numbers::pi * 0.15;
  CHECK(interface_length(mesh) == doctest::Approx(target).epsilon(0.02));

  CHECK(mesh.min_cell_diameter() >= 0.4 * 0.025);
  CHECK(mesh.max_cell_diameter() <= 2.5 * 0.025);
}

TEST_CASE("disk mesh generation is deterministic") {
  TriangleMesh a = generate_disk_mesh(0.15, 0.05);
  TriangleMesh b = generate_disk_mesh(0.15, 0.05);
  REQUIRE(a.num_vertices() == b.num_vertices());
  for (int v = 0; v < a.num_vertices(); ++v) {
    CHECK(a.vertex(v).x() == b.vertex(v).x());
    CHECK(a.vertex(v).y() == b.vertex(v).y());
  }
  REQUIRE(a.num_cells() == b.num_cells());
  for (int c = 0; c < a.num_cells(); ++c) CHECK(a.cell(c) == b.cell(c));
}

TEST_CASE("degenerate generator input is rejected") {
  CHECK_THROWS_AS(generate_disk_mesh(0.6, 0.025), MeshError);
  CHECK_THROWS_AS(generate_disk_mesh(0.15, 0.2), MeshError);
  CHECK_THROWS_AS(generate_disk_mesh(0.15, -1.0), MeshError);
}

TEST_CASE("zero deformation is the identity") {
  TriangleMesh mesh = generate_disk_mesh(0.15, 0.05);
  std::vector<Vec2> zero(mesh.num_vertices(), Vec2::Zero());
  TriangleMesh moved = deform_mesh(mesh, zero);
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    CHECK(moved.vertex(v).x() == mesh.vertex(v).x());
    CHECK(moved.vertex(v).y() == mesh.vertex(v).y());
  }
  CHECK(interface_length(moved) == interface_length(mesh));
}

TEST_CASE("uniform interior displacement shifts interior vertices") {
  TriangleMesh mesh = generate_unit_square_mesh(10);
  std::vector<Vec2> d(mesh.num_vertices(), Vec2(1e-3, 0.0));
  for (int v : mesh.outer_boundary()) d[v] = Vec2::Zero();
  TriangleMesh moved = deform_mesh(mesh, d);
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    if (mesh.on_outer_boundary(v)) {
      CHECK(moved.vertex(v) == mesh.vertex(v));
    } else {
      CHECK(moved.vertex(v).x() == doctest::Approx(mesh.vertex(v).x() + 1e-3).epsilon(1e-15));
      CHECK(moved.vertex(v).y() == mesh.vertex(v).y());
    }
  }
}

TEST_CASE("cell inversion is reported") {
  TriangleMesh mesh = generate_unit_square_mesh(8);
  // push one interior vertex across the opposite edge of its cell
  int interior = -1;
  for (int v = 0; v < mesh.num_vertices() && interior < 0; ++v)
    if (!mesh.on_outer_boundary(v)) interior = v;
  REQUIRE(interior >= 0);
  std::vector<Vec2> d(mesh.num_vertices(), Vec2::Zero());
  d[interior] = Vec2(0.3, 0.0);  // far beyond the local edge length 1/8
  CHECK_THROWS_AS(deform_mesh(mesh, d), CellInversionError);
}

TEST_CASE("boundary displacement is rejected") {
  TriangleMesh mesh = generate_unit_square_mesh(4);
  std::vector<Vec2> d(mesh.num_vertices(), Vec2::Zero());
  d[mesh.outer_boundary().front()] = Vec2(1e-3, 0.0);
  CHECK_THROWS_AS(deform_mesh(mesh, d), MeshError);
}

TEST_CASE("interface length of an axis-aligned square interface") {
  // 4x4 grid with the central 2x2 block of squares labeled Inner: the
  // interface is the unit-length-2 square around the middle
  TriangleMesh grid = generate_unit_square_mesh(4);
  std::vector<CellLabel> labels(grid.num_cells(), CellLabel::Outer);
  for (int c = 0; c < grid.num_cells(); ++c) {
    const auto& t = grid.cell(c);
    const Vec2 centroid = (grid.vertex(t[0]) + grid.vertex(t[1]) + grid.vertex(t[2])) / 3.0;
    if (centroid.x() > 0.25 && centroid.x() < 0.75 && centroid.y() > 0.25 && centroid.y() < 0.75)
      labels[c] = CellLabel::Inner;
  }
  TriangleMesh mesh(grid.vertices(), grid.cells(), labels);
  CHECK(interface_length(mesh) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(mesh.interface_loop_count() == 1);
}

TEST_CASE("interface length is translation invariant") {
  TriangleMesh mesh = generate_disk_mesh(0.2, 0.05);
  std::vector<Vec2> pts = mesh.vertices();
  for (Vec2& p : pts) p += Vec2(0.37, -0.21);
  TriangleMesh moved(pts, mesh.cells(), mesh.labels());
  CHECK(interface_length(moved) == doctest::Approx(interface_length(mesh)).epsilon(1e-14));
}

TEST_CASE("interface adjacent vertices") {
  TriangleMesh square = generate_unit_square_mesh(6);
  CHECK(interface_adjacent_vertices(square).empty());

  TriangleMesh disk = generate_disk_mesh(0.15, 0.03);
  std::set<int> iface;
  for (const auto& e : disk.interface_edges()) {
    iface.insert(e[0]);
    iface.insert(e[1]);
  }
  const auto ring = interface_adjacent_vertices(disk);
  CHECK(ring.size() > iface.size());
  CHECK(static_cast<int>(ring.size()) < disk.num_vertices());
  for (int v : iface) CHECK(std::binary_search(ring.begin(), ring.end(), v));
}

TEST_CASE("one-ring of a single inner cell") {
  // 4x4 grid; mark one fully interior cell Inner (an inner cell touching the
  // outer boundary would not yield a closed interface loop)
  TriangleMesh grid = generate_unit_square_mesh(4);
  std::vector<CellLabel> labels(grid.num_cells(), CellLabel::Outer);
  int chosen = -1;
  for (int c = 0; c < grid.num_cells() && chosen < 0; ++c) {
    bool interior = true;
    for (int k = 0; k < 3; ++k)
      if (grid.on_outer_boundary(grid.cell(c)[k])) interior = false;
    if (interior) chosen = c;
  }
  REQUIRE(chosen >= 0);
  labels[chosen] = CellLabel::Inner;
  TriangleMesh mesh(grid.vertices(), grid.cells(), labels);
  CHECK(mesh.interface_edges().size() == 3);

  std::set<int> expected;
  const auto& t = mesh.cell(chosen);
  for (int k = 0; k < 3; ++k)
    for (int w : mesh.vertex_neighbors(t[k])) expected.insert(w);
  for (int k = 0; k < 3; ++k) expected.insert(t[k]);
  const auto ring = interface_adjacent_vertices(mesh);
  CHECK(std::set<int>(ring.begin(), ring.end()) == expected);
}

TEST_CASE("uniform refinement splits each cell in four") {
  TriangleMesh mesh = generate_disk_mesh(0.2, 0.06);
  TriangleMesh fine = refine_uniform(mesh);
  CHECK(fine.num_cells() == 4 * mesh.num_cells());
  CHECK(fine.interface_loop_count() == mesh.interface_loop_count());
  CHECK(interface_length(fine) == doctest::Approx(interface_length(mesh)).epsilon(1e-13));
  for (int c = 0; c < fine.num_cells(); ++c) CHECK(fine.cell_area(c) > 0.0);
}

TEST_CASE("marked refinement stays conforming and grows the mesh") {
  TriangleMesh mesh = generate_disk_mesh(0.2, 0.06);
  std::vector<int> marked;
  for (int c = 0; c < mesh.num_cells(); ++c)
    if (mesh.label(c) == CellLabel::Inner) marked.push_back(c);
  TriangleMesh refined = refine_cells(mesh, marked);  // constructor validates conformity
  CHECK(refined.num_vertices() > mesh.num_vertices());
  CHECK(refined.num_cells() > mesh.num_cells());
  CHECK(refined.interface_loop_count() == 1);
}

TEST_CASE("mesh text round trip") {
  TriangleMesh mesh = generate_disk_mesh(0.17, 0.04);
  const std::string path = "roundtrip_mesh.txt";
  save_mesh(path, mesh);
  TriangleMesh loaded = load_mesh(path);
  REQUIRE(loaded.num_vertices() == mesh.num_vertices());
  REQUIRE(loaded.num_cells() == mesh.num_cells());
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    CHECK(loaded.vertex(v).x() == mesh.vertex(v).x());
    CHECK(loaded.vertex(v).y() == mesh.vertex(v).y());
  }
  for (int c = 0; c < mesh.num_cells(); ++c) {
    CHECK(loaded.cell(c) == mesh.cell(c));
    CHECK(loaded.label(c) == mesh.label(c));
  }
  std::remove(path.c_str());
}
