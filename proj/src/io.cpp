#include "vishape/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace vishape {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << std::setprecision(17);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

}  // namespace

void save_mesh(const std::string& path, const TriangleMesh& mesh) {
  std::ofstream out = open_out(path);
  out << "vertices " << mesh.num_vertices() << " cells " << mesh.num_cells() << "\n";
  for (const Vec2& p : mesh.vertices()) out << p.x() << " " << p.y() << "\n";
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& t = mesh.cell(c);
    out << t[0] << " " << t[1] << " " << t[2] << " "
        << (mesh.label(c) == CellLabel::Inner ? 1 : 0) << "\n";
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

TriangleMesh load_mesh(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string kw1, kw2;
  int nv = 0, nc = 0;
  in >> kw1 >> nv >> kw2 >> nc;
  if (!in || kw1 != "vertices" || kw2 != "cells")
    throw IoError("bad mesh header in '" + path + "'");
  std::vector<Vec2> pts(nv);
  for (int v = 0; v < nv; ++v) in >> pts[v].x() >> pts[v].y();
  std::vector<std::array<int, 3>> cells(nc);
  std::vector<CellLabel> labels(nc);
  for (int c = 0; c < nc; ++c) {
    int lab = 0;
    in >> cells[c][0] >> cells[c][1] >> cells[c][2] >> lab;
    labels[c] = lab ? CellLabel::Inner : CellLabel::Outer;
  }
  if (!in) throw IoError("truncated mesh file '" + path + "'");
  // repair orientation so externally produced files are accepted
  for (auto& t : cells) {
    const Vec2 e1 = pts[t[1]] - pts[t[0]];
    const Vec2 e2 = pts[t[2]] - pts[t[0]];
    if (e1.x() * e2.y() - e1.y() * e2.x() < 0) std::swap(t[1], t[2]);
  }
  return TriangleMesh(std::move(pts), std::move(cells), std::move(labels));
}

void save_field(const std::string& path, const ScalarField& field) {
  std::ofstream out = open_out(path);
  out << "field " << field.size() << "\n";
  for (int i = 0; i < field.size(); ++i) out << field[i] << "\n";
  if (!out) throw IoError("write failed for '" + path + "'");
}

ScalarField load_field(const std::string& path, MeshPtr mesh) {
  std::ifstream in = open_in(path);
  std::string kw;
  int n = 0;
  in >> kw >> n;
  if (!in || kw != "field") throw IoError("bad field header in '" + path + "'");
  if (n != mesh->num_vertices())
    throw IoError("field size does not match mesh in '" + path + "'");
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) in >> v[i];
  if (!in) throw IoError("truncated field file '" + path + "'");
  return ScalarField(std::move(mesh), std::move(v));
}

void save_vector_field(const std::string& path, const VectorField& field) {
  std::ofstream out = open_out(path);
  out << "field " << field.values().size() << "\n";
  for (int i = 0; i < field.values().size(); ++i) out << field.values()[i] << "\n";
  if (!out) throw IoError("write failed for '" + path + "'");
}

void write_vtk(const std::string& path, const TriangleMesh& mesh,
               const std::vector<std::pair<std::string, const ScalarField*>>& scalars,
               const std::vector<std::pair<std::string, const VectorField*>>& vectors) {
  std::ofstream out = open_out(path);
  out << "# vtk DataFile Version 3.0\nvishape export\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.num_vertices() << " double\n";
  for (const Vec2& p : mesh.vertices()) out << p.x() << " " << p.y() << " 0\n";
  out << "CELLS " << mesh.num_cells() << " " << 4 * mesh.num_cells() << "\n";
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& t = mesh.cell(c);
    out << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
  }
  out << "CELL_TYPES " << mesh.num_cells() << "\n";
  for (int c = 0; c < mesh.num_cells(); ++c) out << "5\n";
  out << "CELL_DATA " << mesh.num_cells() << "\nSCALARS label int 1\nLOOKUP_TABLE default\n";
  for (int c = 0; c < mesh.num_cells(); ++c)
    out << (mesh.label(c) == CellLabel::Inner ? 1 : 0) << "\n";
  if (!scalars.empty() || !vectors.empty()) {
    out << "POINT_DATA " << mesh.num_vertices() << "\n";
    for (const auto& [name, field] : scalars) {
      out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
      for (int v = 0; v < field->size(); ++v) out << (*field)[v] << "\n";
    }
    for (const auto& [name, field] : vectors) {
      out << "VECTORS " << name << " double\n";
      for (int v = 0; v < mesh.num_vertices(); ++v) {
        const Vec2 u = field->at(v);
        out << u.x() << " " << u.y() << " 0\n";
      }
    }
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

void write_study_csv(const std::string& path, const StudyTable& table) {
  std::ofstream out = open_out(path);
  out << "# study=" << table.name;
  if (!table.config_echo.empty()) out << " " << table.config_echo;
  out << "\n";
  for (size_t i = 0; i < table.columns.size(); ++i)
    out << table.columns[i] << (i + 1 < table.columns.size() ? "," : "");
  out << ",status\n";
  for (size_t r = 0; r < table.rows.size(); ++r) {
    for (double v : table.rows[r]) {
      if (std::isnan(v))
        out << "nan,";
      else
        out << v << ",";
    }
    out << (r < table.status.size() ? table.status[r] : "ok") << "\n";
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

void write_history_csv(const std::string& path, const std::vector<IterationRecord>& history) {
  std::ofstream out = open_out(path);
  out << "step,J,tracking,perimeter,grad_norm,grad_norm_smoothed,halvings,safeguard,accepted\n";
  for (const IterationRecord& r : history) {
    out << r.step << "," << r.J << "," << r.tracking << "," << r.perimeter << "," << r.grad_norm
        << "," << r.grad_norm_smoothed << "," << r.halvings << ","
        << (r.safeguard_activated ? 1 : 0) << "," << (r.accepted ? 1 : 0) << "\n";
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

void write_interface_csv(const std::string& path, const TriangleMesh& mesh) {
  std::ofstream out = open_out(path);
  out << "loop,x,y\n";
  const auto& edges = mesh.interface_edges();
  const auto& offsets = mesh.interface_loop_offsets();
  for (int loop = 0; loop + 1 < static_cast<int>(offsets.size()); ++loop) {
    for (int e = offsets[loop]; e < offsets[loop + 1]; ++e) {
      const Vec2& p = mesh.vertex(edges[e][0]);
      out << loop << "," << p.x() << "," << p.y() << "\n";
    }
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace vishape
