#pragma once

#include <string>

#include "vishape/lab.hpp"

namespace vishape {

// Mesh text format: "vertices N cells M", N lines "x y", M lines "i j k label"
// (label 1 = Inner, 0 = Outer). Full double precision.
void save_mesh(const std::string& path, const TriangleMesh& mesh);
TriangleMesh load_mesh(const std::string& path);

// Field text format: "field N" then one value per line. Vector fields use
// 2N interleaved values.
void save_field(const std::string& path, const ScalarField& field);
ScalarField load_field(const std::string& path, MeshPtr mesh);
void save_vector_field(const std::string& path, const VectorField& field);

// Legacy ASCII VTK export for external visualization.
void write_vtk(const std::string& path, const TriangleMesh& mesh,
               const std::vector<std::pair<std::string, const ScalarField*>>& scalars = {},
               const std::vector<std::pair<std::string, const VectorField*>>& vectors = {});

void write_study_csv(const std::string& path, const StudyTable& table);
void write_history_csv(const std::string& path, const std::vector<IterationRecord>& history);
// Interface polyline(s) as CSV point lists (loop id, x, y).
void write_interface_csv(const std::string& path, const TriangleMesh& mesh);

}  // namespace vishape
