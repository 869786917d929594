#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace vishape {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct MeshError : Error {
  explicit MeshError(const std::string& msg) : Error(msg) {}
};

// Raised when a deformation flips a cell; the linesearch treats it as a
// rejected trial step.
struct CellInversionError : MeshError {
  explicit CellInversionError(const std::string& msg) : MeshError(msg) {}
};

struct SolveError : Error {
  explicit SolveError(const std::string& msg) : Error(msg) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

struct IoError : Error {
  explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace vishape
