#pragma once

#include <functional>
#include <string>

#include "vishape/common.hpp"

namespace vishape {

// Analytic obstacle with consistent value, gradient and Laplacian (the latter
// two feed lambda_bar and the shape-derivative terms).
struct Obstacle {
  std::function<double(const Vec2&)> value;
  std::function<Vec2(const Vec2&)> gradient;
  std::function<double(const Vec2&)> laplacian;

  static Obstacle constant(double c);
  static Obstacle phi1();  // 0.5
  static Obstacle phi2();  // 5 exp(-x1 - 1)

  // Parses a small expression grammar over x1, x2 (constants, + - * /,
  // integer powers, exp) and differentiates it symbolically.
  static Obstacle from_expression(const std::string& expr);

  // Named obstacle ("phi1"/"phi2") or an expression.
  static Obstacle named(const std::string& name);
};

}  // namespace vishape
