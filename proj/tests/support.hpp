#pragma once

#include <cmath>
#include <random>

#include "hibler/sym_mat2.hpp"

namespace testing_support {

inline hibler::SymMat2 random_sym(std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  return {n(rng), n(rng), n(rng)};
}

inline hibler::Vec2 random_vec(std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  return {n(rng), n(rng)};
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

}  // namespace testing_support
