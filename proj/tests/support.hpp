#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "issp/types.hpp"

namespace testgen {

// Seeded generator for property tests. Each property owns one instance so
// failures reproduce from the seed alone.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(eng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }

  issp::Vector vector(int n, double scale = 1.0) {
    issp::Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = scale * normal();
    return v;
  }

  issp::Matrix matrix(int rows, int cols) {
    issp::Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = normal();
    return m;
  }

  issp::Matrix symmetric(int n) {
    const issp::Matrix g = matrix(n, n);
    return 0.5 * (g + g.transpose());
  }

  // G G^T + shift I.
  issp::Matrix spd(int n, double shift = 0.5) {
    const issp::Matrix g = matrix(n, n);
    return g * g.transpose() + shift * issp::Matrix::Identity(n, n);
  }

  // Random matrix rescaled to spectral radius `radius`.
  issp::Matrix stable(int n, double radius);

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

inline double rel_diff(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

}  // namespace testgen

#include <Eigen/Eigenvalues>

inline issp::Matrix testgen::Gen::stable(int n, double radius) {
  issp::Matrix m = matrix(n, n);
  const double r = Eigen::EigenSolver<issp::Matrix>(m).eigenvalues().cwiseAbs().maxCoeff();
  return m * (radius / r);
}
