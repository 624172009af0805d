#pragma once

#include <cstddef>
#include <functional>

#include "issp/types.hpp"

namespace issp {

/// Two-sided 99% standard normal quantile, z_{0.995}.
inline constexpr double kZ99 = 2.5758293035489004;

/// Power-split constant: (x1^p + x2^p)^(1/p) <= zeta(p) * (x1 + x2) for all
/// nonnegative x1, x2. Sharp: 1 for p >= 1, 2^(1/p - 1) for 0 < p < 1.
double zeta(double p);

struct SymmetricEigen {
  Vector values;   // ascending
  Matrix vectors;  // column i pairs with values[i]
};

/// Cyclic Jacobi rotations on a small symmetric matrix. Iterates until the
/// off-diagonal Frobenius mass drops below 1e-10 * ||M||_F.
SymmetricEigen jacobi_eigen(const Matrix& m);

struct EigenExtremes {
  double min;
  double max;
};

/// Smallest and largest eigenvalue of a symmetric matrix (Jacobi). Throws
/// kInvalidArgument when |M - M^T| exceeds 1e-10 relative to ||M||.
EigenExtremes symmetric_eigen_extremes(const Matrix& m);

/// Largest eigenvalue modulus of a general square matrix.
double spectral_radius(const Matrix& a);

bool is_symmetric(const Matrix& m, double rel_tol = 1e-10);

struct QuadratureResult {
  double value;
  std::size_t intervals;
  bool converged;
};

/// Composite Simpson rule over [lo, hi]. Starts with `initial_intervals`
/// (rounded up to even) and doubles until two successive estimates agree to
/// `rel_tol` or the interval count would exceed `max_intervals`.
QuadratureResult integrate_simpson(const std::function<double(double)>& f,
                                   double lo, double hi,
                                   std::size_t initial_intervals = 16,
                                   double rel_tol = 1e-8,
                                   std::size_t max_intervals = std::size_t{1} << 20);

/// Runs body(i) for i in [0, count) on up to `threads` workers. Work items are
/// split into contiguous blocks; body must only write to slot i of any shared
/// output so results do not depend on the worker count.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body);

/// Resolves a requested thread count: 0 means hardware concurrency.
unsigned resolve_threads(unsigned requested);

}  // namespace issp
