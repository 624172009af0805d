#include "issp/util.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>
#include <vector>

#include <Eigen/Eigenvalues>

namespace issp {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kUnboundedSupport: return "unbounded-support";
    case ErrorCode::kUnstableLinearization: return "unstable-linearization";
    case ErrorCode::kSolverFailure: return "solver-failure";
    case ErrorCode::kDegenerateCertificate: return "degenerate-certificate";
    case ErrorCode::kPrecondition: return "precondition";
    case ErrorCode::kBothZero: return "both-zero";
    case ErrorCode::kDriftNotPositive: return "drift-not-positive";
    case ErrorCode::kEmptyRegion: return "empty-region";
    case ErrorCode::kValidation: return "validation";
  }
  return "unknown";
}

double zeta(double p) {
  if (!(p > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "zeta: p must be positive");
  }
  if (p >= 1.0) return 1.0;
  return std::pow(2.0, 1.0 / p - 1.0);
}

bool is_symmetric(const Matrix& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

SymmetricEigen jacobi_eigen(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "jacobi_eigen: matrix not square");
  }
  if (!is_symmetric(m)) {
    throw Error(ErrorCode::kInvalidArgument, "jacobi_eigen: matrix not symmetric");
  }
  const Eigen::Index n = m.rows();
  Matrix a = 0.5 * (m + m.transpose());
  Matrix v = Matrix::Identity(n, n);

  const double total = std::max(a.norm(), std::numeric_limits<double>::min());
  auto off_mass = [&] {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps && off_mass() > 1e-10 * total; ++sweep) {
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rotation angle zeroing a(p, q); t is the smaller root of
        // t^2 + 2 t tau - 1 = 0.
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index i, Eigen::Index j) { return a(i, i) < a(j, j); });
  SymmetricEigen out{Vector(n), Matrix(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values[i] = a(order[i], order[i]);
    out.vectors.col(i) = v.col(order[i]);
  }
  return out;
}

EigenExtremes symmetric_eigen_extremes(const Matrix& m) {
  if (m.size() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "symmetric_eigen_extremes: empty matrix");
  }
  const SymmetricEigen eig = jacobi_eigen(m);
  return {eig.values[0], eig.values[eig.values.size() - 1]};
}

double spectral_radius(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "spectral_radius: matrix not square");
  }
  if (a.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> solver(a, /*computeEigenvectors=*/false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

QuadratureResult integrate_simpson(const std::function<double(double)>& f,
                                   double lo, double hi,
                                   std::size_t initial_intervals, double rel_tol,
                                   std::size_t max_intervals) {
  if (lo == hi) return {0.0, 0, true};
  std::size_t n = std::max<std::size_t>(2, initial_intervals);
  if (n % 2 != 0) ++n;

  auto simpson = [&](std::size_t intervals) {
    const double h = (hi - lo) / static_cast<double>(intervals);
    double odd = 0.0;
    double even = 0.0;
    for (std::size_t i = 1; i < intervals; ++i) {
      const double y = f(lo + h * static_cast<double>(i));
      (i % 2 == 1 ? odd : even) += y;
    }
    return h / 3.0 * (f(lo) + f(hi) + 4.0 * odd + 2.0 * even);
  };

  double previous = simpson(n);
  while (2 * n <= max_intervals) {
    n *= 2;
    const double current = simpson(n);
    const double scale = std::max(std::abs(current), std::numeric_limits<double>::min());
    if (std::abs(current - previous) <= rel_tol * scale) {
      return {current, n, true};
    }
    previous = current;
  }
  return {previous, n, false};
}

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body) {
  const std::size_t workers =
      std::min<std::size_t>(count, std::max(1u, resolve_threads(threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t block = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * block;
    const std::size_t end = std::min(count, begin + block);
    pool.emplace_back([&, w, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace issp
