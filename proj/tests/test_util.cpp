#include <doctest.h>

#include <atomic>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>

#include "issp/util.hpp"
#include "support.hpp"

using issp::Matrix;
using issp::Vector;

namespace {

// Characteristic polynomial by Faddeev-LeVerrier, roots from the companion
// matrix. Independent of the Jacobi path.
std::vector<double> charpoly_roots(const Matrix& a) {
  const int n = static_cast<int>(a.rows());
  std::vector<double> c(n + 1);
  c[n] = 1.0;
  Matrix m = Matrix::Zero(n, n);
  const Matrix eye = Matrix::Identity(n, n);
  for (int k = 1; k <= n; ++k) {
    m = a * m + c[n - k + 1] * eye;
    c[n - k] = -(a * m).trace() / k;
  }
  Matrix companion = Matrix::Zero(n, n);
  for (int i = 1; i < n; ++i) companion(i, i - 1) = 1.0;
  for (int i = 0; i < n; ++i) companion(i, n - 1) = -c[i];
  const auto ev = Eigen::EigenSolver<Matrix>(companion).eigenvalues();
  std::vector<double> roots;
  for (int i = 0; i < n; ++i) roots.push_back(ev[i].real());
  std::sort(roots.begin(), roots.end());
  return roots;
}

}  // namespace

TEST_CASE("zeta matches the power-split constants") {
  CHECK(issp::zeta(1.0) == 1.0);
  CHECK(issp::zeta(2.0) == 1.0);
  CHECK(issp::zeta(0.5) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(issp::zeta(0.25) == doctest::Approx(8.0).epsilon(1e-15));
  CHECK_THROWS_AS(issp::zeta(0.0), issp::Error);
  CHECK_THROWS_AS(issp::zeta(-1.0), issp::Error);
}

TEST_CASE("zeta soundness on random triples") {
  testgen::Gen g(11);
  for (int i = 0; i < 10000; ++i) {
    const double x1 = g.log_uniform(1e-6, 1e6);
    const double x2 = g.log_uniform(1e-6, 1e6);
    const double p = g.uniform(0.1, 4.0);
    const double lhs = std::pow(std::pow(x1, p) + std::pow(x2, p), 1.0 / p);
    REQUIRE(lhs <= issp::zeta(p) * (x1 + x2) * (1.0 + 1e-12));
  }
}

TEST_CASE("zeta is sharp below p = 1") {
  // Equal arguments attain the constant.
  for (double p : {0.2, 0.5, 0.9}) {
    const double lhs = std::pow(2.0, 1.0 / p);
    CHECK(lhs == doctest::Approx(issp::zeta(p) * 2.0).epsilon(1e-12));
  }
}

TEST_CASE("eigen extremes of simple matrices") {
  const auto eye = issp::symmetric_eigen_extremes(Matrix::Identity(3, 3));
  CHECK(eye.min == doctest::Approx(1.0));
  CHECK(eye.max == doctest::Approx(1.0));
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 2.0;
  d(1, 1) = 5.0;
  const auto ext = issp::symmetric_eigen_extremes(d);
  CHECK(ext.min == doctest::Approx(2.0));
  CHECK(ext.max == doctest::Approx(5.0));
}

TEST_CASE("asymmetric input is rejected") {
  Matrix m = Matrix::Identity(2, 2);
  m(0, 1) = 1.0;
  CHECK_THROWS_AS(issp::symmetric_eigen_extremes(m), issp::Error);
}

TEST_CASE("Jacobi eigenvalues match characteristic polynomial roots") {
  testgen::Gen g(5);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix m = g.symmetric(4);
    const auto roots = charpoly_roots(m);
    const auto ext = issp::symmetric_eigen_extremes(m);
    CHECK(std::abs(ext.min - roots.front()) <= 1e-8 * std::max(1.0, m.norm()));
    CHECK(std::abs(ext.max - roots.back()) <= 1e-8 * std::max(1.0, m.norm()));
  }
}

TEST_CASE("Jacobi eigenpairs have small residuals") {
  testgen::Gen g(6);
  for (int n : {1, 2, 3, 5, 8}) {
    const Matrix m = g.symmetric(n);
    const issp::SymmetricEigen e = issp::jacobi_eigen(m);
    for (int i = 0; i < n; ++i) {
      const Vector v = e.vectors.col(i);
      CHECK((m * v - e.values[i] * v).norm() <= 1e-8 * m.norm());
      CHECK(v.norm() == doctest::Approx(1.0));
    }
    for (int i = 1; i < n; ++i) CHECK(e.values[i - 1] <= e.values[i]);
  }
}

TEST_CASE("eigen extremes bracket Rayleigh quotients") {
  testgen::Gen g(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = g.integer(1, 6);
    const Matrix m = g.symmetric(n);
    const auto ext = issp::symmetric_eigen_extremes(m);
    const Vector x = g.vector(n);
    const double q = x.dot(m * x) / x.squaredNorm();
    CHECK(q >= ext.min - 1e-10 * m.norm());
    CHECK(q <= ext.max + 1e-10 * m.norm());
  }
}

TEST_CASE("spectral radius") {
  Matrix r(2, 2);
  r << 0.0, -0.5, 0.5, 0.0;  // eigenvalues +-0.5i
  CHECK(issp::spectral_radius(r) == doctest::Approx(0.5));
  CHECK(issp::spectral_radius(Matrix::Identity(3, 3) * -2.0) == doctest::Approx(2.0));
}

TEST_CASE("Simpson quadrature") {
  const auto quartic = issp::integrate_simpson([](double x) { return x * x * x * x; }, 0.0, 1.0);
  CHECK(quartic.converged);
  CHECK(quartic.value == doctest::Approx(0.2).epsilon(1e-10));
  const auto sine = issp::integrate_simpson([](double x) { return std::sin(x); }, 0.0, M_PI);
  CHECK(sine.value == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(issp::integrate_simpson([](double) { return 1.0; }, 3.0, 3.0).value == 0.0);
}

TEST_CASE("parallel_for is independent of the worker count") {
  std::vector<double> serial(1000), parallel(1000);
  const auto body = [](std::vector<double>& out) {
    return [&out](std::size_t i) { out[i] = std::sin(static_cast<double>(i)) * i; };
  };
  issp::parallel_for(serial.size(), 1, body(serial));
  issp::parallel_for(parallel.size(), 8, body(parallel));
  CHECK(serial == parallel);
}

TEST_CASE("parallel_for rethrows worker exceptions") {
  CHECK_THROWS_AS(issp::parallel_for(100, 4,
                                     [](std::size_t i) {
                                       if (i == 57) throw std::runtime_error("boom");
                                     }),
                  std::runtime_error);
  std::atomic<int> count{0};
  issp::parallel_for(0, 4, [&](std::size_t) { ++count; });
  CHECK(count == 0);
}
