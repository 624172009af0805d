#include <doctest.h>

#include <cmath>
#include <variant>

#include "issp/lyapunov.hpp"
#include "issp/systems.hpp"
#include "issp/util.hpp"
#include "support.hpp"

using issp::DisturbanceSpec;
using issp::Matrix;
using issp::QuadraticLyapunov;
using issp::Vector;

namespace {

Matrix diag(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v.asDiagonal();
}

Matrix scalar(double x) { return Matrix::Constant(1, 1, x); }

// P = sum_k (A^T)^k Q A^k, truncated once terms are negligible.
Matrix lyapunov_series(const Matrix& a, const Matrix& q) {
  Matrix p = Matrix::Zero(a.rows(), a.cols());
  Matrix term = q;
  for (int k = 0; k < 100000 && term.norm() > 1e-16 * std::max(1.0, p.norm()); ++k) {
    p += term;
    term = a.transpose() * term * a;
  }
  return p;
}

// Riccati value iteration from P = Q.
Matrix riccati_iteration(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r) {
  Matrix p = q;
  for (int it = 0; it < 200000; ++it) {
    const Matrix s = r + b.transpose() * p * b;
    const Matrix next = q + a.transpose() * p * a -
                        a.transpose() * p * b * s.inverse() * b.transpose() * p * a;
    const double change = (next - p).norm();
    p = 0.5 * (next + next.transpose());
    if (change <= 1e-13 * p.norm()) break;
  }
  return p;
}

issp::SystemModel linear_system(const Matrix& a) {
  issp::SystemModel s;
  s.name = "linear";
  s.state_dimension = static_cast<int>(a.rows());
  s.disturbance_dimension = static_cast<int>(a.rows());
  s.map = [a](const Vector& x, const Vector& d) -> Vector { return a * x + d; };
  s.fixed_point = Vector::Zero(a.rows());
  return s;
}

}  // namespace

TEST_CASE("quadratic form evaluation and sector constants") {
  const QuadraticLyapunov eye(Matrix::Identity(2, 2));
  Vector x(2);
  x << 3.0, 4.0;
  CHECK(eye.eval(x) == 25.0);
  CHECK(eye.eval(Vector::Zero(2)) == 0.0);
  const QuadraticLyapunov v(diag({2.0, 1.0}));
  CHECK(v.eval(Vector::Ones(2)) == doctest::Approx(3.0));
  CHECK(v.a() == doctest::Approx(1.0));
  CHECK(v.b() == doctest::Approx(2.0));
  CHECK(QuadraticLyapunov::c() == 2.0);
  CHECK_THROWS_AS(v.eval(Vector::Zero(3)), issp::Error);
  CHECK_THROWS_AS(QuadraticLyapunov(diag({1.0, -1.0})), issp::Error);
}

TEST_CASE("sector bounds hold for random P and x") {
  testgen::Gen g(31);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = g.integer(1, 6);
    const QuadraticLyapunov v(g.spd(n, 0.1));
    const Vector x = g.vector(n, g.log_uniform(1e-3, 1e3));
    const double r2 = x.squaredNorm();
    CHECK(v.a() * r2 <= v.eval(x) * (1.0 + 1e-12));
    CHECK(v.eval(x) <= v.b() * r2 * (1.0 + 1e-12));
  }
}

TEST_CASE("discrete Lyapunov equation examples") {
  CHECK((issp::solve_discrete_lyapunov(Matrix::Zero(3, 3), Matrix::Identity(3, 3)).p() -
         Matrix::Identity(3, 3)).norm() < 1e-12);
  CHECK(issp::solve_discrete_lyapunov(scalar(0.5), scalar(1.0)).p()(0, 0) ==
        doctest::Approx(4.0 / 3.0).epsilon(1e-13));
  const Matrix p = issp::solve_discrete_lyapunov(diag({0.9, 0.5}), Matrix::Identity(2, 2)).p();
  CHECK(p(0, 0) == doctest::Approx(1.0 / 0.19).epsilon(1e-12));
  CHECK(p(1, 1) == doctest::Approx(1.0 / 0.75).epsilon(1e-12));
  CHECK(std::abs(p(0, 1)) < 1e-12);
}

TEST_CASE("unstable linearization is rejected") {
  try {
    issp::solve_discrete_lyapunov(scalar(1.0), scalar(1.0));
    FAIL("expected an error");
  } catch (const issp::Error& e) {
    CHECK(e.code() == issp::ErrorCode::kUnstableLinearization);
  }
}

TEST_CASE("discrete Lyapunov solution matches the series oracle") {
  testgen::Gen g(32);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = g.integer(1, 5);
    const Matrix a = g.stable(n, g.uniform(0.1, 0.95));
    const Matrix q = g.spd(n);
    const Matrix p = issp::solve_discrete_lyapunov(a, q).p();
    CHECK((a.transpose() * p * a - p + q).norm() <= 1e-8 * q.norm());
    CHECK((p - lyapunov_series(a, q)).norm() <= 1e-8 * p.norm());
  }
}

TEST_CASE("DARE scalar examples") {
  const auto trivial = issp::solve_dare(scalar(0.0), scalar(1.0), scalar(1.0), scalar(1.0));
  CHECK(trivial.p(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(trivial.k(0, 0)) < 1e-12);

  // Fixed-point oracle: P = 1 + P - P^2 / (1 + P).
  double oracle = 1.0;
  for (int i = 0; i < 100000; ++i) oracle = 1.0 + oracle - oracle * oracle / (1.0 + oracle);
  const auto unit = issp::solve_dare(scalar(1.0), scalar(1.0), scalar(1.0), scalar(1.0));
  CHECK(unit.p(0, 0) == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(unit.p(0, 0) == doctest::Approx((1.0 + std::sqrt(5.0)) / 2.0).epsilon(1e-12));
}

TEST_CASE("DARE random problems: residual, stability and value iteration oracle") {
  testgen::Gen g(33);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = g.integer(1, 4);
    const int m = g.integer(1, n);
    const Matrix a = g.stable(n, g.uniform(0.5, 1.3));
    const Matrix b = g.matrix(n, m);
    const Matrix q = g.spd(n);
    const Matrix r = g.spd(m);
    const auto sol = issp::solve_dare(a, b, q, r);
    CHECK(issp::dare_residual(a, b, q, r, sol.p) <= 1e-8 * sol.p.norm());
    CHECK(issp::spectral_radius(a - b * sol.k) < 1.0);
    CHECK((sol.p - riccati_iteration(a, b, q, r)).norm() <= 1e-7 * sol.p.norm());
  }
}

TEST_CASE("DARE on the double integrator") {
  const auto loop = issp::double_integrator_lqg(
      0.1, Matrix::Identity(4, 4), Matrix::Identity(2, 2),
      DisturbanceSpec::gaussian(Vector::Zero(4), 0.01 * Matrix::Identity(4, 4)));
  CHECK(issp::dare_residual(loop.a_open, loop.b, Matrix::Identity(4, 4), Matrix::Identity(2, 2),
                            loop.lyapunov.p()) <= 1e-8 * loop.lyapunov.p().norm());
  CHECK(issp::spectral_radius(loop.a_closed) < 1.0);
}

TEST_CASE("drift expectation on the scalar system") {
  const auto sys = issp::scalar_linear(0.9);
  const issp::LyapunovFn v = [](const Vector& x) { return x.squaredNorm(); };
  const Vector one = Vector::Ones(1);
  const auto exact = issp::drift_expectation(sys, v, one, DisturbanceSpec::point_mass(Vector::Zero(1)),
                                             16, 1);
  CHECK(exact.mean_drift == doctest::Approx(-0.19).epsilon(1e-14));
  CHECK(exact.lo <= exact.mean_drift);
  CHECK(exact.mean_drift <= exact.hi);

  const auto noisy = issp::drift_expectation(
      sys, v, one, DisturbanceSpec::gaussian(Vector::Zero(1), scalar(0.01)), 100000, 2);
  CHECK(noisy.lo <= -0.18);
  CHECK(-0.18 <= noisy.hi);

  const auto rest = issp::drift_expectation(sys, v, Vector::Zero(1),
                                            DisturbanceSpec::point_mass(Vector::Zero(1)), 8, 3);
  CHECK(rest.mean_drift == 0.0);
  CHECK_THROWS_AS(issp::drift_expectation(sys, v, one, DisturbanceSpec::point_mass(Vector::Zero(1)), 1, 1),
                  issp::Error);
}

TEST_CASE("drift identity holds within the interval at random states") {
  // Each interval is a 99% interval, so a few misses are expected; more than
  // 8 of 200 would be a 1-in-1000 event.
  testgen::Gen g(34);
  const issp::LyapunovFn v = [](const Vector& x) { return x.squaredNorm(); };
  int misses = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const double a = g.uniform(-0.99, 0.99);
    const double sigma = g.log_uniform(1e-3, 1.0);
    const Vector x = Vector::Constant(1, g.uniform(-5.0, 5.0));
    const auto est = issp::drift_expectation(issp::scalar_linear(a), v, x,
                                             DisturbanceSpec::gaussian(Vector::Zero(1), scalar(sigma * sigma)),
                                             4000, 100 + trial);
    const double exact = (a * a - 1.0) * x.squaredNorm() + sigma * sigma;
    if (!(est.lo <= exact && exact <= est.hi)) ++misses;
  }
  CHECK(misses <= 8);
}

TEST_CASE("domain exits make the drift infinite") {
  const auto sys = issp::scalar_linear(0.9, 1.0);
  const issp::LyapunovFn v = [](const Vector& x) { return x.squaredNorm(); };
  const auto est = issp::drift_expectation(sys, v, Vector::Constant(1, 0.95),
                                           DisturbanceSpec::gaussian(Vector::Zero(1), scalar(1.0)), 1000, 1);
  CHECK(est.domain_exits > 0);
  CHECK(std::isinf(est.hi));
}

TEST_CASE("region plans") {
  issp::RegionPlan grid;
  grid.kind = issp::RegionKind::kGrid;
  grid.radius = 2.0;
  grid.points_per_axis = 3;
  const auto pts = issp::region_states(grid, Vector::Zero(2));
  CHECK(pts.size() == 9);
  issp::RegionPlan shell;
  shell.kind = issp::RegionKind::kShell;
  shell.inner_radius = shell.radius = 0.7;
  shell.count = 20;
  for (const auto& x : issp::region_states(shell, Vector::Ones(3))) {
    CHECK((x - Vector::Ones(3)).norm() == doctest::Approx(0.7));
  }
  issp::RegionPlan ball;
  ball.radius = 1.5;
  ball.count = 100;
  for (const auto& x : issp::region_states(ball, Vector::Zero(2))) CHECK(x.norm() <= 1.5 + 1e-12);
  issp::RegionPlan empty;
  empty.count = 0;
  try {
    issp::region_states(empty, Vector::Zero(2));
    FAIL("expected an error");
  } catch (const issp::Error& e) {
    CHECK(e.code() == issp::ErrorCode::kEmptyRegion);
  }
}

TEST_CASE("certify the scalar system") {
  const auto sys = issp::scalar_linear(0.9);
  const QuadraticLyapunov v(scalar(1.0));
  issp::RegionPlan region;
  region.radius = 1.0;
  region.count = 32;
  issp::CertifyOptions opts;
  opts.sample_count = 65536;
  const auto result = issp::certify_eissp(sys, v, DisturbanceSpec::gaussian(Vector::Zero(1), scalar(0.01)),
                                          region, 0.19, opts);
  REQUIRE(std::holds_alternative<issp::EisspCertificate>(result));
  const auto& cert = std::get<issp::EisspCertificate>(result);
  CHECK(cert.alpha == 0.19);
  CHECK(cert.phi == doctest::Approx(0.01).epsilon(0.5));
  CHECK(cert.evidence == issp::Evidence::kSampled);
}

TEST_CASE("unstable scalar system yields a counterexample") {
  const auto sys = issp::scalar_linear(1.1);
  const QuadraticLyapunov v(scalar(1.0));
  issp::RegionPlan region;
  region.radius = 2.0;
  region.count = 8;
  const auto result = issp::certify_eissp(sys, v, DisturbanceSpec::gaussian(Vector::Zero(1), scalar(0.01)),
                                          region, 0.1);
  REQUIRE(std::holds_alternative<issp::Counterexample>(result));
  const auto& cex = std::get<issp::Counterexample>(result);
  CHECK(cex.state.norm() > 0.0);
  CHECK(cex.observed > cex.allowed);
}

TEST_CASE("undisturbed LQR loops certify with phi = 0") {
  testgen::Gen g(35);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = g.integer(1, 4);
    const Matrix a = g.stable(n, g.uniform(0.5, 1.2));
    const Matrix b = g.matrix(n, 1);
    const Matrix q = g.spd(n);
    const auto sol = issp::solve_dare(a, b, q, Matrix::Identity(1, 1));
    const QuadraticLyapunov v(sol.p);
    const double alpha = issp::symmetric_eigen_extremes(q).min / v.b();
    issp::RegionPlan region;
    region.radius = g.uniform(0.1, 10.0);
    region.count = 50;
    issp::CertifyOptions opts;
    opts.sample_count = 4;
    const auto result = issp::certify_eissp(linear_system(a - b * sol.k), v,
                                            DisturbanceSpec::point_mass(Vector::Zero(n)), region, alpha, opts);
    REQUIRE(std::holds_alternative<issp::EisspCertificate>(result));
    CHECK(std::get<issp::EisspCertificate>(result).phi == 0.0);
  }
}

TEST_CASE("LQG certificate constants") {
  const auto cert = issp::lqg_certificate(diag({2.0, 4.0}), Matrix::Identity(2, 2),
                                          DisturbanceSpec::gaussian(Vector::Zero(2), Matrix::Identity(2, 2)));
  CHECK(cert.alpha == doctest::Approx(0.25));
  CHECK(cert.phi == doctest::Approx(8.0));
  CHECK(cert.a == doctest::Approx(2.0));
  CHECK(cert.b == doctest::Approx(4.0));
  CHECK(issp::lqg_certificate(diag({2.0, 4.0}), Matrix::Identity(2, 2),
                              DisturbanceSpec::point_mass(Vector::Zero(2))).phi == 0.0);
  CHECK(issp::lqg_certificate(scalar(4.0 / 3.0), scalar(1.0), DisturbanceSpec::point_mass(Vector::Zero(1)))
            .alpha == doctest::Approx(0.75));
  try {
    issp::lqg_certificate(0.5 * Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                          DisturbanceSpec::point_mass(Vector::Zero(2)));
    FAIL("expected an error");
  } catch (const issp::Error& e) {
    CHECK(e.code() == issp::ErrorCode::kDegenerateCertificate);
  }
}

TEST_CASE("additive lift") {
  const QuadraticLyapunov eye(Matrix::Identity(2, 2));
  CHECK(issp::additive_lift(eye, 0.3, DisturbanceSpec::gaussian(Vector::Zero(2), diag({1.0, 4.0}))).phi ==
        doctest::Approx(5.0));
  CHECK(issp::additive_lift(eye, 0.3, DisturbanceSpec::point_mass(Vector::Zero(2))).phi == 0.0);
  const QuadraticLyapunov v(diag({2.0, 1.0}));
  CHECK(issp::additive_lift(v, 0.3, DisturbanceSpec::gaussian(Vector::Zero(2), Matrix::Identity(2, 2))).phi ==
        doctest::Approx(4.0));
  try {
    issp::additive_lift(eye, 0.3, DisturbanceSpec::point_mass(Vector::Ones(2)));
    FAIL("expected an error");
  } catch (const issp::Error& e) {
    CHECK(e.code() == issp::ErrorCode::kPrecondition);
  }
}

TEST_CASE("additive lift phi scales with the covariance") {
  testgen::Gen g(36);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = g.integer(1, 4);
    const QuadraticLyapunov v(g.spd(n));
    const Matrix cov = g.spd(n);
    const double once = issp::additive_lift(v, 0.5, DisturbanceSpec::gaussian(Vector::Zero(n), cov)).phi;
    const double twice = issp::additive_lift(v, 0.5, DisturbanceSpec::gaussian(Vector::Zero(n), 2.0 * cov)).phi;
    CHECK(twice == doctest::Approx(2.0 * once).epsilon(1e-12));
  }
}
