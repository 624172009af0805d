#include <doctest.h>

#include <cmath>

#include "issp/distributions.hpp"
#include "issp/optimizer.hpp"
#include "issp/systems.hpp"

using issp::DisturbanceSpec;
using issp::Matrix;
using issp::Vector;

namespace {

const DisturbanceSpec kUnitTruncated =
    DisturbanceSpec::truncated_gaussian(Vector::Zero(1), Matrix::Ones(1, 1), 3.0);

// Deterministic 1-D surrogate x+ = (0.9 + c|x|) x + d with d = delta (point mass).
// V = P x^2 with P = 1 / 0.19. The worst shell state is x = +chi delta, giving
// feasibility iff (0.9 + c chi delta) chi + 1 <= chi sqrt(1 - k / P).
struct DeterministicCase {
  double c = 0.2;
  double k = 0.05;
  std::vector<double> grid{12.0, 16.0, 20.0};
  issp::SystemModel system =
      issp::walker_surrogate(Matrix::Constant(1, 1, 0.9), c, 10.0, Vector::Ones(1));
  issp::QuadraticLyapunov v{Matrix::Constant(1, 1, 1.0 / 0.19)};
  DisturbanceSpec unit = DisturbanceSpec::point_mass(Vector::Ones(1));

  double threshold() const {
    const double s = std::sqrt(1.0 - k * 0.19);
    double best = 0.0;
    for (double chi : grid) best = std::max(best, (chi * s - 1.0 - 0.9 * chi) / (c * chi * chi));
    return best;
  }
};

issp::RobustnessOptions options(std::size_t shells, std::size_t mc, std::uint64_t seed) {
  issp::RobustnessOptions o;
  o.shell_sample_count = shells;
  o.mc_sample_count = mc;
  o.seed = seed;
  return o;
}

}  // namespace

TEST_CASE("disturbance-free family returns the bracket top") {
  const auto params = issp::default_walker_parameters();
  const auto s = issp::walker_surrogate(params.contraction, 0.0, params.domain_radius, Vector::Zero(2));
  const auto v = issp::solve_discrete_lyapunov(params.contraction, Matrix::Identity(2, 2));
  const auto r = issp::max_tolerable_disturbance(s, v, kUnitTruncated, 0.5, {1.5, 2.0}, {0.001, 0.3},
                                                 options(32, 64, 3));
  CHECK(r.feasible);
  CHECK(r.delta_star == 0.3);
  CHECK(r.bisection_steps == 0);
}

TEST_CASE("deterministic surrogate matches the hand threshold") {
  const DeterministicCase dc;
  const auto r = issp::max_tolerable_disturbance(dc.system, dc.v, dc.unit, dc.k, dc.grid, {1e-4, 0.05},
                                                 options(16, 2, 5));
  REQUIRE(r.feasible);
  CHECK(r.chi_star == 20.0);
  CHECK(r.delta_star <= dc.threshold());
  CHECK(r.delta_star >= dc.threshold() - r.tolerance);
}

TEST_CASE("bisection bracket is correct under a fresh seed") {
  const DeterministicCase dc;
  const auto r = issp::max_tolerable_disturbance(dc.system, dc.v, dc.unit, dc.k, dc.grid, {1e-4, 0.05},
                                                 options(16, 2, 5));
  const auto fresh = options(16, 2, 99);
  CHECK_FALSE(issp::feasible_chis(dc.system, dc.v, dc.unit, dc.k, dc.grid, r.delta_star, fresh).empty());
  CHECK(issp::feasible_chis(dc.system, dc.v, dc.unit, dc.k, dc.grid, r.delta_star + 10.0 * r.tolerance, fresh)
            .empty());
}

TEST_CASE("scalar family: bisection matches the domain-limited threshold") {
  // x+ = 0.9 x + d on |x| <= 1 with d ~ N(0, delta^2) truncated at 3 delta.
  // Drift: (0.81 - 1) chi^2 delta^2 + m2 delta^2 <= -k chi^2 delta^2 fixes the
  // smallest feasible chi; the domain then needs 0.9 chi delta + 3 delta <= 1.
  const double density3 = std::exp(-4.5) / std::sqrt(2.0 * M_PI);
  const double m2 = 1.0 - 6.0 * density3 / std::erf(3.0 / std::sqrt(2.0));
  const std::vector<double> grid{2.0, 2.6, 3.0, 3.6, 4.2};
  const auto sys = issp::scalar_linear(0.9, 1.0);
  const issp::QuadraticLyapunov v(Matrix::Ones(1, 1));
  double previous = 1.0;
  for (double k : {0.02, 0.05, 0.1}) {
    double chi_min = 0.0;
    for (double chi : grid) {
      if ((0.19 - k) * chi * chi >= m2) {
        chi_min = chi;
        break;
      }
    }
    REQUIRE(chi_min > 0.0);
    const double expected = 1.0 / (0.9 * chi_min + 3.0);
    const auto r = issp::max_tolerable_disturbance(sys, v, kUnitTruncated, k, grid, {0.01, 0.5},
                                                   options(2, 200000, 7));
    REQUIRE(r.feasible);
    CHECK(r.chi_star == chi_min);
    CHECK(r.delta_star == doctest::Approx(expected).epsilon(1e-3));
    CHECK(r.delta_star <= previous);
    previous = r.delta_star;
  }
}

TEST_CASE("walker defaults: positive and nonincreasing in k") {
  const auto params = issp::default_walker_parameters();
  const auto s = issp::walker_surrogate(params.contraction, params.curvature, params.domain_radius,
                                        params.height_gain);
  const auto v = issp::solve_discrete_lyapunov(params.contraction, Matrix::Identity(2, 2));
  const std::vector<double> grid{1.5, 2.0, 3.0, 4.0, 6.0};
  double previous = 1.0;
  for (double k : {0.02, 0.05, 0.1}) {
    const auto r = issp::max_tolerable_disturbance(s, v, kUnitTruncated, k, grid,
                                                   {0.001, 0.5}, options(32, 2048, 11));
    CHECK(r.feasible);
    CHECK(r.delta_star > 0.0);
    CHECK(r.delta_star <= previous);
    previous = r.delta_star;
  }
}

TEST_CASE("infeasible everywhere gives delta 0") {
  const auto sys = issp::scalar_linear(0.9, 1.0);
  const issp::QuadraticLyapunov v(Matrix::Ones(1, 1));
  const auto r = issp::max_tolerable_disturbance(sys, v, kUnitTruncated, 0.5, {2.0, 3.0}, {0.01, 0.5},
                                                 options(2, 256, 1));
  CHECK_FALSE(r.feasible);
  CHECK(r.delta_star == 0.0);
}

TEST_CASE("input validation") {
  const auto sys = issp::scalar_linear(0.9, 1.0);
  const issp::QuadraticLyapunov v(Matrix::Ones(1, 1));
  CHECK_THROWS_AS(issp::max_tolerable_disturbance(sys, v, kUnitTruncated, 0.05, {}, {0.01, 0.5}), issp::Error);
  CHECK_THROWS_AS(issp::max_tolerable_disturbance(sys, v, kUnitTruncated, 0.05, {2.0}, {0.5, 0.5}), issp::Error);
  CHECK_THROWS_AS(issp::max_tolerable_disturbance(sys, v, kUnitTruncated, 1.5, {2.0}, {0.1, 0.5}), issp::Error);
  CHECK_THROWS_AS(issp::max_tolerable_disturbance(sys, v, kUnitTruncated, 0.05, {-2.0}, {0.1, 0.5}), issp::Error);
}

TEST_CASE("level set bound") {
  const issp::QuadraticLyapunov v((Vector(2) << 1.0, 4.0).finished().asDiagonal());
  issp::EisspCertificate cert;
  cert.alpha = 0.3;
  const double r2 = (2.0 * 0.1) * (2.0 * 0.1);
  CHECK(issp::level_set_bound(2.0, 0.1, v, cert, 0.05, 0) == doctest::Approx((4.0 + 0.05) * r2));
  CHECK(issp::level_set_bound(2.0, 0.1, v, cert, 0.05, 2000) == doctest::Approx(0.05 * r2));
  CHECK(issp::level_set_bound(2.0, 0.1, v, cert, 0.05, 3) ==
        doctest::Approx(std::pow(0.7, 3) * 4.0 * r2 + 0.05 * r2));
}
