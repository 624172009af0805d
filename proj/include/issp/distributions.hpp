#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "issp/rng.hpp"
#include "issp/types.hpp"

namespace issp {

enum class DisturbanceKind { kGaussian, kTruncatedGaussian, kUniformBall, kPointMass };

const char* disturbance_kind_name(DisturbanceKind kind);

/// A disturbance distribution D with d_k i.i.d. ~ D. Construct through the
/// named factories; they validate dimensions and positive-definiteness.
///
/// Truncation is per axis: a truncated Gaussian is the Gaussian conditioned on
/// |d_i - mean_i| <= radius for every axis i, renormalized.
class DisturbanceSpec {
 public:
  static DisturbanceSpec gaussian(Vector mean, Matrix covariance);
  static DisturbanceSpec truncated_gaussian(Vector mean, Matrix covariance, double radius);
  static DisturbanceSpec uniform_ball(int dimension, double radius);
  static DisturbanceSpec point_mass(Vector value);

  DisturbanceKind kind() const { return kind_; }
  int dimension() const { return static_cast<int>(mean_.size()); }

  /// Mean for the Gaussian kinds, the atom for point-mass, zero for the ball.
  const Vector& mean() const { return mean_; }
  /// Untruncated covariance parameter; empty for point-mass and ball.
  const Matrix& covariance() const { return covariance_; }
  /// Lower Cholesky factor of covariance().
  const Matrix& cholesky() const { return cholesky_; }
  double radius() const { return radius_; }

  /// Same family with every length scaled by s >= 0 (covariance by s^2).
  /// s = 0 collapses to a point mass at the (scaled) mean.
  DisturbanceSpec scaled(double s) const;

 private:
  DisturbanceSpec() = default;

  DisturbanceKind kind_ = DisturbanceKind::kPointMass;
  Vector mean_;
  Matrix covariance_;
  Matrix cholesky_;
  double radius_ = 0.0;
};

/// Draws from one (seed, stream) pair of StreamRng.
class DisturbanceSampler {
 public:
  DisturbanceSampler(const DisturbanceSpec& spec, std::uint64_t seed, std::uint64_t stream);

  Vector draw();
  void draw_into(Eigen::Ref<Vector> out);

 private:
  void standard_normal(Eigen::Ref<Vector> z);

  DisturbanceSpec spec_;
  StreamRng rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  Vector z_;
};

/// `count` i.i.d. draws from stream 0 of `seed`.
std::vector<Vector> sample(const DisturbanceSpec& spec, std::uint64_t seed, std::size_t count);

enum class NormMethod { kAnalytic, kMonteCarlo };

struct LpNorm {
  double p = 2.0;  // +infinity encodes L^inf
  double value = 0.0;
  NormMethod method = NormMethod::kAnalytic;
  std::size_t sample_count = 0;
  // 99% interval on the norm; only for Monte Carlo estimates.
  std::optional<std::pair<double, double>> confidence_interval;

  /// Upper end of the confidence interval, or the value for analytic norms.
  double conservative() const {
    return confidence_interval ? confidence_interval->second : value;
  }
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct MonteCarloOptions {
  std::size_t sample_count = 200000;
  std::uint64_t seed = 0x5EED;
};

/// E[||d||^p]^(1/p). Closed form where one exists (see README); otherwise a
/// Monte Carlo estimate with a 99% normal-approximation interval on the p-th
/// moment. p = infinity on an untruncated Gaussian throws kUnboundedSupport.
LpNorm lp_norm(const DisturbanceSpec& spec, double p, const MonteCarloOptions& mc = {});

/// Always the Monte Carlo estimator, regardless of closed forms.
LpNorm lp_norm_monte_carlo(const DisturbanceSpec& spec, double p, const MonteCarloOptions& mc = {});

/// tr(cov(d)). Exact except for the truncated Gaussian, where each axis of a
/// diagonal covariance is integrated numerically; correlated truncated
/// Gaussians fall back to a fixed-seed Monte Carlo estimate.
double covariance_trace(const DisturbanceSpec& spec);

/// E[d].
Vector distribution_mean(const DisturbanceSpec& spec);

/// Variance of N(0, sigma^2) conditioned on |t| <= radius, by Simpson
/// quadrature of the renormalized density.
double truncated_normal_variance(double sigma, double radius);

}  // namespace issp
