#include "issp/distributions.hpp"

#include <cmath>
#include <numbers>

#include "issp/util.hpp"

namespace issp {

const char* disturbance_kind_name(DisturbanceKind kind) {
  switch (kind) {
    case DisturbanceKind::kGaussian: return "gaussian";
    case DisturbanceKind::kTruncatedGaussian: return "truncated-gaussian";
    case DisturbanceKind::kUniformBall: return "uniform-ball";
    case DisturbanceKind::kPointMass: return "point-mass";
  }
  return "unknown";
}

namespace {

void check_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, std::string(what) + " has non-finite entries");
  }
}

Matrix checked_cholesky(const Vector& mean, const Matrix& cov) {
  if (mean.size() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "disturbance dimension must be positive");
  }
  check_finite(mean, "mean");
  if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "covariance shape does not match mean");
  }
  if (!cov.allFinite() || !is_symmetric(cov)) {
    throw Error(ErrorCode::kInvalidArgument, "covariance must be finite and symmetric");
  }
  if (symmetric_eigen_extremes(cov).min <= 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "covariance must be positive definite");
  }
  Eigen::LLT<Matrix> llt(0.5 * (cov + cov.transpose()));
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kInvalidArgument, "covariance Cholesky factorization failed");
  }
  return llt.matrixL();
}

bool is_diagonal(const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (i != j && m(i, j) != 0.0) return false;
  return true;
}

}  // namespace

DisturbanceSpec DisturbanceSpec::gaussian(Vector mean, Matrix covariance) {
  DisturbanceSpec s;
  s.kind_ = DisturbanceKind::kGaussian;
  s.cholesky_ = checked_cholesky(mean, covariance);
  s.mean_ = std::move(mean);
  s.covariance_ = std::move(covariance);
  return s;
}

DisturbanceSpec DisturbanceSpec::truncated_gaussian(Vector mean, Matrix covariance, double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw Error(ErrorCode::kInvalidArgument, "truncated-gaussian radius must be positive and finite");
  }
  DisturbanceSpec s = gaussian(std::move(mean), std::move(covariance));
  s.kind_ = DisturbanceKind::kTruncatedGaussian;
  s.radius_ = radius;
  return s;
}

DisturbanceSpec DisturbanceSpec::uniform_ball(int dimension, double radius) {
  if (dimension <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "uniform-ball dimension must be positive");
  }
  if (!(radius >= 0.0) || !std::isfinite(radius)) {
    throw Error(ErrorCode::kInvalidArgument, "uniform-ball radius must be nonnegative and finite");
  }
  DisturbanceSpec s;
  s.kind_ = DisturbanceKind::kUniformBall;
  s.mean_ = Vector::Zero(dimension);
  s.radius_ = radius;
  return s;
}

DisturbanceSpec DisturbanceSpec::point_mass(Vector value) {
  if (value.size() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "point-mass dimension must be positive");
  }
  check_finite(value, "point-mass value");
  DisturbanceSpec s;
  s.kind_ = DisturbanceKind::kPointMass;
  s.mean_ = std::move(value);
  return s;
}

DisturbanceSpec DisturbanceSpec::scaled(double factor) const {
  if (!(factor >= 0.0) || !std::isfinite(factor)) {
    throw Error(ErrorCode::kInvalidArgument, "scale factor must be nonnegative and finite");
  }
  if (factor == 0.0) return point_mass(Vector::Zero(dimension()));
  switch (kind_) {
    case DisturbanceKind::kGaussian:
      return gaussian(factor * mean_, factor * factor * covariance_);
    case DisturbanceKind::kTruncatedGaussian:
      return truncated_gaussian(factor * mean_, factor * factor * covariance_, factor * radius_);
    case DisturbanceKind::kUniformBall:
      return uniform_ball(dimension(), factor * radius_);
    case DisturbanceKind::kPointMass:
      return point_mass(factor * mean_);
  }
  return *this;
}

DisturbanceSampler::DisturbanceSampler(const DisturbanceSpec& spec, std::uint64_t seed,
                                       std::uint64_t stream)
    : spec_(spec), rng_(seed, stream), z_(spec.dimension()) {}

void DisturbanceSampler::standard_normal(Eigen::Ref<Vector> z) {
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal_(rng_);
}

void DisturbanceSampler::draw_into(Eigen::Ref<Vector> out) {
  const DisturbanceSpec& s = spec_;
  switch (s.kind()) {
    case DisturbanceKind::kPointMass:
      out = s.mean();
      return;
    case DisturbanceKind::kGaussian:
      standard_normal(z_);
      out.noalias() = s.mean() + s.cholesky() * z_;
      return;
    case DisturbanceKind::kTruncatedGaussian: {
      // Rejection sampling keeps the truncation exact.
      constexpr int kMaxAttempts = 10'000'000;
      for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        standard_normal(z_);
        out.noalias() = s.cholesky() * z_;
        if (out.cwiseAbs().maxCoeff() <= s.radius()) {
          out += s.mean();
          return;
        }
      }
      throw Error(ErrorCode::kInvalidArgument,
                  "truncated-gaussian: truncation box has negligible probability mass");
    }
    case DisturbanceKind::kUniformBall: {
      const double n = static_cast<double>(s.dimension());
      if (s.radius() == 0.0) {
        out.setZero();
        return;
      }
      double norm = 0.0;
      do {
        standard_normal(z_);
        norm = z_.norm();
      } while (norm == 0.0);
      const double r = s.radius() * std::pow(uniform_(rng_), 1.0 / n);
      out = (r / norm) * z_;
      return;
    }
  }
}

Vector DisturbanceSampler::draw() {
  Vector out(spec_.dimension());
  draw_into(out);
  return out;
}

std::vector<Vector> sample(const DisturbanceSpec& spec, std::uint64_t seed, std::size_t count) {
  DisturbanceSampler sampler(spec, seed, 0);
  std::vector<Vector> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(sampler.draw());
  return out;
}

double truncated_normal_variance(double sigma, double radius) {
  if (!(sigma > 0.0) || !(radius > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "truncated_normal_variance: sigma and radius must be positive");
  }
  // Integrate in standardized units; the Gaussian constant cancels.
  const double b = radius / sigma;
  auto density = [](double t) { return std::exp(-0.5 * t * t); };
  const double mass = integrate_simpson(density, -b, b, 64, 1e-13).value;
  const double second = integrate_simpson([&](double t) { return t * t * density(t); }, -b, b, 64, 1e-13).value;
  return sigma * sigma * second / mass;
}

Vector distribution_mean(const DisturbanceSpec& spec) {
  // The truncation box is symmetric about the mean, so truncation keeps it.
  return spec.mean();
}

namespace {

double mc_covariance_trace(const DisturbanceSpec& spec) {
  constexpr std::size_t kSamples = 400000;
  DisturbanceSampler sampler(spec, 0xC07A, 0);
  Vector d(spec.dimension());
  double acc = 0.0;
  for (std::size_t i = 0; i < kSamples; ++i) {
    sampler.draw_into(d);
    acc += (d - spec.mean()).squaredNorm();
  }
  return acc / static_cast<double>(kSamples);
}

}  // namespace

double covariance_trace(const DisturbanceSpec& spec) {
  switch (spec.kind()) {
    case DisturbanceKind::kPointMass:
      return 0.0;
    case DisturbanceKind::kGaussian:
      return spec.covariance().trace();
    case DisturbanceKind::kUniformBall: {
      const double n = spec.dimension();
      return spec.radius() * spec.radius() * n / (n + 2.0);
    }
    case DisturbanceKind::kTruncatedGaussian: {
      if (!is_diagonal(spec.covariance())) return mc_covariance_trace(spec);
      double trace = 0.0;
      for (int i = 0; i < spec.dimension(); ++i) {
        trace += truncated_normal_variance(std::sqrt(spec.covariance()(i, i)), spec.radius());
      }
      return trace;
    }
  }
  return 0.0;
}

LpNorm lp_norm_monte_carlo(const DisturbanceSpec& spec, double p, const MonteCarloOptions& mc) {
  if (!(p > 0.0) || std::isinf(p)) {
    throw Error(ErrorCode::kInvalidArgument, "Monte Carlo L^p norm needs finite p > 0");
  }
  if (mc.sample_count < 2) {
    throw Error(ErrorCode::kInvalidArgument, "Monte Carlo L^p norm needs at least 2 samples");
  }
  DisturbanceSampler sampler(spec, mc.seed, 0);
  Vector d(spec.dimension());
  // Welford accumulation of ||d||^p.
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < mc.sample_count; ++i) {
    sampler.draw_into(d);
    const double x = std::pow(d.norm(), p);
    const double delta = x - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (x - mean);
  }
  const double n = static_cast<double>(mc.sample_count);
  const double se = std::sqrt(m2 / (n - 1.0) / n);
  const double lo = std::max(0.0, mean - kZ99 * se);
  const double hi = mean + kZ99 * se;
  LpNorm out;
  out.p = p;
  out.value = std::pow(mean, 1.0 / p);
  out.method = NormMethod::kMonteCarlo;
  out.sample_count = mc.sample_count;
  out.confidence_interval = std::make_pair(std::pow(lo, 1.0 / p), std::pow(hi, 1.0 / p));
  return out;
}

LpNorm lp_norm(const DisturbanceSpec& spec, double p, const MonteCarloOptions& mc) {
  if (!(p > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "L^p norm needs p > 0");
  }
  auto analytic = [p](double value) {
    LpNorm out;
    out.p = p;
    out.value = value;
    out.method = NormMethod::kAnalytic;
    return out;
  };
  const bool inf = std::isinf(p);
  switch (spec.kind()) {
    case DisturbanceKind::kPointMass:
      return analytic(spec.mean().norm());
    case DisturbanceKind::kGaussian:
      if (inf) {
        throw Error(ErrorCode::kUnboundedSupport,
                    "L^inf norm of an untruncated Gaussian is undefined (unbounded support)");
      }
      if (p == 2.0) {
        return analytic(std::sqrt(spec.covariance().trace() + spec.mean().squaredNorm()));
      }
      break;
    case DisturbanceKind::kTruncatedGaussian:
      if (inf) {
        // Farthest corner of the truncation box from the origin.
        return analytic((spec.mean().cwiseAbs().array() + spec.radius()).matrix().norm());
      }
      if (p == 2.0 && is_diagonal(spec.covariance())) {
        return analytic(std::sqrt(covariance_trace(spec) + spec.mean().squaredNorm()));
      }
      break;
    case DisturbanceKind::kUniformBall: {
      if (inf) return analytic(spec.radius());
      // ||d|| has density n r^(n-1) / R^n on [0, R].
      const double n = spec.dimension();
      return analytic(spec.radius() * std::pow(n / (n + p), 1.0 / p));
    }
  }
  return lp_norm_monte_carlo(spec, p, mc);
}

}  // namespace issp
