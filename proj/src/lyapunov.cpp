#include "issp/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "issp/rng.hpp"
#include "issp/util.hpp"

namespace issp {

namespace {

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw Error(ErrorCode::kDimensionMismatch, std::string(what) + " must be a nonempty square matrix");
  }
}

}  // namespace

QuadraticLyapunov::QuadraticLyapunov(Matrix p, Vector center) : p_(std::move(p)) {
  require_square(p_, "P");
  if (!is_symmetric(p_)) {
    throw Error(ErrorCode::kInvalidArgument, "P must be symmetric");
  }
  p_ = 0.5 * (p_ + p_.transpose());
  const EigenExtremes ext = symmetric_eigen_extremes(p_);
  if (!(ext.min > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "P must be positive definite");
  }
  a_ = ext.min;
  b_ = ext.max;
  center_ = center.size() == 0 ? Vector::Zero(p_.rows()) : std::move(center);
  if (center_.size() != p_.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "Lyapunov center dimension does not match P");
  }
}

double QuadraticLyapunov::eval(const Vector& x) const {
  if (x.size() != p_.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "V(x): state dimension does not match P");
  }
  const Vector e = x - center_;
  return std::max(0.0, e.dot(p_ * e));
}

void EisspCertificate::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::kDegenerateCertificate, "certificate alpha must lie in (0, 1)");
  }
  if (!(phi >= 0.0) || !std::isfinite(phi)) {
    throw Error(ErrorCode::kDegenerateCertificate, "certificate phi must be finite and >= 0");
  }
  if (!(a > 0.0 && a <= b) || !std::isfinite(b)) {
    throw Error(ErrorCode::kDegenerateCertificate, "certificate needs 0 < a <= b");
  }
  if (!(c > 0.0)) {
    throw Error(ErrorCode::kDegenerateCertificate, "certificate exponent c must be positive");
  }
}

QuadraticLyapunov solve_discrete_lyapunov(const Matrix& a, const Matrix& q) {
  require_square(a, "A");
  require_square(q, "Q");
  if (a.rows() != q.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "A and Q sizes differ");
  }
  if (!is_symmetric(q) || symmetric_eigen_extremes(q).min <= 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "Q must be symmetric positive definite");
  }
  const double radius = spectral_radius(a);
  if (!(radius < 1.0)) {
    throw Error(ErrorCode::kUnstableLinearization,
                "discrete Lyapunov equation needs spectral radius < 1 (got " + std::to_string(radius) + ")");
  }
  // (I - A^T kron A^T) vec(P) = vec(Q), column-major vec.
  const Eigen::Index n = a.rows();
  const Matrix at = a.transpose();
  Matrix lhs = Matrix::Identity(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      lhs.block(i * n, j * n, n, n) -= at(i, j) * at;
  const Vector vec_q = Eigen::Map<const Vector>(q.data(), n * n);
  const Vector vec_p = lhs.partialPivLu().solve(vec_q);
  Matrix p = Eigen::Map<const Matrix>(vec_p.data(), n, n);
  p = 0.5 * (p + p.transpose());

  const double residual = (a.transpose() * p * a - p + q).norm();
  if (!(residual <= 1e-8 * q.norm())) {
    throw Error(ErrorCode::kSolverFailure, "discrete Lyapunov residual check failed");
  }
  return QuadraticLyapunov(std::move(p));
}

double dare_residual(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
                     const Matrix& p) {
  const Matrix bt_p = b.transpose() * p;
  const Matrix s = r + bt_p * b;
  const Matrix rhs = a.transpose() * p * a - (bt_p * a).transpose() * s.ldlt().solve(bt_p * a) + q;
  return (rhs - p).norm();
}

namespace {

Matrix lqr_gain(const Matrix& a, const Matrix& b, const Matrix& r, const Matrix& p) {
  const Matrix bt_p = b.transpose() * p;
  return (r + bt_p * b).ldlt().solve(bt_p * a);
}

bool dare_acceptable(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
                     const Matrix& p, const Matrix& k) {
  if (!p.allFinite() || !k.allFinite()) return false;
  const double scale = std::max(p.norm(), std::numeric_limits<double>::min());
  if (!(dare_residual(a, b, q, r, p) <= 1e-8 * scale)) return false;
  return spectral_radius(a - b * k) < 1.0;
}

}  // namespace

DareSolution solve_dare(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
                        const DareOptions& options) {
  require_square(a, "A");
  require_square(q, "Q");
  require_square(r, "R");
  const Eigen::Index n = a.rows();
  if (b.rows() != n || b.cols() != r.rows() || q.rows() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "DARE: inconsistent A, B, Q, R shapes");
  }
  if (!is_symmetric(q) || symmetric_eigen_extremes(q).min < -1e-12) {
    throw Error(ErrorCode::kInvalidArgument, "DARE: Q must be symmetric positive semidefinite");
  }
  if (!is_symmetric(r) || symmetric_eigen_extremes(r).min <= 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "DARE: R must be symmetric positive definite");
  }

  // Structure-preserving doubling:
  //   A+ = A (I + G H)^{-1} A
  //   G+ = G + A (I + G H)^{-1} G A^T
  //   H+ = H + A^T H (I + G H)^{-1} A
  // with G0 = B R^{-1} B^T, H0 = Q; H converges to P.
  Matrix ak = a;
  Matrix gk = b * r.ldlt().solve(b.transpose());
  Matrix hk = q;
  const Matrix eye = Matrix::Identity(n, n);
  DareSolution out;
  bool converged = false;
  for (int it = 1; it <= options.max_iterations; ++it) {
    const auto w = (eye + gk * hk).partialPivLu();
    const Matrix w_a = w.solve(ak);
    const Matrix w_g = w.solve(gk);
    const Matrix h_next = hk + ak.transpose() * hk * w_a;
    gk = gk + ak * w_g * ak.transpose();
    ak = ak * w_a;
    const double change = (h_next - hk).norm();
    hk = 0.5 * (h_next + h_next.transpose());
    out.iterations = it;
    if (!hk.allFinite()) break;
    if (change <= options.relative_tolerance * std::max(hk.norm(), std::numeric_limits<double>::min())) {
      converged = true;
      break;
    }
  }
  if (converged) {
    out.p = hk;
    out.k = lqr_gain(a, b, r, out.p);
    if (dare_acceptable(a, b, q, r, out.p, out.k)) return out;
  }

  if (n == 1 && b.cols() == 1) {
    // Scalar fallback: P <- Q + A^2 P - (A B P)^2 / (R + B^2 P).
    const double av = a(0, 0), bv = b(0, 0), qv = q(0, 0), rv = r(0, 0);
    double p = qv;
    for (int it = 1; it <= 1'000'000; ++it) {
      const double next = qv + av * av * p - (av * bv * p) * (av * bv * p) / (rv + bv * bv * p);
      const double change = std::abs(next - p);
      p = next;
      if (change <= 1e-15 * std::max(std::abs(p), 1e-300)) break;
    }
    out.p = Matrix::Constant(1, 1, p);
    out.k = lqr_gain(a, b, r, out.p);
    if (dare_acceptable(a, b, q, r, out.p, out.k)) return out;
  }
  throw Error(ErrorCode::kSolverFailure,
              "DARE: doubling iteration did not converge to a stabilizing solution");
}

DriftEstimate drift_expectation(const SystemModel& system, const LyapunovFn& v, const Vector& x,
                                const DisturbanceSpec& spec, std::size_t sample_count,
                                std::uint64_t seed, std::uint64_t stream) {
  if (sample_count < 2) {
    throw Error(ErrorCode::kInvalidArgument, "drift_expectation needs at least 2 samples");
  }
  if (spec.dimension() != system.disturbance_dimension) {
    throw Error(ErrorCode::kDimensionMismatch, "disturbance dimension does not match the system");
  }
  DriftEstimate out;
  out.state = x;
  out.sample_count = sample_count;

  const double vx = v(x);
  DisturbanceSampler sampler(spec, seed, stream);
  Vector d(spec.dimension());
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < sample_count; ++i) {
    sampler.draw_into(d);
    const std::optional<Vector> next = system.step(x, d);
    if (!next || !system.in_domain(*next)) {
      ++out.domain_exits;
      break;
    }
    const double delta = v(*next) - vx;
    const double n = static_cast<double>(i + 1);
    const double diff = delta - mean;
    mean += diff / n;
    m2 += diff * (delta - mean);
  }
  if (out.domain_exits > 0) {
    out.mean_drift = out.lo = out.hi = std::numeric_limits<double>::infinity();
    return out;
  }
  const double n = static_cast<double>(sample_count);
  const double se = std::sqrt(std::max(0.0, m2) / (n - 1.0) / n);
  out.mean_drift = mean;
  out.lo = mean - kZ99 * se;
  out.hi = mean + kZ99 * se;
  return out;
}

std::vector<Vector> region_states(const RegionPlan& plan, const Vector& center) {
  const int dim = static_cast<int>(center.size());
  std::vector<Vector> states;
  if (dim == 0) {
    throw Error(ErrorCode::kEmptyRegion, "region plan needs a nonempty state space");
  }
  if (!(plan.radius >= 0.0) || !(plan.inner_radius >= 0.0) || plan.inner_radius > plan.radius) {
    throw Error(ErrorCode::kInvalidArgument, "region plan radii must satisfy 0 <= inner <= radius");
  }
  switch (plan.kind) {
    case RegionKind::kGrid: {
      if (plan.points_per_axis <= 0) break;
      const int m = plan.points_per_axis;
      std::size_t total = 1;
      for (int i = 0; i < dim; ++i) total *= static_cast<std::size_t>(m);
      for (std::size_t idx = 0; idx < total; ++idx) {
        Vector x = center;
        std::size_t rest = idx;
        for (int i = 0; i < dim; ++i) {
          const int j = static_cast<int>(rest % static_cast<std::size_t>(m));
          rest /= static_cast<std::size_t>(m);
          const double t = m == 1 ? 0.0 : -1.0 + 2.0 * j / (m - 1);
          x[i] += plan.radius * t;
        }
        states.push_back(std::move(x));
      }
      break;
    }
    case RegionKind::kBall:
    case RegionKind::kShell: {
      StreamRng rng(plan.seed, 0);
      std::normal_distribution<double> normal;
      std::uniform_real_distribution<double> uniform;
      const double lo = plan.kind == RegionKind::kBall ? 0.0 : std::pow(plan.inner_radius, dim);
      const double hi = std::pow(plan.radius, dim);
      for (std::size_t i = 0; i < plan.count; ++i) {
        // In one dimension the two probe directions alternate.
        Vector dir(dim);
        if (dim == 1) {
          dir[0] = (i % 2 == 0) ? 1.0 : -1.0;
        } else {
          double norm = 0.0;
          do {
            for (int j = 0; j < dim; ++j) dir[j] = normal(rng);
            norm = dir.norm();
          } while (norm == 0.0);
          dir /= norm;
        }
        // Radius uniform in volume between the inner and outer radii.
        const double r = std::pow(lo + (hi - lo) * uniform(rng), 1.0 / dim);
        states.push_back(center + r * dir);
      }
      break;
    }
  }
  if (states.empty()) {
    throw Error(ErrorCode::kEmptyRegion, "region plan produced no probe states");
  }
  return states;
}

CertifyResult certify_eissp(const SystemModel& system, const QuadraticLyapunov& v,
                            const DisturbanceSpec& spec, const RegionPlan& region,
                            double target_alpha, const CertifyOptions& options) {
  if (!(target_alpha > 0.0 && target_alpha < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "target alpha must lie in (0, 1)");
  }
  if (v.dimension() != system.state_dimension) {
    throw Error(ErrorCode::kDimensionMismatch, "Lyapunov dimension does not match the system");
  }
  const std::vector<Vector> states = region_states(region, system.fixed_point);

  struct Probe {
    bool ok = true;
    Counterexample failure;
    double phi = 0.0;
  };
  std::vector<Probe> probes(states.size());
  const Vector zero = Vector::Zero(system.disturbance_dimension);
  const LyapunovFn vfn = [&v](const Vector& x) { return v.eval(x); };

  parallel_for(states.size(), options.threads, [&](std::size_t i) {
    const Vector& x = states[i];
    Probe& probe = probes[i];
    const double vx = v.eval(x);
    const double allowed = -target_alpha * vx;

    const std::optional<Vector> nominal = system.step(x, zero);
    if (!nominal || !system.in_domain(*nominal)) {
      probe.ok = false;
      probe.failure = {x, "undisturbed step leaves the domain",
                       std::numeric_limits<double>::infinity(), allowed};
      return;
    }
    const double vn = v.eval(*nominal);
    const double nominal_drift = vn - vx;
    const double tol = 1e-9 * (vx + vn) + 1e-14;
    if (nominal_drift > allowed + tol) {
      probe.ok = false;
      probe.failure = {x, "undisturbed drift exceeds -alpha V(x)", nominal_drift, allowed};
      return;
    }

    const DriftEstimate est =
        drift_expectation(system, vfn, x, spec, options.sample_count, options.seed, i);
    if (est.domain_exits > 0) {
      probe.ok = false;
      probe.failure = {x, "sampled successor leaves the domain", est.hi, allowed};
      return;
    }
    probe.phi = est.hi + target_alpha * vx;
  });

  double phi = 0.0;
  for (const Probe& probe : probes) {
    if (!probe.ok) return probe.failure;
    phi = std::max(phi, probe.phi);
  }
  EisspCertificate cert;
  cert.alpha = target_alpha;
  cert.phi = phi;
  cert.a = v.a();
  cert.b = v.b();
  cert.c = QuadraticLyapunov::c();
  cert.p = options.p;
  cert.evidence = Evidence::kSampled;
  return cert;
}

EisspCertificate lqg_certificate(const Matrix& p, const Matrix& q, const DisturbanceSpec& spec) {
  const QuadraticLyapunov v(p);
  require_square(q, "Q");
  if (!is_symmetric(q)) {
    throw Error(ErrorCode::kInvalidArgument, "Q must be symmetric");
  }
  EisspCertificate cert;
  cert.alpha = symmetric_eigen_extremes(q).min / v.b();
  if (!(cert.alpha > 0.0 && cert.alpha < 1.0)) {
    throw Error(ErrorCode::kDegenerateCertificate,
                "LQG certificate alpha = lambda_min(Q)/lambda_max(P) must lie in (0, 1)");
  }
  const LpNorm norm = lp_norm(spec, 2.0);
  const double l2 = norm.conservative();
  cert.phi = v.b() * l2 * l2;
  cert.a = v.a();
  cert.b = v.b();
  cert.c = 2.0;
  cert.p = 2.0;
  cert.evidence = norm.method == NormMethod::kAnalytic ? Evidence::kAnalytic : Evidence::kSampled;
  return cert;
}

EisspCertificate additive_lift(const QuadraticLyapunov& v, double eiss_alpha,
                               const DisturbanceSpec& spec) {
  if (distribution_mean(spec).norm() != 0.0) {
    throw Error(ErrorCode::kPrecondition, "additive lift requires a zero-mean disturbance");
  }
  if (spec.dimension() != v.dimension()) {
    throw Error(ErrorCode::kDimensionMismatch, "additive disturbance must match the state dimension");
  }
  EisspCertificate cert;
  cert.alpha = eiss_alpha;
  // Hessian of x^T P x is 2P.
  const double hessian_max = 2.0 * v.b();
  cert.phi = 0.5 * hessian_max * covariance_trace(spec);
  cert.a = v.a();
  cert.b = v.b();
  cert.c = 2.0;
  cert.p = 2.0;
  const bool exact_trace = spec.kind() != DisturbanceKind::kTruncatedGaussian ||
                           (spec.covariance().array() != 0.0).count() <= spec.dimension();
  cert.evidence = exact_trace ? Evidence::kAnalytic : Evidence::kSampled;
  cert.validate();
  return cert;
}

}  // namespace issp
