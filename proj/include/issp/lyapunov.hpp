#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "issp/distributions.hpp"
#include "issp/system_model.hpp"
#include "issp/types.hpp"

namespace issp {

/// V(x) = (x - x*)^T P (x - x*) with sector constants
/// a ||x||^2 <= V(x) <= b ||x||^2, a = lambda_min(P), b = lambda_max(P).
class QuadraticLyapunov {
 public:
  explicit QuadraticLyapunov(Matrix p, Vector center = {});

  const Matrix& p() const { return p_; }
  const Vector& center() const { return center_; }
  int dimension() const { return static_cast<int>(p_.rows()); }
  double a() const { return a_; }
  double b() const { return b_; }
  static constexpr double c() { return 2.0; }

  double operator()(const Vector& x) const { return eval(x); }
  double eval(const Vector& x) const;

 private:
  Matrix p_;
  Vector center_;
  double a_;
  double b_;
};

/// Generic V for drift estimation; synthesis is quadratic-only.
using LyapunovFn = std::function<double(const Vector&)>;

enum class Evidence { kAnalytic, kSampled };

/// E[V(f(x,d))] - V(x) <= -alpha V(x) + phi, together with the sector
/// constants a ||x||^c <= V(x) <= b ||x||^c.
struct EisspCertificate {
  double alpha = 0.5;
  double phi = 0.0;
  double a = 1.0;
  double b = 1.0;
  double c = 2.0;
  double p = 2.0;
  Evidence evidence = Evidence::kAnalytic;

  /// Throws kDegenerateCertificate unless 0 < alpha < 1, phi >= 0,
  /// 0 < a <= b, c > 0.
  void validate() const;
};

/// Solves A^T P A - P = -Q. Throws kUnstableLinearization when the spectral
/// radius of A is >= 1, kSolverFailure when the residual check fails.
QuadraticLyapunov solve_discrete_lyapunov(const Matrix& a, const Matrix& q);

struct DareSolution {
  Matrix p;
  Matrix k;  // u = -K x
  int iterations = 0;
};

struct DareOptions {
  int max_iterations = 200;
  double relative_tolerance = 1e-12;
};

/// Discrete algebraic Riccati equation
///   P = A^T P A - A^T P B (R + B^T P B)^{-1} B^T P A + Q
/// by structure-preserving doubling, with fixed-point iteration as the
/// fallback for scalar problems. K = (R + B^T P B)^{-1} B^T P A.
DareSolution solve_dare(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
                        const DareOptions& options = {});

/// ||A^T P A - A^T P B (R + B^T P B)^{-1} B^T P A + Q - P||_F.
double dare_residual(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
                     const Matrix& p);

struct DriftEstimate {
  Vector state;
  double mean_drift = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t sample_count = 0;
  std::size_t domain_exits = 0;  // any exit makes the drift +infinity
};

/// Sample-mean estimate of E[V(f(x,d))] - V(x) with a 99% normal interval.
/// Disturbances come from stream `stream` of `seed`.
DriftEstimate drift_expectation(const SystemModel& system, const LyapunovFn& v, const Vector& x,
                                const DisturbanceSpec& spec, std::size_t sample_count,
                                std::uint64_t seed, std::uint64_t stream = 0);

enum class RegionKind { kGrid, kBall, kShell };

/// Finite set of probe states around the system's fixed point.
struct RegionPlan {
  RegionKind kind = RegionKind::kBall;
  double inner_radius = 0.0;  // shell only
  double radius = 1.0;        // half-width for grids
  std::size_t count = 64;     // ball / shell probes
  int points_per_axis = 5;    // grid only
  std::uint64_t seed = 1;
};

/// Expands a plan into concrete states. Throws kEmptyRegion for plans that
/// produce no states.
std::vector<Vector> region_states(const RegionPlan& plan, const Vector& center);

struct Counterexample {
  Vector state;
  std::string reason;
  double observed = 0.0;  // offending drift (or +inf on domain exit)
  double allowed = 0.0;
};

struct CertifyOptions {
  std::size_t sample_count = 4096;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  double p = 2.0;
};

using CertifyResult = std::variant<EisspCertificate, Counterexample>;

/// Sampled E-ISSp certification of a quadratic V at a fixed alpha.
///
/// Each probe state must pass two checks: the undisturbed step contracts,
/// V(f(x,0)) - V(x) <= -alpha V(x) (phi = kappa_4(0) = 0 when there is no
/// disturbance), and the sampled drift exists (no domain exits). The
/// returned phi is max over probes of (upper CI drift + alpha V(x)), clamped
/// at zero. The first failing probe is returned as a counterexample.
CertifyResult certify_eissp(const SystemModel& system, const QuadraticLyapunov& v,
                            const DisturbanceSpec& spec, const RegionPlan& region,
                            double target_alpha, const CertifyOptions& options = {});

/// LQR closed-loop certificate: alpha = lambda_min(Q) / lambda_max(P),
/// phi = lambda_max(P) * ||D||_{L^2}^2.
EisspCertificate lqg_certificate(const Matrix& p, const Matrix& q, const DisturbanceSpec& spec);

/// Lifts an E-ISS quadratic V to an E-ISSp certificate for zero-mean additive
/// noise: phi = (lambda_max(Hessian) / 2) tr(cov(d)) = lambda_max(P) tr(cov(d)).
EisspCertificate additive_lift(const QuadraticLyapunov& v, double eiss_alpha,
                               const DisturbanceSpec& spec);

}  // namespace issp
