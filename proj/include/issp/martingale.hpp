#pragma once

#include <optional>
#include <vector>

#include "issp/lyapunov.hpp"

namespace issp {

/// The horizon-K nonnegative supermartingale built from an E-ISSp
/// certificate:
///
///   W_k = theta^k V(x_k) + theta phi (theta^K - theta^k) / (theta - 1),
///   theta = 1 / (1 - alpha).
///
/// The translation term vanishes at k = K and keeps W_k >= 0 for k < K.
class SupermartingaleProcess {
 public:
  SupermartingaleProcess(EisspCertificate certificate, int horizon);

  const EisspCertificate& certificate() const { return cert_; }
  int horizon() const { return horizon_; }
  double theta() const { return theta_; }

  /// Closed (geometric) form of W_k at Lyapunov value v.
  double w_value(int k, double v) const;

  /// Reference summation form theta^k v - phi sum_{i<=k} theta^i
  /// + phi sum_{i<=K} theta^i; O(K), used to cross-check w_value.
  double w_value_summation(int k, double v) const;

  /// E[W_{k+1} | x_k] - W_k when E[V(x_{k+1}) | x_k] equals
  /// `expected_next_v`. Equals theta^{k+1} (expected_next_v - (1-alpha) v - phi),
  /// so it is <= 0 whenever the drift bound holds.
  double supermartingale_gap(int k, double v, double expected_next_v) const;

  /// Level of V at step k on the boundary W_k = lambda:
  ///   rho_k(lambda) = (lambda - theta^K phi / alpha) (1-alpha)^k + phi / alpha.
  /// {W_k <= lambda} and {V(x_k) <= rho_k(lambda)} are the same event.
  std::vector<double> rho_for_lambda(double lambda) const;

  /// Smallest lambda whose boundary stays at or below `level` for every
  /// k <= K when level >= phi / alpha: level + (theta^K - 1) phi / alpha.
  double lambda_for_level(double level) const;

 private:
  EisspCertificate cert_;
  int horizon_;
  double theta_;
};

enum class BoundKind { kVille, kKushnerCase1, kKushnerCase2 };

const char* bound_kind_name(BoundKind kind);

/// Lower bound on the probability of staying inside the relevant set for all
/// k <= K. Always clamped into [0, 1].
struct ExitBound {
  BoundKind kind = BoundKind::kVille;
  double lambda = 0.0;
  double probability_lower_bound = 0.0;
  // Parameters recorded for reports.
  std::optional<double> m;
  std::optional<double> eta;
  std::optional<double> rho_tilde;
  int horizon = 0;
};

/// P{W_k <= lambda for all k <= K} >= 1 - W_0 / lambda.
ExitBound ville_bound(const SupermartingaleProcess& process, double v0, double lambda);

/// The ISS-envelope bound with lambda = M ||x0||^c + (1 + eta) phi:
///   1 - (V(x0) + (phi/alpha)((1-alpha)^{-K} - 1)) / (M ||x0||^c + (1+eta) phi).
/// Throws kBothZero when the denominator vanishes.
ExitBound exit_probability_bound(const EisspCertificate& cert, double x0_norm, double v0,
                                 double m, double eta, int horizon);

/// lambda = M V(x0) + phi / (alpha (1-alpha)^K), the level whose boundary is
/// rho_trajectory(cert, M, v0, K).
double lqg_lambda(const EisspCertificate& cert, double m, double v0, int horizon);

/// rho_k = M V(x0) (1-alpha)^k + phi / alpha for k = 0..K.
std::vector<double> rho_trajectory(const EisspCertificate& cert, double m, double v0, int horizon);

/// Kushner's two-case bound on P{V(x_k) <= rho_tilde for all k <= K}:
///   rho_tilde >= phi/alpha: ((rho_tilde - V0)/rho_tilde) ((rho_tilde - phi)/rho_tilde)^K
///   otherwise:              1 - (V0 (1-alpha)^K + phi (1 - (1-alpha)^K)/alpha) / rho_tilde
ExitBound kushner_bound(const EisspCertificate& cert, double v0, double rho_tilde, int horizon);

/// ||x_k|| <= m_tilde alpha_tilde^k ||x0|| + gamma_value.
struct IssEnvelope {
  double m_tilde = 0.0;
  double alpha_tilde = 0.0;
  double gamma_value = 0.0;

  double at(int k, double x0_norm) const;
};

IssEnvelope iss_envelope(const EisspCertificate& cert, double eta, double m);

}  // namespace issp
