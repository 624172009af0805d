#include "issp/martingale.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "issp/util.hpp"

namespace issp {

namespace {

double clamp01(double x) {
  if (std::isnan(x)) return 0.0;
  return std::clamp(x, 0.0, 1.0);
}

void require_horizon(int horizon) {
  if (horizon < 0) {
    throw Error(ErrorCode::kInvalidArgument, "horizon K must be nonnegative");
  }
}

}  // namespace

const char* bound_kind_name(BoundKind kind) {
  switch (kind) {
    case BoundKind::kVille: return "ville";
    case BoundKind::kKushnerCase1: return "kushner-case-1";
    case BoundKind::kKushnerCase2: return "kushner-case-2";
  }
  return "unknown";
}

SupermartingaleProcess::SupermartingaleProcess(EisspCertificate certificate, int horizon)
    : cert_(certificate), horizon_(horizon) {
  cert_.validate();
  require_horizon(horizon);
  theta_ = 1.0 / (1.0 - cert_.alpha);
}

double SupermartingaleProcess::w_value(int k, double v) const {
  if (k < 0 || k > horizon_) {
    throw Error(ErrorCode::kInvalidArgument,
                "w_value: step " + std::to_string(k) + " outside [0, K]");
  }
  if (!(v >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "w_value: Lyapunov value must be nonnegative");
  }
  // theta phi (theta^K - theta^k) / (theta - 1) = theta^k phi (theta^{K-k} - 1) / alpha,
  // with theta^{K-k} - 1 evaluated without cancellation.
  const double a = cert_.alpha;
  const double growth = std::expm1(-static_cast<double>(horizon_ - k) * std::log1p(-a));
  return std::pow(theta_, k) * (v + cert_.phi * growth / a);
}

double SupermartingaleProcess::w_value_summation(int k, double v) const {
  if (k < 0 || k > horizon_) {
    throw Error(ErrorCode::kInvalidArgument, "w_value_summation: step outside [0, K]");
  }
  // -phi sum_{i<=k} theta^i + phi sum_{i<=K} theta^i, with the shared terms cancelled.
  double tail = 0.0;
  double power = 1.0;
  for (int i = 1; i <= horizon_; ++i) {
    power *= theta_;
    if (i > k) tail += power;
  }
  return std::pow(theta_, k) * v + cert_.phi * tail;
}

double SupermartingaleProcess::supermartingale_gap(int k, double v, double expected_next_v) const {
  if (k < 0 || k >= horizon_) {
    throw Error(ErrorCode::kInvalidArgument, "supermartingale_gap: step must satisfy 0 <= k < K");
  }
  // theta^{k+1} E[V+] + theta phi (theta^K - theta^{k+1}) / (theta - 1)
  //   - theta^k v - theta phi (theta^K - theta^k) / (theta - 1)
  // = theta^{k+1} (E[V+] - v / theta - phi), using theta^{k+1} - theta^k = theta^k (theta - 1).
  const double slack = expected_next_v - (1.0 - cert_.alpha) * v - cert_.phi;
  return std::pow(theta_, k + 1) * slack;
}

std::vector<double> SupermartingaleProcess::rho_for_lambda(double lambda) const {
  const double a = cert_.alpha;
  const double base = lambda - std::pow(theta_, horizon_) * cert_.phi / a;
  std::vector<double> rho(static_cast<std::size_t>(horizon_) + 1);
  for (int k = 0; k <= horizon_; ++k) {
    rho[static_cast<std::size_t>(k)] = base * std::pow(1.0 - a, k) + cert_.phi / a;
  }
  return rho;
}

double SupermartingaleProcess::lambda_for_level(double level) const {
  return level + (std::pow(theta_, horizon_) - 1.0) * cert_.phi / cert_.alpha;
}

ExitBound ville_bound(const SupermartingaleProcess& process, double v0, double lambda) {
  if (!(lambda > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "Ville bound needs lambda > 0");
  }
  ExitBound out;
  out.kind = BoundKind::kVille;
  out.lambda = lambda;
  out.horizon = process.horizon();
  out.probability_lower_bound = clamp01(1.0 - process.w_value(0, v0) / lambda);
  return out;
}

ExitBound exit_probability_bound(const EisspCertificate& cert, double x0_norm, double v0,
                                 double m, double eta, int horizon) {
  cert.validate();
  require_horizon(horizon);
  if (!(m > 0.0) || !(eta >= 0.0) || !(x0_norm >= 0.0) || !(v0 >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "exit bound needs M > 0, eta >= 0, ||x0|| >= 0, V(x0) >= 0");
  }
  const double lambda = m * std::pow(x0_norm, cert.c) + (1.0 + eta) * cert.phi;
  if (!(lambda > 0.0)) {
    throw Error(ErrorCode::kBothZero, "exit bound undefined: ||x0|| and phi are both zero");
  }
  const double a = cert.alpha;
  const double w0 = v0 + (cert.phi / a) * (std::pow(1.0 - a, -horizon) - 1.0);
  ExitBound out;
  out.kind = BoundKind::kVille;
  out.lambda = lambda;
  out.m = m;
  out.eta = eta;
  out.horizon = horizon;
  out.probability_lower_bound = clamp01(1.0 - w0 / lambda);
  return out;
}

double lqg_lambda(const EisspCertificate& cert, double m, double v0, int horizon) {
  cert.validate();
  require_horizon(horizon);
  return m * v0 + cert.phi / (cert.alpha * std::pow(1.0 - cert.alpha, horizon));
}

std::vector<double> rho_trajectory(const EisspCertificate& cert, double m, double v0, int horizon) {
  cert.validate();
  require_horizon(horizon);
  if (!(m > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "rho trajectory needs M > 0");
  }
  std::vector<double> rho(static_cast<std::size_t>(horizon) + 1);
  for (int k = 0; k <= horizon; ++k) {
    rho[static_cast<std::size_t>(k)] =
        m * v0 * std::pow(1.0 - cert.alpha, k) + cert.phi / cert.alpha;
  }
  return rho;
}

ExitBound kushner_bound(const EisspCertificate& cert, double v0, double rho_tilde, int horizon) {
  cert.validate();
  require_horizon(horizon);
  if (!(rho_tilde > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "Kushner bound needs rho_tilde > 0");
  }
  const double a = cert.alpha;
  const double phi = cert.phi;
  ExitBound out;
  out.rho_tilde = rho_tilde;
  out.horizon = horizon;
  out.lambda = rho_tilde;
  if (rho_tilde >= phi / a) {
    out.kind = BoundKind::kKushnerCase1;
    // Starting above the level fails immediately: bound 0.
    const double first = std::max(0.0, (rho_tilde - v0) / rho_tilde);
    out.probability_lower_bound = clamp01(first * std::pow((rho_tilde - phi) / rho_tilde, horizon));
  } else {
    out.kind = BoundKind::kKushnerCase2;
    const double decay = std::pow(1.0 - a, horizon);
    // sum_{i=1..K} (1-alpha)^{i-1} = (1 - (1-alpha)^K) / alpha
    const double numerator = v0 * decay + phi * (1.0 - decay) / a;
    out.probability_lower_bound = clamp01(1.0 - numerator / rho_tilde);
  }
  return out;
}

double IssEnvelope::at(int k, double x0_norm) const {
  return m_tilde * std::pow(alpha_tilde, k) * x0_norm + gamma_value;
}

IssEnvelope iss_envelope(const EisspCertificate& cert, double eta, double m) {
  cert.validate();
  if (!(eta >= 0.0) || !(m > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "ISS envelope needs eta >= 0 and M > 0");
  }
  const double z = zeta(cert.c);
  IssEnvelope env;
  env.m_tilde = z * std::pow(m / cert.a, 1.0 / cert.c);
  env.alpha_tilde = std::pow(1.0 - cert.alpha, 1.0 / cert.c);
  env.gamma_value = z * std::pow((eta + 1.0 / cert.alpha) * cert.phi / cert.a, 1.0 / cert.c);
  return env;
}

}  // namespace issp
