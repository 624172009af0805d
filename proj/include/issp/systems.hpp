#pragma once

#include <optional>

#include "issp/distributions.hpp"
#include "issp/lyapunov.hpp"
#include "issp/system_model.hpp"

namespace issp {

/// x+ = a x + d in one dimension. With a domain radius the map is only
/// defined on |x| <= radius.
SystemModel scalar_linear(double a, std::optional<double> domain_radius = std::nullopt);

struct LqgLoop {
  SystemModel system;
  QuadraticLyapunov lyapunov;
  EisspCertificate certificate;
  Matrix a_open;
  Matrix b;
  Matrix gain;      // u = -K x
  Matrix a_closed;  // A - B K
};

/// Planar double integrator, state (px, py, vx, vy), zero-order hold with
/// step dt: p+ = p + v dt + u dt^2/2, v+ = v + u dt. The LQR loop
/// x+ = (A - B K) x + d uses additive noise d of dimension 4.
LqgLoop double_integrator_lqg(double dt, const Matrix& q, const Matrix& r,
                              const DisturbanceSpec& spec);

/// x+ = A x + curvature ||x|| x + g d on the ball ||x|| <= rho, with scalar d.
/// The Jacobian at the origin is A.
SystemModel walker_surrogate(const Matrix& contraction, double curvature, double domain_radius,
                             const Vector& height_gain);

struct WalkerParameters {
  Matrix contraction;
  double curvature = 0.1;
  double domain_radius = 1.0;
  Vector height_gain;
};

/// diag(0.7, 0.8) rotated by 30 degrees, curvature 0.1, rho = 1,
/// height gain (0.5, 1.0).
WalkerParameters default_walker_parameters();

}  // namespace issp
