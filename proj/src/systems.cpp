#include "issp/systems.hpp"

#include <cmath>
#include <numbers>

#include "issp/util.hpp"

namespace issp {

SystemModel scalar_linear(double a, std::optional<double> domain_radius) {
  if (!std::isfinite(a)) {
    throw Error(ErrorCode::kInvalidArgument, "scalar_linear: a must be finite");
  }
  if (domain_radius && !(*domain_radius > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "scalar_linear: domain radius must be positive");
  }
  SystemModel s;
  s.name = "scalar-linear";
  s.state_dimension = 1;
  s.disturbance_dimension = 1;
  s.map = [a](const Vector& x, const Vector& d) -> Vector { return a * x + d; };
  s.domain_radius = domain_radius;
  s.fixed_point = Vector::Zero(1);
  return s;
}

LqgLoop double_integrator_lqg(double dt, const Matrix& q, const Matrix& r,
                              const DisturbanceSpec& spec) {
  if (!(dt > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "double integrator needs dt > 0");
  }
  if (q.rows() != 4 || q.cols() != 4 || r.rows() != 2 || r.cols() != 2) {
    throw Error(ErrorCode::kDimensionMismatch, "double integrator needs Q 4x4 and R 2x2");
  }
  if (spec.dimension() != 4) {
    throw Error(ErrorCode::kDimensionMismatch, "double integrator noise must be 4-dimensional");
  }
  const Matrix i2 = Matrix::Identity(2, 2);
  Matrix a = Matrix::Identity(4, 4);
  a.topRightCorner(2, 2) = dt * i2;
  Matrix b(4, 2);
  b.topRows(2) = 0.5 * dt * dt * i2;
  b.bottomRows(2) = dt * i2;

  const DareSolution dare = solve_dare(a, b, q, r);
  const Matrix closed = a - b * dare.k;
  if (!(spectral_radius(closed) < 1.0)) {
    throw Error(ErrorCode::kSolverFailure, "LQR closed loop is not stable");
  }

  SystemModel s;
  s.name = "double-integrator-lqg";
  s.state_dimension = 4;
  s.disturbance_dimension = 4;
  s.map = [closed](const Vector& x, const Vector& d) -> Vector { return closed * x + d; };
  s.fixed_point = Vector::Zero(4);

  // With the DARE solution, A_cl^T P A_cl - P = -(Q + K^T R K) <= -Q.
  EisspCertificate cert = lqg_certificate(dare.p, q, spec);
  return LqgLoop{std::move(s), QuadraticLyapunov(dare.p), cert, a, b, dare.k, closed};
}

SystemModel walker_surrogate(const Matrix& contraction, double curvature, double domain_radius,
                             const Vector& height_gain) {
  if (contraction.rows() != contraction.cols() || contraction.rows() == 0) {
    throw Error(ErrorCode::kDimensionMismatch, "walker surrogate: contraction must be square");
  }
  if (height_gain.size() != contraction.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "walker surrogate: height gain dimension mismatch");
  }
  if (!(spectral_radius(contraction) < 1.0)) {
    throw Error(ErrorCode::kUnstableLinearization,
                "walker surrogate: contraction must have spectral radius < 1");
  }
  if (!(domain_radius > 0.0) || !std::isfinite(curvature)) {
    throw Error(ErrorCode::kInvalidArgument, "walker surrogate: need rho > 0 and finite curvature");
  }
  SystemModel s;
  s.name = "walker-surrogate";
  s.state_dimension = static_cast<int>(contraction.rows());
  s.disturbance_dimension = 1;
  s.map = [contraction, curvature, height_gain](const Vector& x, const Vector& d) -> Vector {
    return contraction * x + curvature * x.norm() * x + height_gain * d[0];
  };
  s.domain_radius = domain_radius;
  s.fixed_point = Vector::Zero(contraction.rows());
  return s;
}

WalkerParameters default_walker_parameters() {
  const double t = std::numbers::pi / 6.0;
  Matrix rot(2, 2);
  rot << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  Matrix diag = Matrix::Zero(2, 2);
  diag(0, 0) = 0.7;
  diag(1, 1) = 0.8;
  WalkerParameters p;
  p.contraction = rot * diag;
  p.curvature = 0.1;
  p.domain_radius = 1.0;
  p.height_gain = Vector(2);
  p.height_gain << 0.5, 1.0;
  return p;
}

}  // namespace issp
