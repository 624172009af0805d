#include "issp/drift.hpp"

#include <cmath>
#include <string>

#include "issp/util.hpp"

namespace issp {

const char* hitting_form_name(HittingForm form) {
  switch (form) {
    case HittingForm::kClosedFormLinear: return "closed-form-linear";
    case HittingForm::kQuadrature: return "quadrature";
  }
  return "unknown";
}

HittingTimeBound hitting_time_bound_linear(const EisspCertificate& cert, double v0, double gamma) {
  cert.validate();
  if (!(v0 >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "hitting time: V(x0) must be nonnegative");
  }
  const double h_gamma = cert.alpha * gamma - cert.phi;
  if (!(gamma > 0.0) || !(h_gamma > 0.0)) {
    throw Error(ErrorCode::kDriftNotPositive, "hitting time needs gamma > phi / alpha");
  }
  HittingTimeBound out;
  out.gamma = gamma;
  out.form = HittingForm::kClosedFormLinear;
  if (v0 < gamma) return out;
  const double h_v0 = cert.alpha * v0 - cert.phi;
  out.expected_hitting_time_upper = gamma / h_gamma + std::log(h_v0 / h_gamma) / cert.alpha;
  return out;
}

HittingTimeBound hitting_time_bound_variable(const std::function<double(double)>& h, double gamma,
                                             double v0, int quadrature_steps) {
  if (!(gamma > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "hitting time: gamma must be positive");
  }
  if (quadrature_steps < 16) {
    throw Error(ErrorCode::kInvalidArgument, "hitting time: at least 16 quadrature steps");
  }
  HittingTimeBound out;
  out.gamma = gamma;
  out.form = HittingForm::kQuadrature;
  if (v0 < gamma) return out;

  const double h_gamma = h(gamma);
  if (!(h_gamma > 0.0)) {
    throw Error(ErrorCode::kDriftNotPositive, "hitting time: h(gamma) must be positive");
  }
  bool positive = true;
  const auto inverse = [&](double s) {
    const double value = h(s);
    if (!(value > 0.0)) {
      positive = false;
      return 0.0;
    }
    return 1.0 / value;
  };
  const QuadratureResult integral =
      integrate_simpson(inverse, gamma, v0, static_cast<std::size_t>(quadrature_steps));
  if (!positive) {
    throw Error(ErrorCode::kDriftNotPositive,
                "hitting time: h is not positive on [gamma, V(x0)]");
  }
  out.expected_hitting_time_upper = gamma / h_gamma + integral.value;
  return out;
}

}  // namespace issp
