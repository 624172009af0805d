#pragma once

#include <functional>

#include "issp/lyapunov.hpp"

namespace issp {

enum class HittingForm { kClosedFormLinear, kQuadrature };

const char* hitting_form_name(HittingForm form);

/// Upper bound on E[tau_gamma(x0)], the expected first step with V <= gamma.
struct HittingTimeBound {
  double gamma = 0.0;
  double expected_hitting_time_upper = 0.0;
  HittingForm form = HittingForm::kClosedFormLinear;
};

/// Linear drift h(v) = alpha v - phi:
///   gamma / (alpha gamma - phi) + (1/alpha) log((alpha V0 - phi) / (alpha gamma - phi)).
/// Requires gamma > phi / alpha (kDriftNotPositive otherwise). Returns 0 when
/// V0 < gamma; at V0 = gamma the log term vanishes.
HittingTimeBound hitting_time_bound_linear(const EisspCertificate& cert, double v0, double gamma);

/// gamma / h(gamma) + integral_gamma^V0 dv / h(v), composite Simpson with
/// doubling from `quadrature_steps` intervals. Throws kDriftNotPositive if h
/// is not positive on [gamma, V0].
HittingTimeBound hitting_time_bound_variable(const std::function<double(double)>& h, double gamma,
                                             double v0, int quadrature_steps = 64);

}  // namespace issp
