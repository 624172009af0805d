#include "issp/serialization.hpp"

#include <cmath>

#include "json_access.hpp"

namespace issp {

namespace {

// JSON has no infinity; encode non-finite numbers as strings.
Json number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

}  // namespace

Json to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v[i]));
  return out;
}

Json to_json(const Matrix& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(number(m(i, j)));
    out.push_back(row);
  }
  return out;
}

Json to_json(const DisturbanceSpec& spec) {
  Json out{{"kind", disturbance_kind_name(spec.kind())}, {"dimension", spec.dimension()}};
  switch (spec.kind()) {
    case DisturbanceKind::kTruncatedGaussian:
      out["radius"] = spec.radius();
      [[fallthrough]];
    case DisturbanceKind::kGaussian:
      out["mean"] = to_json(spec.mean());
      out["covariance"] = to_json(spec.covariance());
      break;
    case DisturbanceKind::kUniformBall:
      out["radius"] = spec.radius();
      break;
    case DisturbanceKind::kPointMass:
      out["value"] = to_json(spec.mean());
      break;
  }
  return out;
}

Json to_json(const LpNorm& norm) {
  Json out{{"p", number(norm.p)},
           {"value", number(norm.value)},
           {"method", norm.method == NormMethod::kAnalytic ? "analytic" : "monte-carlo"},
           {"sample_count", norm.sample_count}};
  if (norm.confidence_interval) {
    out["ci"] = {number(norm.confidence_interval->first), number(norm.confidence_interval->second)};
  }
  return out;
}

Json to_json(const EisspCertificate& cert) {
  return {{"alpha", number(cert.alpha)},
          {"phi", number(cert.phi)},
          {"a", number(cert.a)},
          {"b", number(cert.b)},
          {"c", number(cert.c)},
          {"p", number(cert.p)},
          {"evidence", cert.evidence == Evidence::kAnalytic ? "analytic" : "sampled"}};
}

Json to_json(const Counterexample& cex) {
  return {{"state", to_json(cex.state)},
          {"reason", cex.reason},
          {"observed", number(cex.observed)},
          {"allowed", number(cex.allowed)}};
}

Json to_json(const ExitBound& bound) {
  Json params = Json::object();
  params["K"] = bound.horizon;
  params["M"] = bound.m ? number(*bound.m) : Json();
  params["eta"] = bound.eta ? number(*bound.eta) : Json();
  params["rho_tilde"] = bound.rho_tilde ? number(*bound.rho_tilde) : Json();
  return {{"kind", bound_kind_name(bound.kind)},
          {"lambda", number(bound.lambda)},
          {"bound", number(bound.probability_lower_bound)},
          {"parameters", params}};
}

Json to_json(const IssEnvelope& env) {
  return {{"M_tilde", number(env.m_tilde)},
          {"alpha_tilde", number(env.alpha_tilde)},
          {"gamma_value", number(env.gamma_value)}};
}

Json to_json(const HittingTimeBound& bound) {
  return {{"gamma", number(bound.gamma)},
          {"bound", number(bound.expected_hitting_time_upper)},
          {"form", hitting_form_name(bound.form)}};
}

Json to_json(const SuccessReport& report) {
  return {{"fraction", number(report.fraction)},
          {"wilson99", {number(report.wilson.lo), number(report.wilson.hi)}},
          {"successes", report.successes},
          {"trials", report.trials},
          {"threshold", report.threshold_description}};
}

Json to_json(const HittingTimeReport& report) {
  return {{"gamma", number(report.gamma)},
          {"mean", number(report.mean)},
          {"max", number(report.max)},
          {"ci99", {number(report.ci_lo), number(report.ci_hi)}},
          {"hits", report.hits},
          {"censored", report.censored}};
}

Json to_json(const MartingaleStep& step) {
  return {{"k", step.k},
          {"mean_increment", number(step.mean_increment)},
          {"standard_error", number(step.standard_error)},
          {"count", step.count},
          {"flagged", step.flagged}};
}

Json to_json(const EquivalenceReport& report) {
  return {{"agree", report.agree}, {"total", report.total}, {"w_exceeds", report.w_exceeds}};
}

Json to_json(const RobustnessResult& result) {
  return {{"feasible", result.feasible},
          {"delta_star", number(result.delta_star)},
          {"chi_star", number(result.chi_star)},
          {"k_conv", number(result.k_conv)},
          {"rho_tilde", number(result.rho_tilde)},
          {"seeds", {{"master", result.seed}}},
          {"counts",
           {{"shell_samples", result.shell_sample_count},
            {"mc_samples", result.mc_sample_count},
            {"bisection_steps", result.bisection_steps}}},
          {"tolerance", number(result.tolerance)},
          {"exterior", {{"probes", result.exterior.probes}, {"violations", result.exterior.violations}}}};
}

DisturbanceSpec disturbance_from_json(const Json& j, int expected_dim, const std::string& path) {
  using namespace json_access;
  check_object(j, path);
  const std::string type = get_string(j, "kind", path, "");
  if (j.contains("dimension") &&
      get_integer(j, "dimension", path, expected_dim, 1) != expected_dim) {
    invalid(child(path, "dimension"), "does not match the system (" + std::to_string(expected_dim) + ")");
  }
  const auto dim_or = [&](const Vector& v) {
    if (v.size() != expected_dim) {
      invalid(path, "dimension " + std::to_string(v.size()) + " does not match the system (" +
                        std::to_string(expected_dim) + ")");
    }
  };
  const auto covariance = [&]() -> Matrix {
    if (j.contains("covariance")) return as_matrix(j.at("covariance"), child(path, "covariance"));
    if (j.contains("variance")) {
      const double var = as_number(j.at("variance"), child(path, "variance"));
      return var * Matrix::Identity(expected_dim, expected_dim);
    }
    if (j.contains("std")) {
      const double s = as_number(j.at("std"), child(path, "std"));
      return s * s * Matrix::Identity(expected_dim, expected_dim);
    }
    invalid(path, "needs one of covariance, variance, std");
  };
  const auto mean = [&]() -> Vector {
    Vector m = j.contains("mean") ? as_vector(j.at("mean"), child(path, "mean"))
                                  : Vector::Zero(expected_dim);
    dim_or(m);
    return m;
  };
  if (type == "gaussian") {
    allow_keys(j, path, {"kind", "dimension", "mean", "covariance", "variance", "std"});
    return DisturbanceSpec::gaussian(mean(), covariance());
  }
  if (type == "truncated-gaussian") {
    allow_keys(j, path, {"kind", "dimension", "mean", "covariance", "variance", "std", "radius"});
    if (!j.contains("radius")) invalid(path, "truncated-gaussian needs radius");
    return DisturbanceSpec::truncated_gaussian(mean(), covariance(),
                                               as_number(j.at("radius"), child(path, "radius")));
  }
  if (type == "uniform-ball") {
    allow_keys(j, path, {"kind", "dimension", "radius"});
    if (!j.contains("radius")) invalid(path, "uniform-ball needs radius");
    return DisturbanceSpec::uniform_ball(expected_dim, as_number(j.at("radius"), child(path, "radius")));
  }
  if (type == "point-mass") {
    allow_keys(j, path, {"kind", "dimension", "value"});
    const Vector value = j.contains("value") ? as_vector(j.at("value"), child(path, "value"))
                                             : Vector::Zero(expected_dim);
    dim_or(value);
    return DisturbanceSpec::point_mass(value);
  }
  invalid(child(path, "kind"), "expected gaussian, truncated-gaussian, uniform-ball or point-mass");
}

}  // namespace issp
