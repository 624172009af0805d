#pragma once

#include <string>

#include <json.hpp>

#include "issp/distributions.hpp"
#include "issp/drift.hpp"
#include "issp/lyapunov.hpp"
#include "issp/martingale.hpp"
#include "issp/montecarlo.hpp"
#include "issp/optimizer.hpp"

namespace issp {

using Json = nlohmann::json;

Json to_json(const Vector& v);
Json to_json(const Matrix& m);
Json to_json(const DisturbanceSpec& spec);
Json to_json(const LpNorm& norm);
Json to_json(const EisspCertificate& cert);
Json to_json(const Counterexample& cex);
Json to_json(const ExitBound& bound);
Json to_json(const IssEnvelope& env);
Json to_json(const HittingTimeBound& bound);
Json to_json(const SuccessReport& report);
Json to_json(const HittingTimeReport& report);
Json to_json(const MartingaleStep& step);
Json to_json(const EquivalenceReport& report);
Json to_json(const RobustnessResult& result);

/// Reads {"kind": ..., "mean", "covariance" | "variance" | "std", "radius",
/// "value"}; the inverse of to_json(DisturbanceSpec). Missing means are zero.
/// Throws kValidation naming the offending path.
DisturbanceSpec disturbance_from_json(const Json& j, int expected_dim,
                                      const std::string& path = "disturbance");

}  // namespace issp
