#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "issp/distributions.hpp"
#include "issp/lyapunov.hpp"
#include "issp/system_model.hpp"

namespace issp {

struct RobustnessOptions {
  std::size_t shell_sample_count = 64;
  std::size_t mc_sample_count = 4096;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  double relative_tolerance = 1e-4;  // bisection stops at tol * bracket.hi
};

struct ExteriorDiagnostic {
  std::size_t probes = 0;
  std::size_t violations = 0;
};

struct RobustnessResult {
  bool feasible = false;  // false: nothing feasible at bracket.lo, delta_star = 0
  double delta_star = 0.0;
  double chi_star = 0.0;
  double k_conv = 0.0;
  double rho_tilde = 0.0;  // filled by the caller through level_set_bound
  int bisection_steps = 0;
  double tolerance = 0.0;
  std::uint64_t seed = 0;
  std::size_t shell_sample_count = 0;
  std::size_t mc_sample_count = 0;
  ExteriorDiagnostic exterior;
};

/// True when every one of the shell states ||x - x*|| = chi delta passes
///   upper 99% CI of E[V(f(x, d)) - V(x)] <= -k ||x - x*||^2
/// with d ~ unit_spec scaled by delta. A domain exit fails the state.
/// `chi_index` selects the random stream family so repeated calls at
/// different delta share common random numbers.
bool shell_feasible(const SystemModel& system, const QuadraticLyapunov& v,
                    const DisturbanceSpec& unit_spec, double k_conv, double chi, double delta,
                    std::size_t chi_index, const RobustnessOptions& options);

/// Grid entries (indices into chi_grid) feasible at delta.
std::vector<std::size_t> feasible_chis(const SystemModel& system, const QuadraticLyapunov& v,
                                       const DisturbanceSpec& unit_spec, double k_conv,
                                       const std::vector<double>& chi_grid, double delta,
                                       const RobustnessOptions& options);

/// Largest delta in the bracket for which some chi in the grid is shell
/// feasible, by bisection.
RobustnessResult max_tolerable_disturbance(const SystemModel& system, const QuadraticLyapunov& v,
                                           const DisturbanceSpec& unit_spec, double k_conv,
                                           const std::vector<double>& chi_grid,
                                           std::pair<double, double> delta_bracket,
                                           const RobustnessOptions& options = {});

/// rho_tilde = (1 - alpha)^K lambda_max(P) (chi delta)^2 + k (chi delta)^2.
double level_set_bound(double chi_star, double delta_star, const QuadraticLyapunov& v,
                       const EisspCertificate& cert, double k_conv, int horizon);

}  // namespace issp
