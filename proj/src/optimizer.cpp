#include "issp/optimizer.hpp"

#include <atomic>
#include <cmath>

#include "issp/rng.hpp"
#include "issp/util.hpp"

namespace issp {

namespace {

void check_inputs(const SystemModel& system, const QuadraticLyapunov& v,
                  const DisturbanceSpec& unit_spec, double k_conv) {
  if (!(k_conv > 0.0 && k_conv < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "k_conv must lie in (0, 1)");
  }
  if (v.dimension() != system.state_dimension) {
    throw Error(ErrorCode::kDimensionMismatch, "Lyapunov dimension does not match the system");
  }
  if (unit_spec.dimension() != system.disturbance_dimension) {
    throw Error(ErrorCode::kDimensionMismatch, "disturbance dimension does not match the system");
  }
}

// Fails any state whose drift upper bound exceeds -k ||x - x*||^2.
bool states_feasible(const SystemModel& system, const QuadraticLyapunov& v,
                     const DisturbanceSpec& spec, double k_conv, const std::vector<Vector>& states,
                     std::uint64_t seed, const RobustnessOptions& options) {
  const LyapunovFn vfn = [&v](const Vector& x) { return v.eval(x); };
  std::atomic<bool> ok{true};
  parallel_for(states.size(), options.threads, [&](std::size_t i) {
    if (!ok.load(std::memory_order_relaxed)) return;
    const Vector& x = states[i];
    if (!system.in_domain(x)) {
      ok = false;
      return;
    }
    const DriftEstimate est =
        drift_expectation(system, vfn, x, spec, options.mc_sample_count, seed, i);
    const double limit = -k_conv * (x - system.fixed_point).squaredNorm();
    if (est.domain_exits > 0 || !(est.hi <= limit)) ok = false;
  });
  return ok.load();
}

}  // namespace

bool shell_feasible(const SystemModel& system, const QuadraticLyapunov& v,
                    const DisturbanceSpec& unit_spec, double k_conv, double chi, double delta,
                    std::size_t chi_index, const RobustnessOptions& options) {
  check_inputs(system, v, unit_spec, k_conv);
  if (!(chi > 0.0) || !(delta >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "shell feasibility needs chi > 0 and delta >= 0");
  }
  const std::uint64_t family = derive_seed(options.seed, chi_index);
  RegionPlan shell;
  shell.kind = RegionKind::kShell;
  shell.inner_radius = shell.radius = chi * delta;
  shell.count = options.shell_sample_count;
  shell.seed = family;
  const std::vector<Vector> states = region_states(shell, system.fixed_point);
  return states_feasible(system, v, unit_spec.scaled(delta), k_conv, states, family, options);
}

std::vector<std::size_t> feasible_chis(const SystemModel& system, const QuadraticLyapunov& v,
                                       const DisturbanceSpec& unit_spec, double k_conv,
                                       const std::vector<double>& chi_grid, double delta,
                                       const RobustnessOptions& options) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < chi_grid.size(); ++j) {
    if (shell_feasible(system, v, unit_spec, k_conv, chi_grid[j], delta, j, options)) {
      out.push_back(j);
    }
  }
  return out;
}

RobustnessResult max_tolerable_disturbance(const SystemModel& system, const QuadraticLyapunov& v,
                                           const DisturbanceSpec& unit_spec, double k_conv,
                                           const std::vector<double>& chi_grid,
                                           std::pair<double, double> delta_bracket,
                                           const RobustnessOptions& options) {
  check_inputs(system, v, unit_spec, k_conv);
  if (chi_grid.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "chi grid must be nonempty");
  }
  for (double chi : chi_grid) {
    if (!(chi > 0.0)) throw Error(ErrorCode::kInvalidArgument, "chi grid entries must be positive");
  }
  auto [lo, hi] = delta_bracket;
  if (!(lo >= 0.0) || !(hi > lo)) {
    throw Error(ErrorCode::kInvalidArgument, "delta bracket needs 0 <= lo < hi");
  }

  RobustnessResult result;
  result.k_conv = k_conv;
  result.seed = options.seed;
  result.shell_sample_count = options.shell_sample_count;
  result.mc_sample_count = options.mc_sample_count;
  result.tolerance = options.relative_tolerance * hi;

  // Index of the first feasible chi at delta, or npos.
  const auto witness = [&](double delta) -> std::size_t {
    for (std::size_t j = 0; j < chi_grid.size(); ++j) {
      if (shell_feasible(system, v, unit_spec, k_conv, chi_grid[j], delta, j, options)) return j;
    }
    return static_cast<std::size_t>(-1);
  };
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  std::size_t best = witness(hi);
  if (best != kNone) {
    result.feasible = true;
    result.delta_star = hi;
    result.chi_star = chi_grid[best];
  } else {
    best = witness(lo);
    if (best == kNone) return result;
    result.feasible = true;
    while (hi - lo > result.tolerance) {
      const double mid = 0.5 * (lo + hi);
      const std::size_t j = witness(mid);
      ++result.bisection_steps;
      if (j != kNone) {
        lo = mid;
        best = j;
      } else {
        hi = mid;
      }
    }
    result.delta_star = lo;
    result.chi_star = chi_grid[best];
  }

  // Exterior probes beyond the shell, reported only.
  const DisturbanceSpec spec = unit_spec.scaled(result.delta_star);
  const LyapunovFn vfn = [&v](const Vector& x) { return v.eval(x); };
  const double r0 = result.chi_star * result.delta_star;
  const std::uint64_t family = derive_seed(options.seed, 0xE1E7);
  std::size_t stream = 0;
  for (double factor : {1.5, 2.0, 3.0}) {
    RegionPlan shell;
    shell.kind = RegionKind::kShell;
    shell.inner_radius = shell.radius = factor * r0;
    shell.count = options.shell_sample_count;
    shell.seed = derive_seed(family, stream);
    if (!(shell.radius > 0.0)) break;
    for (const Vector& x : region_states(shell, system.fixed_point)) {
      ++result.exterior.probes;
      const double limit = -k_conv * (x - system.fixed_point).squaredNorm();
      if (!system.in_domain(x)) {
        ++result.exterior.violations;
        continue;
      }
      const DriftEstimate est =
          drift_expectation(system, vfn, x, spec, options.mc_sample_count, family, stream++);
      if (est.domain_exits > 0 || !(est.hi <= limit)) ++result.exterior.violations;
    }
  }
  return result;
}

double level_set_bound(double chi_star, double delta_star, const QuadraticLyapunov& v,
                       const EisspCertificate& cert, double k_conv, int horizon) {
  const double r2 = (chi_star * delta_star) * (chi_star * delta_star);
  return std::pow(1.0 - cert.alpha, horizon) * v.b() * r2 + k_conv * r2;
}

}  // namespace issp
