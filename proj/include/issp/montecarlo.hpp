#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "issp/distributions.hpp"
#include "issp/lyapunov.hpp"
#include "issp/martingale.hpp"
#include "issp/system_model.hpp"

namespace issp {

/// Simulated trajectories. Trajectory i reads disturbance stream i of `seed`.
/// A trajectory that leaves the system's domain stops at the last state inside
/// it and is flagged; its length is then < K + 1.
struct TrajectoryBatch {
  int horizon = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<Vector>> trajectories;
  std::vector<std::vector<double>> lyapunov_traces;
  std::vector<std::uint64_t> streams;
  std::vector<bool> domain_exit;

  std::size_t size() const { return trajectories.size(); }
};

struct SimulationOptions {
  std::size_t trajectory_count = 1500;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

TrajectoryBatch simulate(const SystemModel& system, const LyapunovFn& v, const Vector& x0,
                         const DisturbanceSpec& spec, int horizon, const SimulationOptions& options);

struct WilsonInterval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Wilson score interval for `successes` out of `trials` at quantile z.
WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z = 2.5758293035489004);

struct SuccessReport {
  double fraction = 0.0;
  WilsonInterval wilson;  // 99%
  std::size_t successes = 0;
  std::size_t trials = 0;
  std::string threshold_description;
};

/// Fraction of trajectories with V_k <= rho[k] for every k <= K. A domain exit
/// is a failure. rho must have K + 1 entries.
SuccessReport success_fraction(const TrajectoryBatch& batch, const std::vector<double>& rho,
                               std::string description = "V_k <= rho_k for all k");

/// Fraction of trajectories that never leave the domain.
SuccessReport stable_fraction(const TrajectoryBatch& batch);

struct HittingTimeReport {
  double gamma = 0.0;
  double mean = 0.0;  // over trajectories that entered V <= gamma
  double max = 0.0;
  double ci_lo = 0.0;  // 99% normal interval on the mean
  double ci_hi = 0.0;
  std::size_t hits = 0;
  std::size_t censored = 0;  // never entered within K (or left the domain first)
};

HittingTimeReport empirical_hitting_time(const TrajectoryBatch& batch, double gamma);

struct MartingaleStep {
  int k = 0;
  double mean_increment = 0.0;  // average of W_{k+1} - W_k
  double standard_error = 0.0;
  std::size_t count = 0;
  bool flagged = false;  // mean exceeds 3 standard errors
};

std::vector<MartingaleStep> empirical_martingale_check(const TrajectoryBatch& batch,
                                                       const SupermartingaleProcess& process);

/// W_k along trajectory i (length of its Lyapunov trace).
std::vector<double> w_trace(const TrajectoryBatch& batch, std::size_t i,
                            const SupermartingaleProcess& process);

struct EquivalenceReport {
  std::size_t agree = 0;
  std::size_t total = 0;
  std::size_t w_exceeds = 0;  // trajectories with max_k W_k > lambda
};

/// Compares {max_k W_k > lambda} with {exists k: V_k > rho_k(lambda)} per
/// trajectory. Trajectories that left the domain are compared on their
/// recorded prefix.
EquivalenceReport indicator_equivalence(const TrajectoryBatch& batch,
                                        const SupermartingaleProcess& process, double lambda);

/// CSV columns: trajectory, k, x0..x{n-1}, V, W (empty without a process),
/// domain_exit.
void write_batch_csv(std::ostream& out, const TrajectoryBatch& batch,
                     const SupermartingaleProcess* process = nullptr);

}  // namespace issp
