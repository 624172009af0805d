#include "issp/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "issp/util.hpp"

namespace issp {

TrajectoryBatch simulate(const SystemModel& system, const LyapunovFn& v, const Vector& x0,
                         const DisturbanceSpec& spec, int horizon, const SimulationOptions& options) {
  if (options.trajectory_count < 1) {
    throw Error(ErrorCode::kInvalidArgument, "simulate needs at least one trajectory");
  }
  if (horizon < 0) {
    throw Error(ErrorCode::kInvalidArgument, "simulate needs K >= 0");
  }
  if (x0.size() != system.state_dimension) {
    throw Error(ErrorCode::kDimensionMismatch, "x0 dimension does not match the system");
  }
  if (spec.dimension() != system.disturbance_dimension) {
    throw Error(ErrorCode::kDimensionMismatch, "disturbance dimension does not match the system");
  }
  const std::size_t count = options.trajectory_count;
  TrajectoryBatch batch;
  batch.horizon = horizon;
  batch.seed = options.seed;
  batch.trajectories.resize(count);
  batch.lyapunov_traces.resize(count);
  batch.streams.resize(count);
  std::vector<char> exits(count, 0);

  parallel_for(count, options.threads, [&](std::size_t i) {
    DisturbanceSampler sampler(spec, options.seed, i);
    auto& states = batch.trajectories[i];
    auto& trace = batch.lyapunov_traces[i];
    states.reserve(static_cast<std::size_t>(horizon) + 1);
    trace.reserve(static_cast<std::size_t>(horizon) + 1);
    batch.streams[i] = i;
    states.push_back(x0);
    trace.push_back(v(x0));
    if (!system.in_domain(x0)) {
      exits[i] = 1;
      return;
    }
    Vector d(spec.dimension());
    for (int k = 0; k < horizon; ++k) {
      sampler.draw_into(d);
      std::optional<Vector> next = system.step(states.back(), d);
      if (!next || !system.in_domain(*next)) {
        exits[i] = 1;
        return;
      }
      trace.push_back(v(*next));
      states.push_back(std::move(*next));
    }
  });
  batch.domain_exit.assign(exits.begin(), exits.end());
  return batch;
}

WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  WilsonInterval w{std::max(0.0, center - half), std::min(1.0, center + half)};
  // Guard against rounding pushing the endpoints past the point estimate.
  w.lo = std::min(w.lo, p);
  w.hi = std::max(w.hi, p);
  return w;
}

namespace {

SuccessReport make_report(std::size_t successes, std::size_t trials, std::string description) {
  SuccessReport r;
  r.successes = successes;
  r.trials = trials;
  r.fraction = trials == 0 ? 0.0 : static_cast<double>(successes) / static_cast<double>(trials);
  r.wilson = wilson_interval(successes, trials);
  r.threshold_description = std::move(description);
  return r;
}

}  // namespace

SuccessReport success_fraction(const TrajectoryBatch& batch, const std::vector<double>& rho,
                               std::string description) {
  if (rho.size() != static_cast<std::size_t>(batch.horizon) + 1) {
    throw Error(ErrorCode::kDimensionMismatch, "success_fraction: rho must have K + 1 entries");
  }
  std::size_t ok = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch.domain_exit[i]) continue;
    const auto& trace = batch.lyapunov_traces[i];
    bool inside = true;
    for (std::size_t k = 0; k < trace.size(); ++k) {
      if (!(trace[k] <= rho[k])) {
        inside = false;
        break;
      }
    }
    if (inside) ++ok;
  }
  return make_report(ok, batch.size(), std::move(description));
}

SuccessReport stable_fraction(const TrajectoryBatch& batch) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!batch.domain_exit[i]) ++ok;
  }
  return make_report(ok, batch.size(), "no domain exit for k <= K");
}

HittingTimeReport empirical_hitting_time(const TrajectoryBatch& batch, double gamma) {
  if (!(gamma > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "empirical_hitting_time needs gamma > 0");
  }
  HittingTimeReport r;
  r.gamma = gamma;
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& trace = batch.lyapunov_traces[i];
    std::optional<std::size_t> hit;
    for (std::size_t k = 0; k < trace.size(); ++k) {
      if (trace[k] <= gamma) {
        hit = k;
        break;
      }
    }
    if (!hit) {
      ++r.censored;
      continue;
    }
    ++r.hits;
    const double t = static_cast<double>(*hit);
    r.max = std::max(r.max, t);
    const double diff = t - mean;
    mean += diff / static_cast<double>(r.hits);
    m2 += diff * (t - mean);
  }
  r.mean = mean;
  const double n = static_cast<double>(r.hits);
  const double se = r.hits > 1 ? std::sqrt(m2 / (n - 1.0) / n) : 0.0;
  r.ci_lo = mean - kZ99 * se;
  r.ci_hi = mean + kZ99 * se;
  return r;
}

std::vector<double> w_trace(const TrajectoryBatch& batch, std::size_t i,
                            const SupermartingaleProcess& process) {
  if (process.horizon() != batch.horizon) {
    throw Error(ErrorCode::kDimensionMismatch, "supermartingale horizon differs from the batch");
  }
  const auto& trace = batch.lyapunov_traces.at(i);
  std::vector<double> w(trace.size());
  for (std::size_t k = 0; k < trace.size(); ++k) {
    w[k] = process.w_value(static_cast<int>(k), trace[k]);
  }
  return w;
}

std::vector<MartingaleStep> empirical_martingale_check(const TrajectoryBatch& batch,
                                                       const SupermartingaleProcess& process) {
  const int horizon = batch.horizon;
  std::vector<double> mean(static_cast<std::size_t>(std::max(horizon, 0)), 0.0);
  std::vector<double> m2(mean.size(), 0.0);
  std::vector<double> scale(mean.size(), 0.0);
  std::vector<std::size_t> count(mean.size(), 0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const std::vector<double> w = w_trace(batch, i, process);
    for (std::size_t k = 0; k + 1 < w.size(); ++k) {
      const double inc = w[k + 1] - w[k];
      ++count[k];
      const double diff = inc - mean[k];
      mean[k] += diff / static_cast<double>(count[k]);
      m2[k] += diff * (inc - mean[k]);
      scale[k] = std::max(scale[k], std::max(w[k], w[k + 1]));
    }
  }
  std::vector<MartingaleStep> steps(mean.size());
  for (std::size_t k = 0; k < steps.size(); ++k) {
    MartingaleStep& s = steps[k];
    s.k = static_cast<int>(k);
    s.count = count[k];
    s.mean_increment = mean[k];
    const double n = static_cast<double>(count[k]);
    s.standard_error = count[k] > 1 ? std::sqrt(m2[k] / (n - 1.0) / n) : 0.0;
    // Rounding slack so exact equalities are not flagged.
    s.flagged = s.mean_increment > 3.0 * s.standard_error + 1e-12 * scale[k];
  }
  return steps;
}

EquivalenceReport indicator_equivalence(const TrajectoryBatch& batch,
                                        const SupermartingaleProcess& process, double lambda) {
  const std::vector<double> rho = process.rho_for_lambda(lambda);
  EquivalenceReport r;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const std::vector<double> w = w_trace(batch, i, process);
    const auto& trace = batch.lyapunov_traces[i];
    bool w_out = false;
    bool v_out = false;
    for (std::size_t k = 0; k < w.size(); ++k) {
      w_out = w_out || w[k] > lambda;
      v_out = v_out || trace[k] > rho[k];
    }
    ++r.total;
    if (w_out == v_out) ++r.agree;
    if (w_out) ++r.w_exceeds;
  }
  return r;
}

namespace {

void put_number(std::ostream& out, double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  out << buf;
}

}  // namespace

void write_batch_csv(std::ostream& out, const TrajectoryBatch& batch,
                     const SupermartingaleProcess* process) {
  const Eigen::Index dim = batch.size() == 0 ? 0 : batch.trajectories[0][0].size();
  out << "trajectory,k";
  for (Eigen::Index j = 0; j < dim; ++j) out << ",x" << j;
  out << ",V,W,domain_exit\n";
  for (std::size_t i = 0; i < batch.size(); ++i) {
    std::vector<double> w;
    if (process) w = w_trace(batch, i, *process);
    const auto& states = batch.trajectories[i];
    for (std::size_t k = 0; k < states.size(); ++k) {
      out << i << ',' << k;
      for (Eigen::Index j = 0; j < dim; ++j) {
        out << ',';
        put_number(out, states[k][j]);
      }
      out << ',';
      put_number(out, batch.lyapunov_traces[i][k]);
      out << ',';
      if (process) put_number(out, w[k]);
      out << ',' << (batch.domain_exit[i] ? 1 : 0) << '\n';
    }
  }
}

}  // namespace issp
