#include "issp/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "issp/drift.hpp"
#include "issp/systems.hpp"
#include "issp/util.hpp"
#include "json_access.hpp"

namespace issp {

namespace {

using namespace json_access;

// ---------------------------------------------------------------------------
// Formatting helpers shared by CSV output and the summary table.

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt_short(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4f", x);
  return buf;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Plants: a system together with its quadratic Lyapunov function.

enum class PlantKind { kScalar, kLqg, kWalker };

struct Plant {
  PlantKind kind = PlantKind::kScalar;
  SystemModel system;
  QuadraticLyapunov v{Matrix::Identity(1, 1)};
  double scalar_a = 0.0;
  std::optional<LqgLoop> lqg;
  WalkerParameters walker;
  Json description;
};

Plant make_plant(const Json& j, const std::string& path, const DisturbanceSpec* spec_for_lqg) {
  check_object(j, path);
  const std::string type = get_string(j, "type", path, "");
  Plant plant;
  if (type == "scalar-linear") {
    allow_keys(j, path, {"type", "a", "domain_radius", "p"});
    plant.kind = PlantKind::kScalar;
    plant.scalar_a = get_number(j, "a", path, 0.9);
    plant.system = scalar_linear(plant.scalar_a, get_optional_number(j, "domain_radius", path));
    plant.v = QuadraticLyapunov(Matrix::Constant(1, 1, get_number(j, "p", path, 1.0)));
    plant.description = {{"type", type}, {"a", plant.scalar_a}};
    if (plant.system.domain_radius) plant.description["domain_radius"] = *plant.system.domain_radius;
    return plant;
  }
  if (type == "double-integrator-lqg") {
    allow_keys(j, path, {"type", "dt", "q", "r"});
    plant.kind = PlantKind::kLqg;
    const double dt = get_number(j, "dt", path, 0.1);
    const Matrix q = j.contains("q") ? as_matrix(j.at("q"), child(path, "q")) : Matrix(Matrix::Identity(4, 4));
    const Matrix r = j.contains("r") ? as_matrix(j.at("r"), child(path, "r")) : Matrix(Matrix::Identity(2, 2));
    if (!spec_for_lqg) invalid(path, "double integrator needs a disturbance block");
    plant.lqg = double_integrator_lqg(dt, q, r, *spec_for_lqg);
    plant.system = plant.lqg->system;
    plant.v = plant.lqg->lyapunov;
    plant.description = {{"type", type}, {"dt", dt}, {"q", to_json(q)}, {"r", to_json(r)},
                         {"gain", to_json(plant.lqg->gain)}, {"p", to_json(plant.v.p())}};
    return plant;
  }
  if (type == "walker-surrogate") {
    allow_keys(j, path, {"type", "contraction", "curvature", "domain_radius", "height_gain"});
    plant.kind = PlantKind::kWalker;
    WalkerParameters w = default_walker_parameters();
    if (j.contains("contraction")) w.contraction = as_matrix(j.at("contraction"), child(path, "contraction"));
    w.curvature = get_number(j, "curvature", path, w.curvature);
    w.domain_radius = get_number(j, "domain_radius", path, w.domain_radius);
    if (j.contains("height_gain")) w.height_gain = as_vector(j.at("height_gain"), child(path, "height_gain"));
    plant.walker = w;
    plant.system = walker_surrogate(w.contraction, w.curvature, w.domain_radius, w.height_gain);
    const Matrix eye = Matrix::Identity(w.contraction.rows(), w.contraction.rows());
    plant.v = solve_discrete_lyapunov(w.contraction, eye);
    plant.description = {{"type", type},
                         {"contraction", to_json(w.contraction)},
                         {"curvature", w.curvature},
                         {"domain_radius", w.domain_radius},
                         {"height_gain", to_json(w.height_gain)},
                         {"p", to_json(plant.v.p())}};
    return plant;
  }
  invalid(child(path, "type"), "expected scalar-linear, double-integrator-lqg or walker-surrogate");
}

int disturbance_dimension_for(const Json& system, const std::string& path) {
  check_object(system, path);
  const std::string type = get_string(system, "type", path, "");
  if (type == "double-integrator-lqg") return 4;
  if (type == "walker-surrogate" || type == "scalar-linear") return 1;
  invalid(child(path, "type"), "expected scalar-linear, double-integrator-lqg or walker-surrogate");
}

// ---------------------------------------------------------------------------
// Shared experiment context.

struct Context {
  std::string experiment;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  Json config;
  Plant plant;
  std::optional<DisturbanceSpec> spec;
  int horizon = 0;
  std::size_t trajectories = 0;
  Vector x0;
};

Json default_system(const std::string& experiment) {
  if (experiment == "reproduce-lqg") return {{"type", "double-integrator-lqg"}};
  if (experiment == "reproduce-walker-surrogate") return {{"type", "walker-surrogate"}};
  return {{"type", "scalar-linear"}, {"a", 0.9}};
}

Json default_disturbance(const std::string& system_type) {
  if (system_type == "double-integrator-lqg") return {{"kind", "gaussian"}, {"variance", 0.01}};
  if (system_type == "walker-surrogate") {
    return {{"kind", "truncated-gaussian"}, {"std", 1.0}, {"radius", 3.0}};
  }
  return {{"kind", "gaussian"}, {"variance", 0.01}};
}

Vector default_x0(const Plant& plant) {
  switch (plant.kind) {
    case PlantKind::kScalar: return Vector::Constant(1, 1.0);
    case PlantKind::kLqg: {
      Vector x(4);
      x << 2.0, 2.0, 0.0, 0.0;
      return x;
    }
    case PlantKind::kWalker: return plant.system.fixed_point;
  }
  return plant.system.fixed_point;
}

Context make_context(const Json& config, const RunOptions& options, int default_horizon,
                     std::size_t default_trajectories) {
  Context ctx;
  ctx.config = config;
  ctx.experiment = config.at("experiment").get<std::string>();
  ctx.seed = options.seed ? *options.seed
                          : static_cast<std::uint64_t>(get_integer(config, "seed", "config", 1, 0));
  ctx.threads = options.threads;
  ctx.horizon = static_cast<int>(get_integer(config, "horizon", "config", default_horizon, 0));
  ctx.trajectories = static_cast<std::size_t>(
      get_integer(config, "trajectories", "config", static_cast<long long>(default_trajectories), 1));

  Json system = config.contains("system") ? config.at("system") : default_system(ctx.experiment);
  const int ddim = disturbance_dimension_for(system, "config.system");
  const Json dist = config.contains("disturbance")
                        ? config.at("disturbance")
                        : default_disturbance(get_string(system, "type", "config.system", ""));
  ctx.spec = disturbance_from_json(dist, ddim, "config.disturbance");
  ctx.plant = make_plant(system, "config.system", &*ctx.spec);
  ctx.x0 = config.contains("x0") ? as_vector(config.at("x0"), "config.x0") : default_x0(ctx.plant);
  if (ctx.x0.size() != ctx.plant.system.state_dimension) {
    invalid("config.x0", "dimension does not match the system");
  }
  return ctx;
}

// Certificate for the context: explicit block, else the system's own recipe.
EisspCertificate resolve_certificate(const Context& ctx, Json* provenance) {
  const Json& config = ctx.config;
  const QuadraticLyapunov& v = ctx.plant.v;
  if (config.contains("certificate")) {
    const Json& c = config.at("certificate");
    allow_keys(c, "config.certificate", {"alpha", "phi"});
    EisspCertificate cert;
    cert.alpha = get_number(c, "alpha", "config.certificate", 0.0);
    cert.phi = get_number(c, "phi", "config.certificate", 0.0);
    cert.a = v.a();
    cert.b = v.b();
    cert.c = 2.0;
    cert.p = 2.0;
    cert.validate();
    *provenance = "explicit";
    return cert;
  }
  switch (ctx.plant.kind) {
    case PlantKind::kScalar: {
      const double a = ctx.plant.scalar_a;
      const double alpha = 1.0 - a * a;
      if (!(alpha > 0.0 && alpha < 1.0)) {
        invalid("config.system.a", "default certificate needs 0 < |a| < 1");
      }
      *provenance = "additive-lift";
      return additive_lift(v, alpha, *ctx.spec);
    }
    case PlantKind::kLqg:
      *provenance = "lqg";
      return ctx.plant.lqg->certificate;
    case PlantKind::kWalker: {
      const Json block = config.contains("certify") ? config.at("certify") : Json::object();
      allow_keys(block, "config.certify", {"alpha", "radius", "points", "samples"});
      RegionPlan region;
      region.kind = RegionKind::kBall;
      region.radius = get_number(block, "radius", "config.certify", 0.3);
      region.count = static_cast<std::size_t>(get_integer(block, "points", "config.certify", 64, 1));
      region.seed = derive_seed(ctx.seed, 0xCE27);
      CertifyOptions opts;
      opts.sample_count = static_cast<std::size_t>(get_integer(block, "samples", "config.certify", 4096, 2));
      opts.seed = derive_seed(ctx.seed, 0xCE28);
      opts.threads = ctx.threads;
      const double alpha = get_number(block, "alpha", "config.certify", 0.1 / v.b());
      const CertifyResult result = certify_eissp(ctx.plant.system, v, *ctx.spec, region, alpha, opts);
      if (const auto* cex = std::get_if<Counterexample>(&result)) {
        throw Error(ErrorCode::kDegenerateCertificate,
                    "certification failed: " + cex->reason + " (use an explicit certificate block)");
      }
      *provenance = "certify";
      return std::get<EisspCertificate>(result);
    }
  }
  throw Error(ErrorCode::kValidation, "no certificate recipe");
}

SimulationOptions sim_options(const Context& ctx, std::uint64_t tag) {
  SimulationOptions o;
  o.trajectory_count = ctx.trajectories;
  o.seed = derive_seed(ctx.seed, tag);
  o.threads = ctx.threads;
  return o;
}

LyapunovFn lyapunov_fn(const QuadraticLyapunov& v) {
  return [&v](const Vector& x) { return v.eval(x); };
}

Json base_report(const Context& ctx) {
  return {{"schema", kSchemaVersion},
          {"experiment", ctx.experiment},
          {"seed", ctx.seed},
          {"horizon", ctx.horizon},
          {"trajectories", ctx.trajectories},
          {"system", ctx.plant.description},
          {"disturbance", to_json(*ctx.spec)},
          {"x0", to_json(ctx.x0)}};
}

// Compares an analytic probability lower bound with an empirical fraction.
struct Check {
  std::string label;
  double bound;
  SuccessReport empirical;
  bool sound() const { return bound <= empirical.wilson.hi; }
};

Json check_json(const Check& c) {
  return {{"label", c.label},
          {"bound", c.bound},
          {"empirical", to_json(c.empirical)},
          {"sound", c.sound()}};
}

std::string table(const std::vector<Check>& checks) {
  std::ostringstream out;
  std::size_t width = 5;
  for (const Check& c : checks) width = std::max(width, c.label.size());
  char line[256];
  std::snprintf(line, sizeof line, "%-*s  %8s  %8s  %19s  %s\n", static_cast<int>(width), "case",
                "bound", "fraction", "wilson99", "status");
  out << line;
  for (const Check& c : checks) {
    std::snprintf(line, sizeof line, "%-*s  %8.4f  %8.4f  [%8.4f, %8.4f]  %s\n",
                  static_cast<int>(width), c.label.c_str(), c.bound, c.empirical.fraction,
                  c.empirical.wilson.lo, c.empirical.wilson.hi, c.sound() ? "ok" : "VIOLATED");
    out << line;
  }
  return out.str();
}

double state_norm(const Plant& plant, const Vector& x) { return (x - plant.system.fixed_point).norm(); }

// Fraction of trajectories with ||x_k - x*|| <= envelope(k) for all k.
SuccessReport envelope_fraction(const TrajectoryBatch& batch, const Plant& plant,
                                const IssEnvelope& env, double x0_norm) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch.domain_exit[i]) continue;
    bool inside = true;
    const auto& states = batch.trajectories[i];
    for (std::size_t k = 0; k < states.size() && inside; ++k) {
      inside = state_norm(plant, states[k]) <= env.at(static_cast<int>(k), x0_norm);
    }
    if (inside) ++ok;
  }
  SuccessReport r;
  r.successes = ok;
  r.trials = batch.size();
  r.fraction = static_cast<double>(ok) / static_cast<double>(batch.size());
  r.wilson = wilson_interval(ok, batch.size());
  r.threshold_description = "||x_k|| <= M~ a~^k ||x0|| + gamma for all k";
  return r;
}

// ---------------------------------------------------------------------------
// Experiments.

ExperimentOutcome run_simulate(const Json& config, const RunOptions& options) {
  allow_keys(config, "config", {"experiment", "seed", "output", "horizon", "trajectories", "system",
                                "disturbance", "x0", "certificate", "certify"});
  const Context ctx = make_context(config, options, 50, 200);
  Json provenance;
  const EisspCertificate cert = resolve_certificate(ctx, &provenance);
  const SupermartingaleProcess process(cert, ctx.horizon);
  const TrajectoryBatch batch =
      simulate(ctx.plant.system, lyapunov_fn(ctx.plant.v), ctx.x0, *ctx.spec, ctx.horizon, sim_options(ctx, 1));

  ExperimentOutcome out;
  out.report = base_report(ctx);
  out.report["certificate"] = to_json(cert);
  out.report["certificate_source"] = provenance;
  const SuccessReport stable = stable_fraction(batch);
  out.report["stable"] = to_json(stable);
  double final_mean = 0.0;
  double final_max = 0.0;
  std::size_t finished = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch.domain_exit[i]) continue;
    const double vk = batch.lyapunov_traces[i].back();
    final_mean += vk;
    final_max = std::max(final_max, vk);
    ++finished;
  }
  out.report["final_v"] = {{"mean", finished ? final_mean / static_cast<double>(finished) : 0.0},
                           {"max", final_max},
                           {"count", finished}};
  std::vector<MartingaleStep> steps = empirical_martingale_check(batch, process);
  Json mart = Json::array();
  std::size_t flagged = 0;
  for (const auto& s : steps) {
    mart.push_back(to_json(s));
    flagged += s.flagged ? 1 : 0;
  }
  out.report["martingale_check"] = {{"steps", mart}, {"flagged", flagged}};
  out.report["outputs"] = {"report.json", "trajectories.csv"};

  std::ostringstream csv;
  write_batch_csv(csv, batch, &process);
  out.files.push_back({"report.json", dump(out.report)});
  out.files.push_back({"trajectories.csv", csv.str()});
  out.summary = "simulated " + std::to_string(batch.size()) + " trajectories, K = " +
                std::to_string(ctx.horizon) + ", stable fraction " + fmt_short(stable.fraction) +
                ", martingale steps flagged: " + std::to_string(flagged) + "\n";
  return out;
}

RegionPlan parse_region(const Json& config, const Plant& plant, std::uint64_t seed) {
  const Json j = config.contains("region") ? config.at("region") : Json::object();
  allow_keys(j, "config.region", {"kind", "radius", "inner_radius", "count", "points_per_axis", "seed"});
  RegionPlan r;
  const std::string kind = get_string(j, "kind", "config.region", "ball");
  if (kind == "ball") r.kind = RegionKind::kBall;
  else if (kind == "shell") r.kind = RegionKind::kShell;
  else if (kind == "grid") r.kind = RegionKind::kGrid;
  else invalid("config.region.kind", "expected ball, shell or grid");
  const double default_radius = plant.system.domain_radius ? 0.5 * *plant.system.domain_radius : 1.0;
  r.radius = get_number(j, "radius", "config.region", default_radius);
  r.inner_radius = get_number(j, "inner_radius", "config.region", 0.0);
  r.count = static_cast<std::size_t>(get_integer(j, "count", "config.region", 64, 1));
  r.points_per_axis = static_cast<int>(get_integer(j, "points_per_axis", "config.region", 5, 1));
  r.seed = static_cast<std::uint64_t>(
      get_integer(j, "seed", "config.region", static_cast<long long>(seed & 0x7FFFFFFFFFFFFFFFULL), 0));
  return r;
}

ExperimentOutcome run_certify(const Json& config, const RunOptions& options) {
  allow_keys(config, "config", {"experiment", "seed", "output", "system", "disturbance", "alpha",
                                "samples", "region"});
  const Context ctx = make_context(config, options, 0, 1);
  const Plant& plant = ctx.plant;
  const RegionPlan region = parse_region(config, plant, derive_seed(ctx.seed, 0x2E61));
  CertifyOptions opts;
  opts.sample_count = static_cast<std::size_t>(get_integer(config, "samples", "config", 4096, 2));
  opts.seed = derive_seed(ctx.seed, 0xCE28);
  opts.threads = ctx.threads;
  const double alpha = get_number(config, "alpha", "config", 0.1 / plant.v.b());
  const CertifyResult result = certify_eissp(plant.system, plant.v, *ctx.spec, region, alpha, opts);

  ExperimentOutcome out;
  out.report = {{"schema", kSchemaVersion},
                {"experiment", ctx.experiment},
                {"seed", ctx.seed},
                {"system", plant.description},
                {"disturbance", to_json(*ctx.spec)},
                {"target_alpha", alpha},
                {"samples_per_state", opts.sample_count},
                {"region",
                 {{"kind", region.kind == RegionKind::kBall ? "ball"
                           : region.kind == RegionKind::kShell ? "shell" : "grid"},
                  {"radius", region.radius},
                  {"inner_radius", region.inner_radius},
                  {"count", region.count},
                  {"points_per_axis", region.points_per_axis},
                  {"seed", region.seed}}}};
  if (const auto* cert = std::get_if<EisspCertificate>(&result)) {
    out.report["result"] = "certificate";
    out.report["certificate"] = to_json(*cert);
    out.summary = "certified: alpha = " + fmt(cert->alpha) + ", phi = " + fmt(cert->phi) + "\n";
  } else {
    const auto& cex = std::get<Counterexample>(result);
    out.report["result"] = "counterexample";
    out.report["counterexample"] = to_json(cex);
    out.summary = "counterexample: " + cex.reason + "\n";
  }
  out.report["outputs"] = {"report.json"};
  out.files.push_back({"report.json", dump(out.report)});
  return out;
}

ExperimentOutcome run_bounds(const Json& config, const RunOptions& options) {
  allow_keys(config, "config", {"experiment", "seed", "output", "horizon", "trajectories", "system",
                                "disturbance", "x0", "certificate", "certify", "M", "eta",
                                "rho_tilde"});
  const Context ctx = make_context(config, options, 20, 1000);
  Json provenance;
  const EisspCertificate cert = resolve_certificate(ctx, &provenance);
  const SupermartingaleProcess process(cert, ctx.horizon);
  const Plant& plant = ctx.plant;
  const double v0 = plant.v.eval(ctx.x0);
  const double x0_norm = state_norm(plant, ctx.x0);
  const std::vector<double> ms = get_list(config, "M", "config", {5.0, 20.0, 100.0});
  const std::vector<double> etas = get_list(config, "eta", "config", {0.0});
  const std::vector<double> levels = get_list(config, "rho_tilde", "config", {});

  const TrajectoryBatch batch =
      simulate(plant.system, lyapunov_fn(plant.v), ctx.x0, *ctx.spec, ctx.horizon, sim_options(ctx, 2));

  ExperimentOutcome out;
  out.report = base_report(ctx);
  out.report["certificate"] = to_json(cert);
  out.report["certificate_source"] = provenance;
  out.report["v0"] = v0;
  std::vector<Check> checks;
  Json rows = Json::array();
  for (double m : ms) {
    for (double eta : etas) {
      const ExitBound bound = exit_probability_bound(cert, x0_norm, v0, m, eta, ctx.horizon);
      const std::vector<double> rho = process.rho_for_lambda(bound.lambda);
      Check c{"M=" + fmt_short(m) + " eta=" + fmt_short(eta), bound.probability_lower_bound,
              success_fraction(batch, rho, "W_k <= lambda for all k")};
      const IssEnvelope env = iss_envelope(cert, eta, m);
      Check e{c.label + " envelope", bound.probability_lower_bound,
              envelope_fraction(batch, plant, env, x0_norm)};
      rows.push_back({{"exit_bound", to_json(bound)},
                      {"level_check", check_json(c)},
                      {"envelope", to_json(env)},
                      {"envelope_check", check_json(e)}});
      checks.push_back(c);
      checks.push_back(e);
    }
  }
  out.report["exit_bounds"] = rows;
  Json kushner = Json::array();
  for (double level : levels) {
    const ExitBound bound = kushner_bound(cert, v0, level, ctx.horizon);
    const std::vector<double> rho(static_cast<std::size_t>(ctx.horizon) + 1, level);
    Check c{"rho~=" + fmt_short(level), bound.probability_lower_bound,
            success_fraction(batch, rho, "V_k <= rho_tilde for all k")};
    kushner.push_back({{"bound", to_json(bound)}, {"check", check_json(c)}});
    checks.push_back(c);
  }
  out.report["kushner"] = kushner;
  out.sound = std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.sound(); });
  out.report["sound"] = out.sound;
  out.report["outputs"] = {"report.json"};
  out.files.push_back({"report.json", dump(out.report)});
  out.summary = table(checks);
  return out;
}

ExperimentOutcome run_hitting_time(const Json& config, const RunOptions& options) {
  allow_keys(config, "config", {"experiment", "seed", "output", "horizon", "trajectories", "system",
                                "disturbance", "x0", "certificate", "certify", "gamma",
                                "quadrature_steps"});
  const Context ctx = make_context(config, options, 200, 2000);
  Json provenance;
  const EisspCertificate cert = resolve_certificate(ctx, &provenance);
  const double v0 = ctx.plant.v.eval(ctx.x0);
  const double gamma = get_number(config, "gamma", "config", 2.0 * cert.phi / cert.alpha);
  const int steps = static_cast<int>(get_integer(config, "quadrature_steps", "config", 64, 16));
  const HittingTimeBound linear = hitting_time_bound_linear(cert, v0, gamma);
  const HittingTimeBound quad = hitting_time_bound_variable(
      [&cert](double v) { return cert.alpha * v - cert.phi; }, gamma, v0, steps);
  const TrajectoryBatch batch = simulate(ctx.plant.system, lyapunov_fn(ctx.plant.v), ctx.x0, *ctx.spec,
                                         ctx.horizon, sim_options(ctx, 3));
  const HittingTimeReport emp = empirical_hitting_time(batch, gamma);

  ExperimentOutcome out;
  out.report = base_report(ctx);
  out.report["certificate"] = to_json(cert);
  out.report["certificate_source"] = provenance;
  out.report["v0"] = v0;
  out.report["bounds"] = {to_json(linear), to_json(quad)};
  out.report["empirical"] = to_json(emp);
  out.sound = emp.ci_lo <= linear.expected_hitting_time_upper;
  out.report["sound"] = out.sound;
  out.report["outputs"] = {"report.json"};
  out.files.push_back({"report.json", dump(out.report)});
  out.summary = "gamma " + fmt_short(gamma) + ": bound " + fmt_short(linear.expected_hitting_time_upper) +
                " (quadrature " + fmt_short(quad.expected_hitting_time_upper) + "), empirical mean " +
                fmt_short(emp.mean) + " max " + fmt_short(emp.max) + ", censored " +
                std::to_string(emp.censored) + (out.sound ? "" : "  VIOLATED") + "\n";
  return out;
}

ExperimentOutcome run_sweep(const Json& config, const RunOptions& options) {
  allow_keys(config, "config", {"experiment", "seed", "output", "horizon", "trajectories", "system",
                                "disturbance", "x0", "certificate", "certify", "M_min", "M_max",
                                "M_points", "eta"});
  const Context ctx = make_context(config, options, 20, 1000);
  Json provenance;
  const EisspCertificate cert = resolve_certificate(ctx, &provenance);
  const SupermartingaleProcess process(cert, ctx.horizon);
  const double v0 = ctx.plant.v.eval(ctx.x0);
  const double x0_norm = state_norm(ctx.plant, ctx.x0);
  const double m_min = get_number(config, "M_min", "config", 1.5);
  const double m_max = get_number(config, "M_max", "config", 1000.0);
  const int points = static_cast<int>(get_integer(config, "M_points", "config", 12, 1));
  if (!(m_min > 0.0) || !(m_max >= m_min)) invalid("config.M_min", "need 0 < M_min <= M_max");
  const std::vector<double> etas = get_list(config, "eta", "config", {0.0, 0.5, 1.0, 2.0, 5.0});
  const TrajectoryBatch batch = simulate(ctx.plant.system, lyapunov_fn(ctx.plant.v), ctx.x0, *ctx.spec,
                                         ctx.horizon, sim_options(ctx, 4));

  std::ostringstream csv;
  csv << "M,eta,lambda,bound,fraction,wilson_lo,wilson_hi\n";
  std::vector<Check> checks;
  Json best;
  double best_bound = -1.0;
  for (int i = 0; i < points; ++i) {
    const double t = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
    const double m = m_min * std::pow(m_max / m_min, t);
    for (double eta : etas) {
      const ExitBound bound = exit_probability_bound(cert, x0_norm, v0, m, eta, ctx.horizon);
      Check c{"M=" + fmt_short(m) + " eta=" + fmt_short(eta), bound.probability_lower_bound,
              success_fraction(batch, process.rho_for_lambda(bound.lambda), "W_k <= lambda for all k")};
      csv << fmt(m) << ',' << fmt(eta) << ',' << fmt(bound.lambda) << ',' << fmt(c.bound) << ','
          << fmt(c.empirical.fraction) << ',' << fmt(c.empirical.wilson.lo) << ','
          << fmt(c.empirical.wilson.hi) << '\n';
      if (c.bound > best_bound) {
        best_bound = c.bound;
        best = {{"M", m}, {"eta", eta}, {"bound", to_json(bound)}};
      }
      checks.push_back(std::move(c));
    }
  }
  ExperimentOutcome out;
  out.report = base_report(ctx);
  out.report["certificate"] = to_json(cert);
  out.report["certificate_source"] = provenance;
  out.report["best"] = best;
  out.sound = std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.sound(); });
  out.report["sound"] = out.sound;
  out.report["outputs"] = {"report.json", "sweep.csv"};
  out.files.push_back({"report.json", dump(out.report)});
  out.files.push_back({"sweep.csv", csv.str()});
  out.summary = table(checks);
  return out;
}

ExperimentOutcome run_reproduce_lqg(const Json& config, const RunOptions& options) {
  allow_keys(config, "config", {"experiment", "seed", "output", "horizon", "trajectories", "system",
                                "disturbance", "x0", "M", "write_trajectories"});
  const Context ctx = make_context(config, options, 100, 1500);
  if (ctx.plant.kind != PlantKind::kLqg) invalid("config.system.type", "reproduce-lqg needs double-integrator-lqg");
  const EisspCertificate cert = ctx.plant.lqg->certificate;
  const SupermartingaleProcess process(cert, ctx.horizon);
  const QuadraticLyapunov& v = ctx.plant.v;
  const double v0 = v.eval(ctx.x0);
  const double x0_norm = state_norm(ctx.plant, ctx.x0);
  if (!(x0_norm > 0.0)) invalid("config.x0", "reproduce-lqg needs x0 away from the origin");
  const std::vector<double> ms = get_list(config, "M", "config", {5.0, 20.0, 100.0});
  const TrajectoryBatch batch = simulate(ctx.plant.system, lyapunov_fn(v), ctx.x0, *ctx.spec,
                                         ctx.horizon, sim_options(ctx, 5));

  ExperimentOutcome out;
  out.report = base_report(ctx);
  out.report["certificate"] = to_json(cert);
  out.report["v0"] = v0;
  std::vector<Check> checks;
  Json rows = Json::array();
  std::vector<std::vector<double>> rhos;
  bool equivalent = true;
  for (double m : ms) {
    if (!(m > 0.0)) invalid("config.M", "entries must be positive");
    const double lambda = lqg_lambda(cert, m, v0, ctx.horizon);
    const std::vector<double> rho = rho_trajectory(cert, m, v0, ctx.horizon);
    // The ISS-envelope form with eta = 0 reaches the same lambda at
    // M' = (lambda - phi) / ||x0||^c.
    const double m_equiv = (lambda - cert.phi) / std::pow(x0_norm, cert.c);
    const ExitBound bound = exit_probability_bound(cert, x0_norm, v0, m_equiv, 0.0, ctx.horizon);
    const ExitBound ville = ville_bound(process, v0, lambda);
    Check c{"M=" + fmt_short(m), bound.probability_lower_bound,
            success_fraction(batch, rho, "V_k <= rho_k for all k")};
    const EquivalenceReport eq = indicator_equivalence(batch, process, lambda);
    equivalent = equivalent && eq.agree == eq.total;
    rows.push_back({{"M", m},
                    {"lambda", lambda},
                    {"M_envelope", m_equiv},
                    {"exit_bound", to_json(bound)},
                    {"ville_bound", to_json(ville)},
                    {"check", check_json(c)},
                    {"strictly_below_fraction", c.bound < c.empirical.fraction},
                    {"equivalence", to_json(eq)}});
    checks.push_back(c);
    rhos.push_back(rho);
  }
  out.report["rows"] = rows;
  out.report["trajectory_equivalence"] = equivalent;
  Json mart = Json::array();
  std::size_t flagged = 0;
  for (const auto& s : empirical_martingale_check(batch, process)) {
    mart.push_back(to_json(s));
    flagged += s.flagged ? 1 : 0;
  }
  out.report["martingale_check"] = {{"steps", mart}, {"flagged", flagged}};

  // Plot data: rho_k per M and quantiles of V_k across trajectories.
  std::ostringstream levels;
  levels << "k";
  for (double m : ms) levels << ",rho_M" << fmt(m);
  levels << ",v_mean,v_q50,v_q90,v_q99,v_max\n";
  std::vector<double> column(batch.size());
  for (int k = 0; k <= ctx.horizon; ++k) {
    levels << k;
    for (const auto& rho : rhos) levels << ',' << fmt(rho[static_cast<std::size_t>(k)]);
    double mean = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      column[i] = batch.lyapunov_traces[i][static_cast<std::size_t>(k)];
      mean += column[i];
    }
    std::sort(column.begin(), column.end());
    const auto q = [&](double p) {
      const std::size_t idx = static_cast<std::size_t>(std::ceil(p * static_cast<double>(column.size()))) - 1;
      return column[std::min(idx, column.size() - 1)];
    };
    levels << ',' << fmt(mean / static_cast<double>(batch.size())) << ',' << fmt(q(0.5)) << ','
           << fmt(q(0.9)) << ',' << fmt(q(0.99)) << ',' << fmt(column.back()) << '\n';
  }
  std::ostringstream summary_csv;
  summary_csv << "M,lambda,bound,fraction,wilson_lo,wilson_hi\n";
  for (std::size_t i = 0; i < checks.size(); ++i) {
    summary_csv << fmt(ms[i]) << ',' << fmt(rows[i]["lambda"].get<double>()) << ',' << fmt(checks[i].bound)
                << ',' << fmt(checks[i].empirical.fraction) << ',' << fmt(checks[i].empirical.wilson.lo)
                << ',' << fmt(checks[i].empirical.wilson.hi) << '\n';
  }
  out.sound = std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.sound(); });
  out.report["sound"] = out.sound;
  Json outputs = {"report.json", "lqg_summary.csv", "lqg_levels.csv"};
  const bool write_traj = get_bool(config, "write_trajectories", "config", false);
  if (write_traj) outputs.push_back("trajectories.csv");
  out.report["outputs"] = outputs;
  out.files.push_back({"report.json", dump(out.report)});
  out.files.push_back({"lqg_summary.csv", summary_csv.str()});
  out.files.push_back({"lqg_levels.csv", levels.str()});
  if (write_traj) {
    std::ostringstream csv;
    write_batch_csv(csv, batch, &process);
    out.files.push_back({"trajectories.csv", csv.str()});
  }
  out.summary = table(checks) + "trajectory-wise equivalence: " + (equivalent ? "100%" : "BROKEN") +
                ", martingale steps flagged: " + std::to_string(flagged) + "\n";
  return out;
}

ExperimentOutcome run_reproduce_walker(const Json& config, const RunOptions& options) {
  allow_keys(config, "config", {"experiment", "seed", "output", "horizon", "trajectories", "system",
                                "disturbance", "x0", "k_conv", "chi_grid", "delta_bracket",
                                "shell_samples", "mc_samples", "delta_fractions", "certify_points",
                                "certify_samples"});
  const Context ctx = make_context(config, options, 10, 2000);
  if (ctx.plant.kind != PlantKind::kWalker) {
    invalid("config.system.type", "reproduce-walker-surrogate needs walker-surrogate");
  }
  const Plant& plant = ctx.plant;
  const QuadraticLyapunov& v = plant.v;
  const DisturbanceSpec& unit = *ctx.spec;
  const double k_conv = get_number(config, "k_conv", "config", 0.1);
  const std::vector<double> chi_grid = get_list(config, "chi_grid", "config", {1.5, 2.0, 3.0, 4.0, 6.0});
  const std::vector<double> bracket = get_list(config, "delta_bracket", "config", {0.001, 0.5});
  if (bracket.size() != 2) invalid("config.delta_bracket", "expected [lo, hi]");
  const std::vector<double> fractions =
      get_list(config, "delta_fractions", "config", {0.2, 0.4, 0.6, 0.8, 1.0});
  RobustnessOptions ropts;
  ropts.shell_sample_count = static_cast<std::size_t>(get_integer(config, "shell_samples", "config", 64, 1));
  ropts.mc_sample_count = static_cast<std::size_t>(get_integer(config, "mc_samples", "config", 4096, 2));
  ropts.seed = derive_seed(ctx.seed, 0x0B71);
  ropts.threads = ctx.threads;
  const std::size_t certify_points =
      static_cast<std::size_t>(get_integer(config, "certify_points", "config", 64, 1));
  const std::size_t certify_samples =
      static_cast<std::size_t>(get_integer(config, "certify_samples", "config", 4096, 2));

  RobustnessResult robust = max_tolerable_disturbance(plant.system, v, unit, k_conv, chi_grid,
                                                      {bracket[0], bracket[1]}, ropts);
  const double alpha = k_conv / v.b();
  const double v0 = v.eval(ctx.x0);

  ExperimentOutcome out;
  out.report = base_report(ctx);
  out.report["unit_disturbance"] = out.report["disturbance"];
  out.report.erase("disturbance");
  out.report["k_conv"] = k_conv;
  out.report["target_alpha"] = alpha;
  out.report["chi_grid"] = chi_grid;
  std::vector<Check> checks;
  Json rows = Json::array();
  std::ostringstream csv;
  csv << "delta,chi,alpha,phi,rho_tilde,kushner_case,bound,stable_fraction,stable_hi,inside_fraction,inside_hi\n";
  if (robust.feasible && robust.delta_star > 0.0) {
    for (std::size_t f = 0; f < fractions.size(); ++f) {
      const double delta = fractions[f] * robust.delta_star;
      const DisturbanceSpec spec = unit.scaled(delta);
      const std::vector<std::size_t> feasible =
          feasible_chis(plant.system, v, unit, k_conv, chi_grid, delta, ropts);
      Json row = {{"delta", delta}, {"fraction_of_delta_star", fractions[f]}};
      bool certified = false;
      // Largest feasible chi first; fall back to smaller ones.
      for (auto it = feasible.rbegin(); it != feasible.rend() && !certified; ++it) {
        const double chi = chi_grid[*it];
        const double r = chi * delta;
        RegionPlan region;
        region.kind = RegionKind::kBall;
        region.radius = std::min(plant.walker.domain_radius, std::sqrt((v.b() + k_conv) * r * r / v.a()));
        region.count = certify_points;
        region.seed = derive_seed(ctx.seed, 0x2E62 + f);
        CertifyOptions copts;
        copts.sample_count = certify_samples;
        copts.seed = derive_seed(ctx.seed, 0xCE29 + f);
        copts.threads = ctx.threads;
        const CertifyResult result = certify_eissp(plant.system, v, spec, region, alpha, copts);
        const auto* cert = std::get_if<EisspCertificate>(&result);
        if (!cert) continue;
        certified = true;
        const double rho_tilde = level_set_bound(chi, delta, v, *cert, k_conv, ctx.horizon);
        const ExitBound bound = kushner_bound(*cert, v0, rho_tilde, ctx.horizon);
        SimulationOptions sopts = sim_options(ctx, 0x51A0 + f);
        const TrajectoryBatch batch =
            simulate(plant.system, lyapunov_fn(v), ctx.x0, spec, ctx.horizon, sopts);
        const std::vector<double> level(static_cast<std::size_t>(ctx.horizon) + 1, rho_tilde);
        Check stable{"delta=" + fmt_short(delta) + " stable", bound.probability_lower_bound,
                     stable_fraction(batch)};
        Check inside{"delta=" + fmt_short(delta) + " inside", bound.probability_lower_bound,
                     success_fraction(batch, level, "V_k <= rho_tilde for all k")};
        row["chi"] = chi;
        row["certificate"] = to_json(*cert);
        row["certify_radius"] = region.radius;
        row["rho_tilde"] = rho_tilde;
        row["kushner"] = to_json(bound);
        row["stable"] = check_json(stable);
        row["inside"] = check_json(inside);
        csv << fmt(delta) << ',' << fmt(chi) << ',' << fmt(cert->alpha) << ',' << fmt(cert->phi) << ','
            << fmt(rho_tilde) << ',' << bound_kind_name(bound.kind) << ',' << fmt(bound.probability_lower_bound)
            << ',' << fmt(stable.empirical.fraction) << ',' << fmt(stable.empirical.wilson.hi) << ','
            << fmt(inside.empirical.fraction) << ',' << fmt(inside.empirical.wilson.hi) << '\n';
        checks.push_back(stable);
        checks.push_back(inside);
      }
      row["certified"] = certified;
      rows.push_back(row);
    }
    if (robust.chi_star > 0.0) {
      // rho_tilde at the optimum, with the alpha targeted by the sweep.
      EisspCertificate nominal;
      nominal.alpha = alpha;
      nominal.a = v.a();
      nominal.b = v.b();
      robust.rho_tilde = level_set_bound(robust.chi_star, robust.delta_star, v, nominal, k_conv, ctx.horizon);
    }
  }
  out.report["robustness"] = to_json(robust);
  out.report["sweep"] = rows;
  out.sound = std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.sound(); });
  out.report["sound"] = out.sound;
  out.report["outputs"] = {"report.json", "walker_sweep.csv"};
  out.files.push_back({"report.json", dump(out.report)});
  out.files.push_back({"walker_sweep.csv", csv.str()});
  out.summary = "delta* = " + fmt_short(robust.delta_star) + " (chi* = " + fmt_short(robust.chi_star) +
                ", rho~ = " + fmt_short(robust.rho_tilde) + ")\n" + table(checks);
  return out;
}

using Runner = std::function<ExperimentOutcome(const Json&, const RunOptions&)>;

const std::map<std::string, Runner>& runners() {
  static const std::map<std::string, Runner> table = {
      {"simulate", run_simulate},
      {"certify", run_certify},
      {"bounds", run_bounds},
      {"hitting-time", run_hitting_time},
      {"sweep-M-eta", run_sweep},
      {"reproduce-lqg", run_reproduce_lqg},
      {"reproduce-walker-surrogate", run_reproduce_walker},
  };
  return table;
}

}  // namespace

Json parse_config(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // e.byte is the 1-based offset of the offending character.
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    std::string what = e.what();
    const std::size_t colon = what.find("syntax error");
    if (colon != std::string::npos) what = what.substr(colon);
    throw Error(ErrorCode::kValidation,
                source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what);
  }
}

ExperimentOutcome run_experiment(const Json& config, const RunOptions& options) {
  check_object(config, "config");
  if (!config.contains("experiment") || !config.at("experiment").is_string()) {
    invalid("config.experiment", "missing experiment name");
  }
  const std::string name = config.at("experiment").get<std::string>();
  const auto it = runners().find(name);
  if (it == runners().end()) {
    std::string names;
    for (const auto& [key, fn] : runners()) names += (names.empty() ? "" : ", ") + key;
    invalid("config.experiment", "unknown experiment '" + name + "' (expected one of " + names + ")");
  }
  if (config.contains("output") && !config.at("output").is_string()) {
    invalid("config.output", "expected a directory path");
  }
  return it->second(config, options);
}

int run_config_file(const std::string& path, const RunOptions& options, std::ostream& out,
                    std::ostream& err) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    err << "error: cannot read config file " << path << "\n";
    return kExitValidation;
  }
  std::ostringstream text;
  text << in.rdbuf();
  ExperimentOutcome outcome;
  std::string out_dir;
  try {
    const Json config = parse_config(text.str(), path);
    outcome = run_experiment(config, options);
    out_dir = options.out_dir ? *options.out_dir : get_string(config, "output", "config", "out");
  } catch (const Error& e) {
    err << "error [" << error_code_name(e.code()) << "]: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    err << "error: cannot create output directory " << out_dir << ": " << ec.message() << "\n";
    return kExitFailure;
  }
  for (const OutputFile& f : outcome.files) {
    const std::filesystem::path target = std::filesystem::path(out_dir) / f.name;
    std::ofstream file(target, std::ios::binary);
    file << f.content;
    if (!file) {
      err << "error: cannot write " << target.string() << "\n";
      return kExitFailure;
    }
  }
  if (!options.quiet) {
    out << outcome.summary;
    out << "outputs written to " << out_dir << "\n";
  }
  if (!outcome.sound) {
    err << "soundness violation: an analytic bound exceeds its empirical 99% upper endpoint\n";
    return kExitSoundness;
  }
  return kExitOk;
}

}  // namespace issp
