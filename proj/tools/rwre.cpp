// rwre: config-driven front end. Every subcommand writes its CSV/JSON outputs
// and a manifest.json into the run directory and prints a short summary.
//
// Exit codes: 0 ok, 2 config error, 3 numeric failure, 4 budget exhaustion.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rwre/rwre.hpp"

namespace fs = std::filesystem;
using namespace rwre;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitBudget = 4;

// ---------------------------------------------------------------------------
// Config access

json at_path(const json& cfg, const std::string& path) {
  const json::json_pointer ptr(path);
  return cfg.contains(ptr) ? cfg.at(ptr) : json();
}

template <class T>
T opt(const json& cfg, const std::string& path, T fallback) {
  const json v = at_path(cfg, path);
  if (v.is_null()) return fallback;
  try {
    return v.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

/// A number x means x e_1; an array is taken componentwise.
Vec vec_from_json(const json& v, int dim, const std::string& what) {
  Vec out(static_cast<std::size_t>(dim), 0.0);
  if (v.is_number()) {
    out[0] = v.get<double>();
    return out;
  }
  if (!v.is_array() || static_cast<int>(v.size()) != dim)
    throw ConfigError(what + " must be a number or an array of " + std::to_string(dim) + " numbers");
  for (int i = 0; i < dim; ++i) {
    if (!v[static_cast<std::size_t>(i)].is_number()) throw ConfigError(what + " has a non-numeric entry");
    out[static_cast<std::size_t>(i)] = v[static_cast<std::size_t>(i)].get<double>();
  }
  return out;
}

/// One vector, or a list of vectors when the entry is an array of arrays.
std::vector<Vec> vec_list(const json& cfg, const std::string& path, int dim) {
  const json v = at_path(cfg, path);
  if (v.is_null()) throw ConfigError(path + " is required");
  if (v.is_array() && !v.empty() && v.front().is_array()) {
    std::vector<Vec> out;
    for (const auto& e : v) out.push_back(vec_from_json(e, dim, path));
    return out;
  }
  return {vec_from_json(v, dim, path)};
}

/// "0.5,0.1" -> [0.5, 0.1]; a single value stays a number.
json parse_flag_vector(const std::string& s) {
  std::vector<double> xs;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      xs.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw ConfigError("cannot parse '" + tok + "' as a number");
    }
  }
  if (xs.empty()) throw ConfigError("empty vector flag");
  return xs.size() == 1 ? json(xs.front()) : json(xs);
}

// ---------------------------------------------------------------------------
// Run context

struct Run {
  std::string command;
  json cfg;
  fs::path dir;
  EnvironmentModel model;
  std::uint64_t seed = 1;
  Rng rng;
  json results = json::object();

  std::ofstream open(const std::string& name) const {
    std::ofstream out(dir / name);
    if (!out) throw ConfigError("cannot write " + (dir / name).string());
    out.precision(12);
    return out;
  }
};

SimConfig sim_config(const Run& run) {
  SimConfig sim;
  const Step u = Step::parse(opt<std::string>(run.cfg, "/direction", "+1"), run.model.dimension);
  sim.direction = unit_vector(run.model.dimension, u.axis);
  sim.direction[static_cast<std::size_t>(u.axis)] = u.sign;
  sim.confirm_horizon = opt<std::size_t>(run.cfg, "/regen/confirm_horizon", 0);
  sim.allow_nestling = opt<bool>(run.cfg, "/regen/allow_nestling", false);
  return sim;
}

void require_e1(const Run& run) {
  if (opt<std::string>(run.cfg, "/direction", "+1") != "+1")
    throw ConfigError(run.command + " works along direction +1 only");
}

BlockSampleResult sample(Run& run) {
  const auto count = opt<std::size_t>(run.cfg, "/regen/blocks", 100000);
  return sample_blocks(run.model, count, sim_config(run), run.rng);
}

json mean_se(double mean, double se) { return {{"mean", mean}, {"stderr", se}}; }

void print_row(const std::string& key, const std::string& value) {
  std::printf("  %-24s %s\n", key.c_str(), value.c_str());
}

std::string str(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

std::string str(const Vec& v) {
  std::ostringstream os;
  os.precision(6);
  os << '(';
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << ')';
  return os.str();
}

// ---------------------------------------------------------------------------
// Subcommands

void cmd_env_info(Run& run) {
  const auto& m = run.model;
  const auto nest = classify_nestling(m);
  json comps = json::array();
  for (const auto& c : m.law.components) comps.push_back({{"kernel", transition_to_json(c)}, {"drift", c.drift()}});
  run.results = {{"model", model_to_json(m)},
                 {"mean_kernel", transition_to_json(m.law.mean_kernel())},
                 {"mean_drift", m.law.mean_kernel().drift()},
                 {"components", comps},
                 {"nestling", nest.is_nestling()},
                 {"min_norm_drift", nest.min_norm_drift}};
  if (!nest.is_nestling()) run.results["witness_direction"] = nest.nonnestling->direction;
  run.results["default_confirm_horizon"] = default_confirm_horizon(m);

  // Site classes of the realization on a small window around the origin.
  const int radius = opt<int>(run.cfg, "/env/radius", 3);
  const EnvironmentRealization env(m, run.rng());
  auto out = run.open("sites.csv");
  for (int i = 1; i <= m.dimension; ++i) out << "x_" << i << ',';
  out << "class\n";
  const int d = m.dimension;
  Site x{};
  for (int i = 0; i < d; ++i) x[static_cast<std::size_t>(i)] = -radius;
  while (true) {
    for (int i = 0; i < d; ++i) out << x[static_cast<std::size_t>(i)] << ',';
    out << env.site_class(x) << '\n';
    int i = 0;
    while (i < d && x[static_cast<std::size_t>(i)] == radius) x[static_cast<std::size_t>(i++)] = -radius;
    if (i == d) break;
    ++x[static_cast<std::size_t>(i)];
  }
  run.results["env_seed"] = env.seed();

  print_row("dimension", std::to_string(d));
  print_row("classes", std::to_string(m.num_classes()));
  print_row("mean drift", str(m.law.mean_kernel().drift()));
  print_row("nestling", nest.is_nestling() ? "yes" : "no");
  if (!nest.is_nestling()) print_row("witness direction", str(nest.nonnestling->direction));
}

void cmd_simulate(Run& run) {
  const auto steps = opt<std::size_t>(run.cfg, "/simulate/steps", 10000);
  const EnvironmentRealization env(run.model, run.rng());
  const auto path = simulate_base_path(env, steps, run.rng);
  {
    auto out = run.open("path.txt");
    write_path(out, path, env.seed(), "base");
  }
  const auto mu = accumulate(path, env);
  {
    auto out = run.open("measure.csv");
    write_measure_csv(out, mu);
  }
  const Vec v = mean_velocity(path);
  run.results = {{"env_seed", env.seed()},
                 {"steps", steps},
                 {"velocity", v},
                 {"end", std::vector<std::int64_t>(path.end().begin(), path.end().begin() + run.model.dimension)},
                 {"marginal_balance", marginal_balance(path, env)},
                 {"projected_entropy", projected_entropy(mu, run.model)}};
  print_row("steps", std::to_string(steps));
  print_row("X_n / n", str(v));
}

void cmd_regen(Run& run) {
  const auto res = sample(run);
  const auto& d = res.diagnostics;
  {
    auto out = run.open("blocks.csv");
    write_blocks_csv(out, res.blocks, run.model.dimension);
  }
  const auto tail = tau_tail_diagnostic(res.blocks);
  const BlockSample bs(res.blocks, run.model.dimension);
  run.results = {{"blocks", d.blocks},
                 {"trajectories", d.trajectories},
                 {"total_steps", d.total_steps},
                 {"discarded_fraction", d.discarded_fraction()},
                 {"confirm_horizon", d.confirm_horizon},
                 {"trajectory_length", d.trajectory_length},
                 {"mean_duration", d.mean_duration},
                 {"max_duration", d.max_duration},
                 {"velocity", bs.velocity()},
                 {"tail",
                  {{"decay_rate", std::isfinite(tail.decay_rate) ? json(tail.decay_rate) : json("inf")},
                   {"head_rate", std::isfinite(tail.head_rate) ? json(tail.head_rate) : json("inf")},
                   {"tail_rate", std::isfinite(tail.tail_rate) ? json(tail.tail_rate) : json("inf")},
                   {"subexponential", tail.subexponential}}}};
  print_row("blocks", std::to_string(d.blocks));
  print_row("mean tau", str(d.mean_duration));
  print_row("discarded fraction", str(d.discarded_fraction()));
  print_row("velocity E[S]/E[T]", str(bs.velocity()));
  if (tail.subexponential) std::printf("  warning: block durations look subexponential\n");
}

void cmd_lmgf(Run& run) {
  const auto thetas = vec_list(run.cfg, "/lmgf/theta", run.model.dimension);
  const double tol = opt<double>(run.cfg, "/lmgf/tol", 1e-8);
  const auto res = sample(run);
  const BlockSample bs(res.blocks, run.model.dimension);
  auto out = run.open("lmgf.csv");
  write_theta_csv_header(out, run.model.dimension);
  json points = json::array();
  for (const auto& theta : thetas) {
    const auto tp = solve_lambda_a(bs, theta, tol);
    write_theta_csv_row(out, tp);
    points.push_back(to_json(tp));
    print_row("Lambda" + str(theta), str(tp.lambda) + " +- " + str(tp.lambda_se));
    if (tp.lambda <= 0.0 && norm2(theta) > 0.0) std::printf("  note: Lambda <= 0 at this theta\n");
  }
  run.results = {{"points", points}, {"blocks", bs.size()}};
}

void cmd_rate(Run& run) {
  const auto xis = vec_list(run.cfg, "/rate/xi", run.model.dimension);
  RateOptions ro;
  ro.tol = opt<double>(run.cfg, "/rate/tol", ro.tol);
  ro.max_newton = opt<std::size_t>(run.cfg, "/rate/max_newton", ro.max_newton);
  const auto res = sample(run);
  const BlockSample bs(res.blocks, run.model.dimension);
  auto out = run.open("rate.csv");
  write_rate_csv_header(out, run.model.dimension);
  json points = json::array();
  for (const auto& xi : xis) {
    const auto q = rate_I_a(bs, xi, ro);
    write_rate_csv_row(out, q);
    points.push_back(to_json(q));
    print_row("I" + str(xi), std::isinf(q.I_value) ? "inf" : str(q.I_value) + (q.converged ? "" : " (not converged)"));
  }
  run.results = {{"points", points}, {"blocks", bs.size()}};
}

HarmonicParams harmonic_params(const Run& run, Rng& rng) {
  HarmonicParams p;
  p.n_max = opt<int>(run.cfg, "/harmonic/n_max", p.n_max);
  p.walks = opt<std::size_t>(run.cfg, "/harmonic/walks", p.walks);
  p.confirm_horizon = opt<std::size_t>(run.cfg, "/harmonic/confirm_horizon", p.confirm_horizon);
  p.independent_levels = opt<bool>(run.cfg, "/harmonic/independent_levels", false);
  p.master_seed = rng();
  return p;
}

/// Lambda from lmgf.lambda when given, else solved on freshly sampled blocks.
ThetaPoint lambda_at(Run& run, const Vec& theta) {
  const json given = at_path(run.cfg, "/lmgf/lambda");
  if (given.is_number()) {
    ThetaPoint tp;
    tp.theta = theta;
    tp.lambda = given.get<double>();
    return tp;
  }
  const auto res = sample(run);
  return solve_lambda_a(BlockSample(res.blocks, run.model.dimension), theta, opt<double>(run.cfg, "/lmgf/tol", 1e-8));
}

void cmd_harmonic(Run& run) {
  require_e1(run);
  const Vec theta = vec_list(run.cfg, "/lmgf/theta", run.model.dimension).front();
  const auto tp = lambda_at(run, theta);
  const auto params = harmonic_params(run, run.rng);
  const EnvironmentRealization env(run.model, run.rng());
  HarmonicField field(env, theta, tp.lambda, params, opt<std::size_t>(run.cfg, "/harmonic/site_budget", 0));

  // Residuals on the sites of a box; h is estimated on the box and its boundary.
  const int radius = opt<int>(run.cfg, "/harmonic/radius", 1);
  const int d = run.model.dimension;
  json residuals = json::array();
  auto rcsv = run.open("residuals.csv");
  for (int i = 1; i <= d; ++i) rcsv << "x_" << i << ',';
  rcsv << "residual,normalized,stderr\n";
  Site x{};
  for (int i = 0; i < d; ++i) x[static_cast<std::size_t>(i)] = -radius;
  EstimatorSummary abs_norm;
  while (true) {
    const auto r = field.residual_at(x);
    for (int i = 0; i < d; ++i) rcsv << x[static_cast<std::size_t>(i)] << ',';
    rcsv << r.residual << ',' << r.normalized << ',' << r.se << '\n';
    abs_norm.add(std::abs(r.normalized));
    int i = 0;
    while (i < d && x[static_cast<std::size_t>(i)] == radius) x[static_cast<std::size_t>(i++)] = -radius;
    if (i == d) break;
    ++x[static_cast<std::size_t>(i)];
  }
  auto entries = field.entries();
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.site < b.site; });
  {
    auto out = run.open("harmonic.csv");
    write_harmonic_csv(out, entries, d);
  }
  const auto origin = field.at(Site{});
  run.results = {{"theta", theta},
                 {"lambda", tp.lambda},
                 {"lambda_stderr", tp.lambda_se},
                 {"env_seed", env.seed()},
                 {"h_origin", mean_se(origin.h, origin.h_se)},
                 {"g_origin", mean_se(origin.g, origin.g_se)},
                 {"mean_abs_normalized_residual", mean_se(abs_norm.mean(), abs_norm.std_error())},
                 {"sites_estimated", field.sites_estimated()},
                 {"undersampled", field.undersampled()},
                 {"n_max", params.n_max},
                 {"walks", params.walks}};
  print_row("lambda", str(tp.lambda));
  print_row("h(0)", str(origin.h) + " +- " + str(origin.h_se));
  print_row("mean |residual|/h", str(abs_norm.mean()));
  print_row("sites estimated", std::to_string(field.sites_estimated()));
}

void cmd_tilt(Run& run) {
  require_e1(run);
  const Vec theta = vec_list(run.cfg, "/lmgf/theta", run.model.dimension).front();
  const auto tp = lambda_at(run, theta);
  const auto params = harmonic_params(run, run.rng);
  const EnvironmentRealization env(run.model, run.rng());
  auto field = std::make_shared<HarmonicField>(env, theta, tp.lambda, params,
                                               opt<std::size_t>(run.cfg, "/tilt/h_budget", 0));
  const TiltedKernel tk = TiltedKernel::from_field(field, opt<double>(run.cfg, "/tilt/row_tol", 0.25));
  const auto steps = opt<std::size_t>(run.cfg, "/tilt/steps", 100000);
  const auto burn_in = opt<std::size_t>(run.cfg, "/tilt/burn_in", 100);
  const auto tr = sample_tilted_path(tk, steps, burn_in, run.rng);
  {
    auto out = run.open("measure.csv");
    write_measure_csv(out, tr.measure);
  }
  {
    auto out = run.open("path.txt");
    write_path(out, tr.path, env.seed(), "tilted");
  }
  const auto H = entropy_rate(tr);
  const auto v = tilted_velocity(tr);
  json vel = json::array();
  Vec vmean;
  for (const auto& c : v) {
    vel.push_back(mean_se(c.mean, c.se));
    vmean.push_back(c.mean);
  }
  run.results = {{"theta", theta},
                 {"lambda", tp.lambda},
                 {"lambda_stderr", tp.lambda_se},
                 {"env_seed", env.seed()},
                 {"entropy_rate", mean_se(H.mean, H.se)},
                 {"velocity", vel},
                 {"step_law", step_law_json(step_law(tr))},
                 {"projected_entropy", projected_entropy(tr.measure, run.model)},
                 {"row_sums", to_json(tk.row_stats())},
                 {"h_sites", field->sites_estimated()},
                 {"steps", steps},
                 {"burn_in", burn_in}};
  print_row("entropy rate", str(H.mean) + " +- " + str(H.se));
  print_row("velocity", str(vmean));
  print_row("<theta,xi> - lambda", str(dot(theta, vmean) - tp.lambda));
  print_row("h sites", std::to_string(field->sites_estimated()));
}

void cmd_certificate(Run& run) {
  require_e1(run);
  const Vec theta = vec_list(run.cfg, "/lmgf/theta", run.model.dimension).front();
  CertificateBudgets b;
  b.blocks = opt<std::size_t>(run.cfg, "/regen/blocks", b.blocks);
  b.sim = sim_config(run);
  b.harmonic = harmonic_params(run, run.rng);
  b.chain_steps = opt<std::size_t>(run.cfg, "/tilt/steps", b.chain_steps);
  b.burn_in = opt<std::size_t>(run.cfg, "/tilt/burn_in", 0);
  b.h_site_budget = opt<std::size_t>(run.cfg, "/tilt/h_budget", 0);
  const auto c = minimizer_certificate(run.model, theta, b, run.rng);
  run.results = to_json(c);
  run.results["gap_within_4se"] = c.gap_within(4.0);
  run.results["velocity_within_4se"] = c.velocity_within(4.0);
  print_row("lambda", str(c.lambda) + " +- " + str(c.lambda_se));
  print_row("H", str(c.H_hat) + " +- " + str(c.H_se));
  print_row("duality gap", str(c.duality_gap) + " (se " + str(c.gap_se) + ")");
  print_row("xi (chain)", str(c.xi_hat));
  print_row("grad Lambda", str(c.grad_hat));
  print_row("gap <= 4 se", c.gap_within(4.0) ? "yes" : "no");
  print_row("velocities within 4 se", c.velocity_within(4.0) ? "yes" : "no");
}

void cmd_condition(Run& run) {
  require_e1(run);
  const Vec theta = vec_list(run.cfg, "/lmgf/theta", run.model.dimension).front();
  const int N = opt<int>(run.cfg, "/condition/N", 0);
  const int M = opt<int>(run.cfg, "/condition/M", 0);
  const int K = opt<int>(run.cfg, "/condition/K", 1);
  std::vector<LocalObservable> obs;
  for (std::size_t k = 0; k < run.model.num_classes(); ++k)
    for (int z = 0; z < run.model.num_steps(); ++z) {
      auto o = class_step_indicator(k, z);
      o.N = N;
      o.M = M;
      o.K = K;
      obs.push_back(std::move(o));
    }
  ConditionBudgets b;
  b.groups = opt<std::size_t>(run.cfg, "/condition/groups", b.groups);
  b.sim = sim_config(run);
  const json given = at_path(run.cfg, "/lmgf/lambda");
  if (given.is_number()) b.lambda = given.get<double>();
  const auto res = conditioned_expectations(run.model, theta, obs, b, run.rng);
  auto out = run.open("condition.csv");
  out << "k,step,value,stderr\n";
  json values = json::array();
  std::size_t i = 0;
  for (std::size_t k = 0; k < run.model.num_classes(); ++k)
    for (int z = 0; z < run.model.num_steps(); ++z, ++i) {
      const auto& v = res.values[i];
      out << k << ',' << Step::from_index(z).name() << ',' << v.mean << ',' << v.se << '\n';
      values.push_back({{"k", k}, {"step", Step::from_index(z).name()}, {"mean", v.mean}, {"stderr", v.se}});
      print_row("k=" + std::to_string(k) + " step " + Step::from_index(z).name(), str(v.mean) + " +- " + str(v.se));
    }
  run.results = {{"theta", theta}, {"lambda", res.lambda}, {"groups", res.groups}, {"J", res.J}, {"values", values}};
}

void cmd_rare_event(Run& run) {
  const int d = run.model.dimension;
  RareEventConfig rc;
  rc.n_list = opt<std::vector<std::size_t>>(run.cfg, "/rare/n_list", rc.n_list);
  rc.delta_prime = opt<double>(run.cfg, "/rare/delta_prime", rc.delta_prime);
  rc.walks = opt<std::size_t>(run.cfg, "/rare/walks", rc.walks);
  const Vec xi = vec_list(run.cfg, at_path(run.cfg, "/rare/xi").is_null() ? "/rate/xi" : "/rare/xi", d).front();
  const json proposal = at_path(run.cfg, "/rare/theta");
  if (proposal.is_null()) {
    // Proposal tilt: the theta whose mean-kernel tilt has velocity xi.
    const auto mean = run.model.law.mean_kernel();
    Vec theta(static_cast<std::size_t>(d), 0.0);
    for (int it = 0; it < 100; ++it) {
      const Vec v = classical_tilted_velocity(mean, theta);
      double err = 0.0;
      for (int a = 0; a < d; ++a) {
        const auto ua = static_cast<std::size_t>(a);
        theta[ua] += 0.5 * (xi[ua] - v[ua]) / std::max(1e-3, 1.0 - v[ua] * v[ua]);
        err = std::max(err, std::abs(xi[ua] - v[ua]));
      }
      if (err < 1e-10) break;
    }
    rc.theta = theta;
  } else {
    rc.theta = vec_from_json(proposal, d, "rare.theta");
  }
  const auto pts = rare_event_decay(run.model, xi, rc, run.rng);
  auto out = run.open("rare_event.csv");
  out << "n,p_tilted,stderr_tilted,decay_tilted,p_naive,stderr_naive,naive_hits,tilted_hits\n";
  json rows = json::array();
  for (const auto& p : pts) {
    out << p.n << ',' << p.p_tilted << ',' << p.se_tilted << ',' << p.decay_tilted() << ',' << p.p_naive << ','
        << p.se_naive << ',' << p.naive_hits << ',' << p.tilted_hits << '\n';
    rows.push_back({{"n", p.n},
                    {"p_tilted", mean_se(p.p_tilted, p.se_tilted)},
                    {"decay_tilted", p.decay_tilted()},
                    {"p_naive", mean_se(p.p_naive, p.se_naive)},
                    {"naive_hits", p.naive_hits},
                    {"rel_stderr_naive_at_p_tilted", RareEventPoint::rel_se_naive_at(p.p_tilted, rc.walks)}});
    print_row("n=" + std::to_string(p.n), "-(1/n) log P = " + str(p.decay_tilted()) + ", rel se " +
                                              str(p.rel_se_tilted()) + ", naive hits " + std::to_string(p.naive_hits));
  }
  run.results = {{"xi", xi}, {"proposal_theta", rc.theta}, {"walks", rc.walks}, {"points", rows}};
}

/// Enumeration vs Monte Carlo for the averaged moment generating function.
bool cmd_oracle_check(Run& run) {
  const int d = run.model.dimension;
  const Vec theta = vec_list(run.cfg, "/lmgf/theta", d).front();
  const auto ns = opt<std::vector<int>>(run.cfg, "/oracle/n_list", {4, 6, 8});
  const auto reps = opt<std::size_t>(run.cfg, "/oracle/reps", 1000000);
  auto out = run.open("oracle.csv");
  out << "n,exact,mc,stderr,z,pass\n";
  json rows = json::array();
  bool all = true;
  for (int n : ns) {
    const double exact = std::log(enumerate_averaged_mgf(run.model, theta, n)) / n;
    const auto est = direct_lmgf_averaged(run.model, theta, static_cast<std::size_t>(n), reps, run.rng);
    const double z = std::abs(est.value - exact) / est.se;
    const bool pass = z <= 3.0;
    all = all && pass;
    out << n << ',' << exact << ',' << est.value << ',' << est.se << ',' << z << ',' << pass << '\n';
    rows.push_back({{"n", n}, {"exact", exact}, {"mc", mean_se(est.value, est.se)}, {"pass", pass}});
    std::printf("  %s n=%d exact=%.8f mc=%.8f se=%.2e z=%.2f\n", pass ? "PASS" : "FAIL", n, exact, est.value, est.se,
                z);
  }
  run.results = {{"theta", theta}, {"reps", reps}, {"checks", rows}, {"all_pass", all}};
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo lab for random walks in i.i.d. random environments"};
  app.require_subcommand(1);
  std::string config_path, out_dir, theta_flag, xi_flag;
  std::optional<std::uint64_t> seed_flag;
  std::optional<std::size_t> blocks_flag, walks_flag, steps_flag, threads_flag;
  std::optional<int> n_max_flag;
  app.add_option("-c,--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("-o,--out", out_dir, "run directory (default runs/<command>-<config hash>)");
  app.add_option("--seed", seed_flag, "master seed");
  app.add_option("--theta", theta_flag, "theta, comma separated; a single number means x e_1");
  app.add_option("--xi", xi_flag, "xi, comma separated; a single number means x e_1");
  app.add_option("--blocks", blocks_flag, "regeneration blocks to sample");
  app.add_option("--n-max", n_max_flag, "Cesaro level cutoff for h");
  app.add_option("--walks", walks_flag, "inner walks per h site");
  app.add_option("--steps", steps_flag, "path or chain length");
  app.add_option("--threads", threads_flag, "worker threads (default: hardware concurrency)");
  app.fallthrough();

  const std::vector<std::pair<std::string, std::string>> commands{
      {"env-info", "model summary, nestling class and site classes near the origin"},
      {"simulate", "one base walk: path dump and empirical measure"},
      {"regen", "regeneration blocks and tail diagnostics"},
      {"lmgf", "Lambda_a(theta) from the renewal identity"},
      {"rate", "I_a(xi) by Legendre transform"},
      {"harmonic", "Monte Carlo h(theta, .) and harmonicity residuals"},
      {"tilt", "h-transformed chain: entropy rate and velocity"},
      {"certificate", "minimizer certificate: duality gap and velocity check"},
      {"condition", "conditioned block measure of (class, step) indicators"},
      {"rare-event", "naive and tilted estimates of P(|X_n/n - xi| <= delta')"},
      {"oracle-check", "exact enumeration vs Monte Carlo"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  Run run;
  run.command = app.get_subcommands().front()->get_name();
  const auto t0 = std::chrono::steady_clock::now();
  auto finish = [&](const std::string& status, const std::string& error) {
    if (run.dir.empty()) return;
    RunManifest m;
    m.master_seed = run.seed;
    m.parameters = {{"command", run.command}, {"config", run.cfg}};
    m.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json j = m.to_json();
    j["status"] = status;
    if (!error.empty()) j["error"] = error;
    std::ofstream(run.dir / "manifest.json") << j.dump(2) << '\n';
    if (status == "ok") std::ofstream(run.dir / "results.json") << run.results.dump(2) << '\n';
  };

  int code = 0;
  try {
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      try {
        run.cfg = json::parse(in);
      } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
      }
    } else {
      run.cfg = json::object();
    }
    if (seed_flag) run.cfg["seed"] = *seed_flag;
    if (!theta_flag.empty()) run.cfg["lmgf"]["theta"] = parse_flag_vector(theta_flag);
    if (!xi_flag.empty()) run.cfg["rate"]["xi"] = parse_flag_vector(xi_flag);
    if (blocks_flag) run.cfg["regen"]["blocks"] = *blocks_flag;
    if (n_max_flag) run.cfg["harmonic"]["n_max"] = *n_max_flag;
    if (walks_flag) run.cfg["harmonic"]["walks"] = *walks_flag;
    if (steps_flag) {
      run.cfg["simulate"]["steps"] = *steps_flag;
      run.cfg["tilt"]["steps"] = *steps_flag;
    }
    if (threads_flag) parallel_threads() = *threads_flag;
    if (!run.cfg.contains("model")) throw ConfigError("config needs a model");
    run.model = model_from_json(run.cfg.at("model"));
    run.seed = opt<std::uint64_t>(run.cfg, "/seed", 1);
    run.rng = Rng(run.seed);

    RunManifest probe;
    probe.master_seed = run.seed;
    probe.parameters = {{"command", run.command}, {"config", run.cfg}};
    run.dir = out_dir.empty() ? fs::path("runs") / (run.command + "-" + probe.config_hash()) : fs::path(out_dir);
    fs::create_directories(run.dir);

    std::printf("%s  (run directory %s)\n", run.command.c_str(), run.dir.string().c_str());
    const auto& c = run.command;
    if (c == "env-info") cmd_env_info(run);
    else if (c == "simulate") cmd_simulate(run);
    else if (c == "regen") cmd_regen(run);
    else if (c == "lmgf") cmd_lmgf(run);
    else if (c == "rate") cmd_rate(run);
    else if (c == "harmonic") cmd_harmonic(run);
    else if (c == "tilt") cmd_tilt(run);
    else if (c == "certificate") cmd_certificate(run);
    else if (c == "condition") cmd_condition(run);
    else if (c == "rare-event") cmd_rare_event(run);
    else if (c == "oracle-check" && !cmd_oracle_check(run)) code = kExitNumeric;
    finish("ok", "");
  } catch (const BudgetExhausted& e) {
    std::fprintf(stderr, "budget exhausted: %s\n", e.what());
    code = kExitBudget;
    finish("budget_exhausted", e.what());
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    code = kExitConfig;
    finish("config_error", e.what());
  } catch (const DimensionMismatch& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    code = kExitConfig;
    finish("config_error", e.what());
  } catch (const SimplexViolation& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    code = kExitConfig;
    finish("config_error", e.what());
  } catch (const EllipticityViolation& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    code = kExitConfig;
    finish("config_error", e.what());
  } catch (const NestlingWithoutOverride& e) {
    std::fprintf(stderr, "config error: %s (set regen.allow_nestling)\n", e.what());
    code = kExitConfig;
    finish("config_error", e.what());
  } catch (const WindowViolation& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    code = kExitConfig;
    finish("config_error", e.what());
  } catch (const Error& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    code = kExitNumeric;
    finish("numeric_failure", e.what());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    code = kExitNumeric;
    finish("numeric_failure", e.what());
  }
  return code;
}
