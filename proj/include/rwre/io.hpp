#pragma once

// JSON (de)serialization of models and result records. Steps are named
// "+1", "-1", ..., "+d", "-d".

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "rwre/core.hpp"
#include "rwre/environment.hpp"
#include "rwre/lmgf_rate.hpp"
#include "rwre/tilt.hpp"

namespace rwre {

using nlohmann::json;

/// Component as an object {"+1": p, "-1": q, ...}; every step must be present.
[[nodiscard]] inline TransitionVector transition_from_json(const json& j, int dim) {
  if (!j.is_object()) throw ConfigError("component must be an object of step -> probability");
  TransitionVector p(dim);
  std::vector<bool> seen(static_cast<std::size_t>(2 * dim), false);
  for (const auto& [key, value] : j.items()) {
    const int z = Step::parse(key, dim).index();
    if (!value.is_number()) throw ConfigError("probability for step " + key + " is not a number");
    if (seen[static_cast<std::size_t>(z)]) throw ConfigError("step " + key + " given twice");
    seen[static_cast<std::size_t>(z)] = true;
    p[z] = value.get<double>();
  }
  for (int z = 0; z < 2 * dim; ++z)
    if (!seen[static_cast<std::size_t>(z)]) throw ConfigError("component is missing step " + Step::from_index(z).name());
  return p;
}

[[nodiscard]] inline json transition_to_json(const TransitionVector& p) {
  json j = json::object();
  for (int z = 0; z < p.size(); ++z) j[Step::from_index(z).name()] = p[z];
  return j;
}

/// {"dimension", "delta", "components", "weights"}; validated through make_model.
[[nodiscard]] inline EnvironmentModel model_from_json(const json& j) {
  try {
    const int d = j.at("dimension").get<int>();
    if (d < 1 || d > kMaxDim) throw DimensionMismatch("dimension must lie in [1, " + std::to_string(kMaxDim) + "]");
    const double delta = j.at("delta").get<double>();
    std::vector<TransitionVector> comps;
    for (const auto& c : j.at("components")) comps.push_back(transition_from_json(c, d));
    std::vector<double> weights;
    if (j.contains("weights")) {
      weights = j.at("weights").get<std::vector<double>>();
    } else if (comps.size() == 1) {
      weights = {1.0};
    } else {
      throw ConfigError("weights are required for a mixture");
    }
    return make_model(d, delta, std::move(comps), std::move(weights));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
}

[[nodiscard]] inline json model_to_json(const EnvironmentModel& m) {
  json comps = json::array();
  for (const auto& c : m.law.components) comps.push_back(transition_to_json(c));
  return {{"dimension", m.dimension}, {"delta", m.delta}, {"components", comps}, {"weights", m.law.weights}};
}

/// Model plus realization seed.
[[nodiscard]] inline json realization_to_json(const EnvironmentRealization& env) {
  json j = model_to_json(env.model());
  j["seed"] = env.seed();
  return j;
}

[[nodiscard]] inline EnvironmentRealization realization_from_json(const json& j) {
  if (!j.contains("seed")) throw ConfigError("realization needs a seed");
  return EnvironmentRealization(model_from_json(j), j.at("seed").get<std::uint64_t>());
}

[[nodiscard]] inline json to_json(const ThetaPoint& tp) {
  return {{"theta", tp.theta},         {"lambda", tp.lambda},         {"lambda_stderr", tp.lambda_se},
          {"grad", tp.grad},           {"grad_stderr", tp.grad_se},   {"n_blocks", tp.n_blocks},
          {"renewal_mean", tp.renewal_mean}, {"renewal_stderr", tp.renewal_se}, {"ess", tp.ess}};
}

[[nodiscard]] inline json to_json(const RateQuery& q) {
  return {{"xi", q.xi},
          {"I", std::isfinite(q.I_value) ? json(q.I_value) : json("inf")},
          {"theta_star", q.theta_star},
          {"converged", q.converged},
          {"iterations", q.iterations},
          {"lambda_stderr", q.lambda_se}};
}

[[nodiscard]] inline json to_json(const RowSumStats& s) {
  return {{"rows", s.rows},
          {"mean_abs_dev", s.mean_abs_dev()},
          {"max_abs_dev", s.max_abs_dev},
          {"mean_log", s.mean_log()},
          {"outside_tol", s.outside_tol}};
}

[[nodiscard]] inline json step_law_json(const std::vector<MeanWithError>& law) {
  json out = json::array();
  for (const auto& m : law) out.push_back({{"mean", m.mean}, {"stderr", m.se}});
  return out;
}

[[nodiscard]] inline json to_json(const MinimizerCertificate& c) {
  return {{"theta", c.theta},
          {"lambda", c.lambda},
          {"lambda_stderr", c.lambda_se},
          {"xi_hat", c.xi_hat},
          {"xi_stderr", c.xi_se},
          {"grad_hat", c.grad_hat},
          {"grad_stderr", c.grad_se},
          {"H_hat", c.H_hat},
          {"H_stderr", c.H_se},
          {"duality_gap", c.duality_gap},
          {"gap_stderr", c.gap_se},
          {"gap_stderr_independent", c.gap_se_independent},
          {"projected_H", c.projected_H},
          {"step_law", step_law_json(c.step_law)},
          {"row_sums", to_json(c.rows)},
          {"mean_log_row_along_chain", c.mean_log_row_along_chain},
          {"budgets",
           {{"blocks", c.blocks},
            {"burn_in", c.burn_in},
            {"chain_steps", c.chain_steps},
            {"h_sites", c.h_sites},
            {"n_max", c.harmonic.n_max},
            {"walks", c.harmonic.walks},
            {"confirm_horizon", c.harmonic.confirm_horizon}}},
          {"env_seed", c.env_seed}};
}

}  // namespace rwre
