#include "diffadmm/config.hpp"

#include <fstream>
#include <set>
#include <string>

namespace diffadmm {

namespace {

void check_keys(const json& j, const std::string& path,
                std::set<std::string> allowed) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  for (const auto& [key, _] : j.items())
    if (allowed.find(key) == allowed.end())
      throw ConfigError(path.empty() ? key : path + "." + key, "unknown key");
}

template <typename T>
T require(const json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) throw ConfigError(path + key, "missing required key");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(path + key, e.what());
  }
}

template <typename T>
T value_or(const json& j, const std::string& path, const char* key, T def) {
  if (!j.contains(key)) return def;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(path + key, e.what());
  }
}

ScoreMode parse_score_mode(const std::string& s, const std::string& path) {
  if (s == "frozen") return ScoreMode::frozen;
  if (s == "live") return ScoreMode::live;
  throw ConfigError(path, "score_mode must be 'frozen' or 'live'");
}

StateRetention parse_retention(const std::string& s, const std::string& path) {
  if (s == "none") return StateRetention::none;
  if (s == "first") return StateRetention::first_chain;
  if (s == "all") return StateRetention::all;
  throw ConfigError(path, "retain_states must be 'none', 'first' or 'all'");
}

SamplerEntry parse_sampler(const json& j, const std::string& path) {
  check_keys(j, path,
             {"kind", "label", "rho", "eta", "inner", "noise_in_x_update",
              "score_mode", "tweedie_z", "eta_clamp", "residual_balancing",
              "divergence_bound", "retain_states", "zeta", "stochastic"});
  SamplerEntry e;
  e.kind = require<std::string>(j, path + ".", "kind");
  if (e.kind != "admm" && e.kind != "dps" && e.kind != "unconditional")
    throw ConfigError(path + ".kind",
                      "must be 'admm', 'dps' or 'unconditional'");
  e.label = value_or<std::string>(j, path + ".", "label", e.kind);
  e.cfg.rho = value_or<double>(j, path + ".", "rho", 1.0);
  if (e.cfg.rho <= 0) throw ConfigError(path + ".rho", "must be > 0");
  e.cfg.eta = value_or<double>(j, path + ".", "eta", 0.1);
  if (e.cfg.eta < 0) throw ConfigError(path + ".eta", "must be >= 0");
  if (j.contains("inner")) {
    check_keys(j["inner"], path + ".inner", {"base", "growth"});
    e.cfg.inner.base = value_or<double>(j["inner"], path + ".inner.", "base", 5.0);
    e.cfg.inner.growth =
        value_or<double>(j["inner"], path + ".inner.", "growth", 0.0);
  }
  // stochastic reverse steps default on for the single-trajectory samplers,
  // off for admm (the printed algorithm's x-update is deterministic)
  const bool default_noise = e.kind != "admm";
  e.cfg.noise_in_x_update =
      value_or<bool>(j, path + ".", "noise_in_x_update",
                     value_or<bool>(j, path + ".", "stochastic", default_noise));
  e.cfg.score_mode = parse_score_mode(
      value_or<std::string>(j, path + ".", "score_mode", "frozen"), path + ".score_mode");
  e.cfg.tweedie_z = value_or<bool>(j, path + ".", "tweedie_z", true);
  e.cfg.eta_clamp = value_or<bool>(j, path + ".", "eta_clamp", true);
  e.cfg.residual_balancing =
      value_or<bool>(j, path + ".", "residual_balancing", false);
  e.cfg.divergence_bound =
      value_or<double>(j, path + ".", "divergence_bound", 1e6);
  e.cfg.retain = parse_retention(
      value_or<std::string>(j, path + ".", "retain_states", "first"),
      path + ".retain_states");
  e.zeta = value_or<double>(j, path + ".", "zeta", 0.0);
  return e;
}

json sampler_to_json(const SamplerEntry& e) {
  json j{{"kind", e.kind},
         {"label", e.label},
         {"rho", e.cfg.rho},
         {"eta", e.cfg.eta},
         {"inner", {{"base", e.cfg.inner.base}, {"growth", e.cfg.inner.growth}}},
         {"noise_in_x_update", e.cfg.noise_in_x_update},
         {"score_mode", e.cfg.score_mode == ScoreMode::frozen ? "frozen" : "live"},
         {"tweedie_z", e.cfg.tweedie_z},
         {"eta_clamp", e.cfg.eta_clamp},
         {"residual_balancing", e.cfg.residual_balancing},
         {"divergence_bound", e.cfg.divergence_bound},
         {"retain_states", e.cfg.retain == StateRetention::none      ? "none"
                           : e.cfg.retain == StateRetention::first_chain
                               ? "first"
                               : "all"}};
  if (e.kind == "dps") j["zeta"] = e.zeta;
  return j;
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  check_keys(j, "",
             {"task", "schedule", "seed", "chains", "out", "samplers", "t_sweep"});
  ExperimentConfig c;
  if (!j.contains("seed")) throw ConfigError("seed", "missing required key");
  c.seed = require<std::uint64_t>(j, "", "seed");
  c.chains = value_or<int>(j, "", "chains", 1);
  if (c.chains < 1) throw ConfigError("chains", "must be >= 1");
  c.out_dir = value_or<std::string>(j, "", "out", "");
  if (j.contains("task")) {
    if (!j["task"].is_string() && !j["task"].is_object())
      throw ConfigError("task", "must be a preset name or an inline spec");
    c.task = j["task"];
  }
  if (j.contains("schedule")) {
    check_keys(j["schedule"], "schedule",
               {"T", "beta_start", "beta_end", "scale_betas_with_T"});
    c.schedule.T = value_or<int>(j["schedule"], "schedule.", "T", 1000);
    c.schedule.beta_start =
        value_or<double>(j["schedule"], "schedule.", "beta_start", 1e-4);
    c.schedule.beta_end =
        value_or<double>(j["schedule"], "schedule.", "beta_end", 0.02);
    c.schedule.scale_betas_with_T =
        value_or<bool>(j["schedule"], "schedule.", "scale_betas_with_T", false);
    if (c.schedule.T < 1) throw ConfigError("schedule.T", "must be >= 1");
    if (!(c.schedule.beta_start > 0 &&
          c.schedule.beta_start <= c.schedule.beta_end &&
          c.schedule.beta_end < 1))
      throw ConfigError("schedule", "need 0 < beta_start <= beta_end < 1");
  }
  if (!j.contains("samplers") || !j["samplers"].is_array() ||
      j["samplers"].empty())
    throw ConfigError("samplers", "need a non-empty array of sampler entries");
  for (std::size_t i = 0; i < j["samplers"].size(); ++i) {
    SamplerEntry e =
        parse_sampler(j["samplers"][i], "samplers[" + std::to_string(i) + "]");
    e.cfg.seed = c.seed;
    e.cfg.chains = c.chains;
    for (const auto& other : c.samplers)
      if (other.label == e.label)
        throw ConfigError("samplers[" + std::to_string(i) + "].label",
                          "duplicate label '" + e.label + "'");
    c.samplers.push_back(std::move(e));
  }
  if (j.contains("t_sweep")) {
    for (const auto& t : j["t_sweep"]) {
      const int ti = t.get<int>();
      if (ti < 1) throw ConfigError("t_sweep", "entries must be >= 1");
      c.t_sweep.push_back(ti);
    }
  }
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j{{"task", c.task},
         {"schedule",
          {{"T", c.schedule.T},
           {"beta_start", c.schedule.beta_start},
           {"beta_end", c.schedule.beta_end},
           {"scale_betas_with_T", c.schedule.scale_betas_with_T}}},
         {"seed", c.seed},
         {"chains", c.chains},
         {"samplers", json::array()}};
  if (!c.out_dir.empty()) j["out"] = c.out_dir;
  if (!c.t_sweep.empty()) j["t_sweep"] = c.t_sweep;
  for (const auto& e : c.samplers) j["samplers"].push_back(sampler_to_json(e));
  return j;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path, e.what());  // message carries byte position
  }
  return config_from_json(j);
}

}  // namespace diffadmm
