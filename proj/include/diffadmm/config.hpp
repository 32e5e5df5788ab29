#pragma once

#include "diffadmm/sampler.hpp"

#include <nlohmann/json.hpp>

#include <stdexcept>
#include <string>
#include <vector>

namespace diffadmm {

using json = nlohmann::json;

// Config validation failure; key carries the offending path so the CLI can
// name it in the error message.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& msg)
      : std::runtime_error("config error at '" + key + "': " + msg),
        key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct SamplerEntry {
  std::string kind;   // admm | dps | unconditional
  std::string label;  // artifact subdirectory, defaults to kind
  SamplerConfig cfg;  // seed/chains mirrored from the experiment
  double zeta = 0.0;  // dps only

  bool operator==(const SamplerEntry&) const = default;
};

struct ScheduleSpec {
  int T = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  // When a t_sweep refines T, scale the betas by T/T' so every run
  // discretizes the same underlying diffusion (total noise preserved).
  bool scale_betas_with_T = false;

  NoiseSchedule build() const { return make_linear_schedule(T, beta_start, beta_end); }
  NoiseSchedule build_at(int t_steps) const {
    const double sc = scale_betas_with_T ? static_cast<double>(T) / t_steps : 1.0;
    return make_linear_schedule(t_steps, beta_start * sc, beta_end * sc);
  }
  bool operator==(const ScheduleSpec&) const = default;
};

struct ExperimentConfig {
  json task = "inpaint-8";  // preset name or inline task spec
  ScheduleSpec schedule;
  std::uint64_t seed = 0;
  int chains = 1;
  std::string out_dir;
  std::vector<SamplerEntry> samplers;
  std::vector<int> t_sweep;  // optional T grid for rate probes

  bool operator==(const ExperimentConfig&) const = default;
};

// Parses and validates; unknown keys are rejected by name. The seed key is
// mandatory.
ExperimentConfig config_from_json(const json& j);
json config_to_json(const ExperimentConfig& c);

ExperimentConfig load_config_file(const std::string& path);

}  // namespace diffadmm
