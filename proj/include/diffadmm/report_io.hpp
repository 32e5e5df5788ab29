#pragma once

#include "diffadmm/config.hpp"
#include "diffadmm/sampler.hpp"

#include <string>
#include <vector>

namespace diffadmm {

// Serializes the run into <dir>/report.json, <dir>/steps.csv and
// <dir>/samples.csv. The report embeds the full experiment config (so it
// round-trips), the task spec, schedule, summary statistics and the retained
// chain-0 trajectories for offline diagnostics.
void write_run_artifacts(const std::string& dir, const RunReport& rep,
                         const ExperimentConfig& experiment, const json& task_spec,
                         const std::string& label);

json report_to_json(const RunReport& rep, const ExperimentConfig& experiment,
                    const json& task_spec, const std::string& label);

// In-memory form of a persisted report, sufficient for every offline
// diagnostic (not the full RunReport: only chain 0 is retained on disk).
struct LoadedReport {
  std::string kind;
  std::string label;
  ExperimentConfig experiment;
  json task_spec;
  RunReport report;  // chains[0] populated from the persisted trajectories
};

LoadedReport read_report_json(const std::string& path);

std::string steps_csv(const RunReport& rep);
std::string samples_csv(const RunReport& rep);

}  // namespace diffadmm
