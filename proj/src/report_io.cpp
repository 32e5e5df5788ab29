#include "diffadmm/report_io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace diffadmm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string csv_num(double v) {
  if (std::isnan(v)) return "nan";
  return format_double(v);
}

json vec_to_json(const Vec& v) {
  json j = json::array();
  for (int i = 0; i < v.size(); ++i)
    j.push_back(std::isfinite(v[i]) ? json(v[i]) : json(nullptr));
  return j;
}

Vec json_to_vec(const json& j) {
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    v[i] = j[i].is_null() ? kNaN : j[i].get<double>();
  return v;
}

json states_to_json(const std::vector<Vec>& xs) {
  json j = json::array();
  for (const auto& x : xs) j.push_back(vec_to_json(x));
  return j;
}

std::vector<Vec> states_from_json(const json& j) {
  std::vector<Vec> out;
  out.reserve(j.size());
  for (const auto& row : j) out.push_back(json_to_vec(row));
  return out;
}

double num_or_nan(const json& j) { return j.is_null() ? kNaN : j.get<double>(); }

}  // namespace

std::string steps_csv(const RunReport& rep) {
  std::ostringstream out;
  out << "chain,t,k,primal_res,dual_res,log_q,log_c,aug_lagrangian\n";
  const int T = rep.schedule.T;
  for (std::size_t c = 0; c < rep.chains.size(); ++c) {
    for (const auto& s : rep.chains[c].steps) {
      out << c << ',' << s.t << ',' << (T - s.t) << ',' << csv_num(s.primal_res)
          << ',' << csv_num(s.dual_res) << ',' << csv_num(s.log_q) << ','
          << csv_num(s.log_c) << ',' << csv_num(s.lagrangian) << '\n';
    }
  }
  return out.str();
}

std::string samples_csv(const RunReport& rep) {
  std::ostringstream out;
  out << "chain,failed";
  for (int i = 0; i < rep.dim; ++i) out << ",x0_" << i;
  for (int i = 0; i < rep.dim; ++i) out << ",z0_" << i;
  out << '\n';
  for (std::size_t c = 0; c < rep.chains.size(); ++c) {
    const auto& ch = rep.chains[c];
    out << c << ',' << (ch.failed ? 1 : 0);
    for (int i = 0; i < rep.dim; ++i)
      out << ',' << (ch.x0.size() == rep.dim ? csv_num(ch.x0[i]) : "nan");
    for (int i = 0; i < rep.dim; ++i)
      out << ',' << (ch.z0.size() == rep.dim ? csv_num(ch.z0[i]) : "nan");
    out << '\n';
  }
  return out.str();
}

json report_to_json(const RunReport& rep, const ExperimentConfig& experiment,
                    const json& task_spec, const std::string& label) {
  json j;
  j["kind"] = rep.kind;
  j["label"] = label;
  j["config"] = config_to_json(experiment);
  j["task"] = task_spec;
  j["seed"] = rep.cfg.seed;
  j["dim"] = rep.dim;
  j["schedule"] = {{"T", rep.schedule.T},
                   {"beta_start", rep.schedule.betas[0]},
                   {"beta_end", rep.schedule.betas[rep.schedule.T - 1]}};
  if (rep.kind == "dps") j["zeta"] = rep.zeta;
  j["summary"] = {
      {"chains", static_cast<int>(rep.chains.size())},
      {"failed_chains", rep.failed_chains()},
      {"wallclock_s", rep.wallclock_s},
      {"max_dual_violation", rep.max_dual_violation},
      {"mean_x0", vec_to_json(rep.mean_x0())},
  };
  if (!rep.chains.empty() && !rep.chains[0].failed &&
      !rep.chains[0].steps.empty())
    j["summary"]["final_primal_residual"] =
        std::isnan(rep.final_primal_residual(0))
            ? json(nullptr)
            : json(rep.final_primal_residual(0));

  // chain-0 step log and retained trajectories for offline diagnostics
  if (!rep.chains.empty()) {
    const auto& c0 = rep.chains[0];
    json steps = json::array();
    for (const auto& s : c0.steps) {
      steps.push_back({{"t", s.t},
                       {"primal_res", std::isfinite(s.primal_res) ? json(s.primal_res) : json(nullptr)},
                       {"dual_res", std::isfinite(s.dual_res) ? json(s.dual_res) : json(nullptr)},
                       {"log_q", std::isfinite(s.log_q) ? json(s.log_q) : json(nullptr)},
                       {"log_c", std::isfinite(s.log_c) ? json(s.log_c) : json(nullptr)},
                       {"lagrangian", std::isfinite(s.lagrangian) ? json(s.lagrangian) : json(nullptr)}});
    }
    j["chain0"] = {{"failed", c0.failed}, {"steps", std::move(steps)}};
    if (!c0.xs.empty()) {
      j["chain0"]["xs"] = states_to_json(c0.xs);
      if (!c0.zs.empty()) {
        j["chain0"]["zs"] = states_to_json(c0.zs);
        j["chain0"]["nus"] = states_to_json(c0.nus);
      }
    }
  }
  return j;
}

void write_run_artifacts(const std::string& dir, const RunReport& rep,
                         const ExperimentConfig& experiment, const json& task_spec,
                         const std::string& label) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(std::filesystem::path(dir) / "report.json");
    if (!out) throw std::runtime_error("cannot write report.json under " + dir);
    out << report_to_json(rep, experiment, task_spec, label).dump(2) << '\n';
  }
  {
    std::ofstream out(std::filesystem::path(dir) / "steps.csv",
                      std::ios::binary);
    out << steps_csv(rep);
  }
  {
    std::ofstream out(std::filesystem::path(dir) / "samples.csv",
                      std::ios::binary);
    out << samples_csv(rep);
  }
}

LoadedReport read_report_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open report: " + path);
  json j;
  in >> j;

  LoadedReport lr;
  lr.kind = j.at("kind").get<std::string>();
  lr.label = j.value("label", lr.kind);
  lr.experiment = config_from_json(j.at("config"));
  lr.task_spec = j.at("task");

  RunReport& rep = lr.report;
  rep.kind = lr.kind;
  rep.dim = j.at("dim").get<int>();
  rep.zeta = j.value("zeta", 0.0);
  const auto& sch = j.at("schedule");
  rep.schedule = make_linear_schedule(sch.at("T").get<int>(),
                                      sch.at("beta_start").get<double>(),
                                      sch.at("beta_end").get<double>());
  for (const auto& e : lr.experiment.samplers)
    if (e.label == lr.label) rep.cfg = e.cfg;
  rep.cfg.seed = j.at("seed").get<std::uint64_t>();
  rep.max_dual_violation = j.at("summary").at("max_dual_violation").get<double>();

  ChainResult c0;
  if (j.contains("chain0")) {
    const auto& jc = j["chain0"];
    c0.failed = jc.at("failed").get<bool>();
    for (const auto& s : jc.at("steps")) {
      StepLog log;
      log.t = s.at("t").get<int>();
      log.primal_res = num_or_nan(s.at("primal_res"));
      log.dual_res = num_or_nan(s.at("dual_res"));
      log.log_q = num_or_nan(s.at("log_q"));
      log.log_c = num_or_nan(s.at("log_c"));
      log.lagrangian = num_or_nan(s.at("lagrangian"));
      c0.steps.push_back(log);
    }
    if (jc.contains("xs")) c0.xs = states_from_json(jc["xs"]);
    if (jc.contains("zs")) c0.zs = states_from_json(jc["zs"]);
    if (jc.contains("nus")) c0.nus = states_from_json(jc["nus"]);
    if (!c0.xs.empty()) {
      c0.x0 = c0.xs.back();
      c0.z0 = c0.zs.empty() ? c0.xs.back() : c0.zs.back();
    }
  }
  rep.chains.push_back(std::move(c0));
  return lr;
}

}  // namespace diffadmm
