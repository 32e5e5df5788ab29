#include "diffadmm/config.hpp"
#include "diffadmm/diagnostics.hpp"
#include "diffadmm/report_io.hpp"
#include "diffadmm/svg.hpp"
#include "diffadmm/tasks.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

namespace {

namespace fs = std::filesystem;
using namespace diffadmm;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitCheckFailed = 3;

fs::path resolve_out(const std::string& cli_out, const std::string& cfg_out) {
  std::string dir = !cli_out.empty() ? cli_out
                    : !cfg_out.empty() ? cfg_out
                                       : std::string("out");
  fs::path p(dir);
  if (p.is_relative()) {
    if (const char* root = std::getenv("DIFFADMM_OUT_ROOT"))
      p = fs::path(root) / p;
  }
  return p;
}

RunReport dispatch(const SamplerEntry& e, const NoiseSchedule& s,
                   const Task& task) {
  if (e.kind == "admm") return run_admm(s, *task.prior, *task.guidance, e.cfg);
  if (e.kind == "dps")
    return run_dps(s, *task.prior, *task.guidance, e.zeta, e.cfg);
  return run_unconditional(s, *task.prior, e.cfg);
}

// A task spec that does not resolve (missing preset, bad family tag) is a
// configuration problem, not a runtime one.
Task build_task_checked(const json& spec) {
  try {
    return build_task(spec);
  } catch (const std::exception& e) {
    throw ConfigError("task", e.what());
  }
}

int cmd_run(const std::string& config_path, const std::string& out_flag,
            std::optional<std::uint64_t> seed_flag) {
  ExperimentConfig cfg = load_config_file(config_path);
  if (seed_flag) {
    cfg.seed = *seed_flag;
    for (auto& e : cfg.samplers) e.cfg.seed = *seed_flag;
  }
  const fs::path out = resolve_out(out_flag, cfg.out_dir);
  Task task = build_task_checked(cfg.task);

  std::vector<int> t_grid = cfg.t_sweep;
  if (t_grid.empty()) t_grid.push_back(cfg.schedule.T);

  bool any_failed = false;
  for (const auto& entry : cfg.samplers) {
    for (int T : t_grid) {
      const NoiseSchedule sched = cfg.schedule.build_at(T);
      const RunReport rep = dispatch(entry, sched, task);
      std::string dir = entry.label;
      if (cfg.t_sweep.size() > 1) dir += "_T" + std::to_string(T);
      write_run_artifacts((out / dir).string(), rep, cfg, task.spec, entry.label);
      if (rep.failed_chains() > 0) {
        any_failed = true;
        std::cerr << "warning: " << rep.failed_chains()
                  << " chain(s) diverged in '" << entry.label << "' (T=" << T
                  << ")\n";
      }
      std::cout << entry.label << " T=" << T << ": wrote "
                << (out / dir).string() << " (" << rep.wallclock_s << " s)\n";
    }
  }
  return any_failed ? kExitRuntime : kExitOk;
}

int cmd_compare(const std::string& config_path, const std::string& out_flag,
                std::optional<std::uint64_t> seed_flag) {
  ExperimentConfig cfg = load_config_file(config_path);
  if (cfg.samplers.size() < 2)
    throw ConfigError("samplers", "compare needs at least 2 sampler entries");
  if (seed_flag) {
    cfg.seed = *seed_flag;
    for (auto& e : cfg.samplers) e.cfg.seed = *seed_flag;
  }
  const fs::path out = resolve_out(out_flag, cfg.out_dir);
  fs::create_directories(out);
  Task task = build_task_checked(cfg.task);
  const NoiseSchedule sched = cfg.schedule.build();

  std::optional<OracleResult> oracle;
  if (task.oracle_kind != "none")
    oracle = task_oracle(task, (out / "oracle_cache").string());
  else
    std::cerr << "warning: task '" << task.name
              << "' has no oracle; posterior metrics unavailable\n";

  std::ofstream csv(out / "compare.csv", std::ios::binary);
  csv << "sampler,posterior_mean_err,w2_oracle,psnr_vs_truth,"
         "final_primal_residual,failed_chains\n";
  for (const auto& entry : cfg.samplers) {
    const RunReport rep = dispatch(entry, sched, task);
    write_run_artifacts((out / entry.label).string(), rep, cfg, task.spec,
                        entry.label);
    const Vec mean = rep.mean_x0();
    const Mat cov = rep.cov_x0();

    std::string mean_err = "unavailable", w2 = "unavailable";
    if (entry.kind == "unconditional") {
      // no condition: the reference distribution is the prior itself
      const auto [pm, pc] = prior_moments(*task.prior);
      mean_err = format_double((mean - pm).norm());
      w2 = format_double(wasserstein2_gaussian(mean, cov, pm, pc));
    } else if (oracle) {
      mean_err = format_double((mean - oracle->mean).norm());
      w2 = format_double(wasserstein2_gaussian(mean, cov, oracle->mean, oracle->cov));
    }
    const double psnr_db = psnr(mean, task.x_star, 1.0);
    const double fpr = rep.final_primal_residual(0);

    csv << entry.label << ',' << mean_err << ',' << w2 << ','
        << format_double(psnr_db) << ','
        << (std::isnan(fpr) ? "unavailable" : format_double(fpr)) << ','
        << rep.failed_chains() << '\n';
  }
  std::cout << "wrote " << (out / "compare.csv").string() << "\n";
  return kExitOk;
}

json diagnose_one(const LoadedReport& lr) {
  json d;
  d["label"] = lr.label;
  d["kind"] = lr.kind;
  d["T"] = lr.report.schedule.T;
  d["max_dual_violation"] = lr.report.max_dual_violation;
  d["dual_identity_ok"] = lr.report.max_dual_violation <= 1e-12;

  const auto& c0 = lr.report.chains.at(0);
  if (!c0.steps.empty()) {
    const auto [primal, dual] = residual_series(lr.report, 0);
    if (std::isfinite(primal.back())) d["final_primal_residual"] = primal.back();
    if (std::isfinite(dual.back())) d["final_dual_residual"] = dual.back();
  }

  Task task = build_task(lr.task_spec);
  if (lr.kind == "admm" && !c0.xs.empty() && !c0.failed) {
    d["lagrangian_consistency_gap"] =
        lagrangian_consistency_gap(lr.report, *task.prior, *task.guidance, 0);

    const auto gap = stationarity_gap(lr.report, *task.prior, *task.guidance, 0);
    d["stationarity"] = {{"max_final_increment", gap.max_increment},
                         {"primal", gap.primal},
                         {"grad_norm", gap.grad_norm}};

    const auto m_series = step_increments(lr.report, 0);
    d["robbins_siegmund_ok"] = robbins_siegmund_check(m_series);

    std::optional<double> prior_l = task.prior->smoothness_bound();
    std::optional<double> guid_l = task.guidance->smoothness_bound();
    if (prior_l && guid_l) {
      TheoryConstants consts;
      consts.L = std::max(*prior_l, *guid_l);
      consts.rho = lr.report.cfg.rho;
      consts.dim = lr.report.dim;
      d["theory_constants"] = {{"L", consts.L},
                               {"rho", consts.rho},
                               {"applicable", consts.applicable()}};
      if (consts.applicable()) {
        d["theory_constants"]["Qf"] = consts.Qf();
        d["theory_constants"]["c1"] = consts.c1();
        d["theory_constants"]["c2"] = consts.c2();
        d["theory_constants"]["c3"] = consts.c3();
        d["theory_constants"]["c4"] = consts.c4();
      }
      const auto dec = check_sufficient_decrease(lr.report, *task.prior,
                                                 *task.guidance, consts, 0);
      d["sufficient_decrease"] = {{"applicable", dec.applicable},
                                  {"note", dec.note},
                                  {"checked", dec.checked},
                                  {"violations", dec.violations},
                                  {"worst_slack", dec.worst_slack}};
    } else {
      d["sufficient_decrease"] = {
          {"applicable", false},
          {"note", "no closed-form smoothness bound for this prior/guidance"}};
    }
  }
  return d;
}

int cmd_diag(const std::vector<std::string>& report_paths,
             const std::string& out_flag, bool plots, bool strict) {
  std::vector<LoadedReport> reports;
  for (const auto& p : report_paths) reports.push_back(read_report_json(p));

  const fs::path out = !out_flag.empty()
                           ? fs::path(out_flag)
                           : fs::path(report_paths.front()).parent_path();
  fs::create_directories(out);

  json diag;
  diag["reports"] = json::array();
  bool all_ok = true;
  for (const auto& lr : reports) {
    json d = diagnose_one(lr);
    if (d.contains("dual_identity_ok") && !d["dual_identity_ok"].get<bool>())
      all_ok = false;
    diag["reports"].push_back(std::move(d));
  }

  // rate estimation needs >= 3 admm reports of the same task at different T
  std::map<std::string, std::vector<const RunReport*>> groups;
  for (const auto& lr : reports)
    if (lr.kind == "admm" && !lr.report.chains.at(0).xs.empty())
      groups[lr.task_spec.dump() + "|" + lr.label].push_back(&lr.report);
  bool rated = false;
  for (const auto& [key, reps] : groups) {
    if (reps.size() < 3) continue;
    const RateEstimate r = rate_estimate(reps);
    diag["rate"] = {{"label", reps.size() ? json(key.substr(key.find('|') + 1)) : json()},
                    {"ok", r.ok},
                    {"note", r.note},
                    {"slope", r.slope},
                    {"pass", r.pass},
                    {"T", r.T_values},
                    {"min_m", r.min_m}};
    if (r.ok && !r.pass) all_ok = false;
    rated = true;
  }
  if (!rated) {
    diag["rate"] = {{"ok", false},
                    {"note", reports.size() < 3
                                 ? "insufficient points: need >= 3 reports"
                                 : "no group of >= 3 matching admm reports"}};
    if (reports.size() >= 3)
      std::cerr << "warning: reports do not form a comparable T grid; rate "
                   "estimation skipped\n";
  }

  {
    std::ofstream o(out / "diagnostics.json");
    o << diag.dump(2) << '\n';
  }
  std::cout << "wrote " << (out / "diagnostics.json").string() << "\n";

  if (plots) {
    const auto& rep = reports.front().report;
    const auto [primal, dual] = residual_series(rep, 0);
    write_line_svg((out / "residuals.svg").string(),
                   "ADMM residuals: " + reports.front().label,
                   "iteration k = T - t", "residual (log10)",
                   {{"primal ||x-z||", primal}, {"dual rho||dz||", dual}}, true);
    std::vector<double> lagr;
    for (const auto& s : rep.chains.at(0).steps) lagr.push_back(s.lagrangian);
    write_line_svg((out / "lagrangian.svg").string(),
                   "Augmented Lagrangian: " + reports.front().label,
                   "iteration k = T - t", "L_rho", {{"L_rho", lagr}}, false);
    std::cout << "wrote " << (out / "residuals.svg").string() << ", "
              << (out / "lagrangian.svg").string() << "\n";
  }

  return strict && !all_ok ? kExitCheckFailed : kExitOk;
}

int cmd_presets() {
  for (const auto& name : preset_names()) {
    const json spec = preset_spec(name);
    std::cout << name << ": dim " << spec.at("dim").get<int>() << ", "
              << spec.at("guidance").at("type").get<std::string>()
              << " guidance, oracle " << spec.at("oracle").get<std::string>()
              << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ADMM-coupled guided diffusion sampling on analytic priors"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::uint64_t seed_val = 0;
  bool seed_set = false, plots = false, strict = false;
  std::vector<std::string> report_paths;

  auto add_common = [&](CLI::App* c, bool needs_config) {
    if (needs_config)
      c->add_option("--config", config_path, "experiment config (JSON)")
          ->required();
    c->add_option("--out", out_dir, "output directory (overrides config)");
    c->add_option("--seed", seed_val, "seed override")
        ->each([&](const std::string&) { seed_set = true; });
  };

  CLI::App* run = app.add_subcommand("run", "run samplers, emit reports");
  add_common(run, true);
  CLI::App* compare =
      app.add_subcommand("compare", "run >= 2 samplers, emit a metric table");
  add_common(compare, true);
  CLI::App* diag =
      app.add_subcommand("diag", "convergence diagnostics over reports");
  diag->add_option("reports", report_paths, "report.json paths")->required();
  diag->add_option("--out", out_dir, "output directory");
  diag->add_flag("--plots", plots, "write residuals.svg and lagrangian.svg");
  diag->add_flag("--strict", strict, "exit 3 when a checked verdict fails");
  CLI::App* presets = app.add_subcommand("presets", "list shipped tasks");
  (void)presets;

  CLI11_PARSE(app, argc, argv);

  std::optional<std::uint64_t> seed_flag;
  if (seed_set) seed_flag = seed_val;

  try {
    if (run->parsed()) return cmd_run(config_path, out_dir, seed_flag);
    if (compare->parsed()) return cmd_compare(config_path, out_dir, seed_flag);
    if (diag->parsed()) return cmd_diag(report_paths, out_dir, plots, strict);
    return cmd_presets();
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
