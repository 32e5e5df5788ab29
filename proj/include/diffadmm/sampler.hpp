#pragma once

#include "diffadmm/core.hpp"
#include "diffadmm/guidance.hpp"
#include "diffadmm/prox.hpp"
#include "diffadmm/schedule.hpp"
#include "diffadmm/scores.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace diffadmm {

// Inner gradient-descent iteration budget per outer step:
// K_t = ceil(base + growth * (T - t)), never negative.
struct InnerSchedule {
  double base = 5.0;
  double growth = 0.0;
  int at(int t, int T) const;
  bool operator==(const InnerSchedule&) const = default;
};

enum class StateRetention { none, first_chain, all };

struct SamplerConfig {
  double rho = 1.0;
  double eta = 0.1;
  InnerSchedule inner;
  // Algorithm-as-printed keeps the x-update deterministic; the noise term of
  // the full reverse step is available for sampling-quality runs.
  bool noise_in_x_update = false;
  ScoreMode score_mode = ScoreMode::frozen;
  // When false the z-update acts on z directly (abar = 1), matching the
  // convergence theory's data-level subproblem; when true it acts through
  // the Tweedie estimate at abar_{t-1} as the algorithm prescribes.
  bool tweedie_z = true;
  // Caps the inner step at 1/(rho + L_c/abar), the stability limit of the
  // z-subproblem whose smoothness grows as abar shrinks. No-op when the
  // guidance has no known smoothness bound.
  bool eta_clamp = true;
  // Optional rho adaptation (x2 / /2 when primal and dual residuals diverge
  // by 10x). Off by default: the algorithm as printed uses fixed rho.
  bool residual_balancing = false;
  std::uint64_t seed = 0;
  int chains = 1;
  double divergence_bound = 1e6;
  StateRetention retain = StateRetention::first_chain;
  int max_threads = 0;  // 0 = hardware concurrency

  bool operator==(const SamplerConfig&) const = default;
};

struct StepLog {
  int t = 0;
  double primal_res = 0.0;   // ||x_{t-1} - z_{t-1}||
  double dual_res = 0.0;     // rho ||z_{t-1} - z_t||
  double log_q = 0.0;        // log p0(x_{t-1})
  double log_c = 0.0;        // log c at the Tweedie estimate of z_{t-1}
  double lagrangian = 0.0;   // L_rho(x_{t-1}, z_{t-1}, nu_{t-1})
};

struct ChainResult {
  bool failed = false;
  int fail_step = -1;  // t at which divergence was detected
  Vec x0, z0;
  std::vector<StepLog> steps;
  // Retained trajectories in optimization order: xs[k] is x_{T-k}, k = 0..T.
  std::vector<Vec> xs, zs, nus;
};

struct RunReport {
  std::string kind;  // "admm" | "dps" | "unconditional"
  SamplerConfig cfg;
  double zeta = 0.0;  // dps guidance weight
  NoiseSchedule schedule;
  int dim = 0;
  std::vector<ChainResult> chains;
  double wallclock_s = 0.0;
  // max over chains/steps of ||nu_{t-1} - nu_t - rho (x_{t-1} - z_{t-1})||
  // relative to the update magnitude
  double max_dual_violation = 0.0;

  int failed_chains() const;
  // Mean of x0 over non-failed chains.
  Vec mean_x0() const;
  Mat cov_x0() const;
  double final_primal_residual(int chain = 0) const;
};

/* Guided sampling by operator splitting. Per chain: x_T = z_T ~ N(0, I),
 * nu_T = 0, then for t = T..1
 *   u_t     = z_t - nu_t / rho
 *   x_{t-1} = reverse step at u_t with step-t coefficients (+ optional noise)
 *   z_{t-1} = K_t+1 gradient steps from z_t on the coupled guidance
 *             subproblem (score frozen at u_t unless score_mode = live)
 *   nu_{t-1} = nu_t + rho (x_{t-1} - z_{t-1})
 * Chains whose inner loop diverges are marked failed; the rest continue. */
RunReport run_admm(const NoiseSchedule& s, const ScoreModel& m,
                   const GuidanceModel& g, const SamplerConfig& cfg);

// Plain ancestral sampling. noise_in_x_update selects stochastic reverse
// steps (the default for this sampler's configs) vs the deterministic mean.
RunReport run_unconditional(const NoiseSchedule& s, const ScoreModel& m,
                            const SamplerConfig& cfg);

// Single-trajectory guided baseline: reverse step plus
// zeta * (1/sqrt(abar_t)) grad_log_c at the Tweedie estimate of x_t.
RunReport run_dps(const NoiseSchedule& s, const ScoreModel& m,
                  const GuidanceModel& g, double zeta, const SamplerConfig& cfg);

}  // namespace diffadmm
