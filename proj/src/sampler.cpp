#include "diffadmm/sampler.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace diffadmm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

void validate(const SamplerConfig& cfg) {
  if (cfg.rho <= 0.0) throw std::invalid_argument("sampler: rho must be > 0");
  if (cfg.eta < 0.0) throw std::invalid_argument("sampler: eta must be >= 0");
  if (cfg.chains < 1) throw std::invalid_argument("sampler: chains must be >= 1");
}

double effective_eta(const SamplerConfig& cfg, const GuidanceModel& g,
                     double rho, double abar) {
  if (!cfg.eta_clamp) return cfg.eta;
  const auto l = g.smoothness_bound();
  if (!l) return cfg.eta;
  // Frozen-score Tweedie scales the subproblem smoothness by 1/abar; with a
  // live score the shrinkage of the evaluation point cancels the Jacobian
  // factor and the data-level bound applies.
  const double l_eff = cfg.score_mode == ScoreMode::frozen ? *l / abar : *l;
  return std::min(cfg.eta, 1.0 / (rho + l_eff));
}

bool retain_chain(StateRetention r, int chain) {
  return r == StateRetention::all || (r == StateRetention::first_chain && chain == 0);
}

void mark_failed(ChainResult& c, int t, int dim) {
  c.failed = true;
  c.fail_step = t;
  c.x0 = Vec::Constant(dim, kNaN);
  c.z0 = Vec::Constant(dim, kNaN);
}

}  // namespace

int InnerSchedule::at(int t, int T) const {
  const double k = std::ceil(base + growth * static_cast<double>(T - t));
  return k < 0.0 ? 0 : static_cast<int>(k);
}

int RunReport::failed_chains() const {
  int n = 0;
  for (const auto& c : chains) n += c.failed ? 1 : 0;
  return n;
}

Vec RunReport::mean_x0() const {
  Vec m = Vec::Zero(dim);
  int n = 0;
  for (const auto& c : chains)
    if (!c.failed) {
      m += c.x0;
      ++n;
    }
  if (n == 0) return Vec::Constant(dim, kNaN);
  return m / n;
}

Mat RunReport::cov_x0() const {
  const Vec mu = mean_x0();
  Mat c = Mat::Zero(dim, dim);
  int n = 0;
  for (const auto& ch : chains)
    if (!ch.failed) {
      const Vec d = ch.x0 - mu;
      c += d * d.transpose();
      ++n;
    }
  if (n < 2) return Mat::Constant(dim, dim, kNaN);
  return c / (n - 1);
}

double RunReport::final_primal_residual(int chain) const {
  const auto& c = chains.at(chain);
  if (c.failed || c.steps.empty()) return kNaN;
  return c.steps.back().primal_res;
}

RunReport run_admm(const NoiseSchedule& s, const ScoreModel& m,
                   const GuidanceModel& g, const SamplerConfig& cfg) {
  validate(cfg);
  if (m.dim() != g.dim())
    throw std::invalid_argument("run_admm: prior/guidance dimension mismatch");
  const int d = m.dim();
  const int T = s.T;
  const auto t0 = std::chrono::steady_clock::now();

  RunReport rep;
  rep.kind = "admm";
  rep.cfg = cfg;
  rep.schedule = s;
  rep.dim = d;
  rep.chains.resize(cfg.chains);
  std::vector<double> dual_violation(cfg.chains, 0.0);

  parallel_for(
      cfg.chains,
      [&](int chain) {
        ChainResult& out = rep.chains[chain];
        out.steps.reserve(T);
        const bool retain = retain_chain(cfg.retain, chain);

        Rng rng(cfg.seed, static_cast<std::uint64_t>(chain));
        Vec x = rng.normal_vec(d);  // z_T = x_T, same draw
        Vec z = x;
        Vec nu = Vec::Zero(d);
        double rho = cfg.rho;
        if (retain) {
          out.xs.push_back(x);
          out.zs.push_back(z);
          out.nus.push_back(nu);
        }

        for (int t = T; t >= 1; --t) {
          const Vec u = z - nu / rho;
          const Vec s_u = m.score(u, s.alpha_bar(t));
          Vec x_new = (u + s.beta(t) * s_u) / std::sqrt(s.alpha(t));
          if (cfg.noise_in_x_update) {
            const double sigma = s.reverse_noise_std(t);
            if (sigma > 0.0) x_new += sigma * rng.normal_vec(d);
          }
          if (!x_new.allFinite() || x_new.norm() > cfg.divergence_bound) {
            mark_failed(out, t, d);
            break;
          }

          const double ab_z = cfg.tweedie_z ? s.alpha_bar(t - 1) : 1.0;
          const double eta_t = effective_eta(cfg, g, rho, ab_z);
          const InnerResult inner = guidance_prox_inexact(
              g, m, z, x_new, nu, rho, eta_t, cfg.inner.at(t, T), ab_z,
              cfg.score_mode, &s_u, cfg.divergence_bound);
          if (inner.diverged) {
            mark_failed(out, t, d);
            break;
          }
          const Vec& z_new = inner.z;
          const Vec nu_new = nu + rho * (x_new - z_new);

          StepLog log;
          log.t = t;
          log.primal_res = (x_new - z_new).norm();
          log.dual_res = rho * (z_new - z).norm();
          log.log_q = m.log_density0(x_new);
          log.log_c =
              g.log_c(ab_z == 1.0 ? z_new : tweedie_denoise(m, z_new, ab_z));
          log.lagrangian = -log.log_q - g.log_c(z_new) +
                           nu_new.dot(x_new - z_new) +
                           0.5 * rho * log.primal_res * log.primal_res;
          out.steps.push_back(log);

          const double id_gap =
              ((nu_new - nu) - rho * (x_new - z_new)).norm();
          const double id_scale = std::max(1.0, nu_new.norm());
          dual_violation[chain] = std::max(dual_violation[chain], id_gap / id_scale);

          if (cfg.residual_balancing) {
            if (log.primal_res > 10.0 * log.dual_res)
              rho *= 2.0;
            else if (log.dual_res > 10.0 * log.primal_res)
              rho /= 2.0;
          }

          x = x_new;
          z = z_new;
          nu = nu_new;
          if (retain) {
            out.xs.push_back(x);
            out.zs.push_back(z);
            out.nus.push_back(nu);
          }
        }
        if (!out.failed) {
          out.x0 = x;
          out.z0 = z;
        }
      },
      cfg.max_threads);

  for (double v : dual_violation)
    rep.max_dual_violation = std::max(rep.max_dual_violation, v);
  rep.wallclock_s = elapsed_s(t0);
  return rep;
}

namespace {

// Shared trajectory loop for the unconditional and DPS samplers (DPS with
// zeta = 0 degenerates to the unconditional path, bit for bit).
RunReport run_single_trajectory(const NoiseSchedule& s, const ScoreModel& m,
                                const GuidanceModel* g, double zeta,
                                const SamplerConfig& cfg, const char* kind) {
  validate(cfg);
  if (g != nullptr && m.dim() != g->dim())
    throw std::invalid_argument("run_dps: prior/guidance dimension mismatch");
  const int d = m.dim();
  const int T = s.T;
  const auto t0 = std::chrono::steady_clock::now();

  RunReport rep;
  rep.kind = kind;
  rep.cfg = cfg;
  rep.zeta = zeta;
  rep.schedule = s;
  rep.dim = d;
  rep.chains.resize(cfg.chains);

  parallel_for(
      cfg.chains,
      [&](int chain) {
        ChainResult& out = rep.chains[chain];
        out.steps.reserve(T);
        const bool retain = retain_chain(cfg.retain, chain);

        Rng rng(cfg.seed, static_cast<std::uint64_t>(chain));
        Vec x = rng.normal_vec(d);
        if (retain) out.xs.push_back(x);

        for (int t = T; t >= 1; --t) {
          const double abar = s.alpha_bar(t);
          const Vec sc = m.score(x, abar);
          Vec x_new = (x + s.beta(t) * sc) / std::sqrt(s.alpha(t));
          if (cfg.noise_in_x_update) {
            const double sigma = s.reverse_noise_std(t);
            if (sigma > 0.0) x_new += sigma * rng.normal_vec(d);
          }
          double log_c = kNaN;
          if (g != nullptr) {
            const Vec x0hat =
                abar == 1.0 ? x : (x + (1.0 - abar) * sc) / std::sqrt(abar);
            log_c = g->log_c(x0hat);
            if (zeta != 0.0)
              x_new += zeta / std::sqrt(abar) * g->grad_log_c(x0hat);
          }
          if (!x_new.allFinite() || x_new.norm() > cfg.divergence_bound) {
            mark_failed(out, t, d);
            break;
          }

          StepLog log;
          log.t = t;
          log.primal_res = kNaN;
          log.dual_res = kNaN;
          log.log_q = m.log_density0(x_new);
          log.log_c = log_c;
          log.lagrangian = kNaN;
          out.steps.push_back(log);

          x = x_new;
          if (retain) out.xs.push_back(x);
        }
        if (!out.failed) {
          out.x0 = x;
          out.z0 = x;
        }
      },
      cfg.max_threads);

  rep.wallclock_s = elapsed_s(t0);
  return rep;
}

}  // namespace

RunReport run_unconditional(const NoiseSchedule& s, const ScoreModel& m,
                            const SamplerConfig& cfg) {
  return run_single_trajectory(s, m, nullptr, 0.0, cfg, "unconditional");
}

RunReport run_dps(const NoiseSchedule& s, const ScoreModel& m,
                  const GuidanceModel& g, double zeta,
                  const SamplerConfig& cfg) {
  return run_single_trajectory(s, m, &g, zeta, cfg, "dps");
}

}  // namespace diffadmm
