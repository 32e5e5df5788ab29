#pragma once

#include "diffadmm/core.hpp"
#include "diffadmm/guidance.hpp"
#include "diffadmm/sampler.hpp"
#include "diffadmm/schedule.hpp"
#include "diffadmm/scores.hpp"

#include <optional>
#include <string>
#include <vector>

namespace diffadmm {

/* Constants of the sufficient-decrease inequality
 *   c1 (||z_k-z_{k+1}||^2 + ||x_k-x_{k+1}||^2) + L_{k+1}
 *     <= L_k + c2 Delta_k^2 + c3 Delta_{k-1}^2 + c4 delta_k
 * derived from the smoothness bound L of both objectives and the penalty
 * rho. c4 (and the strong convexity of the subproblems) requires rho > L. */
struct TheoryConstants {
  double L = 1.0;
  double rho = 1.0;
  double delta = 0.0;  // score-approximation gap; 0 for analytic models
  int dim = 1;

  bool applicable() const { return rho > L; }
  double Qf() const { return (rho - L) / (rho + L); }
  double c1() const { return L; }
  double c2() const {
    return (L * L + rho * rho) / 2.0 + 3.0 * (L + rho) * (L + rho) / rho;
  }
  double c3() const { return 3.0 * (L + rho) * (L + rho) / rho; }
  double c4() const { return (rho + L) / (rho - L); }
  // Inner-loop contraction bound sqrt(d) (2L/(rho+L))^K.
  double Delta(int K) const;
  // delta_k for a prox input u at noise level abar: the one-step
  // suboptimality bound delta + (L/2)((Qf-1)/(Qf+1))^2 ||u - x0tilde(u)||^2,
  // reading x0tilde as the Tweedie estimate at u.
  double delta_k(const ScoreModel& m, const Vec& u, double abar) const;
};

// L_rho(x, z, nu) = -log q0(x) - log c(z) + <nu, x - z> + (rho/2)||x - z||^2.
double augmented_lagrangian(const ScoreModel& m, const GuidanceModel& g,
                            const Vec& x, const Vec& z, const Vec& nu,
                            double rho);

// Squared-increment series m_k = ||z_{k+1}-z_k||^2 + ||x_{k+1}-x_k||^2 from a
// chain with retained states (optimization order, k = 0..T-1).
std::vector<double> step_increments(const RunReport& rep, int chain = 0);

struct DecreaseCheck {
  bool applicable = false;
  std::string note;
  int checked = 0;
  int violations = 0;
  double worst_slack = 0.0;          // minimum slack over checked steps
  std::vector<double> slacks;        // slack_k >= 0 means the inequality holds
};

/* Per-step audit of the sufficient-decrease inequality on a run with
 * retained states. Reports violations beyond a relative tolerance; it is a
 * report, not a pass/fail gate, since the hypothesis set (rho > L, accurate
 * inner solves) may be deliberately violated. The k = 0 step is skipped:
 * Delta_{-1} would bound the initializer, which no inner loop produced. */
DecreaseCheck check_sufficient_decrease(const RunReport& rep,
                                        const ScoreModel& m,
                                        const GuidanceModel& g,
                                        const TheoryConstants& consts,
                                        int chain = 0, double rel_tol = 1e-9);

struct RateEstimate {
  bool ok = false;
  std::string note;
  double slope = 0.0;  // least-squares slope of log min_j m_j vs log T
  bool pass = false;   // slope <= -1 within 0.15
  std::vector<double> T_values;
  std::vector<double> min_m;
};

// Sublinear-rate probe over >= 3 runs of the same task at different T.
RateEstimate rate_estimate(const std::vector<const RunReport*>& reports);

// (primal, dual) residual series of one chain.
std::pair<std::vector<double>, std::vector<double>> residual_series(
    const RunReport& rep, int chain = 0);

// Offline recomputation gap: max over retained steps of the relative
// difference between the logged Lagrangian and augmented_lagrangian on the
// retained (x, z, nu).
double lagrangian_consistency_gap(const RunReport& rep, const ScoreModel& m,
                                  const GuidanceModel& g, int chain = 0);

// Smoothness bound of -log p0 estimated by sampling the Hessian spectral
// norm at prior draws and applying a safety factor.
double estimate_smoothness(const ScoreModel& m, Rng& rng, int n_points = 1000,
                           double safety = 1.2);

struct StationarityGap {
  double max_increment = 0.0;  // max of final (x, z, nu) step norms
  double primal = 0.0;         // ||x0 - z0||
  double grad_norm = 0.0;      // ||grad (log q0 + log c)(x0)||
};

// Fixed-point audit: if the final increments vanish the limit must satisfy
// x = z and stationarity of log q0 + log c.
StationarityGap stationarity_gap(const RunReport& rep, const ScoreModel& m,
                                 const GuidanceModel& g, int chain = 0);

struct ProxGapSample {
  int t = 0;
  double gap = 0.0;      // prox objective at the reverse step minus the minimum
  double delta_t = 0.0;  // the claimed bound
};

/* Sufficient-decrease bound for a single reverse step: at random (v, t),
 * compares the objective -log p0(x) + (1/(2 lambda_t))||x - v||^2 with
 * lambda_t = beta_t/(1-beta_t) at the deterministic reverse step against its
 * exact minimum (numeric prox), and reports the claimed bound delta_t. */
std::vector<ProxGapSample> reverse_step_prox_gap(const NoiseSchedule& s,
                                           const ScoreModel& m, double L,
                                           Rng& rng, int n_samples);

// Convex-combination bookkeeping behind the o(1/T) rate: with w_k = 2/(k+1)
// and lambda_{k+1} = (1-w_k) lambda_k + w_k m_k (lambda_0 = m_0), checks
// min_{j<k} m_j <= lambda_k at every k.
bool robbins_siegmund_check(const std::vector<double>& m);

}  // namespace diffadmm
