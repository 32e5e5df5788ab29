#pragma once

#include "diffadmm/core.hpp"
#include "diffadmm/guidance.hpp"
#include "diffadmm/schedule.hpp"
#include "diffadmm/scores.hpp"

#include <functional>

namespace diffadmm {

// Closed-form prox of g(x) = ||x - mean||^2 / (2 variance) at v:
//   argmin_x g(x) + ||x - v||^2 / (2 lambda) = (variance v + lambda mean) / (variance + lambda).
Vec prox_quadratic(const Vec& mean, double variance, const Vec& v, double lambda);

// Smooth objective + prox parameters for the numeric oracle. The caller
// guarantees that f + ||. - center||^2/(2 lambda) is strongly convex on the
// region explored (lambda < 1/l for l-weakly convex f).
struct ProxProblem {
  std::function<double(const Vec&)> f;
  std::function<Vec(const Vec&)> grad;
  Vec center;
  double lambda;
};

struct ProxResult {
  Vec x;
  double grad_norm = 0.0;  // first-order optimality residual at x
  int iters = 0;
  bool converged = false;
};

// Brute-force prox oracle: damped Newton on f(x) + ||x - center||^2/(2 lambda)
// (Hessian by finite differences of grad) until the gradient norm is <= tol.
// Test reference for every other prox implementation.
ProxResult prox_numeric(const ProxProblem& p, double tol, int max_iters = 200);

/* One reverse-diffusion step at v with step-t coefficients:
 *   (1/sqrt(alpha_t)) (v + beta_t score(v, abar_t))
 * plus, iff eps is given, the transition noise reverse_noise_std(t) * eps
 * (zero at t = 1 since abar_0 = 1). Deterministic when eps is null. This is
 * the first-order surrogate for the prox of -log p0 with parameter
 * lambda = beta_t / (1 - beta_t), after rescaling by 1/sqrt(alpha_t). */
Vec diffusion_prox_step(const NoiseSchedule& s, const ScoreModel& m,
                        const Vec& v, int t, const Vec* eps = nullptr);

enum class ScoreMode { frozen, live };

struct InnerResult {
  Vec z;
  bool diverged = false;
  int iters = 0;
};

/* Inexact prox of the guidance side by K+1 gradient-descent iterations:
 *   z <- z - eta rho (z - x - nu/rho) + eta (1/sqrt(abar)) grad_log_c(ztilde0(z))
 * where ztilde0(z) = (z + (1-abar) s)/sqrt(abar) with the score s either
 * frozen at s_ref (exact chain rule, the inner problem is then quadratic for
 * quadratic guidance) or re-evaluated at the current z (live; the
 * (1/sqrt(abar)) Jacobian is then a first-order approximation). Iterates
 * whose norm exceeds divergence_bound abort with diverged = true. */
InnerResult guidance_prox_inexact(const GuidanceModel& g, const ScoreModel& m,
                                  Vec z_init, const Vec& x, const Vec& nu,
                                  double rho, double eta, int K, double abar,
                                  ScoreMode mode, const Vec* s_ref = nullptr,
                                  double divergence_bound = 1e6);

}  // namespace diffadmm
