#pragma once

#include "diffadmm/core.hpp"

namespace diffadmm {

/* Variance schedule of the forward noising process. Steps are indexed
 * t = 1..T; samplers iterate t = T..1. Derived tables satisfy
 *   alpha_t = 1 - beta_t,   abar_t = abar_{t-1} * alpha_t,   abar_0 = 1. */
struct NoiseSchedule {
  int T = 0;
  Vec betas;       // beta_t, index t-1
  Vec alphas;      // 1 - beta_t
  Vec alpha_bars;  // prod_{i<=t} alpha_i

  double beta(int t) const;
  double alpha(int t) const;
  double alpha_bar(int t) const;  // accepts t = 0 (returns 1)

  // Std of the reverse-transition noise, sqrt((1-abar_{t-1})/(1-abar_t) * beta_t).
  double reverse_noise_std(int t) const;

  void check_step(int t) const;  // throws unless 1 <= t <= T
};

// Linearly interpolated betas from beta_start to beta_end inclusive.
// Requires T >= 1 and 0 < beta_start <= beta_end < 1.
NoiseSchedule make_linear_schedule(int T, double beta_start, double beta_end);

// x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps. The caller supplies eps so
// the operation is deterministic.
Vec forward_sample(const NoiseSchedule& s, const Vec& x0, int t,
                   const Vec& eps);

}  // namespace diffadmm
