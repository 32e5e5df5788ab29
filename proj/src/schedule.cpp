#include "diffadmm/schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace diffadmm {

void NoiseSchedule::check_step(int t) const {
  if (t < 1 || t > T)
    throw std::out_of_range("step index t=" + std::to_string(t) +
                            " outside 1.." + std::to_string(T));
}

double NoiseSchedule::beta(int t) const {
  check_step(t);
  return betas[t - 1];
}

double NoiseSchedule::alpha(int t) const {
  check_step(t);
  return alphas[t - 1];
}

double NoiseSchedule::alpha_bar(int t) const {
  if (t == 0) return 1.0;
  check_step(t);
  return alpha_bars[t - 1];
}

double NoiseSchedule::reverse_noise_std(int t) const {
  check_step(t);
  return std::sqrt((1.0 - alpha_bar(t - 1)) / (1.0 - alpha_bar(t)) * beta(t));
}

NoiseSchedule make_linear_schedule(int T, double beta_start, double beta_end) {
  if (T < 1) throw std::invalid_argument("make_linear_schedule: T must be >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
    throw std::invalid_argument(
        "make_linear_schedule: need 0 < beta_start <= beta_end < 1");
  NoiseSchedule s;
  s.T = T;
  s.betas.resize(T);
  s.alphas.resize(T);
  s.alpha_bars.resize(T);
  double abar = 1.0;
  for (int i = 0; i < T; ++i) {
    const double frac = T == 1 ? 0.0 : static_cast<double>(i) / (T - 1);
    s.betas[i] = beta_start + frac * (beta_end - beta_start);
    s.alphas[i] = 1.0 - s.betas[i];
    abar *= s.alphas[i];
    s.alpha_bars[i] = abar;
  }
  return s;
}

Vec forward_sample(const NoiseSchedule& s, const Vec& x0, int t,
                   const Vec& eps) {
  s.check_step(t);
  if (x0.size() != eps.size())
    throw std::invalid_argument("forward_sample: x0/eps dimension mismatch");
  const double abar = s.alpha_bar(t);
  return std::sqrt(abar) * x0 + std::sqrt(1.0 - abar) * eps;
}

}  // namespace diffadmm
