#include "diffadmm/prox.hpp"

#include <cmath>
#include <stdexcept>

namespace diffadmm {

Vec prox_quadratic(const Vec& mean, double variance, const Vec& v,
                   double lambda) {
  if (variance <= 0.0)
    throw std::invalid_argument("prox_quadratic: variance must be > 0");
  if (lambda <= 0.0)
    throw std::invalid_argument("prox_quadratic: lambda must be > 0");
  if (mean.size() != v.size())
    throw std::invalid_argument("prox_quadratic: dimension mismatch");
  return (variance * v + lambda * mean) / (variance + lambda);
}

ProxResult prox_numeric(const ProxProblem& p, double tol, int max_iters) {
  if (p.lambda <= 0.0)
    throw std::invalid_argument("prox_numeric: lambda must be > 0");
  if (tol <= 0.0) throw std::invalid_argument("prox_numeric: tol must be > 0");

  const auto grad_phi = [&](const Vec& x) -> Vec {
    return p.grad(x) + (x - p.center) / p.lambda;
  };
  const int d = static_cast<int>(p.center.size());

  // Damped Newton on the strongly convex prox objective, Hessian by central
  // differences of the supplied gradient. Backtracks on the gradient norm.
  ProxResult r;
  r.x = p.center;
  Vec g = grad_phi(r.x);
  r.grad_norm = g.norm();
  for (r.iters = 0; r.iters < max_iters; ++r.iters) {
    if (r.grad_norm <= tol) {
      r.converged = true;
      return r;
    }
    Mat h = finite_diff_jacobian(grad_phi, r.x, 1e-6);
    h = 0.5 * (h + h.transpose());
    Eigen::LLT<Mat> llt(h);
    Vec dir;
    if (llt.info() == Eigen::Success)
      dir = llt.solve(g);
    else
      dir = p.lambda * g;  // safeguard: scaled gradient step
    double s = 1.0;
    for (int bt = 0; bt < 60; ++bt) {
      const Vec cand = r.x - s * dir;
      const Vec gc = grad_phi(cand);
      // demand a real decrease so precision-floor dithering terminates
      if (gc.norm() <= (1.0 - std::max(0.25 * s, 1e-9)) * r.grad_norm) {
        r.x = cand;
        g = gc;
        r.grad_norm = gc.norm();
        break;
      }
      s *= 0.5;
      if (bt == 59) {  // no productive step at any scale; report and stop
        r.converged = r.grad_norm <= tol;
        (void)d;
        return r;
      }
    }
  }
  r.converged = r.grad_norm <= tol;
  return r;
}

Vec diffusion_prox_step(const NoiseSchedule& s, const ScoreModel& m,
                        const Vec& v, int t, const Vec* eps) {
  s.check_step(t);
  const double beta = s.beta(t);
  const double alpha = s.alpha(t);
  Vec out = (v + beta * m.score(v, s.alpha_bar(t))) / std::sqrt(alpha);
  if (eps != nullptr) {
    if (eps->size() != v.size())
      throw std::invalid_argument("diffusion_prox_step: eps dimension mismatch");
    const double sigma = s.reverse_noise_std(t);
    if (sigma > 0.0) out += sigma * (*eps);
  }
  return out;
}

InnerResult guidance_prox_inexact(const GuidanceModel& g, const ScoreModel& m,
                                  Vec z_init, const Vec& x, const Vec& nu,
                                  double rho, double eta, int K, double abar,
                                  ScoreMode mode, const Vec* s_ref,
                                  double divergence_bound) {
  if (rho <= 0.0)
    throw std::invalid_argument("guidance_prox_inexact: rho must be > 0");
  if (eta < 0.0)
    throw std::invalid_argument("guidance_prox_inexact: eta must be >= 0");
  if (K < 0)
    throw std::invalid_argument("guidance_prox_inexact: K must be >= 0");
  if (x.size() != z_init.size() || nu.size() != z_init.size())
    throw std::invalid_argument("guidance_prox_inexact: dimension mismatch");
  if (mode == ScoreMode::frozen && abar < 1.0 && s_ref == nullptr)
    throw std::invalid_argument("guidance_prox_inexact: frozen mode needs s_ref");

  const double sqrt_abar = std::sqrt(abar);
  InnerResult r;
  r.z = std::move(z_init);
  const Vec target = x + nu / rho;
  for (int k = 0; k <= K; ++k, ++r.iters) {
    Vec z0;
    if (abar == 1.0) {
      z0 = r.z;
    } else if (mode == ScoreMode::frozen) {
      z0 = (r.z + (1.0 - abar) * (*s_ref)) / sqrt_abar;
    } else {
      z0 = tweedie_denoise(m, r.z, abar);
    }
    r.z -= eta * rho * (r.z - target);
    r.z += (eta / sqrt_abar) * g.grad_log_c(z0);
    if (!r.z.allFinite() || r.z.norm() > divergence_bound) {
      r.diverged = true;
      return r;
    }
  }
  return r;
}

}  // namespace diffadmm
