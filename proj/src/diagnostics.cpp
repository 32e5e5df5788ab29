#include "diffadmm/diagnostics.hpp"

#include "diffadmm/prox.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace diffadmm {

double TheoryConstants::Delta(int K) const {
  return std::sqrt(static_cast<double>(dim)) *
         std::pow(2.0 * L / (rho + L), K);
}

double TheoryConstants::delta_k(const ScoreModel& m, const Vec& u,
                                double abar) const {
  const Vec x0t = tweedie_denoise(m, u, abar);
  const double ratio = (Qf() - 1.0) / (Qf() + 1.0);
  return delta + 0.5 * L * ratio * ratio * (u - x0t).squaredNorm();
}

double augmented_lagrangian(const ScoreModel& m, const GuidanceModel& g,
                            const Vec& x, const Vec& z, const Vec& nu,
                            double rho) {
  if (x.size() != z.size() || x.size() != nu.size())
    throw std::invalid_argument("augmented_lagrangian: dimension mismatch");
  return -m.log_density0(x) - g.log_c(z) + nu.dot(x - z) +
         0.5 * rho * (x - z).squaredNorm();
}

namespace {

const ChainResult& retained_chain(const RunReport& rep, int chain) {
  const ChainResult& c = rep.chains.at(chain);
  if (c.failed) throw std::invalid_argument("diagnostics: chain failed");
  if (c.xs.empty())
    throw std::invalid_argument("diagnostics: chain has no retained states");
  return c;
}

}  // namespace

std::vector<double> step_increments(const RunReport& rep, int chain) {
  const ChainResult& c = retained_chain(rep, chain);
  std::vector<double> m;
  m.reserve(c.xs.size() - 1);
  for (std::size_t k = 0; k + 1 < c.xs.size(); ++k) {
    double v = (c.xs[k + 1] - c.xs[k]).squaredNorm();
    if (!c.zs.empty()) v += (c.zs[k + 1] - c.zs[k]).squaredNorm();
    m.push_back(v);
  }
  return m;
}

DecreaseCheck check_sufficient_decrease(const RunReport& rep,
                                        const ScoreModel& m,
                                        const GuidanceModel& g,
                                        const TheoryConstants& consts,
                                        int chain, double rel_tol) {
  DecreaseCheck out;
  if (!consts.applicable()) {
    out.note = "not applicable: rho <= L";
    return out;
  }
  if (rep.kind != "admm") {
    out.note = "not applicable: report is not an admm run";
    return out;
  }
  const ChainResult& c = retained_chain(rep, chain);
  const int T = rep.schedule.T;
  const double rho = consts.rho;
  out.applicable = true;
  out.note = "delta_k uses the Tweedie estimate at the prox input";

  std::vector<double> lagr(c.xs.size());
  for (std::size_t k = 0; k < c.xs.size(); ++k)
    lagr[k] = augmented_lagrangian(m, g, c.xs[k], c.zs[k], c.nus[k], rho);

  for (std::size_t k = 1; k + 1 < c.xs.size(); ++k) {
    const int t = T - static_cast<int>(k);  // step producing iterate k+1
    const double m_k = (c.zs[k + 1] - c.zs[k]).squaredNorm() +
                       (c.xs[k + 1] - c.xs[k]).squaredNorm();
    const double dk = consts.Delta(rep.cfg.inner.at(t, T));
    const double dk1 = consts.Delta(rep.cfg.inner.at(t + 1, T));
    const Vec u = c.zs[k] - c.nus[k] / rho;
    const double delta = consts.delta_k(m, u, rep.schedule.alpha_bar(t));
    const double slack = lagr[k] + consts.c2() * dk * dk +
                         consts.c3() * dk1 * dk1 + consts.c4() * delta -
                         consts.c1() * m_k - lagr[k + 1];
    out.slacks.push_back(slack);
    ++out.checked;
    const double tol = rel_tol * std::max(1.0, std::abs(lagr[k]));
    if (slack < -tol) ++out.violations;
    out.worst_slack = out.checked == 1 ? slack : std::min(out.worst_slack, slack);
  }
  return out;
}

RateEstimate rate_estimate(const std::vector<const RunReport*>& reports) {
  RateEstimate r;
  if (reports.size() < 3) {
    r.note = "insufficient points: need >= 3 reports over a T grid";
    return r;
  }
  struct Point {
    double T, min_m;
  };
  std::vector<Point> pts;
  for (const RunReport* rep : reports) {
    const auto m = step_increments(*rep);
    if (m.empty()) {
      r.note = "empty increment series";
      return r;
    }
    const double mn = *std::min_element(m.begin(), m.end());
    pts.push_back({static_cast<double>(rep->schedule.T), mn});
  }
  std::sort(pts.begin(), pts.end(),
            [](const Point& a, const Point& b) { return a.T < b.T; });
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(pts.size());
  for (const auto& p : pts) {
    if (p.min_m <= 0.0) {
      r.note = "non-positive min m_j; slope undefined";
      return r;
    }
    const double lx = std::log(p.T), ly = std::log(p.min_m);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    r.T_values.push_back(p.T);
    r.min_m.push_back(p.min_m);
  }
  r.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  r.pass = r.slope <= -1.0 + 0.15;
  r.ok = true;
  r.note = r.pass ? "slope consistent with o(1/T)" : "slope too shallow";
  return r;
}

std::pair<std::vector<double>, std::vector<double>> residual_series(
    const RunReport& rep, int chain) {
  const ChainResult& c = rep.chains.at(chain);
  std::vector<double> primal, dual;
  primal.reserve(c.steps.size());
  dual.reserve(c.steps.size());
  for (const auto& s : c.steps) {
    primal.push_back(s.primal_res);
    dual.push_back(s.dual_res);
  }
  return {std::move(primal), std::move(dual)};
}

double lagrangian_consistency_gap(const RunReport& rep, const ScoreModel& m,
                                  const GuidanceModel& g, int chain) {
  const ChainResult& c = retained_chain(rep, chain);
  if (c.steps.size() + 1 != c.xs.size())
    throw std::invalid_argument("diagnostics: step/state length mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < c.steps.size(); ++i) {
    const double recomputed = augmented_lagrangian(
        m, g, c.xs[i + 1], c.zs[i + 1], c.nus[i + 1], rep.cfg.rho);
    const double logged = c.steps[i].lagrangian;
    const double rel = std::abs(recomputed - logged) /
                       std::max(1.0, std::abs(logged));
    worst = std::max(worst, rel);
  }
  return worst;
}

double estimate_smoothness(const ScoreModel& m, Rng& rng, int n_points,
                           double safety) {
  const auto clean_score = [&](const Vec& x) { return m.score(x, 1.0); };
  double worst = 0.0;
  for (int i = 0; i < n_points; ++i) {
    const Vec x = m.sample0(rng);
    const Mat h = finite_diff_jacobian(clean_score, x, 1e-5);
    worst = std::max(worst, spectral_norm(Mat(0.5 * (h + h.transpose()))));
  }
  return safety * worst;
}

StationarityGap stationarity_gap(const RunReport& rep, const ScoreModel& m,
                                 const GuidanceModel& g, int chain) {
  const ChainResult& c = retained_chain(rep, chain);
  const std::size_t k = c.xs.size() - 1;
  StationarityGap out;
  out.max_increment = std::max(
      {(c.xs[k] - c.xs[k - 1]).norm(), (c.zs[k] - c.zs[k - 1]).norm(),
       (c.nus[k] - c.nus[k - 1]).norm()});
  out.primal = (c.xs[k] - c.zs[k]).norm();
  out.grad_norm = (m.score(c.xs[k], 1.0) + g.grad_log_c(c.xs[k])).norm();
  return out;
}

std::vector<ProxGapSample> reverse_step_prox_gap(const NoiseSchedule& s,
                                           const ScoreModel& m, double L,
                                           Rng& rng, int n_samples) {
  std::vector<ProxGapSample> out;
  out.reserve(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    const int t =
        1 + std::min(s.T - 1, static_cast<int>(rng.next_uniform() * s.T));
    const Vec v = rng.normal_vec(m.dim());
    const double beta = s.beta(t);
    const double lambda = beta / (1.0 - beta);

    const Vec xhat = diffusion_prox_step(s, m, v, t);
    ProxProblem p;
    p.f = [&](const Vec& x) { return -m.log_density0(x); };
    p.grad = [&](const Vec& x) -> Vec { return -m.score(x, 1.0); };
    p.center = v;
    p.lambda = lambda;
    const ProxResult pr = prox_numeric(p, 1e-11);
    if (!pr.converged)
      throw std::runtime_error("reverse_step_prox_gap: prox oracle did not converge");
    const auto h = [&](const Vec& x) {
      return p.f(x) + (x - v).squaredNorm() / (2.0 * lambda);
    };

    TheoryConstants consts;
    consts.L = L;
    consts.rho = 1.0 / lambda;  // curvature of the prox quadratic
    consts.dim = m.dim();
    ProxGapSample smp;
    smp.t = t;
    smp.gap = h(xhat) - h(pr.x);
    smp.delta_t = consts.delta_k(m, v, s.alpha_bar(t));
    out.push_back(smp);
  }
  return out;
}

bool robbins_siegmund_check(const std::vector<double>& m) {
  if (m.empty()) return true;
  double lambda = m[0];
  double running_min = m[0];
  for (std::size_t k = 1; k < m.size(); ++k) {
    // lambda_k is a convex combination of m_0..m_{k-1}
    if (running_min > lambda * (1.0 + 1e-12) + 1e-300) return false;
    const double w = 2.0 / (static_cast<double>(k) + 1.0);
    lambda = (1.0 - w) * lambda + w * m[k];
    running_min = std::min(running_min, m[k]);
  }
  return true;
}

}  // namespace diffadmm
