#pragma once

#include "diffadmm/core.hpp"
#include "diffadmm/guidance.hpp"
#include "diffadmm/scores.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace diffadmm {

using json = nlohmann::json;

struct OracleResult {
  Vec mean;
  Mat cov;
  double ess = 0.0;  // effective sample size; NaN for exact oracles
  std::string method;
  bool reliable = true;  // importance results with ESS < 50 are flagged
};

// Conjugate-Gaussian posterior for prior N(prior_mean, prior_var I) and
// measurement y = A x + N(0, sigma_y^2 I):
//   cov  = (I/prior_var + A^T A/sigma_y^2)^-1
//   mean = cov (prior_mean/prior_var + A^T y/sigma_y^2)
OracleResult exact_gaussian_posterior(const Vec& prior_mean, double prior_var,
                                      const Mat& a, const Vec& y,
                                      double sigma_y);

// Self-normalized importance estimate of the posterior with proposal = prior
// and weights proportional to exp(log_c). Deterministic given the seed;
// batches run in parallel on per-batch substreams.
OracleResult importance_posterior(const ScoreModel& prior,
                                  const GuidanceModel& g, int n,
                                  std::uint64_t seed);

// 10 log10(peak^2 / MSE); +inf when MSE = 0.
double psnr(const Vec& x, const Vec& ref, double peak);

// Gaussian 2-Wasserstein distance (the metric, not its square):
//   W2^2 = ||m1-m2||^2 + tr(C1 + C2 - 2 (C2^{1/2} C1 C2^{1/2})^{1/2}).
double wasserstein2_gaussian(const Vec& m1, const Mat& c1, const Vec& m2,
                             const Mat& c2);

// Mean and covariance of the clean prior law, used as the reference when a
// sampler runs without guidance.
std::pair<Vec, Mat> prior_moments(const ScoreModel& m);

/* A benchmark problem: prior + condition + the ground truth that generated
 * the condition. The truth x* is drawn from the prior with truth_seed and
 * the measurement is y = A x* + sigma_y eps (waypoint targets analogously),
 * so the posterior the oracle reports is the one the sampler should hit. */
struct Task {
  std::string name;
  int dim = 0;
  json spec;  // canonical inline spec (hash/serialization source)
  std::shared_ptr<ScoreModel> prior;
  std::shared_ptr<GuidanceModel> guidance;
  Vec x_star;
  double sigma_y = 0.0;
  std::string oracle_kind;  // conjugate-exact | importance-sampling | none
  std::uint64_t truth_seed = 0;

  // Present when the conjugate oracle applies.
  std::optional<Vec> prior_mean;
  std::optional<double> prior_var;
};

std::vector<std::string> preset_names();
json preset_spec(const std::string& name);

// Builds a task from a preset name or an inline spec object.
Task build_task(const json& spec);

// FNV-1a over the canonical spec dump; keys oracle cache entries.
std::uint64_t content_hash(const json& spec);

// Oracle for the task, recomputed on demand and cached as JSON under
// cache_dir (keyed by content hash) when cache_dir is non-empty.
OracleResult task_oracle(const Task& task, const std::string& cache_dir = "",
                         int is_samples = 200000,
                         std::uint64_t is_seed = 424242);

}  // namespace diffadmm
