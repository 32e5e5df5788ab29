#pragma once

#include "diffadmm/core.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace diffadmm {

/* Analytic prior with closed-form noised marginals. For a clean density
 * p0 and abar in (0,1], the noised marginal is the law of
 * sqrt(abar) x0 + sqrt(1-abar) eps, and score(x, abar) is the gradient of
 * its log-density. This is exactly the function a perfectly trained
 * denoiser would represent, so algorithmic claims can be tested without
 * learning error. */
class ScoreModel {
 public:
  virtual ~ScoreModel() = default;

  virtual int dim() const = 0;
  virtual Vec score(const Vec& x, double abar) const = 0;
  virtual double noised_log_density(const Vec& x, double abar) const = 0;
  // log p0(x); -inf for models whose clean law has no density.
  virtual double log_density0(const Vec& x) const = 0;
  // L such that -log p0 is L-smooth, when known in closed form.
  virtual std::optional<double> smoothness_bound() const { return std::nullopt; }
  // Exact i.i.d. draw from the clean law.
  virtual Vec sample0(Rng& rng) const = 0;

 protected:
  void check_args(const Vec& x, double abar) const;
};

// Tweedie posterior-mean reconstruction, (z + (1-abar) score(z)) / sqrt(abar).
// abar = 1 is the identity.
Vec tweedie_denoise(const ScoreModel& m, const Vec& z, double abar);

// Isotropic Gaussian N(mean, variance I). Noised marginal is
// N(sqrt(abar) mean, (abar variance + 1 - abar) I).
class GaussianScoreModel : public ScoreModel {
 public:
  GaussianScoreModel(Vec mean, double variance);

  int dim() const override { return static_cast<int>(mean_.size()); }
  Vec score(const Vec& x, double abar) const override;
  double noised_log_density(const Vec& x, double abar) const override;
  double log_density0(const Vec& x) const override;
  std::optional<double> smoothness_bound() const override;
  Vec sample0(Rng& rng) const override;

  const Vec& mean() const { return mean_; }
  double variance() const { return variance_; }

 private:
  Vec mean_;
  double variance_;
};

// Finite mixture of isotropic Gaussians; weights on the simplex.
class MixtureScoreModel : public ScoreModel {
 public:
  MixtureScoreModel(Vec weights, std::vector<Vec> means, Vec variances);

  int dim() const override { return static_cast<int>(means_[0].size()); }
  Vec score(const Vec& x, double abar) const override;
  double noised_log_density(const Vec& x, double abar) const override;
  double log_density0(const Vec& x) const override;
  Vec sample0(Rng& rng) const override;

  int components() const { return static_cast<int>(means_.size()); }
  const Vec& weights() const { return weights_; }
  const std::vector<Vec>& means() const { return means_; }
  const Vec& variances() const { return variances_; }

 private:
  Vec weights_;
  std::vector<Vec> means_;
  Vec variances_;
};

/* Finite dataset prior: the noised marginal is (1/N) sum_i
 * N(sqrt(abar) x_i, (1-abar) I), the exact minimizer of the denoising
 * score-matching objective on the dataset. The clean law is a sum of
 * point masses, so log_density0 is -inf away from the data and the score
 * requires abar < 1. */
class EmpiricalScoreModel : public ScoreModel {
 public:
  explicit EmpiricalScoreModel(Mat dataset);  // rows are points

  int dim() const override { return static_cast<int>(data_.cols()); }
  Vec score(const Vec& x, double abar) const override;
  double noised_log_density(const Vec& x, double abar) const override;
  double log_density0(const Vec& x) const override;
  Vec sample0(Rng& rng) const override;

  const Mat& dataset() const { return data_; }

 private:
  Mat data_;
};

}  // namespace diffadmm
