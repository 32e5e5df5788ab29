#include "diffadmm/scores.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace diffadmm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double gauss_log_density(const Vec& x, const Vec& mean, double var) {
  const double d = static_cast<double>(x.size());
  return -0.5 * (x - mean).squaredNorm() / var - 0.5 * d * (kLog2Pi + std::log(var));
}

}  // namespace

void ScoreModel::check_args(const Vec& x, double abar) const {
  if (x.size() != dim())
    throw std::invalid_argument("score model: dimension mismatch");
  if (!(abar > 0.0 && abar <= 1.0))
    throw std::invalid_argument("score model: abar must be in (0, 1]");
}

Vec tweedie_denoise(const ScoreModel& m, const Vec& z, double abar) {
  if (!(abar > 0.0 && abar <= 1.0))
    throw std::invalid_argument("tweedie_denoise: abar must be in (0, 1]");
  if (abar == 1.0) return z;  // no noise left to remove
  return (z + (1.0 - abar) * m.score(z, abar)) / std::sqrt(abar);
}

GaussianScoreModel::GaussianScoreModel(Vec mean, double variance)
    : mean_(std::move(mean)), variance_(variance) {
  if (variance_ <= 0.0)
    throw std::invalid_argument("GaussianScoreModel: variance must be > 0");
  if (mean_.size() < 1 || mean_.size() > kMaxDim)
    throw std::invalid_argument("GaussianScoreModel: bad dimension");
}

Vec GaussianScoreModel::score(const Vec& x, double abar) const {
  check_args(x, abar);
  const double v = abar * variance_ + 1.0 - abar;
  return -(x - std::sqrt(abar) * mean_) / v;
}

double GaussianScoreModel::noised_log_density(const Vec& x, double abar) const {
  check_args(x, abar);
  const double v = abar * variance_ + 1.0 - abar;
  return gauss_log_density(x, Vec(std::sqrt(abar) * mean_), v);
}

double GaussianScoreModel::log_density0(const Vec& x) const {
  return gauss_log_density(x, mean_, variance_);
}

std::optional<double> GaussianScoreModel::smoothness_bound() const {
  return 1.0 / variance_;
}

Vec GaussianScoreModel::sample0(Rng& rng) const {
  return mean_ + std::sqrt(variance_) * rng.normal_vec(dim());
}

MixtureScoreModel::MixtureScoreModel(Vec weights, std::vector<Vec> means,
                                     Vec variances)
    : weights_(std::move(weights)),
      means_(std::move(means)),
      variances_(std::move(variances)) {
  const int k = static_cast<int>(means_.size());
  if (k < 1 || weights_.size() != k || variances_.size() != k)
    throw std::invalid_argument("MixtureScoreModel: component count mismatch");
  double wsum = 0.0;
  for (int i = 0; i < k; ++i) {
    if (weights_[i] < 0.0)
      throw std::invalid_argument("MixtureScoreModel: negative weight");
    if (variances_[i] <= 0.0)
      throw std::invalid_argument("MixtureScoreModel: variance must be > 0");
    if (means_[i].size() != means_[0].size())
      throw std::invalid_argument("MixtureScoreModel: mean dimension mismatch");
    wsum += weights_[i];
  }
  if (std::abs(wsum - 1.0) > 1e-12)
    throw std::invalid_argument("MixtureScoreModel: weights must sum to 1");
}

Vec MixtureScoreModel::score(const Vec& x, double abar) const {
  check_args(x, abar);
  const int k = components();
  // responsibilities via logsumexp, then score = sum_i r_i s_i
  Vec logp(k);
  for (int i = 0; i < k; ++i) {
    const double v = abar * variances_[i] + 1.0 - abar;
    logp[i] = std::log(weights_[i]) +
              gauss_log_density(x, Vec(std::sqrt(abar) * means_[i]), v);
  }
  const double m = logp.maxCoeff();
  Vec r = (logp.array() - m).exp();
  r /= r.sum();
  Vec s = Vec::Zero(dim());
  for (int i = 0; i < k; ++i) {
    const double v = abar * variances_[i] + 1.0 - abar;
    s += r[i] * (-(x - std::sqrt(abar) * means_[i]) / v);
  }
  return s;
}

double MixtureScoreModel::noised_log_density(const Vec& x, double abar) const {
  check_args(x, abar);
  const int k = components();
  Vec logp(k);
  for (int i = 0; i < k; ++i) {
    const double v = abar * variances_[i] + 1.0 - abar;
    logp[i] = std::log(weights_[i]) +
              gauss_log_density(x, Vec(std::sqrt(abar) * means_[i]), v);
  }
  const double m = logp.maxCoeff();
  return m + std::log((logp.array() - m).exp().sum());
}

double MixtureScoreModel::log_density0(const Vec& x) const {
  const int k = components();
  Vec logp(k);
  for (int i = 0; i < k; ++i)
    logp[i] = std::log(weights_[i]) + gauss_log_density(x, means_[i], variances_[i]);
  const double m = logp.maxCoeff();
  return m + std::log((logp.array() - m).exp().sum());
}

Vec MixtureScoreModel::sample0(Rng& rng) const {
  const double u = rng.next_uniform();
  double acc = 0.0;
  int pick = components() - 1;
  for (int i = 0; i < components(); ++i) {
    acc += weights_[i];
    if (u <= acc) {
      pick = i;
      break;
    }
  }
  return means_[pick] + std::sqrt(variances_[pick]) * rng.normal_vec(dim());
}

EmpiricalScoreModel::EmpiricalScoreModel(Mat dataset) : data_(std::move(dataset)) {
  if (data_.rows() < 1 || data_.cols() < 1 || data_.cols() > kMaxDim)
    throw std::invalid_argument("EmpiricalScoreModel: bad dataset shape");
}

Vec EmpiricalScoreModel::score(const Vec& x, double abar) const {
  check_args(x, abar);
  if (abar == 1.0)
    throw std::invalid_argument(
        "EmpiricalScoreModel: noised marginal is degenerate at abar = 1");
  const int n = static_cast<int>(data_.rows());
  const double v = 1.0 - abar;
  Vec logp(n);
  for (int i = 0; i < n; ++i)
    logp[i] = -0.5 * (x - std::sqrt(abar) * data_.row(i).transpose()).squaredNorm() / v;
  const double m = logp.maxCoeff();
  Vec r = (logp.array() - m).exp();
  r /= r.sum();
  Vec s = Vec::Zero(dim());
  for (int i = 0; i < n; ++i)
    s += r[i] * (-(x - std::sqrt(abar) * data_.row(i).transpose()) / v);
  return s;
}

double EmpiricalScoreModel::noised_log_density(const Vec& x, double abar) const {
  check_args(x, abar);
  if (abar == 1.0) return log_density0(x);
  const int n = static_cast<int>(data_.rows());
  const double v = 1.0 - abar;
  Vec logp(n);
  for (int i = 0; i < n; ++i)
    logp[i] = gauss_log_density(x, Vec(std::sqrt(abar) * data_.row(i).transpose()), v) -
              std::log(static_cast<double>(n));
  const double m = logp.maxCoeff();
  return m + std::log((logp.array() - m).exp().sum());
}

double EmpiricalScoreModel::log_density0(const Vec& x) const {
  for (int i = 0; i < data_.rows(); ++i)
    if ((x - data_.row(i).transpose()).norm() == 0.0)
      return std::numeric_limits<double>::infinity();
  return -std::numeric_limits<double>::infinity();
}

Vec EmpiricalScoreModel::sample0(Rng& rng) const {
  const int n = static_cast<int>(data_.rows());
  const int i = std::min(n - 1, static_cast<int>(rng.next_uniform() * n));
  return data_.row(i).transpose();
}

}  // namespace diffadmm
