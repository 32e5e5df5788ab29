#include "diffadmm/guidance.hpp"

#include <cmath>
#include <stdexcept>

namespace diffadmm {

LinearOperator LinearOperator::dense(Mat a) {
  if (a.rows() < 1 || a.cols() < 1)
    throw std::invalid_argument("LinearOperator::dense: empty matrix");
  LinearOperator op;
  op.kind_ = Kind::dense;
  op.rows_ = static_cast<int>(a.rows());
  op.cols_ = static_cast<int>(a.cols());
  op.a_ = std::move(a);
  return op;
}

LinearOperator LinearOperator::mask(std::vector<int> keep, int dim) {
  if (keep.empty()) throw std::invalid_argument("LinearOperator::mask: empty mask");
  for (int i : keep)
    if (i < 0 || i >= dim)
      throw std::invalid_argument("LinearOperator::mask: index out of range");
  LinearOperator op;
  op.kind_ = Kind::mask;
  op.rows_ = static_cast<int>(keep.size());
  op.cols_ = dim;
  op.keep_ = std::move(keep);
  return op;
}

LinearOperator LinearOperator::decimate(int factor, int dim) {
  if (factor < 1 || dim % factor != 0)
    throw std::invalid_argument(
        "LinearOperator::decimate: factor must divide the dimension");
  LinearOperator op;
  op.kind_ = Kind::decimate;
  op.rows_ = dim / factor;
  op.cols_ = dim;
  op.factor_ = factor;
  return op;
}

LinearOperator LinearOperator::convolve(Vec kernel, int dim) {
  if (kernel.size() < 1 || kernel.size() > dim)
    throw std::invalid_argument("LinearOperator::convolve: bad kernel length");
  LinearOperator op;
  op.kind_ = Kind::convolve;
  op.rows_ = dim;
  op.cols_ = dim;
  op.kernel_ = std::move(kernel);
  return op;
}

Vec LinearOperator::apply(const Vec& v) const {
  if (v.size() != cols_)
    throw std::invalid_argument("LinearOperator::apply: dimension mismatch");
  switch (kind_) {
    case Kind::dense:
      return a_ * v;
    case Kind::mask: {
      Vec out(rows_);
      for (int i = 0; i < rows_; ++i) out[i] = v[keep_[i]];
      return out;
    }
    case Kind::decimate: {
      Vec out(rows_);
      for (int i = 0; i < rows_; ++i)
        out[i] = v.segment(i * factor_, factor_).mean();
      return out;
    }
    case Kind::convolve: {
      // y_i = sum_j k_j v_{(i+j) mod n}, kernel anchored at offset 0
      Vec out = Vec::Zero(rows_);
      const int n = cols_;
      const int m = static_cast<int>(kernel_.size());
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) out[i] += kernel_[j] * v[(i + j) % n];
      return out;
    }
  }
  throw std::logic_error("LinearOperator::apply: unreachable");
}

Vec LinearOperator::apply_adjoint(const Vec& u) const {
  if (u.size() != rows_)
    throw std::invalid_argument("LinearOperator::apply_adjoint: dimension mismatch");
  switch (kind_) {
    case Kind::dense:
      return a_.transpose() * u;
    case Kind::mask: {
      Vec out = Vec::Zero(cols_);
      for (int i = 0; i < rows_; ++i) out[keep_[i]] += u[i];
      return out;
    }
    case Kind::decimate: {
      Vec out(cols_);
      for (int i = 0; i < rows_; ++i)
        out.segment(i * factor_, factor_).setConstant(u[i] / factor_);
      return out;
    }
    case Kind::convolve: {
      Vec out = Vec::Zero(cols_);
      const int n = cols_;
      const int m = static_cast<int>(kernel_.size());
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) out[(i + j) % n] += kernel_[j] * u[i];
      return out;
    }
  }
  throw std::logic_error("LinearOperator::apply_adjoint: unreachable");
}

Mat LinearOperator::to_dense() const {
  Mat a(rows_, cols_);
  Vec e = Vec::Zero(cols_);
  for (int j = 0; j < cols_; ++j) {
    e[j] = 1.0;
    a.col(j) = apply(e);
    e[j] = 0.0;
  }
  return a;
}

double LinearOperator::operator_norm() const { return spectral_norm(to_dense()); }

void GuidanceModel::check_dim(const Vec& z0) const {
  if (z0.size() != dim())
    throw std::invalid_argument("guidance model: dimension mismatch");
}

LinearGaussianGuidance::LinearGaussianGuidance(LinearOperator a, Vec y,
                                               double sigma_y)
    : op_(std::move(a)), y_(std::move(y)), sigma_y_(sigma_y) {
  if (sigma_y_ <= 0.0)
    throw std::invalid_argument("LinearGaussianGuidance: sigma_y must be > 0");
  if (y_.size() != op_.rows())
    throw std::invalid_argument("LinearGaussianGuidance: y/operator mismatch");
  op_norm_ = op_.operator_norm();
}

double LinearGaussianGuidance::log_c(const Vec& z0) const {
  check_dim(z0);
  return -(op_.apply(z0) - y_).squaredNorm() / (2.0 * sigma_y_ * sigma_y_);
}

Vec LinearGaussianGuidance::grad_log_c(const Vec& z0) const {
  check_dim(z0);
  return -op_.apply_adjoint(op_.apply(z0) - y_) / (sigma_y_ * sigma_y_);
}

std::optional<double> LinearGaussianGuidance::smoothness_bound() const {
  return op_norm_ * op_norm_ / (sigma_y_ * sigma_y_);
}

WaypointGuidance::WaypointGuidance(int n_blocks, int block_dim,
                                   std::vector<int> proj_coords,
                                   std::vector<Waypoint> waypoints, double weight)
    : n_blocks_(n_blocks),
      block_dim_(block_dim),
      proj_(std::move(proj_coords)),
      waypoints_(std::move(waypoints)),
      weight_(weight) {
  if (n_blocks_ < 1 || block_dim_ < 1)
    throw std::invalid_argument("WaypointGuidance: bad block layout");
  if (weight_ <= 0.0)
    throw std::invalid_argument("WaypointGuidance: weight must be > 0");
  for (int c : proj_)
    if (c < 0 || c >= block_dim_)
      throw std::invalid_argument("WaypointGuidance: projection coord out of range");
  for (const auto& w : waypoints_) {
    if (w.block < 0 || w.block >= n_blocks_)
      throw std::invalid_argument("WaypointGuidance: waypoint block out of range");
    if (w.target.size() != static_cast<int>(proj_.size()))
      throw std::invalid_argument("WaypointGuidance: target size mismatch");
  }
}

double WaypointGuidance::log_c(const Vec& z0) const {
  check_dim(z0);
  double s = 0.0;
  for (const auto& w : waypoints_) {
    for (std::size_t j = 0; j < proj_.size(); ++j) {
      const double diff = w.target[j] - z0[w.block * block_dim_ + proj_[j]];
      s += diff * diff;
    }
  }
  return -weight_ * s;
}

Vec WaypointGuidance::grad_log_c(const Vec& z0) const {
  check_dim(z0);
  Vec g = Vec::Zero(dim());
  for (const auto& w : waypoints_) {
    for (std::size_t j = 0; j < proj_.size(); ++j) {
      const int idx = w.block * block_dim_ + proj_[j];
      g[idx] += 2.0 * weight_ * (w.target[j] - z0[idx]);
    }
  }
  return g;
}

std::optional<double> WaypointGuidance::smoothness_bound() const {
  // each constrained coordinate contributes 2*weight per waypoint hit
  int max_hits = 0;
  std::vector<int> hits(dim(), 0);
  for (const auto& w : waypoints_)
    for (int c : proj_) max_hits = std::max(max_hits, ++hits[w.block * block_dim_ + c]);
  return 2.0 * weight_ * max_hits;
}

TanhLinearGuidance::TanhLinearGuidance(LinearOperator a, Vec y, double sigma_y)
    : op_(std::move(a)), y_(std::move(y)), sigma_y_(sigma_y) {
  if (sigma_y_ <= 0.0)
    throw std::invalid_argument("TanhLinearGuidance: sigma_y must be > 0");
  if (y_.size() != op_.rows())
    throw std::invalid_argument("TanhLinearGuidance: y/operator mismatch");
}

double TanhLinearGuidance::log_c(const Vec& z0) const {
  check_dim(z0);
  const Vec f = z0.array().tanh();
  return -(op_.apply(f) - y_).squaredNorm() / (2.0 * sigma_y_ * sigma_y_);
}

Vec TanhLinearGuidance::grad_log_c(const Vec& z0) const {
  check_dim(z0);
  const Vec f = z0.array().tanh();
  const Vec back = op_.apply_adjoint(op_.apply(f) - y_) / (sigma_y_ * sigma_y_);
  return -(1.0 - f.array().square()) * back.array();
}

}  // namespace diffadmm
