#pragma once

#include "diffadmm/core.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace diffadmm {

/* Measurement operators for linear inverse problems. Four kinds:
 *   dense     - arbitrary matrix
 *   mask      - coordinate selection (inpainting)
 *   decimate  - k-fold block averaging (super-resolution)
 *   convolve  - circular convolution (deblurring); periodic boundary makes
 *               the adjoint the reversed kernel
 * apply/apply_adjoint are exact adjoints of each other. */
class LinearOperator {
 public:
  enum class Kind { dense, mask, decimate, convolve };

  static LinearOperator dense(Mat a);
  static LinearOperator mask(std::vector<int> keep, int dim);
  static LinearOperator decimate(int factor, int dim);
  static LinearOperator convolve(Vec kernel, int dim);

  Vec apply(const Vec& v) const;
  Vec apply_adjoint(const Vec& u) const;
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  Kind kind() const { return kind_; }
  Mat to_dense() const;
  double operator_norm() const;  // largest singular value

  // Parameters, exposed for serialization.
  const Mat& matrix() const { return a_; }
  const std::vector<int>& mask_indices() const { return keep_; }
  int decimation_factor() const { return factor_; }
  const Vec& kernel() const { return kernel_; }

 private:
  LinearOperator() = default;
  Kind kind_ = Kind::dense;
  int rows_ = 0, cols_ = 0;
  Mat a_;
  std::vector<int> keep_;
  int factor_ = 1;
  Vec kernel_;
};

// Differentiable condition model: log c(z0, y) and its gradient, evaluated
// at clean samples. Larger log_c means better condition satisfaction.
class GuidanceModel {
 public:
  virtual ~GuidanceModel() = default;

  virtual int dim() const = 0;
  virtual double log_c(const Vec& z0) const = 0;
  virtual Vec grad_log_c(const Vec& z0) const = 0;
  // L such that -log_c is L-smooth, when known.
  virtual std::optional<double> smoothness_bound() const { return std::nullopt; }

 protected:
  void check_dim(const Vec& z0) const;
};

// log c(z) = -||A z - y||^2 / (2 sigma_y^2). With sigma_y = 1 this is the
// plain squared measurement loss up to the 1/2 factor.
class LinearGaussianGuidance : public GuidanceModel {
 public:
  LinearGaussianGuidance(LinearOperator a, Vec y, double sigma_y);

  int dim() const override { return op_.cols(); }
  double log_c(const Vec& z0) const override;
  Vec grad_log_c(const Vec& z0) const override;
  std::optional<double> smoothness_bound() const override;

  const LinearOperator& op() const { return op_; }
  const Vec& y() const { return y_; }
  double sigma_y() const { return sigma_y_; }

 private:
  LinearOperator op_;
  Vec y_;
  double sigma_y_;
  double op_norm_;
};

/* Trajectory guidance: the sample is n_blocks consecutive blocks of
 * block_dim coordinates; each waypoint pins the projected coordinates of
 * one block. log c(z) = -weight * sum_i ||y_i - proj(z, block_i)||^2. */
class WaypointGuidance : public GuidanceModel {
 public:
  struct Waypoint {
    int block;
    Vec target;  // size = proj_coords.size()
  };

  WaypointGuidance(int n_blocks, int block_dim, std::vector<int> proj_coords,
                   std::vector<Waypoint> waypoints, double weight);

  int dim() const override { return n_blocks_ * block_dim_; }
  double log_c(const Vec& z0) const override;
  Vec grad_log_c(const Vec& z0) const override;
  std::optional<double> smoothness_bound() const override;

  int n_blocks() const { return n_blocks_; }
  int block_dim() const { return block_dim_; }
  const std::vector<int>& proj_coords() const { return proj_; }
  const std::vector<Waypoint>& waypoints() const { return waypoints_; }
  double weight() const { return weight_; }

 private:
  int n_blocks_, block_dim_;
  std::vector<int> proj_;
  std::vector<Waypoint> waypoints_;
  double weight_;
};

// Smooth non-linear guidance, log c(z) = -||A tanh(z) - y||^2 / (2 sigma^2).
// Stands in for learned feature extractors at desk scale; gradient by the
// chain rule through the componentwise tanh.
class TanhLinearGuidance : public GuidanceModel {
 public:
  TanhLinearGuidance(LinearOperator a, Vec y, double sigma_y);

  int dim() const override { return op_.cols(); }
  double log_c(const Vec& z0) const override;
  Vec grad_log_c(const Vec& z0) const override;

  const LinearOperator& op() const { return op_; }
  const Vec& y() const { return y_; }
  double sigma_y() const { return sigma_y_; }

 private:
  LinearOperator op_;
  Vec y_;
  double sigma_y_;
};

}  // namespace diffadmm
