#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <functional>
#include <string>

namespace diffadmm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Dense oracles only; keeps every covariance/eigen computation exact.
inline constexpr int kMaxDim = 512;

/* Counter-based RNG (Philox4x64-10). A generator is identified by
 * (seed, stream): equal pairs reproduce the exact same sequence on any
 * platform, and distinct streams are statistically independent, so chains
 * can run in parallel without sharing state. */
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();
  double next_uniform();  // (0, 1]
  double next_normal();   // standard normal, Box-Muller
  Vec normal_vec(int dim);

  std::uint64_t seed() const { return key_[0]; }
  std::uint64_t stream() const { return key_[1]; }

 private:
  void refill();

  std::array<std::uint64_t, 2> key_;
  std::array<std::uint64_t, 4> counter_;
  std::array<std::uint64_t, 4> buf_;
  int buf_pos_;
  double cached_normal_;
  bool has_cached_normal_;
};

// Central differences, fixed step h per coordinate.
Vec finite_diff_grad(const std::function<double(const Vec&)>& f, const Vec& x,
                     double h);

// Jacobian of a vector field by central differences (used for Hessians of
// log-densities via their score).
Mat finite_diff_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x,
                         double h);

// Symmetric PSD square root via eigendecomposition; negative eigenvalues
// are clamped to zero.
Mat symmetric_sqrt(const Mat& a);

double spectral_norm(const Mat& a);

// Runs fn(0..n-1) on a small thread pool. Results must be written to
// disjoint slots; iteration order is unspecified.
void parallel_for(int n, const std::function<void(int)>& fn,
                  int max_threads = 0);

// Shortest decimal representation that round-trips a double ("%.17g"),
// locale-independent. Infinities print as "inf"/"-inf".
std::string format_double(double v);

}  // namespace diffadmm
