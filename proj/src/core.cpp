#include "diffadmm/core.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <thread>
#include <vector>

namespace diffadmm {

namespace {

constexpr std::uint64_t kPhiloxM0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kPhiloxM1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kPhiloxW0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kPhiloxW1 = 0xBB67AE8584CAA73BULL;

inline std::uint64_t mulhi64(std::uint64_t a, std::uint64_t b) {
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(a) * b) >> 64);
}

std::array<std::uint64_t, 4> philox4x64_10(std::array<std::uint64_t, 4> ctr,
                                           std::array<std::uint64_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t lo0 = kPhiloxM0 * ctr[0];
    const std::uint64_t hi0 = mulhi64(kPhiloxM0, ctr[0]);
    const std::uint64_t lo1 = kPhiloxM1 * ctr[2];
    const std::uint64_t hi1 = mulhi64(kPhiloxM1, ctr[2]);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : key_{seed, stream},
      counter_{0, 0, 0, 0},
      buf_pos_(4),
      cached_normal_(0.0),
      has_cached_normal_(false) {}

void Rng::refill() {
  // 256-bit counter pre-increment (first block is generated at counter 1)
  for (auto& w : counter_) {
    if (++w != 0) break;
  }
  buf_ = philox4x64_10(counter_, key_);
  buf_pos_ = 0;
}

std::uint64_t Rng::next_u64() {
  if (buf_pos_ >= 4) refill();
  return buf_[buf_pos_++];
}

double Rng::next_uniform() {
  // 53-bit mantissa, mapped to (0, 1]
  return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double Rng::next_normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  const double u1 = next_uniform();
  const double u2 = next_uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  cached_normal_ = r * std::sin(theta);
  has_cached_normal_ = true;
  return r * std::cos(theta);
}

Vec Rng::normal_vec(int dim) {
  if (dim < 1) throw std::invalid_argument("normal_vec: dim must be >= 1");
  Vec out(dim);
  for (int i = 0; i < dim; ++i) out[i] = next_normal();
  return out;
}

Vec finite_diff_grad(const std::function<double(const Vec&)>& f, const Vec& x,
                     double h) {
  if (h <= 0) throw std::invalid_argument("finite_diff_grad: h must be > 0");
  Vec g(x.size());
  Vec xp = x;
  for (int i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    xp[i] = xi + h;
    const double fp = f(xp);
    xp[i] = xi - h;
    const double fm = f(xp);
    xp[i] = xi;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

Mat finite_diff_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x,
                         double h) {
  if (h <= 0)
    throw std::invalid_argument("finite_diff_jacobian: h must be > 0");
  const int n = static_cast<int>(x.size());
  Vec xp = x;
  Mat jac;
  for (int i = 0; i < n; ++i) {
    const double xi = x[i];
    xp[i] = xi + h;
    const Vec fp = f(xp);
    xp[i] = xi - h;
    const Vec fm = f(xp);
    xp[i] = xi;
    if (i == 0) jac.resize(fp.size(), n);
    jac.col(i) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

Mat symmetric_sqrt(const Mat& a) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("symmetric_sqrt: matrix must be square");
  Eigen::SelfAdjointEigenSolver<Mat> es(a);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("symmetric_sqrt: eigendecomposition failed");
  Vec lambda = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().transpose();
}

double spectral_norm(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(a.transpose() * a);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

void parallel_for(int n, const std::function<void(int)>& fn, int max_threads) {
  if (n <= 0) return;
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw <= 0) hw = 1;
  const int workers = std::min(n, max_threads > 0 ? max_threads : hw);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::atomic<bool> failed{false};
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n || failed.load()) return;
        try {
          fn(i);
        } catch (...) {
          failed.store(true);
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failed.load())
    throw std::runtime_error("parallel_for: worker threw an exception");
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace diffadmm
