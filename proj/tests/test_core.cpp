#include "diffadmm/core.hpp"

#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

using namespace diffadmm;

TEST_CASE("philox known answers match the reference implementation") {
  // generated from numpy.random.Philox (4x64, 10 rounds), key = (seed, stream)
  struct Kat {
    std::uint64_t seed, stream;
    std::uint64_t expect[8];
  };
  const Kat kats[] = {
      {0, 0, {0x02f4ba6408e4d89bULL, 0x3dd62b0b9ca8c5b2ULL, 0x1c8667a55d902e79ULL,
              0x907d7a052fd5b4dcULL, 0x809bf322883987c3ULL, 0x471128b9e807f7ddULL,
              0xf250ba0dbec065b7ULL, 0xfc6ed66767a457bcULL}},
      {42, 0, {0xd1f8817d4d62880eULL, 0x307266b65cc8797eULL, 0xde1f04e7f084ed03ULL,
               0x65034a8e78cd1e59ULL, 0x5e3daa8961c3e3d3ULL, 0x6f37dea4a04bd05cULL,
               0x31d3a1ae26e190b9ULL, 0x0fef7fae0ab2a01aULL}},
      {42, 1, {0x719965f2debb5c86ULL, 0xd0ff12852bfefaa0ULL, 0x824f8a46917b59d3ULL,
               0x633af9b3183bb36aULL, 0x0665962d67a5a63aULL, 0x58fb335daa5560b5ULL,
               0xf7121f0faa702e07ULL, 0xc5ae1d90ae3ad1a6ULL}},
      {0xDEADBEEFULL, 7, {0x2f38dff29eecd0c2ULL, 0xd496082438a471b9ULL,
                          0xe725ec4612cd9616ULL, 0x3799182d12a082d9ULL,
                          0xa144229e1d2b8ed4ULL, 0xc95c0f42779ddbcaULL,
                          0x7b48ad3af5423e3fULL, 0x6b5f44e05321c5f0ULL}},
  };
  for (const auto& k : kats) {
    Rng rng(k.seed, k.stream);
    for (int i = 0; i < 8; ++i) CHECK(rng.next_u64() == k.expect[i]);
  }
}

TEST_CASE("identical (seed, stream) reproduces the sequence") {
  Rng a(123, 5), b(123, 5);
  const Vec va = a.normal_vec(32);
  const Vec vb = b.normal_vec(32);
  CHECK((va - vb).norm() == 0.0);
}

TEST_CASE("substreams share no raw outputs") {
  Rng a(9001, 0), b(9001, 1);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 10000; ++i) seen.insert(a.next_u64());
  for (int i = 0; i < 10000; ++i) CHECK(seen.count(b.next_u64()) == 0);
}

TEST_CASE("normal draws have unit moments") {
  Rng rng(7, 0);
  const int n = 100000;
  double sum = 0, sumsq = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.next_normal();
    sum += z;
    sumsq += z * z;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(mean > -0.02);
  CHECK(mean < 0.02);
  CHECK(var > 0.98);
  CHECK(var < 1.02);
}

TEST_CASE("finite differences recover simple gradients") {
  const auto quad = [](const Vec& x) { return 0.5 * x.squaredNorm(); };
  Rng rng(3, 0);
  const Vec x = rng.normal_vec(6);
  const Vec g = finite_diff_grad(quad, x, 1e-5);
  CHECK((g - x).cwiseAbs().maxCoeff() < 1e-8);

  const auto constant = [](const Vec&) { return 4.2; };
  CHECK(finite_diff_grad(constant, x, 1e-5).norm() == 0.0);
}

TEST_CASE("symmetric eigendecomposition round-trips at dim 64") {
  Rng rng(17, 0);
  Mat a(64, 64);
  for (int i = 0; i < 64; ++i) a.col(i) = rng.normal_vec(64);
  a = Mat(0.5 * (a + a.transpose()));
  Eigen::SelfAdjointEigenSolver<Mat> es(a);
  const Mat rec = es.eigenvectors() * es.eigenvalues().asDiagonal() *
                  es.eigenvectors().transpose();
  CHECK((rec - a).cwiseAbs().maxCoeff() < 1e-10);

  const Mat psd = a * a.transpose();
  const Mat r = symmetric_sqrt(psd);
  CHECK((r * r - psd).cwiseAbs().maxCoeff() < 1e-8 * psd.cwiseAbs().maxCoeff());
}

TEST_CASE("parallel_for covers every index once") {
  std::vector<int> hits(1000, 0);
  parallel_for(1000, [&](int i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
}

TEST_CASE("format_double round-trips and is locale independent") {
  for (double v : {1.0, -0.1, 3.141592653589793, 1e-300, 0.05}) {
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(1.5) == "1.5");
}
