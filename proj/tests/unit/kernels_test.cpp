#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "mdn/kernels.hpp"

namespace mdn::kernels {
namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

double max_rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]) / std::max(1.0, std::abs(a[i])));
  }
  return worst;
}

// Sizes chosen to hit every remainder path of the 4x8 register block.
const std::vector<std::size_t> kSizes{1, 3, 4, 5, 7, 8, 9, 13, 16, 33};

class SimdEquivalence : public ::testing::Test {
 protected:
  void SetUp() override {
    if (!avx2_table()) GTEST_SKIP() << "AVX2/FMA not available";
  }
};

TEST_F(SimdEquivalence, GemmVariantsMatchScalar) {
  const KernelTable& ref = scalar_table();
  const KernelTable& simd = *avx2_table();
  std::mt19937_64 rng(1);
  for (std::size_t m : kSizes) {
    for (std::size_t n : kSizes) {
      for (std::size_t k : {1ul, 2ul, 9ul, 27ul}) {
        const auto a = random_vec(m * k, rng);
        const auto b = random_vec(k * n, rng);
        const auto bt = random_vec(n * k, rng);
        const auto c0 = random_vec(m * n, rng);
        auto c_ref = c0, c_simd = c0;
        ref.gemm_nn(m, n, k, a.data(), b.data(), c_ref.data());
        simd.gemm_nn(m, n, k, a.data(), b.data(), c_simd.data());
        EXPECT_LT(max_rel_diff(c_ref, c_simd), 1e-13) << "nn " << m << "x" << n << "x" << k;

        c_ref = c0, c_simd = c0;
        ref.gemm_tn(m, n, k, a.data(), b.data(), c_ref.data());
        simd.gemm_tn(m, n, k, a.data(), b.data(), c_simd.data());
        EXPECT_LT(max_rel_diff(c_ref, c_simd), 1e-13) << "tn " << m << "x" << n << "x" << k;

        c_ref = c0, c_simd = c0;
        ref.gemm_nt(m, n, k, a.data(), bt.data(), c_ref.data());
        simd.gemm_nt(m, n, k, a.data(), bt.data(), c_simd.data());
        EXPECT_LT(max_rel_diff(c_ref, c_simd), 1e-13) << "nt " << m << "x" << n << "x" << k;
      }
    }
  }
}

TEST_F(SimdEquivalence, VectorKernelsMatchScalar) {
  std::mt19937_64 rng(2);
  for (std::size_t n : {0ul, 1ul, 3ul, 4ul, 15ul, 16ul, 17ul, 100ul, 4096ul}) {
    const auto x = random_vec(n, rng);
    const auto y0 = random_vec(n, rng);
    auto y_ref = y0, y_simd = y0;
    scalar_table().axpy(n, 0.37, x.data(), y_ref.data());
    avx2_table()->axpy(n, 0.37, x.data(), y_simd.data());
    EXPECT_LT(max_rel_diff(y_ref, y_simd), 1e-15) << n;
    const double d_ref = scalar_table().dot(n, x.data(), y0.data());
    const double d_simd = avx2_table()->dot(n, x.data(), y0.data());
    EXPECT_NEAR(d_ref, d_simd, 1e-12 * std::max(1.0, std::abs(d_ref))) << n;
  }
}

TEST(Kernels, ScalarGemmAgainstHandComputedProduct) {
  // [1 2; 3 4] * [5 6; 7 8] = [19 22; 43 50]
  const std::vector<double> a{1, 2, 3, 4}, b{5, 6, 7, 8};
  std::vector<double> c(4, 0.0);
  scalar_table().gemm_nn(2, 2, 2, a.data(), b.data(), c.data());
  EXPECT_EQ(c, (std::vector<double>{19, 22, 43, 50}));
  std::vector<double> ct(4, 0.0);
  scalar_table().gemm_tn(2, 2, 2, a.data(), b.data(), ct.data());  // a^T b = [26 30; 38 44]
  EXPECT_EQ(ct, (std::vector<double>{26, 30, 38, 44}));
  std::vector<double> cn(4, 0.0);
  scalar_table().gemm_nt(2, 2, 2, a.data(), b.data(), cn.data());  // a b^T = [17 23; 39 53]
  EXPECT_EQ(cn, (std::vector<double>{17, 23, 39, 53}));
}

TEST(Kernels, BackendSwitchRoundTrips) {
  const Backend original = active().backend;
  set_backend(Backend::Scalar);
  EXPECT_EQ(active().backend, Backend::Scalar);
  if (avx2_table()) {
    set_backend(Backend::Avx2);
    EXPECT_EQ(active().backend, Backend::Avx2);
  }
  set_backend(original);
  EXPECT_THROW(parse_backend("sse9"), std::exception);
}

TEST(Kernels, SpanFrontEndChecksSizes) {
  std::vector<double> a(4), b(4), c(3);
  EXPECT_THROW(gemm_nn(2, 2, 2, a, b, c), std::exception);
  EXPECT_THROW(dot(a, c), std::exception);
}

}  // namespace
}  // namespace mdn::kernels
