// Compiled with -mavx2 -mfma. Nothing in here may run before the dispatcher
// has confirmed CPU support.

#include "mdn/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

namespace mdn::kernels {
namespace {

// Shared register-blocked update C[i0:i0+4, :] += A(i, p) * B[p, :] where
// A(i, p) = a[i * a_row + p * a_col]. Covers both A and A^T layouts.
template <std::size_t Rows>
inline void block_rows(std::size_t i0, std::size_t n, std::size_t k, const double* a, std::size_t a_row,
                       std::size_t a_col, const double* b, double* c) {
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    __m256d acc0[Rows];
    __m256d acc1[Rows];
    for (std::size_t r = 0; r < Rows; ++r) {
      acc0[r] = _mm256_loadu_pd(c + (i0 + r) * n + j);
      acc1[r] = _mm256_loadu_pd(c + (i0 + r) * n + j + 4);
    }
    for (std::size_t p = 0; p < k; ++p) {
      const __m256d b0 = _mm256_loadu_pd(b + p * n + j);
      const __m256d b1 = _mm256_loadu_pd(b + p * n + j + 4);
      for (std::size_t r = 0; r < Rows; ++r) {
        const __m256d av = _mm256_broadcast_sd(a + (i0 + r) * a_row + p * a_col);
        acc0[r] = _mm256_fmadd_pd(av, b0, acc0[r]);
        acc1[r] = _mm256_fmadd_pd(av, b1, acc1[r]);
      }
    }
    for (std::size_t r = 0; r < Rows; ++r) {
      _mm256_storeu_pd(c + (i0 + r) * n + j, acc0[r]);
      _mm256_storeu_pd(c + (i0 + r) * n + j + 4, acc1[r]);
    }
  }
  for (; j + 4 <= n; j += 4) {
    __m256d acc[Rows];
    for (std::size_t r = 0; r < Rows; ++r) acc[r] = _mm256_loadu_pd(c + (i0 + r) * n + j);
    for (std::size_t p = 0; p < k; ++p) {
      const __m256d bv = _mm256_loadu_pd(b + p * n + j);
      for (std::size_t r = 0; r < Rows; ++r) {
        acc[r] = _mm256_fmadd_pd(_mm256_broadcast_sd(a + (i0 + r) * a_row + p * a_col), bv, acc[r]);
      }
    }
    for (std::size_t r = 0; r < Rows; ++r) _mm256_storeu_pd(c + (i0 + r) * n + j, acc[r]);
  }
  for (; j < n; ++j) {
    for (std::size_t r = 0; r < Rows; ++r) {
      double acc = c[(i0 + r) * n + j];
      for (std::size_t p = 0; p < k; ++p) acc += a[(i0 + r) * a_row + p * a_col] * b[p * n + j];
      c[(i0 + r) * n + j] = acc;
    }
  }
}

void gemm_generic(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t a_row, std::size_t a_col,
                  const double* b, double* c) {
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) block_rows<4>(i, n, k, a, a_row, a_col, b, c);
  for (; i < m; ++i) block_rows<1>(i, n, k, a, a_row, a_col, b, c);
}

void gemm_nn_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
  gemm_generic(m, n, k, a, k, 1, b, c);
}

void gemm_tn_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
  gemm_generic(m, n, k, a, 1, m, b, c);
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(std::size_t n, const double* x, const double* y) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 8), _mm256_loadu_pd(y + i + 8), acc2);
    acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 12), _mm256_loadu_pd(y + i + 12), acc3);
  }
  for (; i + 4 <= n; i += 4) acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  double acc = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void gemm_nt_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) c[i * n + j] += dot_avx2(k, a + i * k, b + j * k);
  }
}

void axpy_avx2(std::size_t n, double alpha, const double* x, double* y) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

namespace detail {
const KernelTable* avx2_table_if_compiled() {
  static const KernelTable table{Backend::Avx2, "avx2", gemm_nn_avx2, gemm_tn_avx2,
                                 gemm_nt_avx2,  axpy_avx2, dot_avx2};
  return &table;
}
}  // namespace detail

}  // namespace mdn::kernels

#else

namespace mdn::kernels::detail {
const KernelTable* avx2_table_if_compiled() { return nullptr; }
}  // namespace mdn::kernels::detail

#endif
