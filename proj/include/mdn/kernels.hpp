#pragma once

// Dense linear-algebra inner loops behind conv2d and matmul.
//
// Every kernel exists as a portable scalar reference and, on x86-64, as an
// AVX2/FMA variant. The variant is chosen once at first use from the CPU
// feature flags; MDN_KERNELS=scalar|avx2|auto overrides the choice. All
// matrices are row-major and all gemm kernels accumulate into C.

#include <cstddef>
#include <span>
#include <string_view>

namespace mdn::kernels {

enum class Backend { Scalar, Avx2 };

struct KernelTable {
  Backend backend;
  const char* name;
  // C[m,n] += A[m,k] * B[k,n]
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
  // C[m,n] += A[k,m]^T * B[k,n]
  void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
  // C[m,n] += A[m,k] * B[n,k]^T
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
  // y += alpha * x
  void (*axpy)(std::size_t n, double alpha, const double* x, double* y);
  double (*dot)(std::size_t n, const double* x, const double* y);
};

const KernelTable& scalar_table();
// nullptr when the AVX2 variant was not compiled in or the CPU lacks AVX2/FMA.
const KernelTable* avx2_table();

const KernelTable& active();
// Forces a backend; throws if it is unavailable on this machine.
void set_backend(Backend backend);
Backend parse_backend(std::string_view name);

// Span-taking front ends over the active table. Sizes are checked.
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
             std::span<double> c);
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
             std::span<double> c);
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
             std::span<double> c);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> x, std::span<const double> y);

namespace detail {
const KernelTable* avx2_table_if_compiled();
}

}  // namespace mdn::kernels
