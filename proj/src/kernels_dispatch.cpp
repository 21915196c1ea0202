#include <atomic>
#include <cstdlib>
#include <string>

#include "mdn/error.hpp"
#include "mdn/kernels.hpp"

namespace mdn::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* choose_from_env() {
  const char* env = std::getenv("MDN_KERNELS");
  const std::string pick = env ? env : "auto";
  if (pick == "scalar") return &scalar_table();
  if (pick == "avx2") {
    if (!avx2_table()) throw ValidationError("MDN_KERNELS=avx2 but AVX2/FMA is unavailable");
    return avx2_table();
  }
  if (pick != "auto") throw ValidationError("MDN_KERNELS must be scalar, avx2 or auto, got '" + pick + "'");
  return avx2_table() ? avx2_table() : &scalar_table();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{choose_from_env()};
  return table;
}

void check(bool ok, const char* what) {
  if (!ok) throw ShapeError(std::string("kernel size mismatch in ") + what);
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable* table = cpu_has_avx2() ? detail::avx2_table_if_compiled() : nullptr;
  return table;
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

void set_backend(Backend backend) {
  if (backend == Backend::Avx2) {
    if (!avx2_table()) throw ValidationError("AVX2 kernels are unavailable on this machine");
    current().store(avx2_table(), std::memory_order_release);
  } else {
    current().store(&scalar_table(), std::memory_order_release);
  }
}

Backend parse_backend(std::string_view name) {
  if (name == "scalar") return Backend::Scalar;
  if (name == "avx2") return Backend::Avx2;
  throw ValidationError("unknown kernel backend '" + std::string(name) + "'");
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
             std::span<double> c) {
  check(a.size() >= m * k && b.size() >= k * n && c.size() >= m * n, "gemm_nn");
  active().gemm_nn(m, n, k, a.data(), b.data(), c.data());
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
             std::span<double> c) {
  check(a.size() >= k * m && b.size() >= k * n && c.size() >= m * n, "gemm_tn");
  active().gemm_tn(m, n, k, a.data(), b.data(), c.data());
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
             std::span<double> c) {
  check(a.size() >= m * k && b.size() >= n * k && c.size() >= m * n, "gemm_nt");
  active().gemm_nt(m, n, k, a.data(), b.data(), c.data());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  check(x.size() == y.size(), "axpy");
  active().axpy(x.size(), alpha, x.data(), y.data());
}

double dot(std::span<const double> x, std::span<const double> y) {
  check(x.size() == y.size(), "dot");
  return active().dot(x.size(), x.data(), y.data());
}

}  // namespace mdn::kernels
