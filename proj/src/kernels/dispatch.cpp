#include <atomic>
#include <cstdlib>
#include <string>

#include "cael/kernels.hpp"

namespace cael::kernels {

namespace {

Isa initial_isa() {
  const Isa detected = detected_isa();
  if (const char* env = std::getenv("CAEL_ISA")) {
    const std::string want(env);
    if (want == "scalar") return Isa::scalar;
    if (want == "avx2" && detected == Isa::avx2) return Isa::avx2;
  }
  return detected;
}

std::atomic<Isa>& active() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

Isa detected_isa() {
  static const Isa isa = avx2::supported() ? Isa::avx2 : Isa::scalar;
  return isa;
}

Isa active_isa() { return active().load(std::memory_order_relaxed); }

void force_isa(Isa isa) {
  if (isa == Isa::avx2 && detected_isa() != Isa::avx2) isa = Isa::scalar;
  active().store(isa, std::memory_order_relaxed);
}

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

void gemm_acc(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
              const double* b, std::size_t ldb, double* c, std::size_t ldc) {
  if (m == 0 || n == 0 || k == 0) return;
  if (active_isa() == Isa::avx2)
    avx2::gemm_acc(m, n, k, a, lda, b, ldb, c, ldc);
  else
    scalar::gemm_acc(m, n, k, a, lda, b, ldb, c, ldc);
}

void gemm_bt_acc(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
                 const double* b, std::size_t ldb, double* c, std::size_t ldc) {
  if (m == 0 || n == 0 || k == 0) return;
  if (active_isa() == Isa::avx2)
    avx2::gemm_bt_acc(m, n, k, a, lda, b, ldb, c, ldc);
  else
    scalar::gemm_bt_acc(m, n, k, a, lda, b, ldb, c, ldc);
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (active_isa() == Isa::avx2)
    avx2::axpy(alpha, x, y);
  else
    scalar::axpy(alpha, x, y);
}

double dot(std::span<const double> x, std::span<const double> y) {
  return active_isa() == Isa::avx2 ? avx2::dot(x, y) : scalar::dot(x, y);
}

void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m,
                 std::span<double> v, const AdamCoeffs& c) {
  if (active_isa() == Isa::avx2)
    avx2::adam_update(param, grad, m, v, c);
  else
    scalar::adam_update(param, grad, m, v, c);
}

}  // namespace cael::kernels
