#pragma once

// Dense arithmetic kernels used by the tensor engine.
//
// Every kernel has a scalar reference implementation and an AVX2/FMA variant.
// The variant is picked once at startup from CPUID (override with the
// CAEL_ISA=scalar|avx2 environment variable, or force_isa() in tests).
//
// Accumulation order inside gemm_acc is k-ascending for every output element
// in both variants, independent of blocking, so results are reproducible for a
// fixed ISA. The AVX2 gemm fuses multiply-add and therefore differs from the
// scalar reference in the last bits; axpy and adam_update perform the same
// IEEE operations in both variants and agree bit-for-bit.

#include <cstddef>
#include <span>
#include <string_view>

namespace cael::kernels {

enum class Isa { scalar, avx2 };

Isa detected_isa();
Isa active_isa();
void force_isa(Isa isa);
std::string_view isa_name(Isa isa);

struct AdamCoeffs {
  double lr;
  double beta1;
  double beta2;
  double eps;
  double weight_decay;
  double bias_correction1;  // 1 - beta1^t
  double bias_correction2;  // 1 - beta2^t
};

// C[m x n] += A[m x k] * B[k x n], all row-major with leading dimensions.
void gemm_acc(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
              const double* b, std::size_t ldb, double* c, std::size_t ldc);

// C[m x n] += A[m x k] * B^T where B is stored [n x k]. Each output element
// adds one k-ascending dot product.
void gemm_bt_acc(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
                 const double* b, std::size_t ldb, double* c, std::size_t ldc);

// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

double dot(std::span<const double> x, std::span<const double> y);

// Adam with the L2 weight-decay term folded into the gradient.
void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m,
                 std::span<double> v, const AdamCoeffs& c);

namespace scalar {
void gemm_acc(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
              const double* b, std::size_t ldb, double* c, std::size_t ldc);
void gemm_bt_acc(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
                 const double* b, std::size_t ldb, double* c, std::size_t ldc);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> x, std::span<const double> y);
void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m,
                 std::span<double> v, const AdamCoeffs& c);
}  // namespace scalar

namespace avx2 {
bool supported();
void gemm_acc(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
              const double* b, std::size_t ldb, double* c, std::size_t ldc);
void gemm_bt_acc(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
                 const double* b, std::size_t ldb, double* c, std::size_t ldc);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> x, std::span<const double> y);
void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m,
                 std::span<double> v, const AdamCoeffs& c);
}  // namespace avx2

}  // namespace cael::kernels
