#include <algorithm>
#include <cmath>

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#define CAEL_X86 1
#else
#define CAEL_X86 0
#endif

#include "cael/kernels.hpp"

namespace cael::kernels::avx2 {

#if CAEL_X86

#define CAEL_AVX2 __attribute__((target("avx2,fma")))

bool supported() {
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

namespace {

constexpr std::size_t kBlockK = 256;
constexpr std::size_t kBlockN = 256;

CAEL_AVX2 inline void micro_4x8(std::size_t kb, const double* a, std::size_t lda, const double* b,
                                std::size_t ldb, double* c, std::size_t ldc) {
  __m256d c00 = _mm256_loadu_pd(c);
  __m256d c01 = _mm256_loadu_pd(c + 4);
  __m256d c10 = _mm256_loadu_pd(c + ldc);
  __m256d c11 = _mm256_loadu_pd(c + ldc + 4);
  __m256d c20 = _mm256_loadu_pd(c + 2 * ldc);
  __m256d c21 = _mm256_loadu_pd(c + 2 * ldc + 4);
  __m256d c30 = _mm256_loadu_pd(c + 3 * ldc);
  __m256d c31 = _mm256_loadu_pd(c + 3 * ldc + 4);
  for (std::size_t p = 0; p < kb; ++p) {
    const double* bp = b + p * ldb;
    const __m256d b0 = _mm256_loadu_pd(bp);
    const __m256d b1 = _mm256_loadu_pd(bp + 4);
    __m256d av = _mm256_broadcast_sd(a + p);
    c00 = _mm256_fmadd_pd(av, b0, c00);
    c01 = _mm256_fmadd_pd(av, b1, c01);
    av = _mm256_broadcast_sd(a + lda + p);
    c10 = _mm256_fmadd_pd(av, b0, c10);
    c11 = _mm256_fmadd_pd(av, b1, c11);
    av = _mm256_broadcast_sd(a + 2 * lda + p);
    c20 = _mm256_fmadd_pd(av, b0, c20);
    c21 = _mm256_fmadd_pd(av, b1, c21);
    av = _mm256_broadcast_sd(a + 3 * lda + p);
    c30 = _mm256_fmadd_pd(av, b0, c30);
    c31 = _mm256_fmadd_pd(av, b1, c31);
  }
  _mm256_storeu_pd(c, c00);
  _mm256_storeu_pd(c + 4, c01);
  _mm256_storeu_pd(c + ldc, c10);
  _mm256_storeu_pd(c + ldc + 4, c11);
  _mm256_storeu_pd(c + 2 * ldc, c20);
  _mm256_storeu_pd(c + 2 * ldc + 4, c21);
  _mm256_storeu_pd(c + 3 * ldc, c30);
  _mm256_storeu_pd(c + 3 * ldc + 4, c31);
}

// One output row, columns [j0, j1). Same k-ascending fused chain as micro_4x8.
CAEL_AVX2 inline void row_tail(std::size_t kb, const double* a, const double* b, std::size_t ldb,
                               double* c, std::size_t j0, std::size_t j1) {
  std::size_t j = j0;
  for (; j + 4 <= j1; j += 4) {
    __m256d acc = _mm256_loadu_pd(c + j);
    for (std::size_t p = 0; p < kb; ++p)
      acc = _mm256_fmadd_pd(_mm256_broadcast_sd(a + p), _mm256_loadu_pd(b + p * ldb + j), acc);
    _mm256_storeu_pd(c + j, acc);
  }
  for (; j < j1; ++j) {
    double acc = c[j];
    for (std::size_t p = 0; p < kb; ++p) acc = std::fma(a[p], b[p * ldb + j], acc);
    c[j] = acc;
  }
}

}  // namespace

CAEL_AVX2 void gemm_acc(std::size_t m, std::size_t n, std::size_t k, const double* a,
                        std::size_t lda, const double* b, std::size_t ldb, double* c,
                        std::size_t ldc) {
  for (std::size_t k0 = 0; k0 < k; k0 += kBlockK) {
    const std::size_t kb = std::min(kBlockK, k - k0);
    for (std::size_t n0 = 0; n0 < n; n0 += kBlockN) {
      const std::size_t nb = std::min(kBlockN, n - n0);
      const double* bblk = b + k0 * ldb + n0;
      std::size_t i = 0;
      for (; i + 4 <= m; i += 4) {
        const double* ablk = a + i * lda + k0;
        double* cblk = c + i * ldc + n0;
        std::size_t j = 0;
        for (; j + 8 <= nb; j += 8) micro_4x8(kb, ablk, lda, bblk + j, ldb, cblk + j, ldc);
        if (j < nb) {
          for (std::size_t r = 0; r < 4; ++r)
            row_tail(kb, ablk + r * lda, bblk, ldb, cblk + r * ldc, j, nb);
        }
      }
      for (; i < m; ++i) row_tail(kb, a + i * lda + k0, bblk, ldb, c + i * ldc + n0, 0, nb);
    }
  }
}

namespace {

CAEL_AVX2 inline double hsum(__m256d v) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

// Dot products of 2 rows of A against 4 rows of B.
CAEL_AVX2 inline void dots_2x4(std::size_t k, const double* a, std::size_t lda, const double* b,
                               std::size_t ldb, double* c, std::size_t ldc) {
  __m256d acc[2][4];
  for (auto& row : acc)
    for (auto& x : row) x = _mm256_setzero_pd();
  std::size_t p = 0;
  for (; p + 4 <= k; p += 4) {
    const __m256d a0 = _mm256_loadu_pd(a + p);
    const __m256d a1 = _mm256_loadu_pd(a + lda + p);
    for (std::size_t j = 0; j < 4; ++j) {
      const __m256d bj = _mm256_loadu_pd(b + j * ldb + p);
      acc[0][j] = _mm256_fmadd_pd(a0, bj, acc[0][j]);
      acc[1][j] = _mm256_fmadd_pd(a1, bj, acc[1][j]);
    }
  }
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t j = 0; j < 4; ++j) {
      double s = hsum(acc[r][j]);
      for (std::size_t q = p; q < k; ++q) s = std::fma(a[r * lda + q], b[j * ldb + q], s);
      c[r * ldc + j] += s;
    }
}

CAEL_AVX2 inline double dot_row(std::size_t k, const double* a, const double* b) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t p = 0;
  for (; p + 4 <= k; p += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + p), _mm256_loadu_pd(b + p), acc);
  double s = hsum(acc);
  for (; p < k; ++p) s = std::fma(a[p], b[p], s);
  return s;
}

}  // namespace

CAEL_AVX2 void gemm_bt_acc(std::size_t m, std::size_t n, std::size_t k, const double* a,
                           std::size_t lda, const double* b, std::size_t ldb, double* c,
                           std::size_t ldc) {
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    std::size_t i = 0;
    for (; i + 2 <= m; i += 2) dots_2x4(k, a + i * lda, lda, b + j * ldb, ldb, c + i * ldc + j, ldc);
    for (; i < m; ++i)
      for (std::size_t jj = j; jj < j + 4; ++jj) c[i * ldc + jj] += dot_row(k, a + i * lda, b + jj * ldb);
  }
  for (; j < n; ++j)
    for (std::size_t i = 0; i < m; ++i) c[i * ldc + j] += dot_row(k, a + i * lda, b + j * ldb);
}

CAEL_AVX2 void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  const std::size_t n = x.size();
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x.data() + i));
    _mm256_storeu_pd(y.data() + i, _mm256_add_pd(_mm256_loadu_pd(y.data() + i), prod));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

CAEL_AVX2 double dot(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x.data() + i), _mm256_loadu_pd(y.data() + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x.data() + i + 4), _mm256_loadu_pd(y.data() + i + 4),
                           acc1);
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, _mm256_add_pd(acc0, acc1));
  double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

CAEL_AVX2 void adam_update(std::span<double> param, std::span<const double> grad,
                           std::span<double> m, std::span<double> v, const AdamCoeffs& c) {
  const std::size_t n = param.size();
  const __m256d b1 = _mm256_set1_pd(c.beta1);
  const __m256d b2 = _mm256_set1_pd(c.beta2);
  const __m256d omb1 = _mm256_set1_pd(1.0 - c.beta1);
  const __m256d omb2 = _mm256_set1_pd(1.0 - c.beta2);
  const __m256d wd = _mm256_set1_pd(c.weight_decay);
  const __m256d bc1 = _mm256_set1_pd(c.bias_correction1);
  const __m256d bc2 = _mm256_set1_pd(c.bias_correction2);
  const __m256d lr = _mm256_set1_pd(c.lr);
  const __m256d eps = _mm256_set1_pd(c.eps);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d p = _mm256_loadu_pd(param.data() + i);
    const __m256d g = _mm256_add_pd(_mm256_loadu_pd(grad.data() + i), _mm256_mul_pd(wd, p));
    const __m256d mi =
        _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m.data() + i)), _mm256_mul_pd(omb1, g));
    const __m256d vi = _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v.data() + i)),
                                     _mm256_mul_pd(omb2, _mm256_mul_pd(g, g)));
    _mm256_storeu_pd(m.data() + i, mi);
    _mm256_storeu_pd(v.data() + i, vi);
    const __m256d mhat = _mm256_div_pd(mi, bc1);
    const __m256d vhat = _mm256_div_pd(vi, bc2);
    const __m256d step =
        _mm256_div_pd(_mm256_mul_pd(lr, mhat), _mm256_add_pd(_mm256_sqrt_pd(vhat), eps));
    _mm256_storeu_pd(param.data() + i, _mm256_sub_pd(p, step));
  }
  if (i < n) {
    scalar::adam_update(param.subspan(i), grad.subspan(i), m.subspan(i), v.subspan(i), c);
  }
}

#else  // !CAEL_X86

bool supported() { return false; }
void gemm_acc(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
              const double* b, std::size_t ldb, double* c, std::size_t ldc) {
  scalar::gemm_acc(m, n, k, a, lda, b, ldb, c, ldc);
}
void gemm_bt_acc(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
                 const double* b, std::size_t ldb, double* c, std::size_t ldc) {
  scalar::gemm_bt_acc(m, n, k, a, lda, b, ldb, c, ldc);
}
void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  scalar::axpy(alpha, x, y);
}
double dot(std::span<const double> x, std::span<const double> y) { return scalar::dot(x, y); }
void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m,
                 std::span<double> v, const AdamCoeffs& c) {
  scalar::adam_update(param, grad, m, v, c);
}

#endif

}  // namespace cael::kernels::avx2
