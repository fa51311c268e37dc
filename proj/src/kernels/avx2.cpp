// Compiled with -mavx2; only reached after a CPUID check.

#include <immintrin.h>

#include <cmath>

#include "dae/kernels.hpp"

namespace dae::kernels {
namespace {

constexpr std::size_t kLanes = 4;

// One output row chunk of width 16 is held in registers across the whole k loop.
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    std::size_t j = 0;
    for (; j + 16 <= n; j += 16) {
      __m256d c0 = _mm256_setzero_pd();
      __m256d c1 = _mm256_setzero_pd();
      __m256d c2 = _mm256_setzero_pd();
      __m256d c3 = _mm256_setzero_pd();
      for (std::size_t p = 0; p < k; ++p) {
        const __m256d av = _mm256_set1_pd(arow[p]);
        const double* brow = b + p * n + j;
        c0 = _mm256_add_pd(c0, _mm256_mul_pd(av, _mm256_loadu_pd(brow)));
        c1 = _mm256_add_pd(c1, _mm256_mul_pd(av, _mm256_loadu_pd(brow + 4)));
        c2 = _mm256_add_pd(c2, _mm256_mul_pd(av, _mm256_loadu_pd(brow + 8)));
        c3 = _mm256_add_pd(c3, _mm256_mul_pd(av, _mm256_loadu_pd(brow + 12)));
      }
      _mm256_storeu_pd(crow + j, c0);
      _mm256_storeu_pd(crow + j + 4, c1);
      _mm256_storeu_pd(crow + j + 8, c2);
      _mm256_storeu_pd(crow + j + 12, c3);
    }
    for (; j + kLanes <= n; j += kLanes) {
      __m256d acc = _mm256_setzero_pd();
      for (std::size_t p = 0; p < k; ++p)
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_set1_pd(arow[p]), _mm256_loadu_pd(b + p * n + j)));
      _mm256_storeu_pd(crow + j, acc);
    }
    for (; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * b[p * n + j];
      crow[j] = acc;
    }
  }
}

// y[0..n) += s * x[0..n)
inline void scaled_add(std::size_t n, double s, const double* x, double* y) {
  const __m256d sv = _mm256_set1_pd(s);
  std::size_t j = 0;
  for (; j + kLanes <= n; j += kLanes)
    _mm256_storeu_pd(y + j, _mm256_add_pd(_mm256_loadu_pd(y + j), _mm256_mul_pd(sv, _mm256_loadu_pd(x + j))));
  for (; j < n; ++j) y[j] += s * x[j];
}

void gemm_tn_acc(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) scaled_add(n, a[i * k + p], b + i * n, c + p * n);
}

void gemm_nt_acc(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* bt, double* c) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) scaled_add(k, a[i * n + j], bt + j * k, c + i * k);
}

void add_row_broadcast(std::size_t m, std::size_t n, const double* bias, double* x) {
  for (std::size_t i = 0; i < m; ++i) {
    double* row = x + i * n;
    std::size_t j = 0;
    for (; j + kLanes <= n; j += kLanes)
      _mm256_storeu_pd(row + j, _mm256_add_pd(_mm256_loadu_pd(row + j), _mm256_loadu_pd(bias + j)));
    for (; j < n; ++j) row[j] += bias[j];
  }
}

void sum_rows_acc(std::size_t m, std::size_t n, const double* x, double* out) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = x + i * n;
    std::size_t j = 0;
    for (; j + kLanes <= n; j += kLanes)
      _mm256_storeu_pd(out + j, _mm256_add_pd(_mm256_loadu_pd(out + j), _mm256_loadu_pd(row + j)));
    for (; j < n; ++j) out[j] += row[j];
  }
}

void relu(std::size_t n, const double* x, double* y) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d xv = _mm256_loadu_pd(x + i);
    const __m256d mask = _mm256_cmp_pd(xv, zero, _CMP_GT_OQ);
    _mm256_storeu_pd(y + i, _mm256_and_pd(xv, mask));
  }
  for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward_acc(std::size_t n, const double* x, const double* gy, double* gx) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
    const __m256d pass = _mm256_and_pd(_mm256_loadu_pd(gy + i), mask);
    // Blend so masked lanes keep their exact value (-0.0 + 0.0 would turn into +0.0).
    const __m256d sum = _mm256_add_pd(_mm256_loadu_pd(gx + i), pass);
    _mm256_storeu_pd(gx + i, _mm256_blendv_pd(_mm256_loadu_pd(gx + i), sum, mask));
  }
  for (; i < n; ++i)
    if (x[i] > 0.0) gx[i] += gy[i];
}

void axpy(std::size_t n, double a, const double* x, double* y) { scaled_add(n, a, x, y); }

void adam_update(std::size_t n, const AdamCoeffs& c, const double* grad, double* m, double* v,
                 double* theta) {
  const __m256d b1 = _mm256_set1_pd(c.beta1);
  const __m256d b2 = _mm256_set1_pd(c.beta2);
  const __m256d omb1 = _mm256_set1_pd(1.0 - c.beta1);
  const __m256d omb2 = _mm256_set1_pd(1.0 - c.beta2);
  const __m256d bc1 = _mm256_set1_pd(c.bias_correction1);
  const __m256d bc2 = _mm256_set1_pd(c.bias_correction2);
  const __m256d lr = _mm256_set1_pd(c.lr);
  const __m256d eps = _mm256_set1_pd(c.eps);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d g = _mm256_loadu_pd(grad + i);
    const __m256d mv = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(omb1, g));
    const __m256d vv =
        _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)), _mm256_mul_pd(omb2, _mm256_mul_pd(g, g)));
    _mm256_storeu_pd(m + i, mv);
    _mm256_storeu_pd(v + i, vv);
    const __m256d m_hat = _mm256_div_pd(mv, bc1);
    const __m256d v_hat = _mm256_div_pd(vv, bc2);
    const __m256d step = _mm256_div_pd(_mm256_mul_pd(lr, m_hat), _mm256_add_pd(_mm256_sqrt_pd(v_hat), eps));
    _mm256_storeu_pd(theta + i, _mm256_sub_pd(_mm256_loadu_pd(theta + i), step));
  }
  const double one_minus_b1 = 1.0 - c.beta1;
  const double one_minus_b2 = 1.0 - c.beta2;
  for (; i < n; ++i) {
    const double g = grad[i];
    m[i] = c.beta1 * m[i] + one_minus_b1 * g;
    v[i] = c.beta2 * v[i] + one_minus_b2 * (g * g);
    const double m_hat = m[i] / c.bias_correction1;
    const double v_hat = v[i] / c.bias_correction2;
    theta[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
  }
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{
      "avx2",       gemm_nn, gemm_tn_acc, gemm_nt_acc, add_row_broadcast, sum_rows_acc, relu,
      relu_backward_acc, axpy, adam_update,
  };
  return table;
}

}  // namespace dae::kernels
