#pragma once

// Dense double-precision inner loops used by the autodiff engine and the optimizer.
//
// Every kernel exists as a scalar reference and, on x86-64, an AVX2 variant. The
// SIMD variants vectorize only across independent output lanes and keep the
// per-element reduction order of the scalar loops, and neither variant uses FMA,
// so both produce bit-identical results. The active table is chosen once at
// startup from CPUID; DAE_KERNELS=scalar forces the reference path.

#include <cstddef>

namespace dae::kernels {

struct AdamCoeffs {
  double lr;
  double beta1;
  double beta2;
  double eps;
  double bias_correction1;  // 1 - beta1^t
  double bias_correction2;  // 1 - beta2^t
};

struct KernelTable {
  const char* name;

  // c[m x n] = a[m x k] * b[k x n]
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                  double* c);
  // c[k x n] += a[m x k]^T * b[m x n]
  void (*gemm_tn_acc)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                      double* c);
  // c[m x k] += a[m x n] * bt[n x k], where bt is b[k x n] already transposed
  void (*gemm_nt_acc)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* bt,
                      double* c);
  // x[i, :] += bias for every row i of x[m x n]
  void (*add_row_broadcast)(std::size_t m, std::size_t n, const double* bias, double* x);
  // out[j] += sum_i x[i, j]
  void (*sum_rows_acc)(std::size_t m, std::size_t n, const double* x, double* out);
  void (*relu)(std::size_t n, const double* x, double* y);
  // gx += gy where x > 0
  void (*relu_backward_acc)(std::size_t n, const double* x, const double* gy, double* gx);
  // y += a * x
  void (*axpy)(std::size_t n, double a, const double* x, double* y);
  void (*adam_update)(std::size_t n, const AdamCoeffs& c, const double* grad, double* m, double* v,
                      double* theta);
};

const KernelTable& scalar_kernels();

// nullptr when the binary or the CPU lacks AVX2.
const KernelTable* avx2_kernels();

// The table selected for this process.
const KernelTable& active();

}  // namespace dae::kernels
