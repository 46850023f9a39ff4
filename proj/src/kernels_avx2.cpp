// AVX2+FMA kernel variants. This file is compiled with -mavx2 -mfma and is
// only reachable through the dispatch table after a runtime CPU check.
//
// Elementwise kernels and the row-gather/scatter family keep the exact
// per-element operation order of the scalar reference, so they agree bitwise.
// Reductions and GEMM use lane-parallel accumulators and may differ from the
// scalar path at roundoff level; the equivalence tests bound that.

#include "meshcycle/kernels.hpp"

#if defined(__x86_64__) && defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <algorithm>
#include <cassert>

namespace mc::kernels {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

void a_vadd(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void a_vsub(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

void a_vmul(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void a_vscale(const double* a, double s, double* out, std::size_t n) {
  __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), vs));
  for (; i < n; ++i) out[i] = a[i] * s;
}

void a_vaxpy(double a, const double* x, double* y, std::size_t n) {
  __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

void a_vrelu(const double* x, double* out, std::size_t n) {
  __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
  for (; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void a_vrelu_bwd(const double* x, const double* gout, double* gin, std::size_t n) {
  __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
    __m256d g = _mm256_and_pd(mask, _mm256_loadu_pd(gout + i));
    _mm256_storeu_pd(gin + i, _mm256_add_pd(_mm256_loadu_pd(gin + i), g));
  }
  for (; i < n; ++i)
    if (x[i] > 0.0) gin[i] += gout[i];
}

void a_vleaky(const double* x, double slope, double* out, std::size_t n) {
  __m256d zero = _mm256_setzero_pd();
  __m256d vs = _mm256_set1_pd(slope);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(x + i);
    __m256d mask = _mm256_cmp_pd(v, zero, _CMP_GT_OQ);
    _mm256_storeu_pd(out + i, _mm256_blendv_pd(_mm256_mul_pd(v, vs), v, mask));
  }
  for (; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : slope * x[i];
}

void a_vleaky_bwd(const double* x, const double* gout, double slope, double* gin,
                  std::size_t n) {
  __m256d zero = _mm256_setzero_pd();
  __m256d vs = _mm256_set1_pd(slope);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d g = _mm256_loadu_pd(gout + i);
    __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
    __m256d gi = _mm256_blendv_pd(_mm256_mul_pd(g, vs), g, mask);
    _mm256_storeu_pd(gin + i, _mm256_add_pd(_mm256_loadu_pd(gin + i), gi));
  }
  for (; i < n; ++i) gin[i] += x[i] > 0.0 ? gout[i] : slope * gout[i];
}

double a_vdot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double a_vsum(const double* a, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(a + i));
  double acc = hsum(acc0);
  for (; i < n; ++i) acc += a[i];
  return acc;
}

double a_sq_diff_sum(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc0 = _mm256_fmadd_pd(d, d, acc0);
  }
  double acc = hsum(acc0);
  for (; i < n; ++i) {
    double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

double a_masked_sq_diff_sum(const double* a, const double* b, const std::uint8_t* row_mask,
                            std::size_t rows, std::size_t cols) {
  double acc = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!row_mask[r]) continue;
    acc += a_sq_diff_sum(a + r * cols, b + r * cols, cols);
  }
  return acc;
}

// C_row += av * B_row, the shared inner step of the N,N and T,N cases.
inline void fma_row(double av, const double* brow, double* crow, std::size_t n) {
  __m256d va = _mm256_set1_pd(av);
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    _mm256_storeu_pd(crow + j,
                     _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + j), _mm256_loadu_pd(crow + j)));
    _mm256_storeu_pd(
        crow + j + 4,
        _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + j + 4), _mm256_loadu_pd(crow + j + 4)));
  }
  for (; j + 4 <= n; j += 4)
    _mm256_storeu_pd(crow + j,
                     _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + j), _mm256_loadu_pd(crow + j)));
  for (; j < n; ++j) crow[j] += av * brow[j];
}

void a_gemm(char op_a, char op_b, std::size_t m, std::size_t n, std::size_t k, const double* a,
            std::size_t lda, const double* b, std::size_t ldb, double* c, std::size_t ldc,
            bool accumulate) {
  if (!accumulate)
    for (std::size_t i = 0; i < m; ++i) std::fill(c + i * ldc, c + i * ldc + n, 0.0);
  if (op_a == 'N' && op_b == 'N') {
    for (std::size_t i = 0; i < m; ++i) {
      double* crow = c + i * ldc;
      std::size_t p = 0;
      // two rank-1 updates per pass keeps both FMA ports busy
      for (; p + 2 <= k; p += 2) {
        double a0 = a[i * lda + p];
        double a1 = a[i * lda + p + 1];
        const double* b0 = b + p * ldb;
        const double* b1 = b + (p + 1) * ldb;
        __m256d va0 = _mm256_set1_pd(a0);
        __m256d va1 = _mm256_set1_pd(a1);
        std::size_t j = 0;
        for (; j + 4 <= n; j += 4) {
          __m256d cc = _mm256_loadu_pd(crow + j);
          cc = _mm256_fmadd_pd(va0, _mm256_loadu_pd(b0 + j), cc);
          cc = _mm256_fmadd_pd(va1, _mm256_loadu_pd(b1 + j), cc);
          _mm256_storeu_pd(crow + j, cc);
        }
        for (; j < n; ++j) crow[j] += a0 * b0[j] + a1 * b1[j];
      }
      for (; p < k; ++p) fma_row(a[i * lda + p], b + p * ldb, crow, n);
    }
  } else if (op_a == 'T' && op_b == 'N') {
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t i = 0; i < m; ++i) fma_row(a[p * lda + i], b + p * ldb, c + i * ldc, n);
  } else if (op_a == 'N' && op_b == 'T') {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        c[i * ldc + j] += a_vdot(a + i * lda, b + j * ldb, k);
  } else {
    assert(false && "gemm: T,T not used");
  }
}

void a_segment_sum(const double* vals, std::size_t rows, std::size_t cols,
                   const std::int64_t* seg, std::size_t nseg, double* out) {
  std::fill(out, out + nseg * cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double* orow = out + static_cast<std::size_t>(seg[r]) * cols;
    const double* vrow = vals + r * cols;
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4)
      _mm256_storeu_pd(orow + c,
                       _mm256_add_pd(_mm256_loadu_pd(orow + c), _mm256_loadu_pd(vrow + c)));
    for (; c < cols; ++c) orow[c] += vrow[c];
  }
}

void a_gather_rows(const double* src, std::size_t cols, const std::int64_t* idx, std::size_t n,
                   double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* srow = src + static_cast<std::size_t>(idx[i]) * cols;
    double* orow = out + i * cols;
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4) _mm256_storeu_pd(orow + c, _mm256_loadu_pd(srow + c));
    for (; c < cols; ++c) orow[c] = srow[c];
  }
}

void a_scatter_add_rows(const double* src, std::size_t rows, std::size_t cols,
                        const std::int64_t* idx, double* dst) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* drow = dst + static_cast<std::size_t>(idx[r]) * cols;
    const double* srow = src + r * cols;
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4)
      _mm256_storeu_pd(drow + c,
                       _mm256_add_pd(_mm256_loadu_pd(drow + c), _mm256_loadu_pd(srow + c)));
    for (; c < cols; ++c) drow[c] += srow[c];
  }
}

void a_weighted_gather_sum(const double* src, std::size_t cols, const std::int64_t* idx,
                           const double* w, std::size_t out_rows, std::size_t fan,
                           double* out) {
  std::fill(out, out + out_rows * cols, 0.0);
  for (std::size_t i = 0; i < out_rows; ++i) {
    double* orow = out + i * cols;
    for (std::size_t f = 0; f < fan; ++f) {
      double wf = w[i * fan + f];
      const double* srow = src + static_cast<std::size_t>(idx[i * fan + f]) * cols;
      fma_row(wf, srow, orow, cols);
    }
  }
}

void a_weighted_scatter_add(const double* gout, std::size_t cols, const std::int64_t* idx,
                            const double* w, std::size_t out_rows, std::size_t fan,
                            double* gin) {
  for (std::size_t i = 0; i < out_rows; ++i) {
    const double* grow = gout + i * cols;
    for (std::size_t f = 0; f < fan; ++f) {
      double wf = w[i * fan + f];
      double* drow = gin + static_cast<std::size_t>(idx[i * fan + f]) * cols;
      fma_row(wf, grow, drow, cols);
    }
  }
}

void a_row_sums(const double* x, std::size_t rows, std::size_t cols, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x + r * cols;
    __m256d acc = _mm256_setzero_pd();
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(xr + c));
    double s = hsum(acc);
    for (; c < cols; ++c) s += xr[c];
    out[r] = s;
  }
}

void a_row_max(const double* x, std::size_t rows, std::size_t cols, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x + r * cols;
    double m = xr[0];
    std::size_t c = 0;
    if (cols >= 4) {
      __m256d vm = _mm256_loadu_pd(xr);
      for (c = 4; c + 4 <= cols; c += 4) vm = _mm256_max_pd(vm, _mm256_loadu_pd(xr + c));
      __m128d lo = _mm_max_pd(_mm256_castpd256_pd128(vm), _mm256_extractf128_pd(vm, 1));
      m = std::max(_mm_cvtsd_f64(lo), _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo)));
    }
    for (; c < cols; ++c) m = std::max(m, xr[c]);
    out[r] = m;
  }
}

void a_row_mean_var(const double* x, std::size_t rows, std::size_t cols, double* mean,
                    double* var) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x + r * cols;
    __m256d acc = _mm256_setzero_pd();
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(xr + c));
    double s = hsum(acc);
    for (; c < cols; ++c) s += xr[c];
    double mu = s / static_cast<double>(cols);

    __m256d vmu = _mm256_set1_pd(mu);
    __m256d vacc = _mm256_setzero_pd();
    c = 0;
    for (; c + 4 <= cols; c += 4) {
      __m256d d = _mm256_sub_pd(_mm256_loadu_pd(xr + c), vmu);
      vacc = _mm256_fmadd_pd(d, d, vacc);
    }
    double v = hsum(vacc);
    for (; c < cols; ++c) {
      double d = xr[c] - mu;
      v += d * d;
    }
    mean[r] = mu;
    var[r] = v / static_cast<double>(cols);
  }
}

}  // namespace

const KernelTable* avx2_table_impl() {
  static const KernelTable t = {
      "avx2",
      a_vadd,
      a_vsub,
      a_vmul,
      a_vscale,
      a_vaxpy,
      a_vrelu,
      a_vrelu_bwd,
      a_vleaky,
      a_vleaky_bwd,
      a_vdot,
      a_vsum,
      a_sq_diff_sum,
      a_masked_sq_diff_sum,
      a_gemm,
      a_segment_sum,
      a_gather_rows,
      a_scatter_add_rows,
      a_weighted_gather_sum,
      a_weighted_scatter_add,
      a_row_sums,
      a_row_max,
      a_row_mean_var,
  };
  return &t;
}

}  // namespace mc::kernels

#else  // non-x86 or AVX2 not enabled for this TU

namespace mc::kernels {
const KernelTable* avx2_table_impl() { return nullptr; }
}  // namespace mc::kernels

#endif
