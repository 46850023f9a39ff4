// Scalar reference kernels. These define the semantics; the SIMD variants are
// tested against them.

#include "meshcycle/kernels.hpp"

#include <algorithm>
#include <cassert>

namespace mc::kernels {
namespace {

void s_vadd(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void s_vsub(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void s_vmul(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void s_vscale(const double* a, double s, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * s;
}

void s_vaxpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void s_vrelu(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void s_vrelu_bwd(const double* x, const double* gout, double* gin, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (x[i] > 0.0) gin[i] += gout[i];
}

void s_vleaky(const double* x, double slope, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : slope * x[i];
}

void s_vleaky_bwd(const double* x, const double* gout, double slope, double* gin,
                  std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) gin[i] += x[i] > 0.0 ? gout[i] : slope * gout[i];
}

double s_vdot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double s_vsum(const double* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i];
  return acc;
}

double s_sq_diff_sum(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

double s_masked_sq_diff_sum(const double* a, const double* b, const std::uint8_t* row_mask,
                            std::size_t rows, std::size_t cols) {
  double acc = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!row_mask[r]) continue;
    const double* pa = a + r * cols;
    const double* pb = b + r * cols;
    for (std::size_t c = 0; c < cols; ++c) {
      double d = pa[c] - pb[c];
      acc += d * d;
    }
  }
  return acc;
}

// Row-major GEMM. The i-k-j order keeps the inner loop contiguous for the
// 'N','N' and 'T','N' cases; 'N','T' reduces to per-element dots.
void s_gemm(char op_a, char op_b, std::size_t m, std::size_t n, std::size_t k, const double* a,
            std::size_t lda, const double* b, std::size_t ldb, double* c, std::size_t ldc,
            bool accumulate) {
  if (!accumulate)
    for (std::size_t i = 0; i < m; ++i) std::fill(c + i * ldc, c + i * ldc + n, 0.0);
  if (op_a == 'N' && op_b == 'N') {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t p = 0; p < k; ++p) {
        double av = a[i * lda + p];
        const double* brow = b + p * ldb;
        double* crow = c + i * ldc;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
  } else if (op_a == 'T' && op_b == 'N') {
    // a is k x m
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t i = 0; i < m; ++i) {
        double av = a[p * lda + i];
        const double* brow = b + p * ldb;
        double* crow = c + i * ldc;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
  } else if (op_a == 'N' && op_b == 'T') {
    // b is n x k
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double* arow = a + i * lda;
        const double* brow = b + j * ldb;
        double acc = 0.0;
        for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
        c[i * ldc + j] += acc;
      }
  } else {
    assert(false && "gemm: T,T not used");
  }
}

void s_segment_sum(const double* vals, std::size_t rows, std::size_t cols,
                   const std::int64_t* seg, std::size_t nseg, double* out) {
  std::fill(out, out + nseg * cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double* orow = out + static_cast<std::size_t>(seg[r]) * cols;
    const double* vrow = vals + r * cols;
    for (std::size_t c = 0; c < cols; ++c) orow[c] += vrow[c];
  }
}

void s_gather_rows(const double* src, std::size_t cols, const std::int64_t* idx, std::size_t n,
                   double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* srow = src + static_cast<std::size_t>(idx[i]) * cols;
    std::copy(srow, srow + cols, out + i * cols);
  }
}

void s_scatter_add_rows(const double* src, std::size_t rows, std::size_t cols,
                        const std::int64_t* idx, double* dst) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* drow = dst + static_cast<std::size_t>(idx[r]) * cols;
    const double* srow = src + r * cols;
    for (std::size_t c = 0; c < cols; ++c) drow[c] += srow[c];
  }
}

void s_weighted_gather_sum(const double* src, std::size_t cols, const std::int64_t* idx,
                           const double* w, std::size_t out_rows, std::size_t fan,
                           double* out) {
  std::fill(out, out + out_rows * cols, 0.0);
  for (std::size_t i = 0; i < out_rows; ++i) {
    double* orow = out + i * cols;
    for (std::size_t f = 0; f < fan; ++f) {
      double wf = w[i * fan + f];
      const double* srow = src + static_cast<std::size_t>(idx[i * fan + f]) * cols;
      for (std::size_t c = 0; c < cols; ++c) orow[c] += wf * srow[c];
    }
  }
}

void s_weighted_scatter_add(const double* gout, std::size_t cols, const std::int64_t* idx,
                            const double* w, std::size_t out_rows, std::size_t fan,
                            double* gin) {
  for (std::size_t i = 0; i < out_rows; ++i) {
    const double* grow = gout + i * cols;
    for (std::size_t f = 0; f < fan; ++f) {
      double wf = w[i * fan + f];
      double* drow = gin + static_cast<std::size_t>(idx[i * fan + f]) * cols;
      for (std::size_t c = 0; c < cols; ++c) drow[c] += wf * grow[c];
    }
  }
}

void s_row_sums(const double* x, std::size_t rows, std::size_t cols, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x + r * cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += xr[c];
    out[r] = acc;
  }
}

void s_row_max(const double* x, std::size_t rows, std::size_t cols, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x + r * cols;
    double m = xr[0];
    for (std::size_t c = 1; c < cols; ++c) m = std::max(m, xr[c]);
    out[r] = m;
  }
}

void s_row_mean_var(const double* x, std::size_t rows, std::size_t cols, double* mean,
                    double* var) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x + r * cols;
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += xr[c];
    double mu = s / static_cast<double>(cols);
    double v = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      double d = xr[c] - mu;
      v += d * d;
    }
    mean[r] = mu;
    var[r] = v / static_cast<double>(cols);
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t = {
      "scalar",
      s_vadd,
      s_vsub,
      s_vmul,
      s_vscale,
      s_vaxpy,
      s_vrelu,
      s_vrelu_bwd,
      s_vleaky,
      s_vleaky_bwd,
      s_vdot,
      s_vsum,
      s_sq_diff_sum,
      s_masked_sq_diff_sum,
      s_gemm,
      s_segment_sum,
      s_gather_rows,
      s_scatter_add_rows,
      s_weighted_gather_sum,
      s_weighted_scatter_add,
      s_row_sums,
      s_row_max,
      s_row_mean_var,
  };
  return t;
}

}  // namespace mc::kernels
