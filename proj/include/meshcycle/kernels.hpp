#pragma once
// Dense double-precision kernels behind the tensor ops.
//
// Every kernel has a scalar reference implementation and, on x86-64 with
// AVX2+FMA, a vectorized variant. The active table is picked once at startup
// (overridable with MESHCYCLE_KERNELS=scalar|avx2|auto) and both tables stay
// reachable so the equivalence tests can run them side by side.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace mc::kernels {

struct KernelTable {
  const char* name;

  // elementwise
  void (*vadd)(const double* a, const double* b, double* out, std::size_t n);
  void (*vsub)(const double* a, const double* b, double* out, std::size_t n);
  void (*vmul)(const double* a, const double* b, double* out, std::size_t n);
  void (*vscale)(const double* a, double s, double* out, std::size_t n);
  void (*vaxpy)(double a, const double* x, double* y, std::size_t n);  // y += a*x
  void (*vrelu)(const double* x, double* out, std::size_t n);
  void (*vrelu_bwd)(const double* x, const double* gout, double* gin, std::size_t n);
  void (*vleaky)(const double* x, double slope, double* out, std::size_t n);
  void (*vleaky_bwd)(const double* x, const double* gout, double slope, double* gin,
                     std::size_t n);

  // reductions
  double (*vdot)(const double* a, const double* b, std::size_t n);
  double (*vsum)(const double* a, std::size_t n);
  double (*sq_diff_sum)(const double* a, const double* b, std::size_t n);
  double (*masked_sq_diff_sum)(const double* a, const double* b, const std::uint8_t* row_mask,
                               std::size_t rows, std::size_t cols);

  // row-major GEMM, C = op(A)*op(B) (+C when accumulate); op in {'N','T'}
  void (*gemm)(char op_a, char op_b, std::size_t m, std::size_t n, std::size_t k,
               const double* a, std::size_t lda, const double* b, std::size_t ldb, double* c,
               std::size_t ldc, bool accumulate);

  // row gather/scatter over a rows*cols row-major block
  void (*segment_sum)(const double* vals, std::size_t rows, std::size_t cols,
                      const std::int64_t* seg, std::size_t nseg, double* out);
  void (*gather_rows)(const double* src, std::size_t cols, const std::int64_t* idx,
                      std::size_t n, double* out);
  void (*scatter_add_rows)(const double* src, std::size_t rows, std::size_t cols,
                           const std::int64_t* idx, double* dst);
  // out[i] = sum_f w[i*fan+f] * src[idx[i*fan+f]]   (row vectors of width cols)
  void (*weighted_gather_sum)(const double* src, std::size_t cols, const std::int64_t* idx,
                              const double* w, std::size_t out_rows, std::size_t fan,
                              double* out);
  // adjoint of the above: gin[idx[i*fan+f]] += w[i*fan+f] * gout[i]
  void (*weighted_scatter_add)(const double* gout, std::size_t cols, const std::int64_t* idx,
                               const double* w, std::size_t out_rows, std::size_t fan,
                               double* gin);

  // rowwise statistics
  void (*row_sums)(const double* x, std::size_t rows, std::size_t cols, double* out);
  void (*row_max)(const double* x, std::size_t rows, std::size_t cols, double* out);
  void (*row_mean_var)(const double* x, std::size_t rows, std::size_t cols, double* mean,
                       double* var);
};

const KernelTable& scalar_table();
// nullptr when the binary or the CPU lacks AVX2+FMA.
const KernelTable* avx2_table();

// Active table (dispatch decided on first use).
const KernelTable& active();

// Force a backend by name ("scalar", "avx2", "auto"). Returns false if the
// requested backend is unavailable; the previous selection then stays.
bool select_backend(std::string_view name);

}  // namespace mc::kernels
