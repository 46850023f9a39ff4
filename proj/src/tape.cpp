#include "meshcycle/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "meshcycle/common.hpp"
#include "meshcycle/kernels.hpp"

namespace mc::ad {

using kernels::KernelTable;

namespace {
constexpr double kLayerNormEps = 1e-12;
}

void Tape::check_finite(const Tensor& t, const char* op) {
  for (double v : t.data())
    if (!std::isfinite(v))
      throw NumericalError(std::string("non-finite value produced by op '") + op + "'");
}

Tensor Tape::make_node(Tensor value, std::function<void(Tape&)> back) {
  value.node_ = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{value, std::move(back)});
  return nodes_.back().value;
}

std::vector<double>& Tape::grad_buf(int id, std::int64_t size) {
  auto& g = grads_[static_cast<std::size_t>(id)];
  if (g.empty()) g.assign(static_cast<std::size_t>(size), 0.0);
  return g;
}

const std::vector<double>* Tape::grad_of(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= grads_.size()) return nullptr;
  const auto& g = grads_[static_cast<std::size_t>(id)];
  return g.empty() ? nullptr : &g;
}

Tensor Tape::leaf(const Tensor& value) {
  check_finite(value, "leaf");
  return make_node(value, nullptr);
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
  const std::int64_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) throw StructuralError("matmul: inner dimensions disagree");
  const KernelTable& K = kernels::active();
  Tensor out(m, n);
  K.gemm('N', 'N', m, n, k, a.data().data(), k, b.data().data(), n, out.data_mut().data(), n,
         false);
  check_finite(out, "matmul");
  Tensor av = a, bv = b;
  return make_node(out, [av, bv, m, n, k](Tape& t) {
    const KernelTable& K2 = kernels::active();
    const auto& g = *t.grad_of(t.cursor_);
    if (av.node() >= 0) {
      auto& ga = t.grad_buf(av.node(), m * k);
      K2.gemm('N', 'T', m, k, n, g.data(), n, bv.data().data(), n, ga.data(), k, true);
    }
    if (bv.node() >= 0) {
      auto& gb = t.grad_buf(bv.node(), k * n);
      K2.gemm('T', 'N', k, n, m, av.data().data(), k, g.data(), n, gb.data(), n, true);
    }
  });
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
  const KernelTable& K = kernels::active();
  const std::int64_t m = a.rows(), n = a.cols();
  const bool broadcast = (b.rows() == 1 && m != 1);  // covers empty a as well
  if (b.cols() != n || (!broadcast && b.rows() != m))
    throw StructuralError("add: shape mismatch");
  Tensor out(a.shape());
  if (broadcast) {
    for (std::int64_t i = 0; i < m; ++i)
      K.vadd(a.data().data() + i * n, b.data().data(), out.data_mut().data() + i * n, n);
  } else {
    K.vadd(a.data().data(), b.data().data(), out.data_mut().data(), a.size());
  }
  check_finite(out, "add");
  Tensor av = a, bv = b;
  return make_node(out, [av, bv, m, n, broadcast](Tape& t) {
    const KernelTable& K2 = kernels::active();
    const auto& g = *t.grad_of(t.cursor_);
    if (av.node() >= 0) {
      auto& ga = t.grad_buf(av.node(), av.size());
      K2.vaxpy(1.0, g.data(), ga.data(), ga.size());
    }
    if (bv.node() >= 0) {
      auto& gb = t.grad_buf(bv.node(), bv.size());
      if (broadcast) {
        for (std::int64_t i = 0; i < m; ++i) K2.vaxpy(1.0, g.data() + i * n, gb.data(), n);
      } else {
        K2.vaxpy(1.0, g.data(), gb.data(), gb.size());
      }
    }
  });
}

Tensor Tape::scale(const Tensor& a, double s) {
  const KernelTable& K = kernels::active();
  Tensor out(a.shape());
  K.vscale(a.data().data(), s, out.data_mut().data(), a.size());
  check_finite(out, "scale");
  Tensor av = a;
  return make_node(out, [av, s](Tape& t) {
    if (av.node() < 0) return;
    const auto& g = *t.grad_of(t.cursor_);
    auto& ga = t.grad_buf(av.node(), av.size());
    kernels::active().vaxpy(s, g.data(), ga.data(), ga.size());
  });
}

Tensor Tape::concat_cols(const Tensor& a, const Tensor& b) {
  const std::int64_t m = a.rows(), ca = a.cols(), cb = b.cols();
  if (b.rows() != m) throw StructuralError("concat_cols: row counts disagree");
  Tensor out(m, ca + cb);
  auto od = out.data_mut();
  auto ad = a.data();
  auto bd = b.data();
  for (std::int64_t i = 0; i < m; ++i) {
    std::copy_n(ad.data() + i * ca, ca, od.data() + i * (ca + cb));
    std::copy_n(bd.data() + i * cb, cb, od.data() + i * (ca + cb) + ca);
  }
  Tensor av = a, bv = b;
  return make_node(out, [av, bv, m, ca, cb](Tape& t) {
    const KernelTable& K2 = kernels::active();
    const auto& g = *t.grad_of(t.cursor_);
    const std::int64_t w = ca + cb;
    if (av.node() >= 0) {
      auto& ga = t.grad_buf(av.node(), m * ca);
      for (std::int64_t i = 0; i < m; ++i)
        K2.vaxpy(1.0, g.data() + i * w, ga.data() + i * ca, ca);
    }
    if (bv.node() >= 0) {
      auto& gb = t.grad_buf(bv.node(), m * cb);
      for (std::int64_t i = 0; i < m; ++i)
        K2.vaxpy(1.0, g.data() + i * w + ca, gb.data() + i * cb, cb);
    }
  });
}

Tensor Tape::relu(const Tensor& a) {
  const KernelTable& K = kernels::active();
  Tensor out(a.shape());
  K.vrelu(a.data().data(), out.data_mut().data(), a.size());
  check_finite(out, "relu");
  Tensor av = a;
  return make_node(out, [av](Tape& t) {
    if (av.node() < 0) return;
    const auto& g = *t.grad_of(t.cursor_);
    auto& ga = t.grad_buf(av.node(), av.size());
    kernels::active().vrelu_bwd(av.data().data(), g.data(), ga.data(), ga.size());
  });
}

Tensor Tape::leaky_relu(const Tensor& a, double slope) {
  const KernelTable& K = kernels::active();
  Tensor out(a.shape());
  K.vleaky(a.data().data(), slope, out.data_mut().data(), a.size());
  check_finite(out, "leaky_relu");
  Tensor av = a;
  return make_node(out, [av, slope](Tape& t) {
    if (av.node() < 0) return;
    const auto& g = *t.grad_of(t.cursor_);
    auto& ga = t.grad_buf(av.node(), av.size());
    kernels::active().vleaky_bwd(av.data().data(), g.data(), slope, ga.data(), ga.size());
  });
}

Tensor Tape::elu(const Tensor& a) {
  Tensor out(a.shape());
  auto ad = a.data();
  auto od = out.data_mut();
  for (std::int64_t i = 0; i < a.size(); ++i)
    od[i] = ad[i] > 0.0 ? ad[i] : std::expm1(ad[i]);
  check_finite(out, "elu");
  Tensor av = a, ov = out;
  return make_node(out, [av, ov](Tape& t) {
    if (av.node() < 0) return;
    const auto& g = *t.grad_of(t.cursor_);
    auto& ga = t.grad_buf(av.node(), av.size());
    auto ad2 = av.data();
    auto od2 = ov.data();
    for (std::size_t i = 0; i < ga.size(); ++i)
      ga[i] += ad2[i] > 0.0 ? g[i] : g[i] * (od2[i] + 1.0);
  });
}

Tensor Tape::layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias) {
  const std::int64_t m = x.rows(), n = x.cols();
  if (gain.size() != n || bias.size() != n)
    throw StructuralError("layer_norm: gain/bias width mismatch");
  const KernelTable& K = kernels::active();
  std::vector<double> mean(m), var(m), inv_sd(m);
  K.row_mean_var(x.data().data(), m, n, mean.data(), var.data());
  for (std::int64_t r = 0; r < m; ++r) inv_sd[r] = 1.0 / std::sqrt(var[r] + kLayerNormEps);

  Tensor xhat(m, n);
  Tensor out(m, n);
  auto xd = x.data();
  auto hd = xhat.data_mut();
  auto od = out.data_mut();
  auto gd = gain.data();
  auto bd = bias.data();
  for (std::int64_t r = 0; r < m; ++r)
    for (std::int64_t c = 0; c < n; ++c) {
      double h = (xd[r * n + c] - mean[r]) * inv_sd[r];
      hd[r * n + c] = h;
      od[r * n + c] = h * gd[c] + bd[c];
    }
  check_finite(out, "layer_norm");
  Tensor xv = x, gv = gain, bv = bias;
  return make_node(out, [xv, gv, bv, xhat, inv_sd, m, n](Tape& t) {
    const auto& g = *t.grad_of(t.cursor_);
    auto hd2 = xhat.data();
    auto gaind = gv.data();
    if (xv.node() >= 0) {
      auto& gx = t.grad_buf(xv.node(), m * n);
      std::vector<double> d(static_cast<std::size_t>(n));
      for (std::int64_t r = 0; r < m; ++r) {
        double mean_d = 0.0, mean_dh = 0.0;
        for (std::int64_t c = 0; c < n; ++c) {
          d[c] = g[r * n + c] * gaind[c];
          mean_d += d[c];
          mean_dh += d[c] * hd2[r * n + c];
        }
        mean_d /= static_cast<double>(n);
        mean_dh /= static_cast<double>(n);
        for (std::int64_t c = 0; c < n; ++c)
          gx[r * n + c] += inv_sd[r] * (d[c] - mean_d - hd2[r * n + c] * mean_dh);
      }
    }
    if (gv.node() >= 0) {
      auto& gg = t.grad_buf(gv.node(), n);
      for (std::int64_t r = 0; r < m; ++r)
        for (std::int64_t c = 0; c < n; ++c) gg[c] += g[r * n + c] * hd2[r * n + c];
    }
    if (bv.node() >= 0) {
      auto& gb = t.grad_buf(bv.node(), n);
      for (std::int64_t r = 0; r < m; ++r)
        for (std::int64_t c = 0; c < n; ++c) gb[c] += g[r * n + c];
    }
  });
}

Tensor Tape::softmax_rows(const Tensor& x) {
  const std::int64_t m = x.rows(), n = x.cols();
  const KernelTable& K = kernels::active();
  std::vector<double> mx(m);
  K.row_max(x.data().data(), m, n, mx.data());
  Tensor out(m, n);
  auto xd = x.data();
  auto od = out.data_mut();
  for (std::int64_t r = 0; r < m; ++r) {
    double s = 0.0;
    for (std::int64_t c = 0; c < n; ++c) {
      double e = std::exp(xd[r * n + c] - mx[r]);
      od[r * n + c] = e;
      s += e;
    }
    double inv = 1.0 / s;
    for (std::int64_t c = 0; c < n; ++c) od[r * n + c] *= inv;
  }
  check_finite(out, "softmax");
  Tensor xv = x, ov = out;
  return make_node(out, [xv, ov, m, n](Tape& t) {
    if (xv.node() < 0) return;
    const auto& g = *t.grad_of(t.cursor_);
    auto& gx = t.grad_buf(xv.node(), m * n);
    auto yd = ov.data();
    for (std::int64_t r = 0; r < m; ++r) {
      double s = 0.0;
      for (std::int64_t c = 0; c < n; ++c) s += g[r * n + c] * yd[r * n + c];
      for (std::int64_t c = 0; c < n; ++c)
        gx[r * n + c] += yd[r * n + c] * (g[r * n + c] - s);
    }
  });
}

Tensor Tape::segment_softmax(const Tensor& x, std::span<const std::int64_t> seg,
                             std::int64_t nseg) {
  const std::int64_t m = x.rows(), h = x.cols();
  if (static_cast<std::int64_t>(seg.size()) != m)
    throw StructuralError("segment_softmax: segment id count mismatch");
  for (auto s : seg)
    if (s < 0 || s >= nseg) throw StructuralError("segment_softmax: segment id out of range");

  std::vector<double> mx(static_cast<std::size_t>(nseg * h),
                         -std::numeric_limits<double>::infinity());
  auto xd = x.data();
  for (std::int64_t r = 0; r < m; ++r)
    for (std::int64_t c = 0; c < h; ++c)
      mx[seg[r] * h + c] = std::max(mx[seg[r] * h + c], xd[r * h + c]);

  Tensor out(m, h);
  auto od = out.data_mut();
  std::vector<double> sum(static_cast<std::size_t>(nseg * h), 0.0);
  for (std::int64_t r = 0; r < m; ++r)
    for (std::int64_t c = 0; c < h; ++c) {
      double e = std::exp(xd[r * h + c] - mx[seg[r] * h + c]);
      od[r * h + c] = e;
      sum[seg[r] * h + c] += e;
    }
  for (std::int64_t r = 0; r < m; ++r)
    for (std::int64_t c = 0; c < h; ++c) od[r * h + c] /= sum[seg[r] * h + c];
  check_finite(out, "segment_softmax");

  std::vector<std::int64_t> segv(seg.begin(), seg.end());
  Tensor xv = x, ov = out;
  return make_node(out, [xv, ov, segv, nseg, m, h](Tape& t) {
    if (xv.node() < 0) return;
    const auto& g = *t.grad_of(t.cursor_);
    auto& gx = t.grad_buf(xv.node(), m * h);
    auto yd = ov.data();
    std::vector<double> s(static_cast<std::size_t>(nseg * h), 0.0);
    for (std::int64_t r = 0; r < m; ++r)
      for (std::int64_t c = 0; c < h; ++c) s[segv[r] * h + c] += g[r * h + c] * yd[r * h + c];
    for (std::int64_t r = 0; r < m; ++r)
      for (std::int64_t c = 0; c < h; ++c)
        gx[r * h + c] += yd[r * h + c] * (g[r * h + c] - s[segv[r] * h + c]);
  });
}

Tensor Tape::segment_sum(const Tensor& x, std::span<const std::int64_t> seg,
                         std::int64_t nseg) {
  const std::int64_t m = x.rows(), f = x.cols();
  if (static_cast<std::int64_t>(seg.size()) != m)
    throw StructuralError("segment_sum: segment id count mismatch");
  for (auto s : seg)
    if (s < 0 || s >= nseg) throw StructuralError("segment_sum: segment id out of range");
  const KernelTable& K = kernels::active();
  Tensor out(nseg, f);
  K.segment_sum(x.data().data(), m, f, seg.data(), nseg, out.data_mut().data());
  check_finite(out, "segment_sum");
  std::vector<std::int64_t> segv(seg.begin(), seg.end());
  Tensor xv = x;
  return make_node(out, [xv, segv, m, f](Tape& t) {
    if (xv.node() < 0) return;
    const KernelTable& K2 = kernels::active();
    const auto& g = *t.grad_of(t.cursor_);
    auto& gx = t.grad_buf(xv.node(), m * f);
    for (std::int64_t r = 0; r < m; ++r)
      K2.vaxpy(1.0, g.data() + segv[r] * f, gx.data() + r * f, f);
  });
}

Tensor Tape::gather_rows(const Tensor& x, std::span<const std::int64_t> idx) {
  const std::int64_t f = x.cols(), nr = x.rows();
  for (auto i : idx)
    if (i < 0 || i >= nr) throw StructuralError("gather_rows: index out of range");
  const KernelTable& K = kernels::active();
  const std::int64_t n = static_cast<std::int64_t>(idx.size());
  Tensor out(n, f);
  K.gather_rows(x.data().data(), f, idx.data(), n, out.data_mut().data());
  std::vector<std::int64_t> idxv(idx.begin(), idx.end());
  Tensor xv = x;
  return make_node(out, [xv, idxv, n, f](Tape& t) {
    if (xv.node() < 0) return;
    const auto& g = *t.grad_of(t.cursor_);
    auto& gx = t.grad_buf(xv.node(), xv.size());
    kernels::active().scatter_add_rows(g.data(), n, f, idxv.data(), gx.data());
  });
}

Tensor Tape::rowwise_mul(const Tensor& x, const Tensor& s) {
  const std::int64_t m = x.rows(), n = x.cols();
  if (s.size() != m) throw StructuralError("rowwise_mul: scale length mismatch");
  const KernelTable& K = kernels::active();
  Tensor out(m, n);
  auto sd = s.data();
  for (std::int64_t r = 0; r < m; ++r)
    K.vscale(x.data().data() + r * n, sd[r], out.data_mut().data() + r * n, n);
  check_finite(out, "rowwise_mul");
  Tensor xv = x, sv = s;
  return make_node(out, [xv, sv, m, n](Tape& t) {
    const KernelTable& K2 = kernels::active();
    const auto& g = *t.grad_of(t.cursor_);
    auto sd2 = sv.data();
    if (xv.node() >= 0) {
      auto& gx = t.grad_buf(xv.node(), m * n);
      for (std::int64_t r = 0; r < m; ++r)
        K2.vaxpy(sd2[r], g.data() + r * n, gx.data() + r * n, n);
    }
    if (sv.node() >= 0) {
      auto& gs = t.grad_buf(sv.node(), m);
      auto xd2 = xv.data();
      for (std::int64_t r = 0; r < m; ++r)
        gs[r] += K2.vdot(g.data() + r * n, xd2.data() + r * n, n);
    }
  });
}

Tensor Tape::colwise_mul(const Tensor& x, const Tensor& s) {
  const std::int64_t m = x.rows(), n = x.cols();
  if (s.size() != n) throw StructuralError("colwise_mul: scale length mismatch");
  const KernelTable& K = kernels::active();
  Tensor out(m, n);
  for (std::int64_t r = 0; r < m; ++r)
    K.vmul(x.data().data() + r * n, s.data().data(), out.data_mut().data() + r * n, n);
  check_finite(out, "colwise_mul");
  Tensor xv = x, sv = s;
  return make_node(out, [xv, sv, m, n](Tape& t) {
    const KernelTable& K2 = kernels::active();
    const auto& g = *t.grad_of(t.cursor_);
    if (xv.node() >= 0) {
      auto& gx = t.grad_buf(xv.node(), m * n);
      std::vector<double> tmp(static_cast<std::size_t>(n));
      for (std::int64_t r = 0; r < m; ++r) {
        K2.vmul(g.data() + r * n, sv.data().data(), tmp.data(), n);
        K2.vaxpy(1.0, tmp.data(), gx.data() + r * n, n);
      }
    }
    if (sv.node() >= 0) {
      auto& gs = t.grad_buf(sv.node(), n);
      auto xd2 = xv.data();
      for (std::int64_t r = 0; r < m; ++r)
        for (std::int64_t c = 0; c < n; ++c) gs[c] += g[r * n + c] * xd2[r * n + c];
    }
  });
}

Tensor Tape::weighted_gather_sum(const Tensor& x, std::span<const std::int64_t> idx,
                                 std::span<const double> w, std::int64_t out_rows,
                                 std::int64_t fan) {
  const std::int64_t f = x.cols(), nr = x.rows();
  if (static_cast<std::int64_t>(idx.size()) != out_rows * fan || idx.size() != w.size())
    throw StructuralError("weighted_gather_sum: index/weight size mismatch");
  for (auto i : idx)
    if (i < 0 || i >= nr) throw StructuralError("weighted_gather_sum: index out of range");
  const KernelTable& K = kernels::active();
  Tensor out(out_rows, f);
  K.weighted_gather_sum(x.data().data(), f, idx.data(), w.data(), out_rows, fan,
                        out.data_mut().data());
  check_finite(out, "weighted_gather_sum");
  std::vector<std::int64_t> idxv(idx.begin(), idx.end());
  std::vector<double> wv(w.begin(), w.end());
  Tensor xv = x;
  return make_node(out, [xv, idxv, wv, out_rows, fan, f](Tape& t) {
    if (xv.node() < 0) return;
    const auto& g = *t.grad_of(t.cursor_);
    auto& gx = t.grad_buf(xv.node(), xv.size());
    kernels::active().weighted_scatter_add(g.data(), f, idxv.data(), wv.data(), out_rows, fan,
                                           gx.data());
  });
}

Tensor Tape::normalize_vec(const Tensor& p) {
  const KernelTable& K = kernels::active();
  const std::int64_t n = p.size();
  double nrm = std::sqrt(K.vdot(p.data().data(), p.data().data(), n));
  if (!(nrm > 0.0) || !std::isfinite(nrm))
    throw NumericalError("normalize_vec: vector has zero or non-finite norm");
  Tensor out(p.shape());
  K.vscale(p.data().data(), 1.0 / nrm, out.data_mut().data(), n);
  Tensor pv = p, ov = out;
  return make_node(out, [pv, ov, nrm, n](Tape& t) {
    if (pv.node() < 0) return;
    const KernelTable& K2 = kernels::active();
    const auto& g = *t.grad_of(t.cursor_);
    auto& gp = t.grad_buf(pv.node(), n);
    auto yd = ov.data();
    double c = K2.vdot(yd.data(), g.data(), n);
    for (std::int64_t i = 0; i < n; ++i) gp[i] += (g[i] - c * yd[i]) / nrm;
  });
}

Tensor Tape::sum_all(const Tensor& x) {
  const KernelTable& K = kernels::active();
  Tensor out = Tensor::scalar(K.vsum(x.data().data(), x.size()));
  check_finite(out, "sum_all");
  Tensor xv = x;
  return make_node(out, [xv](Tape& t) {
    if (xv.node() < 0) return;
    const auto& g = *t.grad_of(t.cursor_);
    auto& gx = t.grad_buf(xv.node(), xv.size());
    for (auto& v : gx) v += g[0];
  });
}

Tensor Tape::l2_loss(const Tensor& pred, const Tensor& target,
                     std::span<const std::uint8_t> row_mask) {
  const std::int64_t m = pred.rows(), n = pred.cols();
  if (target.rows() != m || target.cols() != n)
    throw StructuralError("l2_loss: prediction/target shape mismatch");
  if (static_cast<std::int64_t>(row_mask.size()) != m)
    throw StructuralError("l2_loss: mask length mismatch");
  std::int64_t count = 0;
  for (auto v : row_mask) count += v ? 1 : 0;
  if (count == 0) throw StructuralError("l2_loss: empty row mask");
  const KernelTable& K = kernels::active();
  double sq =
      K.masked_sq_diff_sum(pred.data().data(), target.data().data(), row_mask.data(), m, n);
  double denom = static_cast<double>(count * n);
  Tensor out = Tensor::scalar(sq / denom);
  check_finite(out, "l2_loss");
  std::vector<std::uint8_t> maskv(row_mask.begin(), row_mask.end());
  Tensor pv = pred, tv = target;
  return make_node(out, [pv, tv, maskv, m, n, denom](Tape& t) {
    const auto& g = *t.grad_of(t.cursor_);
    const double coef = 2.0 * g[0] / denom;
    auto pd = pv.data();
    auto td = tv.data();
    if (pv.node() >= 0) {
      auto& gp = t.grad_buf(pv.node(), m * n);
      for (std::int64_t r = 0; r < m; ++r) {
        if (!maskv[r]) continue;
        for (std::int64_t c = 0; c < n; ++c)
          gp[r * n + c] += coef * (pd[r * n + c] - td[r * n + c]);
      }
    }
    if (tv.node() >= 0) {
      auto& gt = t.grad_buf(tv.node(), m * n);
      for (std::int64_t r = 0; r < m; ++r) {
        if (!maskv[r]) continue;
        for (std::int64_t c = 0; c < n; ++c)
          gt[r * n + c] -= coef * (pd[r * n + c] - td[r * n + c]);
      }
    }
  });
}

void Tape::backward(const Tensor& loss) {
  if (!loss.tracked() || loss.size() != 1)
    throw StructuralError("backward: loss must be a tracked scalar");
  if (ran_backward_) throw StructuralError("backward: tape already consumed");
  ran_backward_ = true;
  grads_.assign(nodes_.size(), {});
  grads_[static_cast<std::size_t>(loss.node())] = {1.0};
  for (int id = loss.node(); id >= 0; --id) {
    if (grads_[static_cast<std::size_t>(id)].empty()) continue;
    auto& node = nodes_[static_cast<std::size_t>(id)];
    if (!node.back) continue;
    cursor_ = id;
    node.back(*this);
  }
}

std::span<const double> Tape::grad(const Tensor& t) const {
  if (!t.tracked()) return {};
  const auto* g = grad_of(t.node());
  if (!g) return {};
  return {g->data(), g->size()};
}

}  // namespace mc::ad
