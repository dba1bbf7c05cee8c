// Reference loop nests. Kept deliberately plain: these are the oracles the
// OpenMP kernels are tested against bit for bit.

#include <algorithm>
#include <cmath>

#include "cen/kernels.hpp"

namespace cen::kernels::serial {

void gemm(CSpan a, CSpan b, MSpan c, std::size_t m, std::size_t n, std::size_t p, bool accumulate) {
  if (!accumulate) std::fill(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(m * p), 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c.data() + i * p;
    for (std::size_t k = 0; k < n; ++k) {
      const double aik = a[i * n + k];
      const double* bk = b.data() + k * p;
      for (std::size_t j = 0; j < p; ++j) ci[j] += aik * bk[j];
    }
  }
}

void gemm_bt(CSpan a, CSpan b, MSpan c, std::size_t m, std::size_t n, std::size_t p, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a.data() + i * n;
    for (std::size_t j = 0; j < p; ++j) {
      const double* bj = b.data() + j * n;
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += ai[k] * bj[k];
      c[i * p + j] = accumulate ? c[i * p + j] + acc : acc;
    }
  }
}

void gemm_at(CSpan a, CSpan b, MSpan c, std::size_t m, std::size_t n, std::size_t p, bool accumulate) {
  if (!accumulate) std::fill(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(m * p), 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c.data() + i * p;
    for (std::size_t k = 0; k < n; ++k) {
      const double aki = a[k * m + i];
      const double* bk = b.data() + k * p;
      for (std::size_t j = 0; j < p; ++j) ci[j] += aki * bk[j];
    }
  }
}

void conv_forward(CSpan top, CSpan bottom, CSpan kernels, MSpan out, std::size_t batch, std::size_t d,
                  std::size_t channels, std::size_t width) {
  const auto pad = static_cast<std::ptrdiff_t>(width / 2);
  const auto sd = static_cast<std::ptrdiff_t>(d);
  for (std::size_t b = 0; b < batch; ++b) {
    const double* t = top.data() + b * d;
    const double* u = bottom.data() + b * d;
    for (std::size_t c = 0; c < channels; ++c) {
      const double* k0 = kernels.data() + c * 2 * width;
      const double* k1 = k0 + width;
      double* o = out.data() + b * channels * d + c * d;
      for (std::ptrdiff_t j = 0; j < sd; ++j) {
        double acc = 0.0;
        for (std::size_t w = 0; w < width; ++w) {
          const std::ptrdiff_t idx = j + static_cast<std::ptrdiff_t>(w) - pad;
          if (idx < 0 || idx >= sd) continue;
          acc += k0[w] * t[idx];
          acc += k1[w] * u[idx];
        }
        o[j] = acc;
      }
    }
  }
}

void conv_backward_input(CSpan grad_out, CSpan kernels, MSpan grad_top, MSpan grad_bottom, std::size_t batch,
                         std::size_t d, std::size_t channels, std::size_t width) {
  const auto pad = static_cast<std::ptrdiff_t>(width / 2);
  const auto sd = static_cast<std::ptrdiff_t>(d);
  for (std::size_t b = 0; b < batch; ++b) {
    const double* g = grad_out.data() + b * channels * d;
    for (std::ptrdiff_t i = 0; i < sd; ++i) {
      double acc_t = 0.0;
      double acc_u = 0.0;
      for (std::size_t c = 0; c < channels; ++c) {
        const double* k0 = kernels.data() + c * 2 * width;
        const double* k1 = k0 + width;
        for (std::size_t w = 0; w < width; ++w) {
          const std::ptrdiff_t j = i - static_cast<std::ptrdiff_t>(w) + pad;
          if (j < 0 || j >= sd) continue;
          const double gj = g[c * d + static_cast<std::size_t>(j)];
          acc_t += k0[w] * gj;
          acc_u += k1[w] * gj;
        }
      }
      grad_top[b * d + static_cast<std::size_t>(i)] += acc_t;
      grad_bottom[b * d + static_cast<std::size_t>(i)] += acc_u;
    }
  }
}

void conv_backward_kernels(CSpan grad_out, CSpan top, CSpan bottom, MSpan grad_kernels, std::size_t batch,
                           std::size_t d, std::size_t channels, std::size_t width) {
  const auto pad = static_cast<std::ptrdiff_t>(width / 2);
  const auto sd = static_cast<std::ptrdiff_t>(d);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t w = 0; w < width; ++w) {
      double acc_t = 0.0;
      double acc_u = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const double* g = grad_out.data() + b * channels * d + c * d;
        const double* t = top.data() + b * d;
        const double* u = bottom.data() + b * d;
        for (std::ptrdiff_t j = 0; j < sd; ++j) {
          const std::ptrdiff_t idx = j + static_cast<std::ptrdiff_t>(w) - pad;
          if (idx < 0 || idx >= sd) continue;
          acc_t += g[j] * t[idx];
          acc_u += g[j] * u[idx];
        }
      }
      grad_kernels[c * 2 * width + w] += acc_t;
      grad_kernels[c * 2 * width + width + w] += acc_u;
    }
  }
}

void rgcn_aggregate(CSpan h, CSpan rel, const GraphIndex& g, MSpan out, std::size_t d) {
  const auto offsets = g.in_offsets();
  const auto src = g.src();
  const auto rid = g.rel();
  for (std::size_t o = 0; o < g.num_entities(); ++o) {
    double* row = out.data() + o * d;
    std::fill(row, row + d, 0.0);
    const std::size_t begin = offsets[o];
    const std::size_t end = offsets[o + 1];
    if (begin == end) continue;
    for (std::size_t e = begin; e < end; ++e) {
      const double* hs = h.data() + static_cast<std::size_t>(src[e]) * d;
      const double* rr = rel.data() + static_cast<std::size_t>(rid[e]) * d;
      for (std::size_t j = 0; j < d; ++j) row[j] += hs[j] + rr[j];
    }
    const double inv = 1.0 / static_cast<double>(end - begin);
    for (std::size_t j = 0; j < d; ++j) row[j] *= inv;
  }
}

void rgcn_aggregate_backward(CSpan grad_out, const GraphIndex& g, MSpan grad_h, MSpan grad_rel, std::size_t d) {
  const auto dst = g.dst();
  auto inv_deg = [&](std::size_t e) { return 1.0 / static_cast<double>(g.in_degree(static_cast<std::size_t>(dst[e]))); };
  const auto out_off = g.out_offsets();
  const auto out_edges = g.out_edges();
  for (std::size_t u = 0; u < g.num_entities(); ++u) {
    double* row = grad_h.data() + u * d;
    for (std::size_t i = out_off[u]; i < out_off[u + 1]; ++i) {
      const std::size_t e = out_edges[i];
      const double* go = grad_out.data() + static_cast<std::size_t>(dst[e]) * d;
      const double s = inv_deg(e);
      for (std::size_t j = 0; j < d; ++j) row[j] += go[j] * s;
    }
  }
  const auto rel_off = g.rel_offsets();
  const auto rel_edges = g.rel_edges();
  for (std::size_t r = 0; r < g.num_relations(); ++r) {
    double* row = grad_rel.data() + r * d;
    for (std::size_t i = rel_off[r]; i < rel_off[r + 1]; ++i) {
      const std::size_t e = rel_edges[i];
      const double* go = grad_out.data() + static_cast<std::size_t>(dst[e]) * d;
      const double s = inv_deg(e);
      for (std::size_t j = 0; j < d; ++j) row[j] += go[j] * s;
    }
  }
}

void softmax_xent(CSpan logits, std::span<const std::int32_t> targets, MSpan row_loss, MSpan grad,
                  std::size_t batch, std::size_t classes, double grad_scale) {
  for (std::size_t b = 0; b < batch; ++b) {
    const double* x = logits.data() + b * classes;
    double* gr = grad.data() + b * classes;
    double mx = x[0];
    for (std::size_t j = 1; j < classes; ++j) mx = std::max(mx, x[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < classes; ++j) sum += std::exp(x[j] - mx);
    const double lse = mx + std::log(sum);
    const auto t = static_cast<std::size_t>(targets[b]);
    row_loss[b] = lse - x[t];
    for (std::size_t j = 0; j < classes; ++j) gr[j] = std::exp(x[j] - lse) * grad_scale;
    gr[t] -= grad_scale;
  }
}

}  // namespace cen::kernels::serial
