#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "cen/kernels.hpp"

#include <vector>

namespace cen::kernels {

namespace {

std::atomic<Backend> g_backend{Backend::OpenMP};

// Below this many multiply-adds the fork/join costs more than it saves.
constexpr std::size_t kParallelWork = 1u << 14;

}  // namespace

void set_backend(Backend b) noexcept { g_backend.store(b, std::memory_order_relaxed); }
Backend backend() noexcept { return g_backend.load(std::memory_order_relaxed); }

int configure_threads_from_env() {
#ifdef _OPENMP
  if (const char* env = std::getenv("CEN_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) omp_set_num_threads(n);
  }
  return omp_get_max_threads();
#else
  return 1;
#endif
}

int max_threads() noexcept {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace omp {

void gemm(CSpan a, CSpan b, MSpan c, std::size_t m, std::size_t n, std::size_t p, bool accumulate) {
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static) if (m * n * p > kParallelWork)
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double* ci = c.data() + i * p;
    if (!accumulate) std::fill(ci, ci + p, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      const double aik = a[i * n + k];
      const double* bk = b.data() + k * p;
#pragma omp simd
      for (std::size_t j = 0; j < p; ++j) ci[j] += aik * bk[j];
    }
  }
}

void gemm_bt(CSpan a, CSpan b, MSpan c, std::size_t m, std::size_t n, std::size_t p, bool accumulate) {
  // b^T copied once so the inner loop runs along j and vectorises. Each
  // c[i, j] still sums its n products in k order starting from zero, as the
  // serial dot product does.
  std::vector<double> bt(n * p);
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t k = 0; k < n; ++k) bt[k * p + j] = b[j * n + k];
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel if (m * n * p > kParallelWork)
  {
    std::vector<double> acc(p);
#pragma omp for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      const double* ai = a.data() + i * n;
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t k = 0; k < n; ++k) {
        const double aik = ai[k];
        const double* bk = bt.data() + k * p;
        for (std::size_t j = 0; j < p; ++j) acc[j] += aik * bk[j];
      }
      double* ci = c.data() + i * p;
      if (accumulate) {
        for (std::size_t j = 0; j < p; ++j) ci[j] += acc[j];
      } else {
        std::copy(acc.begin(), acc.end(), ci);
      }
    }
  }
}

void gemm_at(CSpan a, CSpan b, MSpan c, std::size_t m, std::size_t n, std::size_t p, bool accumulate) {
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static) if (m * n * p > kParallelWork)
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double* ci = c.data() + i * p;
    if (!accumulate) std::fill(ci, ci + p, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      const double aki = a[k * m + i];
      const double* bk = b.data() + k * p;
#pragma omp simd
      for (std::size_t j = 0; j < p; ++j) ci[j] += aki * bk[j];
    }
  }
}

void conv_forward(CSpan top, CSpan bottom, CSpan kernels, MSpan out, std::size_t batch, std::size_t d,
                  std::size_t channels, std::size_t width) {
  const auto pad = static_cast<std::ptrdiff_t>(width / 2);
  const auto sd = static_cast<std::ptrdiff_t>(d);
  const auto nb = static_cast<std::ptrdiff_t>(batch);
#pragma omp parallel for schedule(static) if (batch * channels * d * width > kParallelWork)
  for (std::ptrdiff_t bb = 0; bb < nb; ++bb) {
    const auto b = static_cast<std::size_t>(bb);
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
  const auto nb = static_cast<std::ptrdiff_t>(batch);
#pragma omp parallel for schedule(static) if (batch * channels * d * width > kParallelWork)
  for (std::ptrdiff_t bb = 0; bb < nb; ++bb) {
    const auto b = static_cast<std::size_t>(bb);
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
  const auto taps = static_cast<std::ptrdiff_t>(channels * width);
#pragma omp parallel for schedule(static) if (batch * channels * d * width > kParallelWork)
  for (std::ptrdiff_t cw = 0; cw < taps; ++cw) {
    const auto c = static_cast<std::size_t>(cw) / width;
    const auto w = static_cast<std::size_t>(cw) % width;
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

void rgcn_aggregate(CSpan h, CSpan rel, const GraphIndex& g, MSpan out, std::size_t d) {
  const auto offsets = g.in_offsets();
  const auto src = g.src();
  const auto rid = g.rel();
  const auto n = static_cast<std::ptrdiff_t>(g.num_entities());
#pragma omp parallel for schedule(static) if ((g.num_edges() + g.num_entities()) * d > kParallelWork)
  for (std::ptrdiff_t oo = 0; oo < n; ++oo) {
    const auto o = static_cast<std::size_t>(oo);
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
  const auto out_off = g.out_offsets();
  const auto out_edges = g.out_edges();
  const auto rel_off = g.rel_offsets();
  const auto rel_edges = g.rel_edges();
  const bool par = (g.num_edges() + g.num_entities()) * d > kParallelWork;
  const auto ne = static_cast<std::ptrdiff_t>(g.num_entities());
  const auto nr = static_cast<std::ptrdiff_t>(g.num_relations());
#pragma omp parallel if (par)
  {
#pragma omp for schedule(static) nowait
    for (std::ptrdiff_t uu = 0; uu < ne; ++uu) {
      const auto u = static_cast<std::size_t>(uu);
      double* row = grad_h.data() + u * d;
      for (std::size_t i = out_off[u]; i < out_off[u + 1]; ++i) {
        const std::size_t e = out_edges[i];
        const auto o = static_cast<std::size_t>(dst[e]);
        const double* go = grad_out.data() + o * d;
        const double s = 1.0 / static_cast<double>(g.in_degree(o));
        for (std::size_t j = 0; j < d; ++j) row[j] += go[j] * s;
      }
    }
#pragma omp for schedule(static)
    for (std::ptrdiff_t rr = 0; rr < nr; ++rr) {
      const auto r = static_cast<std::size_t>(rr);
      double* row = grad_rel.data() + r * d;
      for (std::size_t i = rel_off[r]; i < rel_off[r + 1]; ++i) {
        const std::size_t e = rel_edges[i];
        const auto o = static_cast<std::size_t>(dst[e]);
        const double* go = grad_out.data() + o * d;
        const double s = 1.0 / static_cast<double>(g.in_degree(o));
        for (std::size_t j = 0; j < d; ++j) row[j] += go[j] * s;
      }
    }
  }
}

void softmax_xent(CSpan logits, std::span<const std::int32_t> targets, MSpan row_loss, MSpan grad,
                  std::size_t batch, std::size_t classes, double grad_scale) {
  const auto nb = static_cast<std::ptrdiff_t>(batch);
#pragma omp parallel for schedule(static) if (batch * classes > kParallelWork)
  for (std::ptrdiff_t bb = 0; bb < nb; ++bb) {
    const auto b = static_cast<std::size_t>(bb);
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

}  // namespace omp

#define CEN_DISPATCH(name, ...)                                                     \
  do {                                                                              \
    if (backend() == Backend::Serial) return serial::name(__VA_ARGS__);             \
    return omp::name(__VA_ARGS__);                                                  \
  } while (0)

void gemm(CSpan a, CSpan b, MSpan c, std::size_t m, std::size_t n, std::size_t p, bool accumulate) {
  CEN_DISPATCH(gemm, a, b, c, m, n, p, accumulate);
}
void gemm_bt(CSpan a, CSpan b, MSpan c, std::size_t m, std::size_t n, std::size_t p, bool accumulate) {
  CEN_DISPATCH(gemm_bt, a, b, c, m, n, p, accumulate);
}
void gemm_at(CSpan a, CSpan b, MSpan c, std::size_t m, std::size_t n, std::size_t p, bool accumulate) {
  CEN_DISPATCH(gemm_at, a, b, c, m, n, p, accumulate);
}
void conv_forward(CSpan top, CSpan bottom, CSpan kernels, MSpan out, std::size_t batch, std::size_t d,
                  std::size_t channels, std::size_t width) {
  CEN_DISPATCH(conv_forward, top, bottom, kernels, out, batch, d, channels, width);
}
void conv_backward_input(CSpan grad_out, CSpan kernels, MSpan grad_top, MSpan grad_bottom, std::size_t batch,
                         std::size_t d, std::size_t channels, std::size_t width) {
  CEN_DISPATCH(conv_backward_input, grad_out, kernels, grad_top, grad_bottom, batch, d, channels, width);
}
void conv_backward_kernels(CSpan grad_out, CSpan top, CSpan bottom, MSpan grad_kernels, std::size_t batch,
                           std::size_t d, std::size_t channels, std::size_t width) {
  CEN_DISPATCH(conv_backward_kernels, grad_out, top, bottom, grad_kernels, batch, d, channels, width);
}
void rgcn_aggregate(CSpan h, CSpan rel, const GraphIndex& g, MSpan out, std::size_t d) {
  CEN_DISPATCH(rgcn_aggregate, h, rel, g, out, d);
}
void rgcn_aggregate_backward(CSpan grad_out, const GraphIndex& g, MSpan grad_h, MSpan grad_rel, std::size_t d) {
  CEN_DISPATCH(rgcn_aggregate_backward, grad_out, g, grad_h, grad_rel, d);
}
void softmax_xent(CSpan logits, std::span<const std::int32_t> targets, MSpan row_loss, MSpan grad,
                  std::size_t batch, std::size_t classes, double grad_scale) {
  CEN_DISPATCH(softmax_xent, logits, targets, row_loss, grad, batch, classes, grad_scale);
}

#undef CEN_DISPATCH

}  // namespace cen::kernels
