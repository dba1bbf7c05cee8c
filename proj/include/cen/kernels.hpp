#pragma once

// Numeric kernels behind the autodiff ops.
//
// Every kernel exists twice: `serial` is the plain reference loop nest kept
// for testing, `omp` is the OpenMP version used at run time. Both assign each
// output element to exactly one thread and sum its terms in the same order,
// so results are bit-identical for any thread count. The unqualified
// functions in `cen::kernels` dispatch on the active backend.

#include <cstddef>
#include <cstdint>
#include <span>

#include "cen/graph.hpp"

namespace cen::kernels {

enum class Backend { Serial, OpenMP };

void set_backend(Backend b) noexcept;
Backend backend() noexcept;

// Applies CEN_THREADS (if set) to the OpenMP runtime. Returns the thread cap.
int configure_threads_from_env();
int max_threads() noexcept;

// Scoped backend override.
class BackendGuard {
 public:
  explicit BackendGuard(Backend b) noexcept : prev_(backend()) { set_backend(b); }
  ~BackendGuard() { set_backend(prev_); }
  BackendGuard(const BackendGuard&) = delete;
  BackendGuard& operator=(const BackendGuard&) = delete;

 private:
  Backend prev_;
};

using CSpan = std::span<const double>;
using MSpan = std::span<double>;

#define CEN_KERNEL_DECLS                                                                                         \
  /* c (m x p) (+)= a (m x n) * b (n x p) */                                                                     \
  void gemm(CSpan a, CSpan b, MSpan c, std::size_t m, std::size_t n, std::size_t p, bool accumulate);            \
  /* c (m x p) (+)= a (m x n) * b^T, b is (p x n) */                                                             \
  void gemm_bt(CSpan a, CSpan b, MSpan c, std::size_t m, std::size_t n, std::size_t p, bool accumulate);         \
  /* c (m x p) (+)= a^T * b, a is (n x m), b is (n x p) */                                                       \
  void gemm_at(CSpan a, CSpan b, MSpan c, std::size_t m, std::size_t n, std::size_t p, bool accumulate);         \
  /* Same-padded 2 x width convolution over stacked rows [top; bottom] for a batch.                           \
     kernels: C x 2 x width, out: batch x (C * d). */                                                            \
  void conv_forward(CSpan top, CSpan bottom, CSpan kernels, MSpan out, std::size_t batch, std::size_t d,         \
                    std::size_t channels, std::size_t width);                                                    \
  void conv_backward_input(CSpan grad_out, CSpan kernels, MSpan grad_top, MSpan grad_bottom, std::size_t batch,  \
                           std::size_t d, std::size_t channels, std::size_t width);                              \
  void conv_backward_kernels(CSpan grad_out, CSpan top, CSpan bottom, MSpan grad_kernels, std::size_t batch,     \
                             std::size_t d, std::size_t channels, std::size_t width);                            \
  /* out[o] = mean over incoming edges (s, r, o) of (h[s] + rel[r]); zero rows for in-degree 0. */              \
  void rgcn_aggregate(CSpan h, CSpan rel, const GraphIndex& g, MSpan out, std::size_t d);                        \
  void rgcn_aggregate_backward(CSpan grad_out, const GraphIndex& g, MSpan grad_h, MSpan grad_rel,                \
                               std::size_t d);                                                                   \
  /* Row-wise stabilized log-softmax cross-entropy. Writes per-row losses and                                  \
     grad = (softmax - onehot) * grad_scale. */                                                                  \
  void softmax_xent(CSpan logits, std::span<const std::int32_t> targets, MSpan row_loss, MSpan grad,            \
                    std::size_t batch, std::size_t classes, double grad_scale);

namespace serial {
CEN_KERNEL_DECLS
}  // namespace serial

namespace omp {
CEN_KERNEL_DECLS
}  // namespace omp

CEN_KERNEL_DECLS

#undef CEN_KERNEL_DECLS

}  // namespace cen::kernels
