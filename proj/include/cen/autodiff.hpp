#pragma once

// Reverse-mode automatic differentiation over dense fp64 tensors.
//
// A Tape records every op of one forward pass. Var is a handle to a node on
// a tape; ops take Vars and return a new Var, registering a backward closure
// when any input requires a gradient. backward() sweeps the tape in reverse
// creation order (which is a topological order), accumulates gradients with
// +=, returns the gradients of all parameter leaves by name and clears the
// tape. Tapes are single use; higher-order derivatives are not supported.
//
// A tape built with recording=false keeps values only. Use it for inference
// so that the same model code serves training and evaluation.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <map>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cen/graph.hpp"
#include "cen/param_store.hpp"
#include "cen/tensor.hpp"

namespace cen::ad {

class Tape;

class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t id() const noexcept { return id_; }
  Tape* tape() const noexcept { return tape_; }
  bool valid() const noexcept { return tape_ != nullptr; }
  bool requires_grad() const;

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

using GradMap = std::map<std::string, Tensor>;

class Tape {
 public:
  // Called with the node's own output value and its accumulated gradient.
  using BackwardFn = std::function<void(Tape&, const Tensor& out, const Tensor& grad_out)>;

  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const noexcept { return recording_; }

  Var constant(Tensor value);
  // Differentiable leaf whose gradient is reported under `name`.
  Var leaf(Tensor value, std::string name);
  // Binds a store entry: trainable entries become leaves, frozen ones
  // constants. Binding the same name twice returns the same Var.
  Var param(const ParamStore& store, const std::string& name);

  // Adds an op node. `fn` runs during backward with the node's gradient;
  // it is dropped when no parent requires a gradient or when not recording.
  Var record(Tensor value, std::initializer_list<Var> parents, BackwardFn fn);

  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  // Gradient buffer of a node, zero-initialised on first access.
  Tensor& grad(std::size_t id);
  void accumulate(std::size_t id, const Tensor& g);

  std::size_t size() const noexcept { return nodes_.size(); }
  void clear();

 private:
  friend GradMap backward(Var loss);

  struct Node {
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    BackwardFn backward;
    std::string param;
  };

  std::deque<Node> nodes_;
  std::unordered_map<std::string, std::size_t> params_;
  bool recording_;
};

// Reverse sweep from a scalar loss. Returns a gradient (possibly all zeros)
// for every parameter leaf on the tape, then clears the tape.
GradMap backward(Var loss);

enum class Activation { Identity, Relu, Tanh, Sigmoid };

Activation parse_activation(std::string_view s);
std::string_view to_string(Activation a);

// ---- ops -------------------------------------------------------------------

Var matmul(const Var& a, const Var& b);     // [m x n] * [n x p]
Var matmul_bt(const Var& a, const Var& b);  // [m x n] * [p x n]^T
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var add_row(const Var& a, const Var& bias);  // a [m x n] + bias [n] on every row
Var scale(const Var& a, double factor);
Var one_minus(const Var& a);
Var sigmoid(const Var& a);
Var relu(const Var& a);
Var tanh(const Var& a);
Var activate(const Var& a, Activation act);
Var sum(const Var& a);
Var add_n(std::span<const Var> terms);
Var concat_rows(const Var& a, const Var& b);
Var reshape(const Var& a, Shape shape);
// Embedding lookup; gradient scatters back into the looked-up rows only.
Var gather_rows(const Var& table, std::span<const std::int32_t> ids);

// Mean over incoming edges of (H[s] + R[r]) for each entity, zero when the
// entity has no incoming edge.
Var rgcn_aggregate(const Var& entities, const Var& relations, const GraphIndex& g);

// Same-padded convolution of a 2 x d pair with C kernels of size 2 x M.
// Returns C x d. M must be odd and the kernel height 2.
Var conv_stack(const Var& pair, const Var& kernels);
// Batched form over B pairs given as two B x d row blocks. Returns B x (C*d),
// each row the row-major flattening of that pair's C x d feature map.
Var conv_pairs(const Var& top, const Var& bottom, const Var& kernels);

// Inverted dropout. Identity when !train or rate == 0.
Var dropout(const Var& a, double rate, bool train, std::mt19937_64& rng);

// Mean over the batch of -log softmax(logits)[target].
Var cross_entropy(const Var& logits, std::span<const std::int32_t> targets);

// sum((a - anchor)^2)
Var squared_distance(const Var& a, const Tensor& anchor);

// ---- utilities -------------------------------------------------------------

// Glorot-uniform init for matrices and conv kernels (fan computed like the
// usual deep-learning convention: dims beyond the first two form the
// receptive field).
Tensor xavier_uniform(const Shape& shape, std::mt19937_64& rng);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

// Compares backward() against central finite differences for every element
// of every trainable entry. Relative error is |a - n| / max(|a|, |n|, floor).
// `loss_fn` must rebuild the loss from `params` on the tape it receives and be
// deterministic.
GradCheckResult grad_check(const std::function<Var(Tape&)>& loss_fn, ParamStore& params, double eps = 1e-5,
                           double floor = 1e-6);

}  // namespace cen::ad
