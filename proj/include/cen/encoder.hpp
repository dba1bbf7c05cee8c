#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "cen/autodiff.hpp"
#include "cen/graph.hpp"

namespace cen {

enum class SkipMode { Gate, Additive };

SkipMode parse_skip_mode(std::string_view s);
std::string_view to_string(SkipMode m);

/// Encoder parameters bound onto a tape.
struct EncoderVars {
  ad::Var entities;   // H, |V| x d
  ad::Var relations;  // R, (2|R|) x d, shared across time
  struct Layer {
    ad::Var w_msg;   // W1, d x d
    ad::Var w_self;  // W2, d x d
  };
  std::vector<Layer> layers;
  ad::Var w_gate;  // W4, d x d
  ad::Var b_gate;  // b4, d
};

struct EncodeOptions {
  ad::Activation act = ad::Activation::Relu;
  SkipMode skip = SkipMode::Gate;
  double dropout = 0.0;
  bool train = false;
  std::mt19937_64* rng = nullptr;  // required when train && dropout > 0
};

// h'_o = act(mean_{(s,r,o) in g}(h_s + r) W1^T + h_o W2^T). Entities without
// incoming edges keep only the self-loop term.
ad::Var rgcn_layer(const ad::Var& h, const ad::Var& relations, const GraphIndex& g, const ad::Var& w_msg,
                   const ad::Var& w_self, ad::Activation act);

// All stacked layers with dropout after each one in train mode.
ad::Var rgcn_stack(const EncoderVars& p, const ad::Var& h, const GraphIndex& g, const EncodeOptions& opt);

// Gate:     U = sigmoid(h_prev W4^T + b4); out = U * h_hat + (1 - U) * h_prev
// Additive: out = h_hat + h_prev (ablation variant, ignores W4/b4)
ad::Var skip_connection(const ad::Var& h_hat, const ad::Var& h_prev, const ad::Var& w_gate, const ad::Var& b_gate,
                        SkipMode mode = SkipMode::Gate);

// Unrolls the shared layer over `snapshots` (oldest first) starting from the
// initial entity matrix H; returns the representation at the query time.
ad::Var encode_sequence(const EncoderVars& p, std::span<const GraphIndex* const> snapshots,
                        const EncodeOptions& opt);

// reps[k-1] encodes the latest min(k, history.size()) snapshots, k = 1..K.
// Truncated lengths share one computation.
std::vector<ad::Var> encode_all(const EncoderVars& p, std::size_t max_length,
                                std::span<const GraphIndex* const> history, const EncodeOptions& opt);

}  // namespace cen
