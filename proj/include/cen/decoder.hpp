#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "cen/autodiff.hpp"

namespace cen {

/// Decoder parameters bound onto a tape. kernels[k] holds channel k's C
/// kernels (C x 2 x M); with a single shared channel there is one entry.
struct DecoderVars {
  std::vector<ad::Var> kernels;
  ad::Var fcn_w;  // W3, (C*d) x d
  ad::Var fcn_b;  // b3, d
};

struct DecodeOptions {
  ad::Activation fcn_act = ad::Activation::Relu;
  double dropout = 0.0;
  bool train = false;
  std::mt19937_64* rng = nullptr;
  bool single_channel = false;  // one kernel set for every length
};

// Stacks [s; r] per row and convolves with one channel's kernels:
// B x d, B x d -> B x (C*d), the row-major flattening of the C maps.
ad::Var channel_features(const ad::Var& subjects, const ad::Var& relations, const ad::Var& kernels);

// Logits over all entities contributed by length index k (0-based):
// act(features W3 + b3) . reps[k]^T.
ad::Var channel_logits(const DecoderVars& p, std::size_t k, const ad::Var& reps_k, const ad::Var& relation_table,
                       std::span<const std::int32_t> subjects, std::span<const std::int32_t> relations,
                       const DecodeOptions& opt);

// Sum over k of channel_logits; B x |V|.
ad::Var score_all(const DecoderVars& p, std::span<const ad::Var> reps, const ad::Var& relation_table,
                  std::span<const std::int32_t> subjects, std::span<const std::int32_t> relations,
                  const DecodeOptions& opt);

// Mean cross-entropy of score_all against the true objects.
ad::Var batch_loss(const DecoderVars& p, std::span<const ad::Var> reps, const ad::Var& relation_table,
                   std::span<const std::int32_t> subjects, std::span<const std::int32_t> relations,
                   std::span<const std::int32_t> targets, const DecodeOptions& opt);

}  // namespace cen
