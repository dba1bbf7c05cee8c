#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cen/autodiff.hpp"
#include "cen/dataset.hpp"
#include "cen/decoder.hpp"
#include "cen/encoder.hpp"
#include "cen/param_store.hpp"

namespace cen {

/// Query (s, r, ?) with its true answer o. Subject-side queries appear as
/// (o, r + |R|, ?) with answer s.
struct Query {
  std::int32_t s = 0;
  std::int32_t r = 0;
  std::int32_t o = 0;
};

struct ModelConfig {
  std::size_t num_entities = 0;
  std::size_t num_relations = 0;  // rows of R (2|R| with inverse relations)
  std::size_t dim = 200;
  std::size_t layers = 2;
  std::size_t channels = 50;     // C
  std::size_t kernel_width = 3;  // M
  std::size_t max_length = 10;   // K
  double dropout = 0.2;
  ad::Activation rgcn_act = ad::Activation::Relu;
  ad::Activation fcn_act = ad::Activation::Relu;
  SkipMode skip = SkipMode::Gate;
  bool single_channel = false;

  void validate() const;
};

namespace param_names {
inline const std::string kEntities = "entity.embedding";
inline const std::string kRelations = "relation.embedding";
inline const std::string kGateW = "skip.w_gate";
inline const std::string kGateB = "skip.b_gate";
inline const std::string kFcnW = "decoder.fcn.weight";
inline const std::string kFcnB = "decoder.fcn.bias";
inline const std::string kLengths = "meta.lengths";
std::string msg_weight(std::size_t layer);
std::string self_weight(std::size_t layer);
std::string conv(std::size_t channel);
}  // namespace param_names

/// CEN parameters plus the number of history lengths currently modelled
/// (grown by the curriculum). All forward passes go through a Tape.
class CenModel {
 public:
  struct Bound {
    EncoderVars enc;
    DecoderVars dec;
  };

  CenModel(ModelConfig cfg, std::size_t lengths, std::uint64_t seed);
  // Wraps existing parameters (e.g. a loaded checkpoint) after checking they
  // match `cfg`.
  static CenModel from_params(ModelConfig cfg, ParamStore params);

  const ModelConfig& config() const noexcept { return cfg_; }
  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }

  std::size_t num_lengths() const;
  std::size_t num_channels() const;

  // Adds length num_lengths()+1. With warm_start the new channel copies the
  // previous channel's kernels, otherwise it is Xavier-initialised from rng.
  void extend_length(bool warm_start, std::mt19937_64& rng);

  Bound bind(ad::Tape& tape) const;

  // History for a query at time t: graphs of the latest min(t, L) snapshots.
  static std::span<const GraphIndex* const> history(std::span<const GraphIndex* const> all, std::size_t t,
                                                    std::size_t lengths);

  std::vector<ad::Var> encode(const Bound& b, std::span<const GraphIndex* const> history, bool train,
                              std::mt19937_64* rng) const;
  ad::Var logits(const Bound& b, std::span<const ad::Var> reps, std::span<const Query> queries, bool train,
                 std::mt19937_64* rng) const;
  ad::Var loss(ad::Tape& tape, std::span<const GraphIndex* const> history, std::span<const Query> queries,
               bool train, std::mt19937_64* rng) const;

  // Eval-mode scores (|queries| x |V|) for queries at the end of `history`.
  Tensor score(std::span<const GraphIndex* const> history, std::span<const Query> queries) const;

 private:
  CenModel() = default;

  ModelConfig cfg_;
  ParamStore params_;
};

// Queries of snapshot t: every stored fact (both directions after inverse
// augmentation).
std::vector<Query> snapshot_queries(const TkgDataset& data, std::size_t t);

// Pointer view over a graph vector, for the span-based encoder API.
std::vector<const GraphIndex*> graph_ptrs(const std::vector<GraphIndex>& graphs);

}  // namespace cen
