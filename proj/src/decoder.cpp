#include "cen/decoder.hpp"

#include <string>

namespace cen {

ad::Var channel_features(const ad::Var& subjects, const ad::Var& relations, const ad::Var& kernels) {
  return ad::conv_pairs(subjects, relations, kernels);
}

ad::Var channel_logits(const DecoderVars& p, std::size_t k, const ad::Var& reps_k, const ad::Var& relation_table,
                       std::span<const std::int32_t> subjects, std::span<const std::int32_t> relations,
                       const DecodeOptions& opt) {
  const std::size_t channel = opt.single_channel ? 0 : k;
  if (channel >= p.kernels.size()) {
    throw IndexError("decoder channel " + std::to_string(k) + " not present (" + std::to_string(p.kernels.size()) +
                     " channels)");
  }
  const ad::Var s = ad::gather_rows(reps_k, subjects);
  const ad::Var r = ad::gather_rows(relation_table, relations);
  ad::Var feats = channel_features(s, r, p.kernels[channel]);
  if (opt.train && opt.dropout > 0.0) {
    if (!opt.rng) throw ContractError("train-mode dropout needs an rng");
    feats = ad::dropout(feats, opt.dropout, true, *opt.rng);
  }
  const ad::Var hidden = ad::activate(ad::add_row(ad::matmul(feats, p.fcn_w), p.fcn_b), opt.fcn_act);
  return ad::matmul_bt(hidden, reps_k);
}

ad::Var score_all(const DecoderVars& p, std::span<const ad::Var> reps, const ad::Var& relation_table,
                  std::span<const std::int32_t> subjects, std::span<const std::int32_t> relations,
                  const DecodeOptions& opt) {
  if (reps.empty()) throw ContractError("score_all needs at least one representation");
  if (subjects.size() != relations.size()) throw DimensionError("score_all: subjects/relations length mismatch");
  std::vector<ad::Var> parts;
  parts.reserve(reps.size());
  for (std::size_t k = 0; k < reps.size(); ++k) {
    parts.push_back(channel_logits(p, k, reps[k], relation_table, subjects, relations, opt));
  }
  return ad::add_n(parts);
}

ad::Var batch_loss(const DecoderVars& p, std::span<const ad::Var> reps, const ad::Var& relation_table,
                   std::span<const std::int32_t> subjects, std::span<const std::int32_t> relations,
                   std::span<const std::int32_t> targets, const DecodeOptions& opt) {
  return ad::cross_entropy(score_all(p, reps, relation_table, subjects, relations, opt), targets);
}

}  // namespace cen
