#include "cen/encoder.hpp"

#include <algorithm>
#include <string>

namespace cen {

SkipMode parse_skip_mode(std::string_view s) {
  if (s == "gate") return SkipMode::Gate;
  if (s == "additive") return SkipMode::Additive;
  throw ConfigError("unknown skip mode '" + std::string(s) + "'");
}

std::string_view to_string(SkipMode m) { return m == SkipMode::Gate ? "gate" : "additive"; }

ad::Var rgcn_layer(const ad::Var& h, const ad::Var& relations, const GraphIndex& g, const ad::Var& w_msg,
                   const ad::Var& w_self, ad::Activation act) {
  const ad::Var agg = ad::rgcn_aggregate(h, relations, g);
  const ad::Var pre = ad::add(ad::matmul_bt(agg, w_msg), ad::matmul_bt(h, w_self));
  return ad::activate(pre, act);
}

ad::Var rgcn_stack(const EncoderVars& p, const ad::Var& h, const GraphIndex& g, const EncodeOptions& opt) {
  ad::Var x = h;
  for (const auto& layer : p.layers) {
    x = rgcn_layer(x, p.relations, g, layer.w_msg, layer.w_self, opt.act);
    if (opt.train && opt.dropout > 0.0) {
      if (!opt.rng) throw ContractError("train-mode dropout needs an rng");
      x = ad::dropout(x, opt.dropout, true, *opt.rng);
    }
  }
  return x;
}

ad::Var skip_connection(const ad::Var& h_hat, const ad::Var& h_prev, const ad::Var& w_gate, const ad::Var& b_gate,
                        SkipMode mode) {
  if (h_hat.shape() != h_prev.shape()) {
    throw DimensionError("skip_connection: " + shape_str(h_hat.shape()) + " vs " + shape_str(h_prev.shape()));
  }
  if (mode == SkipMode::Additive) return ad::add(h_hat, h_prev);
  const ad::Var gate = ad::sigmoid(ad::add_row(ad::matmul_bt(h_prev, w_gate), b_gate));
  return ad::add(ad::mul(gate, h_hat), ad::mul(ad::one_minus(gate), h_prev));
}

ad::Var encode_sequence(const EncoderVars& p, std::span<const GraphIndex* const> snapshots,
                        const EncodeOptions& opt) {
  if (snapshots.empty()) throw ContractError("encode_sequence needs at least one snapshot");
  ad::Var h = p.entities;
  for (const GraphIndex* g : snapshots) {
    const ad::Var h_hat = rgcn_stack(p, h, *g, opt);
    h = skip_connection(h_hat, h, p.w_gate, p.b_gate, opt.skip);
  }
  return h;
}

std::vector<ad::Var> encode_all(const EncoderVars& p, std::size_t max_length,
                                std::span<const GraphIndex* const> history, const EncodeOptions& opt) {
  if (history.empty()) throw ContractError("encode_all needs a non-empty history");
  std::vector<ad::Var> reps;
  reps.reserve(max_length);
  for (std::size_t k = 1; k <= max_length; ++k) {
    const std::size_t len = std::min(k, history.size());
    if (len < k) {
      reps.push_back(reps.back());
      continue;
    }
    reps.push_back(encode_sequence(p, history.last(len), opt));
  }
  return reps;
}

}  // namespace cen
