#include "cen/model.hpp"

#include <algorithm>

namespace cen {

namespace param_names {
std::string msg_weight(std::size_t layer) { return "rgcn." + std::to_string(layer) + ".w_msg"; }
std::string self_weight(std::size_t layer) { return "rgcn." + std::to_string(layer) + ".w_self"; }
std::string conv(std::size_t channel) { return "decoder.conv." + std::to_string(channel); }
}  // namespace param_names

namespace pn = param_names;

void ModelConfig::validate() const {
  if (num_entities == 0 || num_relations == 0) throw ConfigError("model: empty vocabulary");
  if (dim == 0 || layers == 0 || channels == 0 || max_length == 0) {
    throw ConfigError("model: dim, layers, channels and max_length must be positive");
  }
  if (kernel_width % 2 == 0) throw ConfigError("model: kernel width M must be odd");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("model: dropout must be in [0, 1)");
}

CenModel::CenModel(ModelConfig cfg, std::size_t lengths, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  if (lengths == 0 || lengths > cfg_.max_length) {
    throw ConfigError("model: initial length " + std::to_string(lengths) + " outside 1.." +
                      std::to_string(cfg_.max_length));
  }
  std::mt19937_64 rng(seed);
  const std::size_t d = cfg_.dim;
  params_.add(pn::kEntities, ad::xavier_uniform({cfg_.num_entities, d}, rng));
  params_.add(pn::kRelations, ad::xavier_uniform({cfg_.num_relations, d}, rng));
  for (std::size_t l = 0; l < cfg_.layers; ++l) {
    params_.add(pn::msg_weight(l), ad::xavier_uniform({d, d}, rng));
    params_.add(pn::self_weight(l), ad::xavier_uniform({d, d}, rng));
  }
  params_.add(pn::kGateW, ad::xavier_uniform({d, d}, rng));
  params_.add(pn::kGateB, Tensor(Shape{d}));
  const std::size_t channels = cfg_.single_channel ? 1 : lengths;
  for (std::size_t k = 0; k < channels; ++k) {
    params_.add(pn::conv(k), ad::xavier_uniform({cfg_.channels, 2, cfg_.kernel_width}, rng));
  }
  params_.add(pn::kFcnW, ad::xavier_uniform({cfg_.channels * d, d}, rng));
  params_.add(pn::kFcnB, Tensor(Shape{d}));
  params_.add(pn::kLengths, Tensor::scalar(static_cast<double>(lengths)), false);
}

CenModel CenModel::from_params(ModelConfig cfg, ParamStore params) {
  cfg.validate();
  auto expect = [&](const std::string& name, const Shape& shape) {
    if (!params.contains(name)) throw ConfigError("checkpoint lacks '" + name + "'");
    if (params.get(name).shape() != shape) {
      throw DimensionError("checkpoint entry '" + name + "' has shape " + shape_str(params.get(name).shape()) +
                           ", config expects " + shape_str(shape));
    }
  };
  const std::size_t d = cfg.dim;
  expect(pn::kEntities, {cfg.num_entities, d});
  expect(pn::kRelations, {cfg.num_relations, d});
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    expect(pn::msg_weight(l), {d, d});
    expect(pn::self_weight(l), {d, d});
  }
  expect(pn::kGateW, {d, d});
  expect(pn::kGateB, {d});
  expect(pn::kFcnW, {cfg.channels * d, d});
  expect(pn::kFcnB, {d});
  if (!params.contains(pn::kLengths)) throw ConfigError("checkpoint lacks '" + pn::kLengths + "'");
  params.set_trainable(pn::kLengths, false);
  const auto lengths = static_cast<std::size_t>(params.get(pn::kLengths).item());
  if (lengths == 0 || lengths > cfg.max_length) throw ConfigError("checkpoint length count outside 1..K");
  const std::size_t channels = cfg.single_channel ? 1 : lengths;
  for (std::size_t k = 0; k < channels; ++k) expect(pn::conv(k), {cfg.channels, 2, cfg.kernel_width});
  CenModel m;
  m.cfg_ = cfg;
  m.params_ = std::move(params);
  return m;
}

std::size_t CenModel::num_lengths() const {
  return static_cast<std::size_t>(params_.get(pn::kLengths).item());
}

std::size_t CenModel::num_channels() const { return cfg_.single_channel ? 1 : num_lengths(); }

void CenModel::extend_length(bool warm_start, std::mt19937_64& rng) {
  const std::size_t k = num_lengths();
  if (k + 1 > cfg_.max_length) {
    throw ConfigError("cannot extend to length " + std::to_string(k + 1) + " beyond K=" +
                      std::to_string(cfg_.max_length));
  }
  if (!cfg_.single_channel) {
    Tensor kernels = warm_start ? params_.get(pn::conv(k - 1))
                                : ad::xavier_uniform({cfg_.channels, 2, cfg_.kernel_width}, rng);
    params_.add(pn::conv(k), std::move(kernels));
  }
  params_.get(pn::kLengths)[0] = static_cast<double>(k + 1);
}

CenModel::Bound CenModel::bind(ad::Tape& tape) const {
  Bound b;
  b.enc.entities = tape.param(params_, pn::kEntities);
  b.enc.relations = tape.param(params_, pn::kRelations);
  for (std::size_t l = 0; l < cfg_.layers; ++l) {
    b.enc.layers.push_back({tape.param(params_, pn::msg_weight(l)), tape.param(params_, pn::self_weight(l))});
  }
  b.enc.w_gate = tape.param(params_, pn::kGateW);
  b.enc.b_gate = tape.param(params_, pn::kGateB);
  for (std::size_t k = 0; k < num_channels(); ++k) b.dec.kernels.push_back(tape.param(params_, pn::conv(k)));
  b.dec.fcn_w = tape.param(params_, pn::kFcnW);
  b.dec.fcn_b = tape.param(params_, pn::kFcnB);
  return b;
}

std::span<const GraphIndex* const> CenModel::history(std::span<const GraphIndex* const> all, std::size_t t,
                                                     std::size_t lengths) {
  if (t > all.size()) throw IndexError("history: time " + std::to_string(t) + " beyond the snapshot range");
  const std::size_t n = std::min(t, lengths);
  return all.subspan(t - n, n);
}

std::vector<ad::Var> CenModel::encode(const Bound& b, std::span<const GraphIndex* const> history, bool train,
                                      std::mt19937_64* rng) const {
  EncodeOptions opt;
  opt.act = cfg_.rgcn_act;
  opt.skip = cfg_.skip;
  opt.dropout = cfg_.dropout;
  opt.train = train;
  opt.rng = rng;
  return encode_all(b.enc, num_lengths(), history, opt);
}

ad::Var CenModel::logits(const Bound& b, std::span<const ad::Var> reps, std::span<const Query> queries, bool train,
                         std::mt19937_64* rng) const {
  std::vector<std::int32_t> subj, rel;
  subj.reserve(queries.size());
  rel.reserve(queries.size());
  for (const auto& q : queries) {
    subj.push_back(q.s);
    rel.push_back(q.r);
  }
  DecodeOptions opt;
  opt.fcn_act = cfg_.fcn_act;
  opt.dropout = cfg_.dropout;
  opt.train = train;
  opt.rng = rng;
  opt.single_channel = cfg_.single_channel;
  return score_all(b.dec, reps, b.enc.relations, subj, rel, opt);
}

ad::Var CenModel::loss(ad::Tape& tape, std::span<const GraphIndex* const> history, std::span<const Query> queries,
                       bool train, std::mt19937_64* rng) const {
  const Bound b = bind(tape);
  const auto reps = encode(b, history, train, rng);
  std::vector<std::int32_t> targets;
  targets.reserve(queries.size());
  for (const auto& q : queries) targets.push_back(q.o);
  return ad::cross_entropy(logits(b, reps, queries, train, rng), targets);
}

Tensor CenModel::score(std::span<const GraphIndex* const> history, std::span<const Query> queries) const {
  ad::Tape tape(false);
  const Bound b = bind(tape);
  const auto reps = encode(b, history, false, nullptr);
  return logits(b, reps, queries, false, nullptr).value();
}

std::vector<Query> snapshot_queries(const TkgDataset& data, std::size_t t) {
  std::vector<Query> out;
  const auto& facts = data.snapshots.at(t).facts;
  out.reserve(facts.size());
  for (const auto& f : facts) out.push_back(Query{f.s, f.r, f.o});
  return out;
}

std::vector<const GraphIndex*> graph_ptrs(const std::vector<GraphIndex>& graphs) {
  std::vector<const GraphIndex*> out;
  out.reserve(graphs.size());
  for (const auto& g : graphs) out.push_back(&g);
  return out;
}

}  // namespace cen
