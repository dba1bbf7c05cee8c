#include "cen/gradcheck.hpp"

#include <random>
#include <set>

#include "cen/online.hpp"

namespace cen {

namespace {

std::size_t draw(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

ModelConfig toy_config(std::mt19937_64& rng, const ToyLimits& lim, std::size_t entities, std::size_t relations) {
  ModelConfig cfg;
  cfg.num_entities = entities;
  cfg.num_relations = relations;
  cfg.dim = draw(rng, 2, lim.max_dim);
  cfg.layers = draw(rng, 1, 2);
  cfg.channels = draw(rng, 1, lim.max_channels);
  cfg.kernel_width = lim.kernel_width;
  cfg.max_length = draw(rng, 1, lim.max_length);
  cfg.dropout = 0.2;
  const ad::Activation acts[] = {ad::Activation::Relu, ad::Activation::Tanh, ad::Activation::Sigmoid,
                                 ad::Activation::Identity};
  cfg.rgcn_act = acts[draw(rng, 0, 3)];
  cfg.fcn_act = acts[draw(rng, 0, 3)];
  cfg.skip = draw(rng, 0, 3) == 0 ? SkipMode::Additive : SkipMode::Gate;
  cfg.single_channel = draw(rng, 0, 3) == 0;
  return cfg;
}

}  // namespace

ToyInstance make_toy_instance(std::uint64_t seed, const ToyLimits& limits) {
  std::mt19937_64 rng(seed);
  TkgDataset raw;
  raw.num_entities = draw(rng, 3, limits.max_entities);
  raw.num_relations = draw(rng, 1, 3);
  const std::size_t horizon = limits.max_length + 1;
  raw.snapshots.resize(horizon);
  for (std::size_t t = 0; t < horizon; ++t) {
    raw.snapshots[t].time = t;
    std::set<Triple> facts;
    const std::size_t n = draw(rng, 1, 2 * raw.num_entities);
    while (facts.size() < n) {
      const auto s = static_cast<std::int32_t>(draw(rng, 0, raw.num_entities - 1));
      const auto o = static_cast<std::int32_t>(draw(rng, 0, raw.num_entities - 1));
      const auto r = static_cast<std::int32_t>(draw(rng, 0, raw.num_relations - 1));
      if (s != o) facts.insert({s, r, o});
    }
    raw.snapshots[t].facts.assign(facts.begin(), facts.end());
  }
  raw.t1 = horizon - 3;
  raw.t2 = horizon - 2;
  raw.t3 = horizon - 1;
  TkgDataset data = add_inverse_relations(raw);

  const ModelConfig cfg = toy_config(rng, limits, data.num_entities, data.relation_vocab());
  const std::size_t lengths = draw(rng, 1, cfg.max_length);
  ToyInstance inst{std::move(data), {}, CenModel(cfg, lengths, rng()), {}, 0.0, horizon - 1, rng()};
  inst.graphs = inst.data.build_graphs();

  // Biases start at zero; with every feature dropped the FCN input would sit
  // exactly on the relu kink. Draw them like trained values instead.
  std::uniform_real_distribution<double> bias(-0.5, 0.5);
  for (const auto* name : {&param_names::kFcnB, &param_names::kGateB}) {
    for (double& v : inst.model.params().get(*name).data()) v = bias(rng);
  }

  // Anchor a little away from the live parameters so the penalty gradient
  // is not zero.
  inst.anchor = inst.model.params();
  std::normal_distribution<double> noise(0.0, 0.1);
  for (auto& e : inst.anchor.entries()) {
    for (double& v : e.value.data()) v += noise(rng);
  }
  inst.lambda = std::uniform_real_distribution<double>(0.01, 1.0)(rng);
  return inst;
}

ad::Var toy_loss(ad::Tape& tape, const ToyInstance& inst) {
  const auto ptrs = graph_ptrs(inst.graphs);
  const auto hist = CenModel::history(ptrs, inst.time, inst.model.num_lengths());
  const auto queries = snapshot_queries(inst.data, inst.time);
  std::mt19937_64 rng(inst.dropout_seed);
  const ad::Var fit = inst.model.loss(tape, hist, queries, true, &rng);
  return ad::add(fit, tr_penalty(tape, inst.model.params(), inst.anchor, inst.lambda));
}

ad::GradCheckResult check_toy_gradients(ToyInstance& inst, double eps) {
  return ad::grad_check([&](ad::Tape& tape) { return toy_loss(tape, inst); }, inst.model.params(), eps);
}

}  // namespace cen
