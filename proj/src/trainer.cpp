#include "cen/trainer.hpp"

#include <ostream>

#include "cen/errors.hpp"
#include "cen/log.hpp"

namespace cen {

void TrainConfig::validate() const {
  model.validate();
  if (min_length == 0 || min_length > model.max_length) {
    throw ConfigError("min_length must be in 1..K (got " + std::to_string(min_length) + ", K=" +
                      std::to_string(model.max_length) + ")");
  }
  if (lr < 0.0) throw ConfigError("lr must be non-negative");
}

CurriculumState run_curriculum_control(std::size_t min_length, std::size_t max_length, const CurriculumHooks& hooks) {
  if (min_length == 0 || min_length > max_length) throw ConfigError("curriculum needs 1 <= k-hat <= K");
  CurriculumState st;
  st.k = min_length;
  while (true) {
    const double mrr = hooks.train_stage(st.k);
    const bool decreased = !st.stages.empty() && mrr < st.stages.back().mrr;
    st.stages.push_back({st.k, mrr});
    if (decreased) {
      st.chosen_length = st.k - 1;
      st.stopped_on_decrease = true;
      hooks.restore();
      break;
    }
    st.best_mrr = mrr;
    hooks.checkpoint(st.k);
    if (st.k == max_length) {
      st.chosen_length = max_length;
      break;
    }
    hooks.extend(st.k);
    ++st.k;
  }
  return st;
}

double train_epoch(CenModel& model, const TkgDataset& data, std::span<const GraphIndex* const> graphs,
                   AdamState& adam, double clip_norm, std::mt19937_64& rng) {
  const auto [first, last] = data.split_range(Split::Train);
  double total = 0.0;
  std::size_t steps = 0;
  // t = 0 has no history to encode.
  for (std::size_t t = std::max<std::size_t>(first, 1); t < last; ++t) {
    const auto queries = snapshot_queries(data, t);
    if (queries.empty()) continue;
    ad::Tape tape;
    const auto hist = CenModel::history(graphs, t, model.num_lengths());
    const ad::Var loss = model.loss(tape, hist, queries, true, &rng);
    total += loss.value().item();
    auto grads = ad::backward(loss);
    clip_global_norm(grads, clip_norm);
    adam_step(model.params(), grads, adam);
    ++steps;
  }
  return steps ? total / static_cast<double>(steps) : 0.0;
}

StageResult train_stage(CenModel& model, const TkgDataset& data, std::span<const GraphIndex* const> graphs,
                        const TrainConfig& cfg, std::mt19937_64& rng, std::size_t stage,
                        std::vector<EpochRecord>* log) {
  const std::size_t k = model.num_lengths();
  if (k > cfg.model.max_length) throw ConfigError("stage length exceeds K");
  const auto [first, last] = data.split_range(Split::Train);
  if (last <= std::max<std::size_t>(first, 1)) throw DataError("empty split: no trainable train snapshots");

  std::vector<std::string> frozen;
  if (cfg.freeze_earlier && !cfg.model.single_channel) {
    for (std::size_t j = 0; j + 1 < k; ++j) {
      const auto name = param_names::conv(j);
      if (model.params().trainable(name)) {
        model.params().set_trainable(name, false);
        frozen.push_back(name);
      }
    }
  }

  AdamState adam;
  adam.lr = cfg.lr;
  const Scorer scorer = model_scorer(model, graphs);

  StageResult res;
  res.best_mrr = -1.0;
  ParamStore best = model.params();
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double loss = train_epoch(model, data, graphs, adam, cfg.clip_norm, rng);
    const double mrr = evaluate(scorer, data, Split::Valid, cfg.valid_eval).all.mrr;
    res.epochs_run = epoch;
    if (log) log->push_back({stage, k, epoch, loss, mrr});
    log::info("stage ", stage, " k=", k, " epoch ", epoch, " loss=", loss, " valid_mrr=", mrr);
    if (mrr > res.best_mrr) {
      res.best_mrr = mrr;
      res.best_epoch = epoch;
      best = model.params();
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  model.params() = std::move(best);
  for (const auto& name : frozen) model.params().set_trainable(name, true);
  if (cfg.epochs == 0) res.best_mrr = evaluate(scorer, data, Split::Valid, cfg.valid_eval).all.mrr;
  return res;
}

TrainResult run_curriculum(const TkgDataset& data, const TrainConfig& cfg) {
  cfg.validate();
  const auto graphs_owned = data.build_graphs();
  const auto graphs = graph_ptrs(graphs_owned);
  std::mt19937_64 rng(cfg.seed);

  const std::size_t start = cfg.no_curriculum ? cfg.model.max_length : cfg.min_length;
  TrainResult out{CenModel(cfg.model, start, cfg.seed), {}, {}};
  CenModel& model = out.model;
  ParamStore saved = model.params();
  std::size_t stage = 0;

  CurriculumHooks hooks;
  hooks.train_stage = [&](std::size_t) {
    return train_stage(model, data, graphs, cfg, rng, stage++, &out.log).best_mrr;
  };
  hooks.checkpoint = [&](std::size_t) { saved = model.params(); };
  hooks.restore = [&] { model.params() = saved; };
  hooks.extend = [&](std::size_t) { model.extend_length(cfg.warm_start, rng); };

  if (cfg.no_curriculum) {
    out.state = run_curriculum_control(start, start, hooks);
  } else {
    out.state = run_curriculum_control(cfg.min_length, cfg.model.max_length, hooks);
  }
  log::info("curriculum chose K-hat=", *out.state.chosen_length, " valid_mrr=", out.state.best_mrr);
  return out;
}

void write_epoch_csv(std::ostream& os, std::span<const EpochRecord> log) {
  os << "stage,k,epoch,train_loss,valid_mrr\n";
  for (const auto& r : log) {
    os << r.stage << ',' << r.k << ',' << r.epoch << ',' << r.train_loss << ',' << r.valid_mrr << '\n';
  }
}

}  // namespace cen
