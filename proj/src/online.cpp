#include "cen/online.hpp"

#include <ostream>

#include "cen/adam.hpp"
#include "cen/errors.hpp"
#include "cen/log.hpp"

namespace cen {

void OnlineConfig::validate() const {
  if (lambda < 0.0) throw ConfigError("TR lambda must be non-negative");
  if (lr < 0.0) throw ConfigError("online lr must be non-negative");
  if (valid_offset == 0) throw ConfigError("validation offset must be positive");
}

namespace {

void check_anchor(const ParamStore& live, const ParamStore& anchor, const std::string& name) {
  if (!anchor.contains(name)) throw DimensionError("anchor lacks '" + name + "'");
  if (anchor.get(name).shape() != live.get(name).shape()) {
    throw DimensionError("anchor '" + name + "' has shape " + shape_str(anchor.get(name).shape()) + ", live " +
                         shape_str(live.get(name).shape()));
  }
}

}  // namespace

double tr_penalty(const ParamStore& live, const ParamStore& anchor, double lambda) {
  double total = 0.0;
  for (const auto& e : live.entries()) {
    if (!e.trainable) continue;
    check_anchor(live, anchor, e.name);
    const auto a = anchor.get(e.name).data();
    const auto v = e.value.data();
    for (std::size_t i = 0; i < v.size(); ++i) total += (v[i] - a[i]) * (v[i] - a[i]);
  }
  return lambda * total;
}

ad::Var tr_penalty(ad::Tape& tape, const ParamStore& live, const ParamStore& anchor, double lambda) {
  std::vector<ad::Var> terms;
  for (const auto& e : live.entries()) {
    if (!e.trainable) continue;
    check_anchor(live, anchor, e.name);
    terms.push_back(ad::squared_distance(tape.param(live, e.name), anchor.get(e.name)));
  }
  if (terms.empty()) return tape.constant(Tensor::scalar(0.0));
  return ad::scale(ad::add_n(terms), lambda);
}

OnlineStepReport online_step(CenModel& model, std::size_t t, const TkgDataset& data,
                             std::span<const GraphIndex* const> graphs, const OnlineConfig& cfg,
                             std::mt19937_64& rng) {
  if (t == 0 || t >= data.num_timestamps()) throw IndexError("online_step: time " + std::to_string(t) + " out of range");
  OnlineStepReport rep;
  rep.time = t;
  if (t >= cfg.valid_offset + 1) {
    rep.valid_time = t - cfg.valid_offset;
  } else {
    rep.valid_time = std::max<std::size_t>(data.t1, 1);
    log::info("online t=", t, ": G_{t-", cfg.valid_offset, "} unavailable, validating on t=", rep.valid_time);
  }

  const auto queries = snapshot_queries(data, t);
  if (queries.empty() || cfg.max_epochs == 0) return rep;

  const ParamStore anchor = model.params();
  const double lambda = cfg.effective_lambda();
  const auto hist = CenModel::history(graphs, t, model.num_lengths());
  const Scorer scorer = model_scorer(model, graphs);
  EvalOptions veval = cfg.eval;
  veval.mode = FilterMode::TimeFiltered;
  veval.tie = cfg.select_tie;

  AdamState adam;
  adam.lr = cfg.lr;
  ParamStore best = anchor;
  double best_mrr = -1.0;
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    ad::Tape tape;
    ad::Var loss = model.loss(tape, hist, queries, true, &rng);
    if (lambda > 0.0) loss = ad::add(loss, tr_penalty(tape, model.params(), anchor, lambda));
    auto grads = ad::backward(loss);
    clip_global_norm(grads, cfg.clip_norm);
    adam_step(model.params(), grads, adam);

    const auto ranked = rank_timestamp(scorer, data, rep.valid_time, veval);
    const double mrr = summarize(ranked, FilterMode::TimeFiltered).all.mrr;
    // Later epochs win ties.
    if (mrr >= best_mrr) {
      best_mrr = mrr;
      best = model.params();
      rep.epochs_used = epoch;
      since_best = 0;
    } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
      break;
    }
  }
  model.params() = std::move(best);
  rep.valid_mrr = best_mrr;
  return rep;
}

OnlineResult run_online(CenModel& model, const TkgDataset& data, const OnlineConfig& cfg) {
  cfg.validate();
  const auto graphs_owned = data.build_graphs();
  const auto graphs = graph_ptrs(graphs_owned);
  std::mt19937_64 rng(cfg.seed);
  const Scorer scorer = model_scorer(model, graphs);

  OnlineResult out;
  std::vector<RankingResult> test_results;
  for (std::size_t t = data.t1 + 1; t <= data.t3 && t < data.num_timestamps(); ++t) {
    OnlineRow row;
    row.time = t;
    const bool is_test = t > data.t2;
    if (is_test) {
      const auto ranked = rank_timestamp(scorer, data, t, cfg.eval);
      row.metrics = summarize(ranked, cfg.eval.mode).all;
      test_results.insert(test_results.end(), ranked.begin(), ranked.end());
    }
    const auto step = online_step(model, t, data, graphs, cfg, rng);
    row.epochs_used = step.epochs_used;
    if (is_test) out.rows.push_back(row);
    log::debug("online t=", t, " epochs_used=", step.epochs_used, " valid_mrr=", step.valid_mrr);
  }
  out.report = summarize(test_results, cfg.eval.mode);
  return out;
}

void write_online_csv(std::ostream& os, std::span<const OnlineRow> rows) {
  os << "t,mrr,h1,h3,h10,epochs_used\n";
  for (const auto& r : rows) {
    os << r.time << ',' << r.metrics.mrr << ',' << r.metrics.hits1 << ',' << r.metrics.hits3 << ','
       << r.metrics.hits10 << ',' << r.epochs_used << '\n';
  }
}

}  // namespace cen
