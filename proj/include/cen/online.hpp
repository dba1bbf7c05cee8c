#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include "cen/autodiff.hpp"
#include "cen/dataset.hpp"
#include "cen/evaluator.hpp"
#include "cen/model.hpp"

namespace cen {

struct OnlineConfig {
  std::size_t max_epochs = 30;
  double lambda = 1e-2;  // TR weight
  double lr = 1e-3;
  std::size_t valid_offset = 2;  // validate on G_{t - offset}
  bool no_tr = false;
  double clip_norm = 1.0;
  std::size_t patience = 0;  // 0: run all epochs
  std::uint64_t seed = 0;
  EvalOptions eval;  // test-range reporting
  TieRule select_tie = TieRule::Mean;  // checkpoint selection on G_{t - offset}

  double effective_lambda() const noexcept { return no_tr ? 0.0 : lambda; }
  void validate() const;
};

// lambda * sum over trainable entries of ||live - anchor||^2.
double tr_penalty(const ParamStore& live, const ParamStore& anchor, double lambda);
// Same quantity on a tape, differentiable w.r.t. the live parameters.
ad::Var tr_penalty(ad::Tape& tape, const ParamStore& live, const ParamStore& anchor, double lambda);

struct OnlineStepReport {
  std::size_t time = 0;
  std::size_t valid_time = 0;
  std::size_t epochs_used = 0;  // epoch of the kept checkpoint, 0 = unchanged
  double valid_mrr = 0.0;
};

// Fine-tunes `model` on the facts of G_t (history before t) with the TR
// penalty towards the parameters it had on entry, keeping the epoch with the
// best filtered MRR on G_{t - offset}.
OnlineStepReport online_step(CenModel& model, std::size_t t, const TkgDataset& data,
                             std::span<const GraphIndex* const> graphs, const OnlineConfig& cfg,
                             std::mt19937_64& rng);

struct OnlineRow {
  std::size_t time = 0;
  Metrics metrics;
  std::size_t epochs_used = 0;
};

struct OnlineResult {
  MetricsReport report;  // over the test range
  std::vector<OnlineRow> rows;
};

// For t = T1+1 .. T3: test timestamps are scored before the update at t.
OnlineResult run_online(CenModel& model, const TkgDataset& data, const OnlineConfig& cfg);

void write_online_csv(std::ostream& os, std::span<const OnlineRow> rows);

}  // namespace cen
