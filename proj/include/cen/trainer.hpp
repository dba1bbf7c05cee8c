#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "cen/adam.hpp"
#include "cen/dataset.hpp"
#include "cen/evaluator.hpp"
#include "cen/model.hpp"

namespace cen {

struct TrainConfig {
  ModelConfig model;
  std::size_t min_length = 3;  // k-hat, the first curriculum stage
  double lr = 1e-3;
  std::size_t epochs = 30;  // per stage
  std::size_t patience = 3;
  double clip_norm = 1.0;
  std::uint64_t seed = 0;
  bool no_curriculum = false;
  bool warm_start = true;       // new channel copies the previous one
  bool freeze_earlier = false;  // earlier channels frozen during later stages
  // Validation for stage and epoch selection. Mean ties keep a collapsed
  // scorer (all logits equal) from looking perfect.
  EvalOptions valid_eval{FilterMode::TimeFiltered, TieRule::Mean, std::nullopt};

  void validate() const;
};

struct EpochRecord {
  std::size_t stage = 0;
  std::size_t k = 0;
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double valid_mrr = 0.0;
};

struct StageRecord {
  std::size_t k = 0;
  double mrr = 0.0;
};

struct CurriculumState {
  std::size_t k = 0;
  double best_mrr = 0.0;
  std::vector<StageRecord> stages;
  std::optional<std::size_t> chosen_length;  // K-hat
  bool stopped_on_decrease = false;
};

// Callbacks driving the curriculum. run_curriculum binds them to a real
// model; tests script them.
struct CurriculumHooks {
  std::function<double(std::size_t k)> train_stage;
  std::function<void(std::size_t k)> checkpoint;  // keep the model of stage k
  std::function<void()> restore;                  // back to the last checkpoint
  std::function<void(std::size_t k)> extend;      // grow from k to k + 1
};

// Stage loop from k = min_length: stop at the first stage whose MRR is
// strictly below the previous stage's (K-hat = k - 1, previous checkpoint
// restored) or after stage max_length (K-hat = max_length).
CurriculumState run_curriculum_control(std::size_t min_length, std::size_t max_length, const CurriculumHooks& hooks);

struct StageResult {
  double best_mrr = 0.0;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
};

// Trains `model` at its current length on every training snapshot (one Adam
// step per snapshot, all its queries as the batch) with patience-based early
// stopping on valid MRR. Leaves the best epoch's parameters in the model.
StageResult train_stage(CenModel& model, const TkgDataset& data, std::span<const GraphIndex* const> graphs,
                        const TrainConfig& cfg, std::mt19937_64& rng, std::size_t stage = 0,
                        std::vector<EpochRecord>* log = nullptr);

// Mean training loss of one pass over the training snapshots.
double train_epoch(CenModel& model, const TkgDataset& data, std::span<const GraphIndex* const> graphs,
                   AdamState& adam, double clip_norm, std::mt19937_64& rng);

struct TrainResult {
  CenModel model;
  CurriculumState state;
  std::vector<EpochRecord> log;
};

TrainResult run_curriculum(const TkgDataset& data, const TrainConfig& cfg);

void write_epoch_csv(std::ostream& os, std::span<const EpochRecord> log);

}  // namespace cen
