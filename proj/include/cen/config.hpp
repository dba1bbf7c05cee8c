#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cen/evaluator.hpp"
#include "cen/online.hpp"
#include "cen/synth.hpp"
#include "cen/trainer.hpp"

namespace cen {

using KeyValues = std::map<std::string, std::string>;

// Line-oriented "key = value"; '#' starts a comment. Repeated keys: last wins.
KeyValues parse_config(std::istream& is);
KeyValues load_config(const std::filesystem::path& path);

/// Everything a command can be configured with. Defaults are the full-scale
/// hyperparameters (d=200, K=10, C=50, M=3, two layers, dropout 0.2,
/// lr 1e-3, k-hat 3).
struct RunConfig {
  std::string data_dir;
  std::string out_dir = "cen_out";
  std::string checkpoint;
  std::uint64_t seed = 0;
  bool deterministic = false;
  bool inverse = true;  // add inverse relations for subject queries
  // "all", "planted" (consequence relations of the synth config) or a
  // comma-separated list of forward relation ids.
  std::string eval_relations = "all";

  TrainConfig train;
  OnlineConfig online;
  SynthConfig synth = SynthConfig::desk();
  EvalOptions eval;
  TieRule select_tie = TieRule::Mean;  // validation-driven model selection

  RunConfig();

  // Throws ConfigError on unknown keys or malformed values.
  void apply(const KeyValues& kv);
  KeyValues to_key_values() const;

  std::optional<std::vector<std::int32_t>> resolve_eval_relations() const;
};

}  // namespace cen
