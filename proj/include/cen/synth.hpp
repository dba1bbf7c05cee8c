#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cen/dataset.hpp"

namespace cen {

/// One planted evolutional pattern: a trigger fact (s, trigger, o) at time t
/// implies the consequence fact (s, consequence, o) exactly `length`
/// snapshots later.
struct PatternTemplate {
  std::size_t length = 1;
  std::int32_t trigger_relation = 0;
  std::int32_t consequence_relation = 1;
};

struct SynthConfig {
  std::size_t num_entities = 200;
  std::size_t num_relations = 10;
  std::size_t num_timestamps = 120;
  std::vector<PatternTemplate> templates;
  // Subjects per consequence time; each subject gets one instance of every
  // template, all resolving at that time.
  std::size_t bundles_per_step = 4;
  // Extra idle snapshots an entity waits after its instance resolves.
  std::size_t cooldown = 1;
  // From this consequence time on, template i emits the consequence relation
  // of template (i + 1) mod n.
  std::optional<std::size_t> drift_time;
  // Noise facts per planted fact, drawn over relations no template uses.
  double noise_rate = 0.2;
  std::size_t train_timestamps = 70;
  std::size_t valid_timestamps = 10;
  std::uint64_t seed = 0;

  // 200 entities, 10 relations, 120 timestamps, templates of lengths 1-4,
  // drift at t = 80, 20% noise; splits 70 / 10 / 40 timestamps.
  static SynthConfig desk();
  // Templates of lengths 1..max_length on relations (2i, 2i+1).
  static std::vector<PatternTemplate> chain_templates(std::size_t max_length);

  std::size_t max_length() const;
  void validate() const;
};

struct PatternEvent {
  std::size_t template_id = 0;
  std::size_t trigger_time = 0;
  std::size_t consequence_time = 0;
  Triple trigger;
  Triple consequence;
};

struct SynthResult {
  TkgDataset data;  // not augmented
  std::vector<PatternEvent> patterns;
};

SynthResult synth_generate(const SynthConfig& cfg);

// "template_id<TAB>trigger_time<TAB>consequence_time" per line.
void write_pattern_log(const std::vector<PatternEvent>& events, std::ostream& os);
void write_pattern_log(const std::vector<PatternEvent>& events, const std::filesystem::path& path);

// Replays the log against the dataset: each consequence must have its
// trigger at the declared earlier time with the declared lag, and every fact
// on a consequence relation must be explained by a logged event. Returns the
// list of violations (empty when consistent).
std::vector<std::string> replay_check(const SynthResult& result, const SynthConfig& cfg);

// Consequence relation ids (pre-augmentation) across templates, including
// post-drift assignments.
std::vector<std::int32_t> consequence_relations(const SynthConfig& cfg);

}  // namespace cen
