#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cen/graph.hpp"

namespace cen {

struct Quadruple {
  std::int32_t subject = 0;
  std::int32_t relation = 0;
  std::int32_t object = 0;
  std::int64_t time = 0;
  auto operator<=>(const Quadruple&) const = default;
};

struct Snapshot {
  std::size_t time = 0;
  std::vector<Triple> facts;
};

enum class Split { Train, Valid, Test };

std::string_view to_string(Split s);
Split parse_split(std::string_view s);

/// Snapshot sequence over dense time indices 0..T3 with split boundaries
/// t1 < t2 < t3 (train: t <= t1, valid: (t1, t2], test: (t2, t3]).
struct TkgDataset {
  std::size_t num_entities = 0;
  std::size_t num_relations = 0;  // before inverse augmentation
  bool augmented = false;
  std::vector<Snapshot> snapshots;  // snapshots[t].time == t
  std::size_t t1 = 0;
  std::size_t t2 = 0;
  std::size_t t3 = 0;
  std::string granularity;

  // Relation ids in use: 2|R| after augmentation, |R| before.
  std::size_t relation_vocab() const noexcept { return augmented ? 2 * num_relations : num_relations; }
  std::size_t num_timestamps() const noexcept { return snapshots.size(); }

  Split split_of(std::size_t t) const;
  // Inclusive-exclusive range of time indices [first, last + 1).
  std::pair<std::size_t, std::size_t> split_range(Split s) const;
  // Original (non-inverse) facts in a split.
  std::size_t fact_count(Split s) const;

  // Per-snapshot CSR indices for the encoder, built over relation_vocab().
  std::vector<GraphIndex> build_graphs() const;
};

struct LoadStats {
  std::size_t duplicates_removed = 0;
  std::size_t raw_timestamps = 0;
};

// Reads integer-column quadruple files ("s r o t [ignored...]"), densely
// re-indexes timestamps across the three files and de-duplicates per
// snapshot. stat_path, when given, holds "|V| |R|" and is cross-checked.
TkgDataset load_quadruples(const std::filesystem::path& train_path, const std::filesystem::path& valid_path,
                           const std::filesystem::path& test_path,
                           const std::optional<std::filesystem::path>& stat_path = std::nullopt,
                           LoadStats* stats = nullptr);

// train.txt / valid.txt / test.txt (+ optional stat.txt) inside `dir`.
TkgDataset load_dataset_dir(const std::filesystem::path& dir, LoadStats* stats = nullptr);

// Writes the original (non-inverse) facts back out in the same format, plus
// stat.txt. Re-loading the directory reproduces identical snapshots as long as
// no snapshot is empty (empty time indices vanish under dense re-indexing).
void save_dataset(const TkgDataset& data, const std::filesystem::path& dir);

// Adds (o, r + |R|, s, t) for every (s, r, o, t). Throws ContractError when
// called on an already augmented dataset.
TkgDataset add_inverse_relations(const TkgDataset& data);

// Facts of `data.snapshots[t]` with relation < |R| (the forward direction).
std::vector<Triple> forward_facts(const TkgDataset& data, std::size_t t);

}  // namespace cen
