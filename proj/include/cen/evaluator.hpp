#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cen/dataset.hpp"
#include "cen/model.hpp"
#include "cen/tensor.hpp"

namespace cen {

enum class FilterMode { Raw, TimeFiltered };
// Optimistic: 1 + #{strictly higher}. Mean: ties share the average position.
enum class TieRule { Optimistic, Mean };

FilterMode parse_filter_mode(std::string_view s);
std::string_view to_string(FilterMode m);
TieRule parse_tie_rule(std::string_view s);
std::string_view to_string(TieRule t);

// Entities other than q.o that are also true answers of (q.s, q.r, ?) in
// `facts_at_t`, sorted ascending. Truths at other timestamps are not looked
// at.
std::vector<std::int32_t> time_aware_filter(const Query& q, std::span<const Triple> facts_at_t);

// 1-based rank of `target` among the entities not in `excluded` (sorted).
double rank(std::span<const double> scores, std::int32_t target, std::span<const std::int32_t> excluded,
            TieRule tie = TieRule::Optimistic);

struct Metrics {
  double mrr = 0.0;
  double hits1 = 0.0;
  double hits3 = 0.0;
  double hits10 = 0.0;
  std::size_t count = 0;
};

struct MetricsReport {
  Metrics all;
  Metrics object_side;   // (s, r, ?)
  Metrics subject_side;  // (?, r, o)
};

Metrics aggregate(std::span<const double> ranks);

struct RankingResult {
  Query query;  // as asked to the model; subject-side queries use r + |R|
  std::size_t time = 0;
  bool subject_side = false;
  double filtered_rank = 0.0;
  double raw_rank = 0.0;
};

// Scores |queries| x |V| for queries at time t.
using Scorer = std::function<Tensor(std::size_t t, std::span<const Query> queries)>;

struct EvalOptions {
  FilterMode mode = FilterMode::TimeFiltered;
  TieRule tie = TieRule::Optimistic;
  // Restrict to facts whose forward relation is listed.
  std::optional<std::vector<std::int32_t>> relations;
};

// Ranks both directions of every forward fact at time t. On augmented data
// the subject side is asked as (o, r + |R|, ?); otherwise each candidate
// subject is scored as (s', r, ?) and read at column o.
std::vector<RankingResult> rank_timestamp(const Scorer& scorer, const TkgDataset& data, std::size_t t,
                                          const EvalOptions& opt = {});

MetricsReport summarize(std::span<const RankingResult> results, FilterMode mode);

// Times [first, last).
MetricsReport evaluate_range(const Scorer& scorer, const TkgDataset& data, std::size_t first, std::size_t last,
                             const EvalOptions& opt = {});
MetricsReport evaluate(const Scorer& scorer, const TkgDataset& data, Split split, const EvalOptions& opt = {});

// Scores with `model` from the ground-truth snapshots preceding t.
Scorer model_scorer(const CenModel& model, std::span<const GraphIndex* const> graphs);

std::string format_table(const MetricsReport& r);
void write_metrics_csv(std::ostream& os, const MetricsReport& r, std::string_view label);

}  // namespace cen
