#include "cen/evaluator.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "cen/errors.hpp"

namespace cen {

FilterMode parse_filter_mode(std::string_view s) {
  if (s == "raw") return FilterMode::Raw;
  if (s == "time-filtered" || s == "filtered") return FilterMode::TimeFiltered;
  throw ConfigError("unknown evaluation mode '" + std::string(s) + "' (raw | time-filtered)");
}

std::string_view to_string(FilterMode m) { return m == FilterMode::Raw ? "raw" : "time-filtered"; }

TieRule parse_tie_rule(std::string_view s) {
  if (s == "optimistic") return TieRule::Optimistic;
  if (s == "mean") return TieRule::Mean;
  throw ConfigError("unknown tie rule '" + std::string(s) + "' (optimistic | mean)");
}

std::string_view to_string(TieRule t) { return t == TieRule::Optimistic ? "optimistic" : "mean"; }

std::vector<std::int32_t> time_aware_filter(const Query& q, std::span<const Triple> facts_at_t) {
  std::vector<std::int32_t> out;
  for (const auto& f : facts_at_t) {
    if (f.s == q.s && f.r == q.r && f.o != q.o) out.push_back(f.o);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double rank(std::span<const double> scores, std::int32_t target, std::span<const std::int32_t> excluded,
            TieRule tie) {
  if (target < 0 || static_cast<std::size_t>(target) >= scores.size()) {
    throw IndexError("rank: target " + std::to_string(target) + " outside " + std::to_string(scores.size()) +
                     " candidates");
  }
  if (std::binary_search(excluded.begin(), excluded.end(), target)) {
    throw ContractError("rank: target " + std::to_string(target) + " is excluded");
  }
  const double ts = scores[static_cast<std::size_t>(target)];
  std::size_t higher = 0, equal = 0;
  auto ex = excluded.begin();
  for (std::size_t e = 0; e < scores.size(); ++e) {
    while (ex != excluded.end() && static_cast<std::size_t>(*ex) < e) ++ex;
    if (ex != excluded.end() && static_cast<std::size_t>(*ex) == e) continue;
    if (e == static_cast<std::size_t>(target)) continue;
    if (scores[e] > ts) {
      ++higher;
    } else if (scores[e] == ts) {
      ++equal;
    }
  }
  if (tie == TieRule::Mean) return 1.0 + static_cast<double>(higher) + 0.5 * static_cast<double>(equal);
  return 1.0 + static_cast<double>(higher);
}

Metrics aggregate(std::span<const double> ranks) {
  Metrics m;
  m.count = ranks.size();
  if (ranks.empty()) return m;
  for (double r : ranks) {
    m.mrr += 1.0 / r;
    m.hits1 += r <= 1.0 ? 1.0 : 0.0;
    m.hits3 += r <= 3.0 ? 1.0 : 0.0;
    m.hits10 += r <= 10.0 ? 1.0 : 0.0;
  }
  const double n = static_cast<double>(ranks.size());
  m.mrr /= n;
  m.hits1 /= n;
  m.hits3 /= n;
  m.hits10 /= n;
  return m;
}

namespace {

bool wanted(const EvalOptions& opt, std::int32_t forward_relation) {
  if (!opt.relations) return true;
  const auto& rs = *opt.relations;
  return std::find(rs.begin(), rs.end(), forward_relation) != rs.end();
}

void fill_ranks(RankingResult& res, std::span<const double> row, std::int32_t target,
                std::span<const std::int32_t> excluded, TieRule tie) {
  res.raw_rank = rank(row, target, {}, tie);
  res.filtered_rank = rank(row, target, excluded, tie);
}

}  // namespace

std::vector<RankingResult> rank_timestamp(const Scorer& scorer, const TkgDataset& data, std::size_t t,
                                          const EvalOptions& opt) {
  const auto& facts = data.snapshots.at(t).facts;
  const auto nrel = static_cast<std::int32_t>(data.num_relations);
  const std::size_t n_ent = data.num_entities;

  std::vector<Query> queries;
  std::vector<bool> subject_side;
  for (const auto& f : facts) {
    const bool inverse = f.r >= nrel;
    const std::int32_t fwd = inverse ? f.r - nrel : f.r;
    if (!wanted(opt, fwd)) continue;
    if (data.augmented) {
      queries.push_back(Query{f.s, f.r, f.o});
      subject_side.push_back(inverse);
    } else {
      queries.push_back(Query{f.s, f.r, f.o});
      subject_side.push_back(false);
    }
  }

  std::vector<RankingResult> out;
  if (queries.empty()) return out;
  const Tensor scores = scorer(t, queries);
  if (scores.rank() != 2 || scores.rows() != queries.size() || scores.cols() != n_ent) {
    throw DimensionError("scorer returned " + shape_str(scores.shape()) + " for " + std::to_string(queries.size()) +
                         " queries over " + std::to_string(n_ent) + " entities");
  }
  out.resize(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    auto& res = out[i];
    res.query = queries[i];
    res.time = t;
    res.subject_side = subject_side[i];
    fill_ranks(res, scores.row(i), queries[i].o, time_aware_filter(queries[i], facts), opt.tie);
  }

  if (!data.augmented) {
    // Brute-force subject side: score every candidate subject for each (r, o).
    std::vector<Query> cands(n_ent);
    std::vector<double> col(n_ent);
    for (const auto& q : queries) {
      for (std::size_t e = 0; e < n_ent; ++e) cands[e] = Query{static_cast<std::int32_t>(e), q.r, q.o};
      const Tensor s = scorer(t, cands);
      for (std::size_t e = 0; e < n_ent; ++e) col[e] = s.at(e, static_cast<std::size_t>(q.o));
      std::vector<std::int32_t> excluded;
      for (const auto& f : facts) {
        if (f.r == q.r && f.o == q.o && f.s != q.s) excluded.push_back(f.s);
      }
      std::sort(excluded.begin(), excluded.end());
      excluded.erase(std::unique(excluded.begin(), excluded.end()), excluded.end());
      RankingResult res;
      res.query = Query{q.o, q.r, q.s};
      res.time = t;
      res.subject_side = true;
      fill_ranks(res, col, q.s, excluded, opt.tie);
      out.push_back(res);
    }
  }
  return out;
}

MetricsReport summarize(std::span<const RankingResult> results, FilterMode mode) {
  std::vector<double> all, obj, subj;
  all.reserve(results.size());
  for (const auto& r : results) {
    const double v = mode == FilterMode::Raw ? r.raw_rank : r.filtered_rank;
    all.push_back(v);
    (r.subject_side ? subj : obj).push_back(v);
  }
  return MetricsReport{aggregate(all), aggregate(obj), aggregate(subj)};
}

MetricsReport evaluate_range(const Scorer& scorer, const TkgDataset& data, std::size_t first, std::size_t last,
                             const EvalOptions& opt) {
  std::vector<RankingResult> results;
  for (std::size_t t = first; t < last; ++t) {
    auto part = rank_timestamp(scorer, data, t, opt);
    results.insert(results.end(), part.begin(), part.end());
  }
  return summarize(results, opt.mode);
}

MetricsReport evaluate(const Scorer& scorer, const TkgDataset& data, Split split, const EvalOptions& opt) {
  const auto [first, last] = data.split_range(split);
  return evaluate_range(scorer, data, first, last, opt);
}

Scorer model_scorer(const CenModel& model, std::span<const GraphIndex* const> graphs) {
  return [&model, graphs](std::size_t t, std::span<const Query> queries) {
    if (t == 0) throw ContractError("no history precedes time 0");
    return model.score(CenModel::history(graphs, t, model.num_lengths()), queries);
  };
}

std::string format_table(const MetricsReport& r) {
  std::ostringstream os;
  char line[128];
  std::snprintf(line, sizeof line, "%-10s %8s %8s %8s %8s %8s\n", "direction", "queries", "MRR", "H@1", "H@3",
                "H@10");
  os << line;
  auto row = [&](const char* name, const Metrics& m) {
    std::snprintf(line, sizeof line, "%-10s %8zu %8.4f %8.4f %8.4f %8.4f\n", name, m.count, m.mrr, m.hits1, m.hits3,
                  m.hits10);
    os << line;
  };
  row("object", r.object_side);
  row("subject", r.subject_side);
  row("all", r.all);
  return os.str();
}

void write_metrics_csv(std::ostream& os, const MetricsReport& r, std::string_view label) {
  auto row = [&](const char* dir, const Metrics& m) {
    os << label << ',' << dir << ',' << m.count << ',' << m.mrr << ',' << m.hits1 << ',' << m.hits3 << ','
       << m.hits10 << '\n';
  };
  row("object", r.object_side);
  row("subject", r.subject_side);
  row("all", r.all);
}

}  // namespace cen
