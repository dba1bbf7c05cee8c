#include "cen/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cen/errors.hpp"
#include "cen/log.hpp"

namespace cen {

namespace {

std::int64_t parse_int(const std::string& tok, std::size_t line, const std::filesystem::path& path) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(tok, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != tok.size() || tok.empty()) {
    throw ParseError(path.string() + ": non-integer field '" + tok + "'", line);
  }
  return v;
}

std::vector<Quadruple> read_quadruple_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<Quadruple> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tok[4];
    int got = 0;
    while (got < 4 && ls >> tok[got]) ++got;
    if (got == 0) continue;  // blank line
    if (got < 4) throw ParseError(path.string() + ": expected 4 integer columns", lineno);
    Quadruple q;
    const auto s = parse_int(tok[0], lineno, path);
    const auto r = parse_int(tok[1], lineno, path);
    const auto o = parse_int(tok[2], lineno, path);
    q.time = parse_int(tok[3], lineno, path);
    if (s < 0 || r < 0 || o < 0 || q.time < 0) throw ParseError(path.string() + ": negative id", lineno);
    q.subject = static_cast<std::int32_t>(s);
    q.relation = static_cast<std::int32_t>(r);
    q.object = static_cast<std::int32_t>(o);
    out.push_back(q);
  }
  return out;
}

}  // namespace

std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Valid: return "valid";
    case Split::Test: return "test";
  }
  return "?";
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "valid") return Split::Valid;
  if (s == "test") return Split::Test;
  throw ConfigError("unknown split '" + std::string(s) + "'");
}

Split TkgDataset::split_of(std::size_t t) const {
  if (t <= t1) return Split::Train;
  if (t <= t2) return Split::Valid;
  return Split::Test;
}

std::pair<std::size_t, std::size_t> TkgDataset::split_range(Split s) const {
  switch (s) {
    case Split::Train: return {0, t1 + 1};
    case Split::Valid: return {t1 + 1, t2 + 1};
    case Split::Test: return {t2 + 1, t3 + 1};
  }
  return {0, 0};
}

std::size_t TkgDataset::fact_count(Split s) const {
  auto [first, last] = split_range(s);
  std::size_t n = 0;
  for (std::size_t t = first; t < last && t < snapshots.size(); ++t) {
    for (const auto& f : snapshots[t].facts)
      if (static_cast<std::size_t>(f.r) < num_relations) ++n;
  }
  return n;
}

std::vector<GraphIndex> TkgDataset::build_graphs() const {
  std::vector<GraphIndex> graphs;
  graphs.reserve(snapshots.size());
  for (const auto& snap : snapshots) graphs.emplace_back(snap.facts, num_entities, relation_vocab());
  return graphs;
}

TkgDataset load_quadruples(const std::filesystem::path& train_path, const std::filesystem::path& valid_path,
                           const std::filesystem::path& test_path,
                           const std::optional<std::filesystem::path>& stat_path, LoadStats* stats) {
  const auto train = read_quadruple_file(train_path);
  const auto valid = read_quadruple_file(valid_path);
  const auto test = read_quadruple_file(test_path);
  if (train.empty()) throw DataError("empty split: " + train_path.string());

  std::set<std::int64_t> raw_times;
  std::int64_t max_entity = -1, max_relation = -1;
  for (const auto* part : {&train, &valid, &test}) {
    for (const auto& q : *part) {
      raw_times.insert(q.time);
      max_entity = std::max<std::int64_t>({max_entity, q.subject, q.object});
      max_relation = std::max<std::int64_t>(max_relation, q.relation);
    }
  }
  std::map<std::int64_t, std::size_t> dense;
  for (auto t : raw_times) dense.emplace(t, dense.size());

  TkgDataset data;
  data.num_entities = static_cast<std::size_t>(max_entity + 1);
  data.num_relations = static_cast<std::size_t>(max_relation + 1);
  if (stat_path) {
    std::ifstream in(*stat_path);
    if (!in) throw DataError("cannot open " + stat_path->string());
    long long nv = 0, nr = 0;
    if (!(in >> nv >> nr)) throw ParseError(stat_path->string() + ": expected '|V| |R|'", 1);
    if (nv < max_entity + 1 || nr < max_relation + 1) {
      throw DataError("ids exceed the vocabulary sizes declared in " + stat_path->string());
    }
    data.num_entities = static_cast<std::size_t>(nv);
    data.num_relations = static_cast<std::size_t>(nr);
  }

  auto last_time = [&](const std::vector<Quadruple>& part) {
    std::size_t last = 0;
    for (const auto& q : part) last = std::max(last, dense.at(q.time));
    return last;
  };
  auto first_time = [&](const std::vector<Quadruple>& part) {
    std::size_t first = dense.size();
    for (const auto& q : part) first = std::min(first, dense.at(q.time));
    return first;
  };
  data.t1 = last_time(train);
  data.t2 = valid.empty() ? data.t1 : last_time(valid);
  data.t3 = test.empty() ? data.t2 : last_time(test);
  if (!valid.empty() && first_time(valid) <= data.t1) {
    throw DataError("split violation: validation contains a timestamp at or before the last training timestamp");
  }
  if (!test.empty() && first_time(test) <= std::max(data.t1, data.t2)) {
    throw DataError("split violation: test contains a timestamp at or before the last training/validation timestamp");
  }

  data.snapshots.resize(dense.size());
  for (std::size_t t = 0; t < dense.size(); ++t) data.snapshots[t].time = t;
  std::vector<std::set<Triple>> seen(dense.size());
  std::size_t dups = 0;
  for (const auto* part : {&train, &valid, &test}) {
    for (const auto& q : *part) {
      const std::size_t t = dense.at(q.time);
      const Triple tr{q.subject, q.relation, q.object};
      if (!seen[t].insert(tr).second) {
        ++dups;
        continue;
      }
      data.snapshots[t].facts.push_back(tr);
    }
  }
  if (dups) log::info("removed ", dups, " duplicate quadruples");
  if (stats) {
    stats->duplicates_removed = dups;
    stats->raw_timestamps = raw_times.size();
  }
  return data;
}

TkgDataset load_dataset_dir(const std::filesystem::path& dir, LoadStats* stats) {
  if (!std::filesystem::is_directory(dir)) throw DataError("dataset directory not found: " + dir.string());
  for (const char* f : {"train.txt", "valid.txt", "test.txt"}) {
    if (!std::filesystem::exists(dir / f)) throw DataError("missing " + (dir / f).string());
  }
  std::optional<std::filesystem::path> stat;
  if (std::filesystem::exists(dir / "stat.txt")) stat = dir / "stat.txt";
  return load_quadruples(dir / "train.txt", dir / "valid.txt", dir / "test.txt", stat, stats);
}

void save_dataset(const TkgDataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::pair<Split, const char*> files[] = {
      {Split::Train, "train.txt"}, {Split::Valid, "valid.txt"}, {Split::Test, "test.txt"}};
  for (const auto& [split, name] : files) {
    std::ofstream out(dir / name);
    if (!out) throw DataError("cannot write " + (dir / name).string());
    auto [first, last] = data.split_range(split);
    for (std::size_t t = first; t < last && t < data.snapshots.size(); ++t) {
      for (const auto& f : forward_facts(data, t)) out << f.s << '\t' << f.r << '\t' << f.o << '\t' << t << '\n';
    }
  }
  std::ofstream stat(dir / "stat.txt");
  stat << data.num_entities << '\t' << data.num_relations << '\n';
}

TkgDataset add_inverse_relations(const TkgDataset& data) {
  if (data.augmented) throw ContractError("dataset already carries inverse relations");
  TkgDataset out = data;
  out.augmented = true;
  const auto nr = static_cast<std::int32_t>(data.num_relations);
  for (auto& snap : out.snapshots) {
    const std::size_t n = snap.facts.size();
    snap.facts.reserve(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
      const Triple f = snap.facts[i];
      snap.facts.push_back(Triple{f.o, f.r + nr, f.s});
    }
  }
  return out;
}

std::vector<Triple> forward_facts(const TkgDataset& data, std::size_t t) {
  std::vector<Triple> out;
  for (const auto& f : data.snapshots.at(t).facts)
    if (static_cast<std::size_t>(f.r) < data.num_relations) out.push_back(f);
  return out;
}

}  // namespace cen
