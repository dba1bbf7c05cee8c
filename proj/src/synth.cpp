#include "cen/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <random>
#include <set>

#include "cen/errors.hpp"
#include "cen/log.hpp"

namespace cen {

std::vector<PatternTemplate> SynthConfig::chain_templates(std::size_t max_length) {
  std::vector<PatternTemplate> out;
  for (std::size_t l = 1; l <= max_length; ++l) {
    const auto base = static_cast<std::int32_t>(2 * (l - 1));
    out.push_back(PatternTemplate{l, base, base + 1});
  }
  return out;
}

SynthConfig SynthConfig::desk() {
  SynthConfig cfg;
  cfg.templates = chain_templates(4);
  cfg.drift_time = 80;
  return cfg;
}

std::size_t SynthConfig::max_length() const {
  std::size_t m = 0;
  for (const auto& t : templates) m = std::max(m, t.length);
  return m;
}

namespace {

std::set<std::int32_t> template_relations(const SynthConfig& cfg) {
  std::set<std::int32_t> rels;
  for (const auto& t : cfg.templates) {
    rels.insert(t.trigger_relation);
    rels.insert(t.consequence_relation);
  }
  return rels;
}

std::int32_t consequence_at(const SynthConfig& cfg, std::size_t template_id, std::size_t time) {
  if (cfg.drift_time && time >= *cfg.drift_time) {
    return cfg.templates[(template_id + 1) % cfg.templates.size()].consequence_relation;
  }
  return cfg.templates[template_id].consequence_relation;
}

}  // namespace

void SynthConfig::validate() const {
  if (num_entities < 2) throw ConfigError("synth: need at least 2 entities");
  if (num_timestamps < 2) throw ConfigError("synth: need at least 2 timestamps");
  if (train_timestamps == 0 || train_timestamps + valid_timestamps >= num_timestamps) {
    throw ConfigError("synth: split sizes leave no test timestamps");
  }
  std::set<std::int32_t> triggers, consequences;
  for (const auto& t : templates) {
    if (t.length == 0) throw ConfigError("synth: template length must be >= 1");
    if (t.length > num_timestamps - 1) {
      throw ConfigError("synth: template lag " + std::to_string(t.length) + " exceeds the horizon of " +
                        std::to_string(num_timestamps) + " timestamps");
    }
    for (auto r : {t.trigger_relation, t.consequence_relation}) {
      if (r < 0 || static_cast<std::size_t>(r) >= num_relations) {
        throw ConfigError("synth: template relation " + std::to_string(r) + " outside the vocabulary");
      }
    }
    triggers.insert(t.trigger_relation);
    consequences.insert(t.consequence_relation);
  }
  for (auto r : triggers)
    if (consequences.count(r)) throw ConfigError("synth: a relation cannot be both trigger and consequence");
  if (drift_time && (*drift_time == 0 || *drift_time >= num_timestamps)) {
    throw ConfigError("synth: drift time must lie strictly inside the generated range");
  }
  if (noise_rate < 0.0) throw ConfigError("synth: noise rate must be non-negative");
  if (noise_rate > 0.0 && template_relations(*this).size() >= num_relations) {
    throw ConfigError("synth: noise needs at least one relation not used by a template");
  }
  if (!templates.empty() && num_entities < templates.size() + 1) {
    throw ConfigError("synth: too few entities for one bundle");
  }
}

SynthResult synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  SynthResult res;
  auto& data = res.data;
  data.num_entities = cfg.num_entities;
  data.num_relations = cfg.num_relations;
  data.snapshots.resize(cfg.num_timestamps);
  for (std::size_t t = 0; t < cfg.num_timestamps; ++t) data.snapshots[t].time = t;
  data.t1 = cfg.train_timestamps - 1;
  data.t2 = data.t1 + cfg.valid_timestamps;
  data.t3 = cfg.num_timestamps - 1;
  data.granularity = "synthetic step";

  // free_from[e]: first time index at which e may start a new window.
  std::vector<std::size_t> free_from(cfg.num_entities, 0);
  std::vector<std::size_t> planted(cfg.num_timestamps, 0);
  std::size_t skipped = 0;
  const std::size_t lmax = cfg.max_length();

  auto pick = [&](std::size_t window_start, const std::vector<std::int32_t>& exclude) -> std::int32_t {
    std::vector<std::int32_t> candidates;
    for (std::size_t e = 0; e < cfg.num_entities; ++e) {
      const auto id = static_cast<std::int32_t>(e);
      if (free_from[e] <= window_start && std::find(exclude.begin(), exclude.end(), id) == exclude.end()) {
        candidates.push_back(id);
      }
    }
    if (candidates.empty()) return -1;
    std::uniform_int_distribution<std::size_t> u(0, candidates.size() - 1);
    return candidates[u(rng)];
  };

  if (!cfg.templates.empty()) {
    for (std::size_t tc = lmax; tc < cfg.num_timestamps; ++tc) {
      for (std::size_t b = 0; b < cfg.bundles_per_step; ++b) {
        std::vector<std::int32_t> chosen;
        const std::int32_t s = pick(tc - lmax, chosen);
        if (s < 0) {
          ++skipped;
          continue;
        }
        chosen.push_back(s);
        std::vector<std::int32_t> objects;
        for (const auto& tpl : cfg.templates) {
          const std::int32_t o = pick(tc - tpl.length, chosen);
          if (o < 0) break;
          chosen.push_back(o);
          objects.push_back(o);
        }
        if (objects.size() != cfg.templates.size()) {
          ++skipped;
          continue;
        }
        for (auto e : chosen) free_from[static_cast<std::size_t>(e)] = tc + 1 + cfg.cooldown;
        for (std::size_t i = 0; i < cfg.templates.size(); ++i) {
          const auto& tpl = cfg.templates[i];
          const std::size_t tt = tc - tpl.length;
          PatternEvent ev;
          ev.template_id = i;
          ev.trigger_time = tt;
          ev.consequence_time = tc;
          ev.trigger = Triple{s, tpl.trigger_relation, objects[i]};
          ev.consequence = Triple{s, consequence_at(cfg, i, tc), objects[i]};
          data.snapshots[tt].facts.push_back(ev.trigger);
          data.snapshots[tc].facts.push_back(ev.consequence);
          ++planted[tt];
          ++planted[tc];
          res.patterns.push_back(ev);
        }
      }
    }
  }
  if (skipped) log::info("synth: skipped ", skipped, " bundles for lack of free entities");

  if (cfg.noise_rate > 0.0) {
    const auto used = template_relations(cfg);
    std::vector<std::int32_t> noise_rels;
    for (std::size_t r = 0; r < cfg.num_relations; ++r)
      if (!used.count(static_cast<std::int32_t>(r))) noise_rels.push_back(static_cast<std::int32_t>(r));
    std::uniform_int_distribution<std::int32_t> ent(0, static_cast<std::int32_t>(cfg.num_entities) - 1);
    std::uniform_int_distribution<std::size_t> rel(0, noise_rels.size() - 1);
    for (std::size_t t = 0; t < cfg.num_timestamps; ++t) {
      auto& facts = data.snapshots[t].facts;
      std::set<Triple> present(facts.begin(), facts.end());
      const auto want = static_cast<std::size_t>(std::llround(cfg.noise_rate * static_cast<double>(planted[t])));
      std::size_t added = 0;
      while (added < want) {
        Triple f{ent(rng), noise_rels[rel(rng)], ent(rng)};
        if (f.s == f.o || !present.insert(f).second) continue;
        facts.push_back(f);
        ++added;
      }
    }
  }
  return res;
}

void write_pattern_log(const std::vector<PatternEvent>& events, std::ostream& os) {
  for (const auto& ev : events) os << ev.template_id << '\t' << ev.trigger_time << '\t' << ev.consequence_time << '\n';
}

void write_pattern_log(const std::vector<PatternEvent>& events, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path.string());
  write_pattern_log(events, os);
}

std::vector<std::string> replay_check(const SynthResult& result, const SynthConfig& cfg) {
  std::vector<std::string> problems;
  const auto& data = result.data;
  auto has = [&](std::size_t t, const Triple& f) {
    const auto& facts = data.snapshots.at(t).facts;
    return std::find(facts.begin(), facts.end(), f) != facts.end();
  };
  std::set<std::pair<std::size_t, Triple>> explained;
  for (const auto& ev : result.patterns) {
    const auto& tpl = cfg.templates.at(ev.template_id);
    if (ev.consequence_time - ev.trigger_time != tpl.length) {
      problems.push_back("event lag " + std::to_string(ev.consequence_time - ev.trigger_time) +
                         " differs from template length " + std::to_string(tpl.length));
    }
    if (ev.trigger.r != tpl.trigger_relation || ev.trigger.s != ev.consequence.s || ev.trigger.o != ev.consequence.o) {
      problems.push_back("event at t=" + std::to_string(ev.consequence_time) + " is not a chain of its template");
    }
    if (ev.consequence.r != consequence_at(cfg, ev.template_id, ev.consequence_time)) {
      problems.push_back("consequence relation mismatch at t=" + std::to_string(ev.consequence_time));
    }
    if (!has(ev.trigger_time, ev.trigger)) {
      problems.push_back("missing trigger at t=" + std::to_string(ev.trigger_time));
    }
    if (!has(ev.consequence_time, ev.consequence)) {
      problems.push_back("missing consequence at t=" + std::to_string(ev.consequence_time));
    }
    explained.emplace(ev.consequence_time, ev.consequence);
  }
  const auto cons = consequence_relations(cfg);
  for (const auto& snap : data.snapshots) {
    for (const auto& f : snap.facts) {
      if (std::find(cons.begin(), cons.end(), f.r) == cons.end()) continue;
      if (!explained.count({snap.time, f})) {
        problems.push_back("unexplained consequence fact at t=" + std::to_string(snap.time));
      }
    }
  }
  return problems;
}

std::vector<std::int32_t> consequence_relations(const SynthConfig& cfg) {
  std::set<std::int32_t> rels;
  for (const auto& t : cfg.templates) rels.insert(t.consequence_relation);
  return {rels.begin(), rels.end()};
}

}  // namespace cen
