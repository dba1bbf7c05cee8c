#include "cen/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "cen/errors.hpp"

namespace cen {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_int(const std::string& key, const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) throw ConfigError("'" + key + "': expected an integer, got '" + v + "'");
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used == v.size()) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError("'" + key + "': expected a number, got '" + v + "'");
}

bool parse_flag(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("'" + key + "': expected true/false, got '" + v + "'");
}

// Shortest text that parses back to the same double.
std::string fmt_real(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string fmt_flag(bool b) { return b ? "true" : "false"; }

std::vector<PatternTemplate> parse_templates(const std::string& key, const std::string& v) {
  if (v.rfind("chain:", 0) == 0) return SynthConfig::chain_templates(parse_int<std::size_t>(key, v.substr(6)));
  std::vector<PatternTemplate> out;
  for (const auto& item : split_list(v)) {
    std::stringstream ss(item);
    std::string a, b, c;
    if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') || !std::getline(ss, c)) {
      throw ConfigError("'" + key + "': template '" + item + "' is not length:trigger:consequence");
    }
    out.push_back({parse_int<std::size_t>(key, a), parse_int<std::int32_t>(key, b), parse_int<std::int32_t>(key, c)});
  }
  return out;
}

std::string fmt_templates(const std::vector<PatternTemplate>& ts) {
  std::string out;
  for (const auto& t : ts) {
    if (!out.empty()) out += ',';
    out += std::to_string(t.length) + ':' + std::to_string(t.trigger_relation) + ':' +
           std::to_string(t.consequence_relation);
  }
  return out;
}

struct Field {
  const char* key;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define CEN_SIZE(KEY, MEMBER)                                                                                 \
  Field {                                                                                                     \
    KEY, [](RunConfig& c, const std::string& k, const std::string& v) { c.MEMBER = parse_int<std::size_t>(k, v); }, \
        [](const RunConfig& c) { return std::to_string(c.MEMBER); }                                         \
  }
#define CEN_REAL(KEY, MEMBER)                                                                            \
  Field {                                                                                                \
    KEY, [](RunConfig& c, const std::string& k, const std::string& v) { c.MEMBER = parse_real(k, v); }, \
        [](const RunConfig& c) { return fmt_real(c.MEMBER); }                                          \
  }
#define CEN_FLAG(KEY, MEMBER)                                                                            \
  Field {                                                                                                \
    KEY, [](RunConfig& c, const std::string& k, const std::string& v) { c.MEMBER = parse_flag(k, v); }, \
        [](const RunConfig& c) { return fmt_flag(c.MEMBER); }                                          \
  }
#define CEN_TEXT(KEY, MEMBER)                                                                                     \
  Field {                                                                                                         \
    KEY, [](RunConfig& c, const std::string&, const std::string& v) { c.MEMBER = v; }, [](const RunConfig& c) { \
      return c.MEMBER;                                                                                            \
    }                                                                                                             \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      CEN_TEXT("data_dir", data_dir),
      CEN_TEXT("out_dir", out_dir),
      CEN_TEXT("checkpoint", checkpoint),
      Field{"seed",
            [](RunConfig& c, const std::string& k, const std::string& v) { c.seed = parse_int<std::uint64_t>(k, v); },
            [](const RunConfig& c) { return std::to_string(c.seed); }},
      CEN_FLAG("deterministic", deterministic),
      CEN_FLAG("inverse", inverse),
      CEN_TEXT("eval_relations", eval_relations),
      // model
      CEN_SIZE("dim", train.model.dim),
      CEN_SIZE("layers", train.model.layers),
      CEN_SIZE("channels", train.model.channels),
      CEN_SIZE("kernel_width", train.model.kernel_width),
      CEN_SIZE("max_length", train.model.max_length),
      CEN_REAL("dropout", train.model.dropout),
      Field{"rgcn_act",
            [](RunConfig& c, const std::string&, const std::string& v) {
              c.train.model.rgcn_act = ad::parse_activation(v);
            },
            [](const RunConfig& c) { return std::string(ad::to_string(c.train.model.rgcn_act)); }},
      Field{"fcn_act",
            [](RunConfig& c, const std::string&, const std::string& v) {
              c.train.model.fcn_act = ad::parse_activation(v);
            },
            [](const RunConfig& c) { return std::string(ad::to_string(c.train.model.fcn_act)); }},
      Field{"skip", [](RunConfig& c, const std::string&, const std::string& v) { c.train.model.skip = parse_skip_mode(v); },
            [](const RunConfig& c) { return std::string(to_string(c.train.model.skip)); }},
      CEN_FLAG("single_channel", train.model.single_channel),
      // training
      CEN_SIZE("min_length", train.min_length),
      CEN_REAL("lr", train.lr),
      CEN_SIZE("epochs", train.epochs),
      CEN_SIZE("patience", train.patience),
      CEN_REAL("clip_norm", train.clip_norm),
      CEN_FLAG("no_curriculum", train.no_curriculum),
      CEN_FLAG("warm_start", train.warm_start),
      CEN_FLAG("freeze_earlier", train.freeze_earlier),
      // evaluation
      Field{"eval_mode", [](RunConfig& c, const std::string&, const std::string& v) { c.eval.mode = parse_filter_mode(v); },
            [](const RunConfig& c) { return std::string(to_string(c.eval.mode)); }},
      Field{"tie_rule", [](RunConfig& c, const std::string&, const std::string& v) { c.eval.tie = parse_tie_rule(v); },
            [](const RunConfig& c) { return std::string(to_string(c.eval.tie)); }},
      Field{"select_tie", [](RunConfig& c, const std::string&, const std::string& v) { c.select_tie = parse_tie_rule(v); },
            [](const RunConfig& c) { return std::string(to_string(c.select_tie)); }},
      // online
      CEN_SIZE("online_epochs", online.max_epochs),
      CEN_REAL("lambda", online.lambda),
      CEN_REAL("online_lr", online.lr),
      CEN_SIZE("valid_offset", online.valid_offset),
      CEN_FLAG("no_tr", online.no_tr),
      CEN_REAL("online_clip_norm", online.clip_norm),
      CEN_SIZE("online_patience", online.patience),
      // synthetic generator
      CEN_SIZE("synth.num_entities", synth.num_entities),
      CEN_SIZE("synth.num_relations", synth.num_relations),
      CEN_SIZE("synth.num_timestamps", synth.num_timestamps),
      Field{"synth.templates",
            [](RunConfig& c, const std::string& k, const std::string& v) { c.synth.templates = parse_templates(k, v); },
            [](const RunConfig& c) { return fmt_templates(c.synth.templates); }},
      CEN_SIZE("synth.bundles_per_step", synth.bundles_per_step),
      CEN_SIZE("synth.cooldown", synth.cooldown),
      Field{"synth.drift_time",
            [](RunConfig& c, const std::string& k, const std::string& v) {
              if (v == "none") {
                c.synth.drift_time.reset();
              } else {
                c.synth.drift_time = parse_int<std::size_t>(k, v);
              }
            },
            [](const RunConfig& c) {
              return c.synth.drift_time ? std::to_string(*c.synth.drift_time) : std::string("none");
            }},
      CEN_REAL("synth.noise_rate", synth.noise_rate),
      CEN_SIZE("synth.train_timestamps", synth.train_timestamps),
      CEN_SIZE("synth.valid_timestamps", synth.valid_timestamps),
  };
  return table;
}

#undef CEN_SIZE
#undef CEN_REAL
#undef CEN_FLAG
#undef CEN_TEXT

}  // namespace

KeyValues parse_config(std::istream& is) {
  KeyValues out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", lineno);
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError("missing key", lineno);
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

KeyValues load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in);
}

RunConfig::RunConfig() {
  train.min_length = 3;
  train.model.max_length = 10;
}

void RunConfig::apply(const KeyValues& kv) {
  for (const auto& [key, value] : kv) {
    const auto& fs = fields();
    const auto it = std::find_if(fs.begin(), fs.end(), [&](const Field& f) { return key == f.key; });
    if (it == fs.end()) throw ConfigError("unknown config key '" + key + "'");
    it->set(*this, key, value);
  }
  train.seed = seed;
  online.seed = seed;
  synth.seed = seed;
  online.eval = eval;
  online.eval.relations = resolve_eval_relations();
  train.valid_eval.tie = select_tie;
  train.valid_eval.relations = online.eval.relations;
  online.select_tie = select_tie;
}

KeyValues RunConfig::to_key_values() const {
  KeyValues out;
  for (const auto& f : fields()) out[f.key] = f.get(*this);
  return out;
}

std::optional<std::vector<std::int32_t>> RunConfig::resolve_eval_relations() const {
  if (eval_relations == "all" || eval_relations.empty()) return std::nullopt;
  if (eval_relations == "planted") return consequence_relations(synth);
  std::vector<std::int32_t> out;
  for (const auto& item : split_list(eval_relations)) out.push_back(parse_int<std::int32_t>("eval_relations", item));
  return out;
}

}  // namespace cen
