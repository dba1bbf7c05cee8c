#include "cen/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cen/config.hpp"
#include "cen/errors.hpp"
#include "cen/gradcheck.hpp"
#include "cen/kernels.hpp"
#include "cen/log.hpp"
#include "cen/manifest.hpp"

namespace cen::cli {

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
  std::string out;
  std::string data;
  std::string checkpoint;
  bool verbose = false;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "key = value config file");
  cmd->add_option("--set", c.sets, "override a config key (key=value), repeatable");
  cmd->add_option("--seed", c.seed, "random seed");
  cmd->add_flag("--deterministic", c.deterministic, "single-threaded reference kernels");
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--data", c.data, "dataset directory (train.txt, valid.txt, test.txt)");
  cmd->add_flag("-v,--verbose", c.verbose, "per-epoch progress on stderr");
  cmd->add_flag("-q,--quiet", c.quiet, "no progress output");
}

// Config file first, then --set, then dedicated flags.
RunConfig resolve(const Common& c, const KeyValues& flags) {
  KeyValues kv;
  if (!c.config.empty()) kv = load_config(c.config);
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    kv[s.substr(0, eq)] = s.substr(eq + 1);
  }
  if (c.seed) kv["seed"] = std::to_string(*c.seed);
  if (c.deterministic) kv["deterministic"] = "true";
  if (!c.out.empty()) kv["out_dir"] = c.out;
  if (!c.data.empty()) kv["data_dir"] = c.data;
  if (!c.checkpoint.empty()) kv["checkpoint"] = c.checkpoint;
  for (const auto& [k, v] : flags) kv[k] = v;
  RunConfig rc;
  rc.apply(kv);
  if (rc.deterministic) kernels::set_backend(kernels::Backend::Serial);
  return rc;
}

void write_run_config(const RunConfig& rc, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& [k, v] : rc.to_key_values()) out << k << " = " << v << '\n';
}

RunManifest start_manifest(const std::string& command, const RunConfig& rc) {
  RunManifest m;
  m.command = command;
  m.config = rc.to_key_values();
  m.seed = rc.seed;
  return m;
}

TkgDataset load_data(const RunConfig& rc, RunManifest* manifest) {
  TkgDataset data;
  if (!rc.data_dir.empty()) {
    data = load_dataset_dir(rc.data_dir);
    if (manifest) {
      for (const char* f : {"train.txt", "valid.txt", "test.txt", "stat.txt"}) {
        const fs::path p = fs::path(rc.data_dir) / f;
        if (fs::exists(p)) manifest->add_input(p);
      }
    }
  } else {
    data = synth_generate(rc.synth).data;
  }
  if (rc.inverse) data = add_inverse_relations(data);
  return data;
}

ModelConfig model_config(const RunConfig& rc, const TkgDataset& data) {
  ModelConfig m = rc.train.model;
  m.num_entities = data.num_entities;
  m.num_relations = data.relation_vocab();
  return m;
}

fs::path prepare_out(const RunConfig& rc) {
  const fs::path dir = rc.out_dir;
  fs::create_directories(dir);
  return dir;
}

void finish_manifest(RunManifest& m, const fs::path& dir) { m.write(dir / "manifest.json"); }

std::ofstream open_csv(const fs::path& path, const RunManifest& m) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "# manifest=" << m.hash() << '\n';
  return out;
}

// Config for commands that start from a checkpoint: an explicit --config, or
// the run.cfg saved next to the checkpoint.
Common with_checkpoint_config(Common c) {
  if (c.config.empty() && !c.checkpoint.empty()) {
    const fs::path saved = fs::path(c.checkpoint).parent_path() / "run.cfg";
    if (fs::exists(saved)) c.config = saved.string();
  }
  return c;
}

CenModel load_model(const RunConfig& rc, const TkgDataset& data, RunManifest* manifest) {
  if (rc.checkpoint.empty()) throw ConfigError("--checkpoint is required");
  if (manifest) manifest->add_input(rc.checkpoint);
  return CenModel::from_params(model_config(rc, data), ParamStore::load(rc.checkpoint));
}

// ---- commands --------------------------------------------------------------

struct KnownStats {
  const char* name;
  std::size_t entities, relations, train, valid, test;
};

constexpr KnownStats kKnown[] = {
    {"ICEWS14", 6869, 230, 74845, 8514, 7371},
    {"ICEWS18", 23033, 256, 373018, 45995, 49545},
    {"WIKI", 12554, 24, 539286, 67538, 63110},
};

int cmd_prepare(const Common& c, std::ostream& out, std::ostream& err) {
  if (c.data.empty()) throw ConfigError("prepare needs --data <dir>");
  if (!fs::is_directory(c.data)) throw DataError("no dataset directory at " + c.data);
  LoadStats stats;
  const TkgDataset raw = load_dataset_dir(c.data, &stats);
  const TkgDataset aug = add_inverse_relations(raw);
  const std::size_t tr = raw.fact_count(Split::Train), va = raw.fact_count(Split::Valid),
                    te = raw.fact_count(Split::Test);
  out << "entities=" << raw.num_entities << " relations=" << raw.num_relations << " train=" << tr
      << " valid=" << va << " test=" << te << " timestamps=" << raw.num_timestamps() << " T1=" << raw.t1
      << " T2=" << raw.t2 << " T3=" << raw.t3 << '\n';
  out << "inverse relations: " << aug.relation_vocab() << " relation ids, "
      << aug.fact_count(Split::Train) + aug.fact_count(Split::Valid) + aug.fact_count(Split::Test) << " facts"
      << " (duplicates removed: " << stats.duplicates_removed << ")\n";
  for (const auto& k : kKnown) {
    if (raw.num_entities != k.entities) continue;
    if (raw.num_relations != k.relations || tr != k.train || va != k.valid || te != k.test) {
      err << "warning: entity count matches " << k.name << " but other statistics differ (expected relations="
          << k.relations << " train=" << k.train << " valid=" << k.valid << " test=" << k.test << ")\n";
    } else {
      out << "matches published " << k.name << " statistics\n";
    }
  }
  return kExitOk;
}

int cmd_synth(const Common& c, std::ostream& out) {
  const RunConfig rc = resolve(c, {});
  const fs::path dir = prepare_out(rc);
  RunManifest m = start_manifest("synth", rc);
  m.outputs = {"train.txt", "valid.txt", "test.txt", "stat.txt", "patterns.tsv", "run.cfg"};
  finish_manifest(m, dir);
  const SynthResult res = synth_generate(rc.synth);
  save_dataset(res.data, dir);
  write_pattern_log(res.patterns, dir / "patterns.tsv");
  write_run_config(rc, dir / "run.cfg");
  const auto violations = replay_check(res, rc.synth);
  out << "wrote " << res.data.num_timestamps() << " snapshots, " << res.patterns.size() << " planted patterns to "
      << dir.string() << '\n';
  if (!violations.empty()) {
    for (const auto& v : violations) out << "replay violation: " << v << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

int cmd_train(const Common& c, bool no_curriculum, bool single_channel, std::ostream& out) {
  KeyValues flags;
  if (no_curriculum) flags["no_curriculum"] = "true";
  if (single_channel) flags["single_channel"] = "true";
  RunConfig rc = resolve(c, flags);
  const fs::path dir = prepare_out(rc);
  RunManifest m = start_manifest("train", rc);
  const TkgDataset data = load_data(rc, &m);
  m.outputs = {"model.ckpt", "train_log.csv", "run.cfg"};
  finish_manifest(m, dir);
  write_run_config(rc, dir / "run.cfg");

  TrainConfig tc = rc.train;
  tc.model = model_config(rc, data);
  const TrainResult res = run_curriculum(data, tc);
  res.model.params().save(dir / "model.ckpt");
  auto csv = open_csv(dir / "train_log.csv", m);
  write_epoch_csv(csv, res.log);

  out << "stages:";
  for (const auto& s : res.state.stages) out << " k=" << s.k << ":" << s.mrr;
  out << "\nK-hat=" << *res.state.chosen_length << " valid_mrr=" << res.state.best_mrr << '\n';
  out << "checkpoint " << (dir / "model.ckpt").string() << '\n';
  return kExitOk;
}

int cmd_eval(const Common& c, const std::string& split, const std::string& mode, const std::string& tie,
             std::ostream& out) {
  KeyValues flags;
  if (!mode.empty()) flags["eval_mode"] = mode;
  if (!tie.empty()) flags["tie_rule"] = tie;
  const RunConfig rc = resolve(with_checkpoint_config(c), flags);
  const Split sp = parse_split(split);
  const fs::path dir = prepare_out(rc);
  RunManifest m = start_manifest("eval", rc);
  const TkgDataset data = load_data(rc, &m);
  const CenModel model = load_model(rc, data, &m);
  const std::string csv_name = "eval_" + split + ".csv";
  m.outputs = {csv_name};
  finish_manifest(m, dir);

  const auto graphs = data.build_graphs();
  const auto ptrs = graph_ptrs(graphs);
  EvalOptions eo = rc.eval;
  eo.relations = rc.resolve_eval_relations();
  const MetricsReport rep = evaluate(model_scorer(model, ptrs), data, sp, eo);
  out << "split=" << split << " mode=" << to_string(eo.mode) << " ties=" << to_string(eo.tie) << '\n'
      << format_table(rep);
  auto csv = open_csv(dir / csv_name, m);
  csv << "split,direction,count,mrr,h1,h3,h10\n";
  write_metrics_csv(csv, rep, split);
  return kExitOk;
}

int cmd_online(const Common& c, bool no_tr, std::optional<double> lambda, std::ostream& out) {
  KeyValues flags;
  if (no_tr) flags["no_tr"] = "true";
  if (lambda) {
    std::ostringstream os;
    os.precision(17);
    os << *lambda;
    flags["lambda"] = os.str();
  }
  const RunConfig rc = resolve(with_checkpoint_config(c), flags);
  const fs::path dir = prepare_out(rc);
  RunManifest m = start_manifest("online", rc);
  const TkgDataset data = load_data(rc, &m);
  CenModel model = load_model(rc, data, &m);
  m.outputs = {"online.csv", "online_report.csv", "online.ckpt"};
  finish_manifest(m, dir);

  const OnlineResult res = run_online(model, data, rc.online);
  auto csv = open_csv(dir / "online.csv", m);
  write_online_csv(csv, res.rows);
  auto rep_csv = open_csv(dir / "online_report.csv", m);
  rep_csv << "split,direction,count,mrr,h1,h3,h10\n";
  write_metrics_csv(rep_csv, res.report, "test");
  model.params().save(dir / "online.ckpt");
  out << "online lambda=" << rc.online.effective_lambda() << " over test timestamps\n" << format_table(res.report);
  return kExitOk;
}

int cmd_gradcheck(const Common& c, std::size_t instances, std::ostream& out) {
  const RunConfig rc = resolve(c, {});
  double worst = 0.0;
  std::string where;
  for (std::size_t i = 0; i < instances; ++i) {
    ToyInstance inst = make_toy_instance(rc.seed + i);
    const auto r = check_toy_gradients(inst);
    if (r.max_rel_error > worst) {
      worst = r.max_rel_error;
      where = r.worst_param + "[" + std::to_string(r.worst_index) + "] of instance " + std::to_string(rc.seed + i);
    }
  }
  out << "max relative error " << worst << (where.empty() ? "" : " at " + where) << '\n';
  return worst <= 1e-4 ? kExitOk : kExitFailure;
}

int cmd_ablate(const Common& c, std::ostream& out) {
  const RunConfig rc = resolve(c, {});
  const fs::path dir = prepare_out(rc);
  RunManifest m = start_manifest("ablate", rc);
  const TkgDataset data = load_data(rc, &m);
  m.outputs = {"ablation.csv"};
  finish_manifest(m, dir);

  EvalOptions eo = rc.eval;
  eo.relations = rc.resolve_eval_relations();
  OnlineConfig oc = rc.online;
  oc.eval = eo;

  struct Variant {
    const char* name;
    bool no_curriculum, single_channel, no_tr;
  };
  const Variant variants[] = {
      {"full", false, false, false},
      {"-CL", true, false, false},
      {"-LA", false, true, false},
      {"-TR", false, false, true},
  };
  auto csv = open_csv(dir / "ablation.csv", m);
  csv << "variant,mrr,h1,h3,h10\n";
  out << "variant      MRR     H@1     H@3    H@10\n";
  std::optional<TrainResult> full;
  for (const auto& v : variants) {
    TrainConfig tc = rc.train;
    tc.model = model_config(rc, data);
    tc.no_curriculum = v.no_curriculum;
    tc.model.single_channel = v.single_channel;
    // -TR reuses the full model's offline training.
    TrainResult res = v.no_tr && full ? *full : run_curriculum(data, tc);
    if (!v.no_curriculum && !v.single_channel && !v.no_tr) full = res;
    OnlineConfig voc = oc;
    voc.no_tr = v.no_tr;
    const OnlineResult on = run_online(res.model, data, voc);
    const Metrics& mm = on.report.all;
    csv << v.name << ',' << mm.mrr << ',' << mm.hits1 << ',' << mm.hits3 << ',' << mm.hits10 << '\n';
    char line[96];
    std::snprintf(line, sizeof line, "%-8s %7.4f %7.4f %7.4f %7.4f\n", v.name, mm.mrr, mm.hits1, mm.hits3, mm.hits10);
    out << line;
  }
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  kernels::configure_threads_from_env();
  CLI::App app{"CEN temporal knowledge graph reasoning", "cen"};
  app.require_subcommand(1);

  Common c;
  auto* prepare = app.add_subcommand("prepare", "load and summarise a quadruple dataset");
  add_common(prepare, c);

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset with planted patterns");
  add_common(synth, c);

  bool no_curriculum = false, single_channel = false;
  auto* train = app.add_subcommand("train", "curriculum training");
  add_common(train, c);
  train->add_flag("--no-curriculum", no_curriculum, "train directly at the maximum length");
  train->add_flag("--single-channel", single_channel, "one decoder channel shared by all lengths");

  std::string split = "test", mode, tie;
  auto* eval = app.add_subcommand("eval", "rank a split with a trained checkpoint");
  add_common(eval, c);
  eval->add_option("--checkpoint", c.checkpoint, "model checkpoint")->required();
  eval->add_option("--split", split, "train | valid | test")->check(CLI::IsMember({"train", "valid", "test"}));
  eval->add_option("--mode", mode, "raw | time-filtered")->check(CLI::IsMember({"raw", "time-filtered"}));
  eval->add_option("--tie", tie, "optimistic | mean")->check(CLI::IsMember({"optimistic", "mean"}));

  bool no_tr = false;
  std::optional<double> lambda;
  auto* online = app.add_subcommand("online", "online fine-tuning over the valid and test range");
  add_common(online, c);
  online->add_option("--checkpoint", c.checkpoint, "pre-trained checkpoint")->required();
  online->add_flag("--no-tr", no_tr, "disable the temporal regularisation penalty");
  online->add_option("--lambda", lambda, "TR penalty weight");

  std::size_t instances = 1;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of the full loss on toy models");
  add_common(gradcheck, c);
  gradcheck->add_option("--instances", instances, "number of random toy instances");

  auto* ablate = app.add_subcommand("ablate", "full vs -CL, -LA, -TR on one dataset");
  add_common(ablate, c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  log::set_level(c.verbose && !c.quiet ? log::Level::Info : log::Level::Quiet);
  try {
    if (*prepare) return cmd_prepare(c, out, err);
    if (*synth) return cmd_synth(c, out);
    if (*train) return cmd_train(c, no_curriculum, single_channel, out);
    if (*eval) return cmd_eval(c, split, mode, tie, out);
    if (*online) return cmd_online(c, no_tr, lambda, out);
    if (*gradcheck) return cmd_gradcheck(c, instances, out);
    if (*ablate) return cmd_ablate(c, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace cen::cli
