// SPDX-FileCopyrightText: © 2026 The relish-head Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "relish/config.hpp"
#include "relish/data.hpp"
#include "relish/decisions.hpp"
#include "relish/error.hpp"
#include "relish/grad_suite.hpp"
#include "relish/harness.hpp"
#include "relish/heads.hpp"
#include "relish/relish_head.hpp"

namespace relish::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

json record_json(const RunRecord& r) {
  return json{{"dataset", r.dataset}, {"backbone", r.backbone}, {"method", r.method},
              {"seed", r.seed},       {"pearson", r.pearson},   {"spearman", r.spearman},
              {"rmse", r.rmse},       {"nrmse", r.nrmse}};
}

json history_json(const TrainHistory& h) {
  return json{{"train_loss", h.train_loss},
              {"val_rmse", h.val_rmse},
              {"best_epoch", h.best_epoch},
              {"stop_reason", stop_reason_name(h.stop)},
              {"steps", h.steps}};
}

json aggregate_json(std::span<const RunRecord> records) {
  json out = json::object();
  std::map<std::string, std::vector<RunRecord>> by_method;
  for (const auto& r : records) by_method[r.method].push_back(r);
  for (const auto& [method, rs] : by_method) {
    json m = json::object();
    const std::pair<const char*, double RunRecord::*> metrics[] = {
        {"pearson", &RunRecord::pearson},
        {"spearman", &RunRecord::spearman},
        {"rmse", &RunRecord::rmse},
        {"nrmse", &RunRecord::nrmse}};
    for (const auto& [name, field] : metrics) {
      const AggregateStat s = macro_aggregate(rs, [f = field](const RunRecord& r) { return r.*f; });
      m[name] = {{"mean", s.mean},
                 {"std", s.stddev_defined ? json(s.stddev) : json(nullptr)},
                 {"per_seed", s.per_seed}};
    }
    out[method] = m;
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

void print_record(std::ostream& out, const RunRecord& r) {
  out << "pearson  " << fixed(r.pearson) << '\n'
      << "spearman " << fixed(r.spearman) << '\n'
      << "rmse     " << fixed(r.rmse) << '\n'
      << "nrmse    " << fixed(r.nrmse) << '\n';
}

Dataset load_run_data(const RunConfig& rc, std::ostream& out) {
  if (rc.manifest.empty()) throw ConfigError("config needs a 'manifest' path");
  const Manifest manifest = load_manifest(rc.manifest);
  const auto counts = manifest.split_counts();
  out << "manifest " << rc.manifest.string() << ": d=" << manifest.dim
      << " train=" << counts.at(Split::kTrain) << " val=" << counts.at(Split::kVal)
      << " test=" << counts.at(Split::kTest) << '\n';
  return load_dataset(manifest);
}

const std::vector<TokenStates>& scoring_split(const Dataset& ds) {
  return ds.test.empty() ? ds.val : ds.test;
}

// ---- train ---------------------------------------------------------------

int cmd_train(const std::string& config_path, std::ostream& out) {
  const RunConfig rc = load_run_config(config_path);
  const Dataset ds = load_run_data(rc, out);
  fs::create_directories(rc.output_dir);
  std::vector<RunRecord> records;
  for (const std::uint64_t seed : rc.seeds) {
    TrainConfig c = rc.train;
    c.seed = seed;
    const TrainResult result = train(c, ds);
    const fs::path dir = rc.output_dir / ("seed-" + std::to_string(seed));
    fs::create_directories(dir);
    save_checkpoint(dir / "checkpoint.rck", result.model, rc.gold);
    RunRecord r = evaluate(result.model, scoring_split(ds), rc.gold);
    r.dataset = rc.dataset;
    r.backbone = rc.backbone;
    write_text(dir / "history.json", history_json(result.history).dump(2) + "\n");
    write_text(dir / "record.json", record_json(r).dump(2) + "\n");
    out << "seed " << seed << ": best epoch " << result.history.best_epoch << " ("
        << stop_reason_name(result.history.stop) << "), pearson " << fixed(r.pearson, 4)
        << ", nrmse " << fixed(r.nrmse, 4) << '\n';
    records.push_back(r);
  }
  const std::string table = format_metrics_table(records);
  write_text(rc.output_dir / "report.txt", table);
  json metrics{{"records", json::array()}, {"aggregate", aggregate_json(records)}};
  for (const auto& r : records) metrics["records"].push_back(record_json(r));
  write_text(rc.output_dir / "metrics.json", metrics.dump(2) + "\n");
  out << table;
  return 0;
}

// ---- eval ----------------------------------------------------------------

int cmd_eval(const std::string& checkpoint, const std::string& manifest_path,
             const std::string& split, const std::vector<double>& gold_flag,
             const std::string& out_path, std::ostream& out) {
  GoldRange gold{0.0, 0.0};
  const Model model = load_checkpoint(checkpoint, &gold);
  if (!gold_flag.empty()) {
    if (gold_flag.size() != 2 || !(gold_flag[1] > gold_flag[0])) {
      throw ConfigError("--gold-range needs two values lo < hi");
    }
    gold = {gold_flag[0], gold_flag[1]};
  }
  if (!(gold.hi > gold.lo)) {
    throw ConfigError("no gold range in the checkpoint; pass --gold-range lo hi");
  }
  const Manifest manifest = load_manifest(manifest_path);
  if (manifest.dim != model.input_dim) {
    throw ShapeError("dimension mismatch: checkpoint expects d=" +
                     std::to_string(model.input_dim) + " but manifest has d=" +
                     std::to_string(manifest.dim));
  }
  const Dataset ds = load_dataset(manifest);
  const auto& examples = ds.split(parse_split(split));
  RunRecord r = evaluate(model, examples, gold);
  print_record(out, r);
  if (!out_path.empty()) write_text(out_path, record_json(r).dump(2) + "\n");
  return 0;
}

// ---- params --------------------------------------------------------------

constexpr std::size_t kReferenceDims[] = {4096, 5120, 5376};

int cmd_params(const std::string& config_path, std::size_t input_dim, bool paper_table,
               const std::vector<std::size_t>& mlp_match, std::ostream& out) {
  TrainConfig c;
  if (!config_path.empty()) c = load_run_config(config_path).train;
  bool printed = false;
  auto describe = [&](const RelishConfig& r) {
    return "d=" + std::to_string(r.input_dim) + " d_h=" + std::to_string(r.head_dim) +
           " M=" + std::to_string(r.heads) + " L=" + std::to_string(r.layers) +
           " ffn=" + std::to_string(r.ffn_hidden);
  };
  if (input_dim != 0) {
    RelishConfig r = c.relish;
    r.input_dim = input_dim;
    r.validate();
    out << "relish " << describe(r) << ": " << count_parameters(r) << '\n';
    printed = true;
  }
  if (paper_table) {
    out << "d       relish params   mlp h   mlp params\n";
    for (const std::size_t d : kReferenceDims) {
      RelishConfig r = c.relish;
      r.input_dim = d;
      const std::size_t target = count_parameters(r);
      const std::size_t h = match_mlp_hidden(d, target);
      char line[128];
      std::snprintf(line, sizeof line, "%-7zu %-15zu %-7zu %zu\n", d, target, h,
                    mlp_parameter_count(d, h));
      out << line;
    }
    printed = true;
  }
  for (const std::size_t d : mlp_match) {
    RelishConfig r = c.relish;
    r.input_dim = d;
    const std::size_t target = count_parameters(r);
    out << "mlp match d=" << d << " target=" << target << ": h=" << match_mlp_hidden(d, target)
        << '\n';
    printed = true;
  }
  if (!printed) throw ConfigError("params needs --input-dim, --paper-table or --mlp-match");
  return 0;
}

// ---- gradcheck -----------------------------------------------------------

int cmd_gradcheck(const std::string& preset_name, std::size_t layers, const std::string& fault,
                  std::ostream& out) {
  GradSuitePreset preset = grad_preset(preset_name);
  if (layers != 0) preset.layers = layers;
  const GradSuiteResult result = run_grad_suite(preset, parse_grad_fault(fault));
  for (const auto& c : result.cases) {
    const bool ok = c.report.max_relative_error <= c.tolerance;
    out << (ok ? "PASS " : "FAIL ") << c.name << ": max relative error "
        << c.report.max_relative_error << " (tolerance " << c.tolerance << ") at "
        << c.report.worst_parameter << "[" << c.report.worst_index << "] over "
        << c.report.coordinates << " coordinates\n";
  }
  out << (result.passed() ? "gradcheck passed\n" : "gradcheck FAILED\n");
  return result.passed() ? 0 : static_cast<int>(ErrorCategory::numeric);
}

// ---- synth ---------------------------------------------------------------

struct SynthFlags {
  std::string out;
  std::string kind = "planted";
  std::string input;
  std::size_t examples = 2000;
  std::size_t tokens = 64;
  std::size_t dim = 64;
  std::size_t levels = 6;
  double amplitude = 4.0;
  double noise = 1.0;
  double lo = 0.0;
  double hi = 10.0;
  double train_fraction = 0.8;
  double val_fraction = 0.1;
  std::uint64_t seed = 42;
  bool validate = false;
};

Dataset synth_text(const SynthFlags& f) {
  std::ifstream in(f.input);
  if (!in) throw IoError("cannot open records file " + f.input);
  Dataset ds;
  ds.dim = f.dim;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> parts;
    std::stringstream ss(line);
    for (std::string p; std::getline(ss, p, '\t');) parts.push_back(p);
    if (parts.size() != 4) {
      throw DataError(f.input + " line " + std::to_string(line_no) +
                      ": expected id<TAB>text<TAB>target<TAB>split");
    }
    if (parts[1].empty()) {
      throw DataError(f.input + " line " + std::to_string(line_no) + ": empty text");
    }
    TokenStates ex;
    ex.id = parts[0];
    ex.states = synth_backbone(byte_tokens(parts[1]), f.seed, f.dim);
    ex.mask.assign(ex.states.rows(), 1);
    ex.target = parse_numeric(parts[2]);
    switch (parse_split(parts[3])) {
      case Split::kTrain: ds.train.push_back(std::move(ex)); break;
      case Split::kVal: ds.val.push_back(std::move(ex)); break;
      case Split::kTest: ds.test.push_back(std::move(ex)); break;
    }
  }
  return ds;
}

int cmd_synth(const SynthFlags& f, std::ostream& out) {
  Dataset ds;
  if (f.kind == "planted") {
    PlantedSpec spec;
    spec.examples = f.examples;
    spec.tokens = f.tokens;
    spec.dim = f.dim;
    spec.amplitude = f.amplitude;
    spec.noise_std = f.noise;
    spec.target_lo = f.lo;
    spec.target_hi = f.hi;
    spec.train_fraction = f.train_fraction;
    spec.val_fraction = f.val_fraction;
    ds = planted_task(spec, f.seed);
  } else if (f.kind == "ordinal") {
    OrdinalSpec spec;
    spec.examples = f.examples;
    spec.dim = f.dim;
    spec.levels = f.levels;
    spec.noise_std = f.noise;
    spec.train_fraction = f.train_fraction;
    spec.val_fraction = f.val_fraction;
    ds = planted_ordinal_task(spec, f.seed);
  } else if (f.kind == "text") {
    if (f.input.empty()) throw ConfigError("--kind text needs --input <records file>");
    ds = synth_text(f);
  } else {
    throw ConfigError("unknown --kind '" + f.kind + "' (expected planted, ordinal or text)");
  }
  const fs::path manifest_path = write_dataset(ds, f.out);
  out << "wrote " << manifest_path.string() << ": train=" << ds.train.size()
      << " val=" << ds.val.size() << " test=" << ds.test.size() << " d=" << ds.dim << '\n';
  if (f.validate) {
    const Manifest m = load_manifest(manifest_path);
    out << "validated " << m.records.size() << " HSF files (d=" << m.dim << ")\n";
  }
  return 0;
}

// ---- ablations -----------------------------------------------------------

int cmd_ablate_depth(const std::string& config_path, const std::vector<std::size_t>& layers,
                     std::ostream& out) {
  const RunConfig rc = load_run_config(config_path);
  const Dataset ds = load_run_data(rc, out);
  std::vector<AblationRow> rows = ablate_depth(rc.train, layers, rc.seeds, ds, rc.gold);
  json records = json::array();
  for (auto& row : rows) {
    row.record.dataset = rc.dataset;
    row.record.backbone = rc.backbone;
    json j = record_json(row.record);
    j["layers"] = row.layers;
    j["parameters"] = row.parameters;
    j["history"] = history_json(row.history);
    records.push_back(j);
  }
  const fs::path dir = rc.output_dir / "ablate-depth";
  fs::create_directories(dir);
  const std::string table = format_depth_table(rows);
  write_text(dir / "report.txt", table);
  write_text(dir / "metrics.json", json{{"records", records}}.dump(2) + "\n");
  out << table;
  return 0;
}

int cmd_ablate_loss(const std::string& config_path, std::ostream& out) {
  const RunConfig rc = load_run_config(config_path);
  const Dataset ds = load_run_data(rc, out);
  std::vector<AblationRow> rows = ablate_loss(rc.train, rc.seeds, ds, rc.gold);
  std::vector<RunRecord> recs;
  json records = json::array();
  for (auto& row : rows) {
    row.record.dataset = rc.dataset;
    row.record.backbone = rc.backbone;
    json j = record_json(row.record);
    j["loss"] = loss_name(row.loss);
    j["history"] = history_json(row.history);
    records.push_back(j);
    recs.push_back(row.record);
  }
  const fs::path dir = rc.output_dir / "ablate-loss";
  fs::create_directories(dir);
  const std::string table = format_metrics_table(recs);
  write_text(dir / "report.txt", table);
  write_text(dir / "metrics.json", json{{"records", records}}.dump(2) + "\n");
  out << table;
  return 0;
}

// ---- validate-hsf --------------------------------------------------------

int cmd_validate_hsf(const std::vector<std::string>& files, const std::string& manifest,
                     std::ostream& out) {
  if (files.empty() && manifest.empty()) {
    throw ConfigError("validate-hsf needs HSF paths or --manifest");
  }
  for (const auto& f : files) {
    const HsfHeader h = validate_hsf(f);
    out << f << ": ok S=" << h.rows << " d=" << h.cols << '\n';
  }
  if (!manifest.empty()) {
    const Manifest m = load_manifest(manifest);
    out << manifest << ": ok " << m.records.size() << " files, d=" << m.dim << '\n';
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Latent iterative state regression head: training, evaluation and checks"};
  app.name("relish");
  app.require_subcommand(1);

  std::string config_path;

  auto* train_cmd = app.add_subcommand("train", "Train one model per seed from a run config");
  train_cmd->add_option("--config", config_path, "Run config (JSON)")->required();

  std::string checkpoint, manifest, split = "test", eval_out;
  std::vector<double> gold;
  auto* eval_cmd = app.add_subcommand("eval", "Score a checkpoint on a manifest split");
  eval_cmd->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  eval_cmd->add_option("--manifest", manifest, "Dataset manifest")->required();
  eval_cmd->add_option("--split", split, "train, val or test");
  eval_cmd->add_option("--gold-range", gold, "Gold range lo hi (default: from checkpoint)")
      ->expected(2);
  eval_cmd->add_option("--out", eval_out, "Write the record as JSON");

  std::size_t input_dim = 0;
  bool paper_table = false;
  std::vector<std::size_t> mlp_match;
  auto* params_cmd = app.add_subcommand("params", "Parameter accounting");
  params_cmd->add_option("--config", config_path, "Run config (JSON) for head sizes");
  params_cmd->add_option("--input-dim", input_dim, "Backbone hidden size d");
  params_cmd->add_flag("--paper-table", paper_table,
                       "Counts and matched MLP widths for d = 4096, 5120, 5376");
  params_cmd->add_option("--mlp-match", mlp_match,
                         "Matched MLP hidden size for backbone dim d (repeatable)");

  std::string preset = "default", fault;
  std::size_t layers_override = 0;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
  grad_cmd->add_option("--preset", preset, "default (L=2) or deep (L=5)");
  grad_cmd->add_option("--layers", layers_override, "Override the number of blocks");
  grad_cmd->add_option("--inject-fault", fault, "Test hook: ffn-sign");

  SynthFlags synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic dataset (HSF + manifest)");
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  synth_cmd->add_option("--kind", synth.kind, "planted, ordinal or text");
  synth_cmd->add_option("--input", synth.input, "Records file for --kind text");
  synth_cmd->add_option("--examples", synth.examples, "Number of examples");
  synth_cmd->add_option("--tokens", synth.tokens, "Tokens per example (planted)");
  synth_cmd->add_option("--dim", synth.dim, "Hidden size d");
  synth_cmd->add_option("--levels", synth.levels, "Ordinal levels");
  synth_cmd->add_option("--amplitude", synth.amplitude, "Needle amplitude (planted)");
  synth_cmd->add_option("--noise", synth.noise, "Noise standard deviation");
  synth_cmd->add_option("--lo", synth.lo, "Target lower bound (planted)");
  synth_cmd->add_option("--hi", synth.hi, "Target upper bound (planted)");
  synth_cmd->add_option("--train-fraction", synth.train_fraction, "Train share");
  synth_cmd->add_option("--val-fraction", synth.val_fraction, "Validation share");
  synth_cmd->add_option("--seed", synth.seed, "Generator seed");
  synth_cmd->add_flag("--validate", synth.validate, "Re-read and check every HSF");

  std::vector<std::size_t> depth_layers = {1, 2, 3, 4, 5};
  auto* depth_cmd = app.add_subcommand("ablate-depth", "Sweep the number of refinement blocks");
  depth_cmd->add_option("--config", config_path, "Run config (JSON)")->required();
  depth_cmd->add_option("--layers", depth_layers, "Depths to train");

  auto* loss_cmd = app.add_subcommand("ablate-loss", "Huber vs MSE on identical runs");
  loss_cmd->add_option("--config", config_path, "Run config (JSON)")->required();

  std::vector<std::string> hsf_files;
  std::string hsf_manifest;
  auto* hsf_cmd = app.add_subcommand("validate-hsf", "Check HSF headers and payloads");
  hsf_cmd->add_option("files", hsf_files, "HSF files");
  hsf_cmd->add_option("--manifest", hsf_manifest, "Validate every file of a manifest");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : static_cast<int>(ErrorCategory::config);
  }

  try {
    if (*train_cmd) return cmd_train(config_path, out);
    if (*eval_cmd) return cmd_eval(checkpoint, manifest, split, gold, eval_out, out);
    if (*params_cmd) return cmd_params(config_path, input_dim, paper_table, mlp_match, out);
    if (*grad_cmd) return cmd_gradcheck(preset, layers_override, fault, out);
    if (*synth_cmd) return cmd_synth(synth, out);
    if (*depth_cmd) return cmd_ablate_depth(config_path, depth_layers, out);
    if (*loss_cmd) return cmd_ablate_loss(config_path, out);
    if (*hsf_cmd) return cmd_validate_hsf(hsf_files, hsf_manifest, out);
  } catch (const Error& e) {
    static constexpr const char* kNames[] = {"", "", "config", "data", "numeric"};
    err << "error [" << kNames[e.exit_code()] << "]: " << e.what() << '\n';
    return e.exit_code();
  } catch (const fs::filesystem_error& e) {
    err << "error [data]: " << e.what() << '\n';
    return static_cast<int>(ErrorCategory::data);
  }
  return static_cast<int>(ErrorCategory::config);
}

}  // namespace relish::cli
