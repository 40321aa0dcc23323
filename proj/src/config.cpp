// SPDX-FileCopyrightText: © 2026 The relish-head Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "relish/config.hpp"

#include <fstream>
#include <initializer_list>
#include <string_view>
#include <type_traits>

#include "relish/error.hpp"

namespace relish {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void require_object(const json& value, const std::string& where) {
  if (!value.is_object()) throw ConfigError(where + " must be an object");
}

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const auto a : allowed) known = known || key == a;
    if (!known) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    if constexpr (std::is_unsigned_v<T>) {
      if (!it->is_number_unsigned()) throw ConfigError("");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!it->is_number()) throw ConfigError("");
    }
    out = it->template get<T>();
  } catch (const std::exception&) {
    throw ConfigError("key '" + std::string(key) + "' in " + where + " has the wrong type");
  }
}

}  // namespace

json train_config_to_json(const TrainConfig& c) {
  return json{
      {"method", method_name(c.method)},
      {"train",
       {{"lr", c.lr},
        {"micro_batch", c.micro_batch},
        {"accum_steps", c.accum_steps},
        {"max_epochs", c.max_epochs},
        {"patience", c.patience},
        {"warmup_ratio", c.warmup_ratio},
        {"weight_decay", c.weight_decay},
        {"loss", loss_name(c.loss)},
        {"seed", c.seed}}},
      {"relish",
       {{"input_dim", c.relish.input_dim},
        {"head_dim", c.relish.head_dim},
        {"heads", c.relish.heads},
        {"layers", c.relish.layers},
        {"ffn_hidden", c.relish.ffn_hidden},
        {"dropout", c.relish.dropout},
        {"huber_delta", c.relish.huber_delta}}},
      {"mlp", {{"hidden", c.mlp_hidden}, {"dropout", c.mlp_dropout}}},
      {"raft", {{"grid", c.grid}}},
  };
}

TrainConfig train_config_from_json(const json& doc) {
  require_object(doc, "config");
  TrainConfig c;
  if (const auto it = doc.find("method"); it != doc.end()) {
    if (!it->is_string()) throw ConfigError("key 'method' must be a string");
    c.method = parse_method(it->get<std::string>());
  }
  if (const auto it = doc.find("train"); it != doc.end()) {
    const std::string where = "train";
    require_object(*it, where);
    check_keys(*it,
               {"lr", "micro_batch", "accum_steps", "max_epochs", "patience", "warmup_ratio",
                "weight_decay", "loss", "seed"},
               where);
    read(*it, "lr", c.lr, where);
    read(*it, "micro_batch", c.micro_batch, where);
    read(*it, "accum_steps", c.accum_steps, where);
    read(*it, "max_epochs", c.max_epochs, where);
    read(*it, "patience", c.patience, where);
    read(*it, "warmup_ratio", c.warmup_ratio, where);
    read(*it, "weight_decay", c.weight_decay, where);
    read(*it, "seed", c.seed, where);
    std::string loss(loss_name(c.loss));
    read(*it, "loss", loss, where);
    c.loss = parse_loss(loss);
  }
  if (const auto it = doc.find("relish"); it != doc.end()) {
    const std::string where = "relish";
    require_object(*it, where);
    check_keys(*it,
               {"input_dim", "head_dim", "heads", "layers", "ffn_hidden", "dropout",
                "huber_delta"},
               where);
    read(*it, "input_dim", c.relish.input_dim, where);
    read(*it, "head_dim", c.relish.head_dim, where);
    read(*it, "heads", c.relish.heads, where);
    read(*it, "layers", c.relish.layers, where);
    read(*it, "ffn_hidden", c.relish.ffn_hidden, where);
    read(*it, "dropout", c.relish.dropout, where);
    read(*it, "huber_delta", c.relish.huber_delta, where);
  }
  if (const auto it = doc.find("mlp"); it != doc.end()) {
    require_object(*it, "mlp");
    check_keys(*it, {"hidden", "dropout"}, "mlp");
    read(*it, "hidden", c.mlp_hidden, "mlp");
    read(*it, "dropout", c.mlp_dropout, "mlp");
  }
  if (const auto it = doc.find("raft"); it != doc.end()) {
    require_object(*it, "raft");
    check_keys(*it, {"grid"}, "raft");
    read(*it, "grid", c.grid, "raft");
  }
  return c;
}

json run_config_to_json(const RunConfig& config) {
  json doc = train_config_to_json(config.train);
  doc["train"].erase("seed");
  doc["relish"].erase("input_dim");
  doc["manifest"] = config.manifest.string();
  doc["output_dir"] = config.output_dir.string();
  doc["dataset"] = config.dataset;
  doc["backbone"] = config.backbone;
  doc["gold_range"] = {config.gold.lo, config.gold.hi};
  doc["seeds"] = config.seeds;
  return doc;
}

RunConfig run_config_from_json(const json& doc, const fs::path& base_dir) {
  require_object(doc, "config");
  check_keys(doc,
             {"method", "manifest", "output_dir", "dataset", "backbone", "gold_range", "seeds",
              "train", "relish", "mlp", "raft"},
             "config");
  RunConfig rc;
  rc.train = train_config_from_json(doc);
  std::string manifest, output = rc.output_dir.string();
  read(doc, "manifest", manifest, "config");
  read(doc, "output_dir", output, "config");
  read(doc, "dataset", rc.dataset, "config");
  read(doc, "backbone", rc.backbone, "config");
  if (!manifest.empty()) {
    rc.manifest = fs::path(manifest).is_absolute() ? fs::path(manifest) : base_dir / manifest;
  }
  rc.output_dir = fs::path(output).is_absolute() ? fs::path(output) : base_dir / output;
  if (const auto it = doc.find("gold_range"); it != doc.end()) {
    std::vector<double> range;
    read(doc, "gold_range", range, "config");
    if (range.size() != 2 || !(range[1] > range[0])) {
      throw ConfigError("gold_range must be [y_min, y_max] with y_max > y_min");
    }
    rc.gold = {range[0], range[1]};
  }
  read(doc, "seeds", rc.seeds, "config");
  if (rc.seeds.empty()) throw ConfigError("seeds must not be empty");
  rc.train.seed = rc.seeds.front();
  rc.train.validate();
  return rc;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return run_config_from_json(doc, path.parent_path());
}

}  // namespace relish
