// SPDX-FileCopyrightText: © 2026 The relish-head Authors
//
// SPDX-License-Identifier: Apache-2.0

// JSON run configuration. Every level rejects unknown keys; omitted keys keep
// the TrainConfig/RelishConfig defaults.
//
//   {
//     "method": "relish",
//     "manifest": "data/manifest.tsv",
//     "output_dir": "runs/relish",
//     "dataset": "planted", "backbone": "synthetic",
//     "gold_range": [0, 5],
//     "seeds": [42, 1234, 2026],
//     "train":  {"lr": 1e-4, "micro_batch": 32, "accum_steps": 1, "max_epochs": 10,
//                "patience": 2, "warmup_ratio": 0.1, "weight_decay": 0.01, "loss": "huber"},
//     "relish": {"head_dim": 256, "heads": 8, "layers": 3, "ffn_hidden": 1024,
//                "dropout": 0.1, "huber_delta": 1.0},
//     "mlp":    {"hidden": 0, "dropout": 0.1},
//     "raft":   {"grid": [0, 1, 2, 3, 4, 5]}
//   }

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "relish/harness.hpp"

namespace relish {

struct RunConfig {
  TrainConfig train;
  std::filesystem::path manifest;  // empty when the command does not need data
  std::filesystem::path output_dir = "runs";
  std::string dataset = "dataset";
  std::string backbone = "backbone";
  GoldRange gold;
  std::vector<std::uint64_t> seeds = kDefaultSeeds;
};

nlohmann::json train_config_to_json(const TrainConfig& config);
/// Reads the method/train/relish/mlp/raft keys of a run document.
TrainConfig train_config_from_json(const nlohmann::json& doc);

nlohmann::json run_config_to_json(const RunConfig& config);
/// Relative paths are resolved against `base_dir`.
RunConfig run_config_from_json(const nlohmann::json& doc,
                               const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace relish
