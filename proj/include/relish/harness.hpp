// SPDX-FileCopyrightText: © 2026 The relish-head Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "relish/data.hpp"
#include "relish/heads.hpp"
#include "relish/metrics.hpp"
#include "relish/param_store.hpp"
#include "relish/relish_head.hpp"

namespace relish {

enum class Method { kRelish, kLinear, kMlp, kGridLogitRaft };
std::string_view method_name(Method method);
Method parse_method(std::string_view text);

enum class LossKind { kHuber, kMse };
std::string_view loss_name(LossKind loss);
LossKind parse_loss(std::string_view text);

inline const std::vector<std::uint64_t> kDefaultSeeds = {42, 1234, 2026};

struct TrainConfig {
  Method method = Method::kRelish;
  double lr = 1e-4;
  std::size_t micro_batch = 32;
  std::size_t accum_steps = 1;
  std::size_t max_epochs = 10;
  std::size_t patience = 2;
  double warmup_ratio = 0.1;
  double weight_decay = 0.01;
  LossKind loss = LossKind::kHuber;
  std::uint64_t seed = 42;

  RelishConfig relish;         // input_dim is taken from the data
  std::size_t mlp_hidden = 0;  // 0: match the RELISH parameter count
  double mlp_dropout = 0.1;
  std::vector<double> grid = {0, 1, 2, 3, 4, 5};  // grid-logit-raft candidates

  [[nodiscard]] std::size_t effective_batch() const { return micro_batch * accum_steps; }
  /// Throws ConfigError on violated invariants.
  void validate() const;
};

struct GoldRange {
  double lo = 0.0;
  double hi = 5.0;
};

enum class StopReason { kMaxEpochs, kEarlyStop };
std::string_view stop_reason_name(StopReason reason);

struct TrainHistory {
  std::vector<double> train_loss;  // mean per-example loss per epoch
  std::vector<double> val_rmse;    // raw target units
  std::size_t best_epoch = 0;      // 1-based
  StopReason stop = StopReason::kMaxEpochs;
  std::size_t steps = 0;
};

/// Validation-RMSE early stopping. `observe` returns true when training should stop.
class EarlyStopper {
 public:
  explicit EarlyStopper(std::size_t patience);
  bool observe(double val_rmse);
  [[nodiscard]] std::size_t best_epoch() const noexcept { return best_epoch_; }
  [[nodiscard]] double best_value() const noexcept { return best_; }
  /// True when the most recent observation became the new best.
  [[nodiscard]] bool improved() const noexcept { return improved_; }

 private:
  std::size_t patience_;
  std::size_t epoch_ = 0;
  std::size_t best_epoch_ = 0;
  std::size_t stale_ = 0;
  double best_ = 0.0;
  bool improved_ = false;
};

/// A trained predictor: everything needed to map hidden states to raw-unit scores.
struct Model {
  TrainConfig config;  // relish.input_dim / mlp_hidden resolved
  std::size_t input_dim = 0;
  TargetNormalizer normalizer;
  ParamStore<float> params;
};

struct TrainResult {
  Model model;
  TrainHistory history;
};

/// Resolves data-dependent fields (input_dim, matched MLP width).
TrainConfig resolve_config(TrainConfig config, std::size_t input_dim);

/// Fresh parameters for the configured method.
ParamStore<float> init_params(const TrainConfig& resolved, std::uint64_t seed);

/// Trains on `data.train`, early-stops on `data.val`, returns the best epoch's model.
TrainResult train(const TrainConfig& config, const Dataset& data);

enum class Execution { kSerial, kParallel };

/// Raw-unit predictions, one per example, in input order.
std::vector<double> predict(const Model& model, std::span<const TokenStates> examples,
                            Execution execution = Execution::kParallel);

/// Scores predictions against the examples' targets. `dataset`/`backbone`
/// label the record.
RunRecord evaluate(const Model& model, std::span<const TokenStates> examples, GoldRange gold,
                   Execution execution = Execution::kParallel);

struct AblationRow {
  std::string label;
  std::size_t layers = 0;
  LossKind loss = LossKind::kHuber;
  std::size_t parameters = 0;
  RunRecord record;
  TrainHistory history;
};

inline constexpr std::string_view kAttentionPoolingLabel = "attention-pooling baseline";

/// One run per (L, seed); records carry test-split metrics.
std::vector<AblationRow> ablate_depth(const TrainConfig& base, std::span<const std::size_t> layers,
                                      std::span<const std::uint64_t> seeds, const Dataset& data,
                                      GoldRange gold);

/// Huber and MSE runs per seed, everything else identical.
std::vector<AblationRow> ablate_loss(const TrainConfig& base, std::span<const std::uint64_t> seeds,
                                     const Dataset& data, GoldRange gold);

/// Rows = metrics, columns = methods; cells are mean ± sample std over seeds.
std::string format_metrics_table(std::span<const RunRecord> records);

/// Rows = L, columns = metrics.
std::string format_depth_table(std::span<const AblationRow> rows);

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     std::optional<GoldRange> gold = std::nullopt);
Model load_checkpoint(const std::filesystem::path& path, GoldRange* gold = nullptr);

std::vector<std::uint8_t> encode_checkpoint(const Model& model, std::optional<GoldRange> gold);
Model decode_checkpoint(std::span<const std::uint8_t> bytes, GoldRange* gold = nullptr,
                        std::string_view source = "<memory>");

}  // namespace relish
