// SPDX-FileCopyrightText: © 2026 The relish-head Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "relish/harness.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>

#include <json.hpp>

#include "relish/autodiff.hpp"
#include "relish/config.hpp"
#include "relish/decisions.hpp"
#include "relish/error.hpp"
#include "relish/kernels.hpp"
#include "relish/optim.hpp"
#include "relish/random.hpp"

namespace relish {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view method_name(Method method) {
  switch (method) {
    case Method::kRelish: return "relish";
    case Method::kLinear: return "linear";
    case Method::kMlp: return "mlp";
    case Method::kGridLogitRaft: return "grid-logit-raft";
  }
  throw InternalError("unknown method");
}

Method parse_method(std::string_view text) {
  for (const Method m : {Method::kRelish, Method::kLinear, Method::kMlp, Method::kGridLogitRaft}) {
    if (text == method_name(m)) return m;
  }
  throw ConfigError("unknown method '" + std::string(text) +
                    "' (expected relish, linear, mlp or grid-logit-raft)");
}

std::string_view loss_name(LossKind loss) {
  return loss == LossKind::kHuber ? "huber" : "mse";
}

LossKind parse_loss(std::string_view text) {
  if (text == "huber") return LossKind::kHuber;
  if (text == "mse") return LossKind::kMse;
  throw ConfigError("unknown loss '" + std::string(text) + "' (expected huber or mse)");
}

std::string_view stop_reason_name(StopReason reason) {
  return reason == StopReason::kMaxEpochs ? "max_epochs" : "early_stop";
}

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be positive and finite");
  if (micro_batch == 0 || accum_steps == 0) {
    throw ConfigError("micro_batch and accum_steps must be at least 1");
  }
  if (max_epochs == 0) throw ConfigError("max_epochs must be at least 1");
  if (patience == 0) throw ConfigError("patience must be at least 1");
  if (!(warmup_ratio >= 0.0 && warmup_ratio <= 1.0)) {
    throw ConfigError("warmup_ratio must lie in [0, 1]");
  }
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be non-negative");
  RelishConfig probe = relish;
  if (probe.input_dim == 0) probe.input_dim = 1;
  probe.validate();
  if (!(mlp_dropout >= 0.0 && mlp_dropout < 1.0)) {
    throw ConfigError("mlp dropout must lie in [0, 1)");
  }
  if (method == Method::kGridLogitRaft) {
    if (grid.empty()) throw ConfigError("raft grid must not be empty");
    for (const double g : grid) {
      if (!std::isfinite(g)) throw ConfigError("raft grid values must be finite");
    }
  }
}

EarlyStopper::EarlyStopper(std::size_t patience) : patience_(patience) {
  if (patience_ == 0) throw ConfigError("patience must be at least 1");
}

bool EarlyStopper::observe(double val_rmse) {
  ++epoch_;
  improved_ = epoch_ == 1 || val_rmse < best_;
  if (improved_) {
    best_ = val_rmse;
    best_epoch_ = epoch_;
    stale_ = 0;
    return false;
  }
  ++stale_;
  return stale_ >= patience_;
}

TrainConfig resolve_config(TrainConfig config, std::size_t input_dim) {
  if (input_dim == 0) throw DataError("dataset has no hidden-state dimension");
  config.relish.input_dim = input_dim;
  if (config.method == Method::kMlp && config.mlp_hidden == 0) {
    config.mlp_hidden = match_mlp_hidden(input_dim, count_parameters(config.relish));
  }
  config.validate();
  return config;
}

ParamStore<float> init_params(const TrainConfig& c, std::uint64_t seed) {
  const std::size_t d = c.relish.input_dim;
  switch (c.method) {
    case Method::kRelish: return init_relish_params(c.relish, seed);
    case Method::kLinear: return init_linear_params(d, seed);
    case Method::kMlp: return init_mlp_params({d, c.mlp_hidden, c.mlp_dropout}, seed);
    case Method::kGridLogitRaft: return GridLogitModel{d, c.grid}.init_params(seed);
  }
  throw InternalError("unknown method");
}

namespace {

// Standardized prediction for every method except grid-logit-raft, which
// predicts in raw units.
Var build_prediction(Graph<float>& g, const TrainConfig& c, const TokenStates& ex) {
  if (c.method == Method::kRelish) return relish_forward(g, ex.states, ex.mask, c.relish);
  const Var pooled = g.constant(masked_mean_pool(ex.states, std::span(ex.mask)));
  switch (c.method) {
    case Method::kLinear: return linear_head_forward(g, pooled);
    case Method::kMlp: return mlp_head_forward(g, pooled, c.mlp_dropout);
    case Method::kGridLogitRaft: return grid_expectation(g, grid_logits(g, pooled), c.grid);
    case Method::kRelish: break;
  }
  throw InternalError("unknown method");
}

bool raw_units(const TrainConfig& c) { return c.method == Method::kGridLogitRaft; }

Var build_loss(Graph<float>& g, const TrainConfig& c, Var prediction, double target) {
  const auto t = static_cast<float>(target);
  if (raw_units(c) || c.loss == LossKind::kMse) return g.squared_error(prediction, t);
  return g.huber(prediction, t, static_cast<float>(c.relish.huber_delta));
}

std::vector<double> predict_with(const TrainConfig& c, const TargetNormalizer& normalizer,
                                 const ParamStore<float>& params,
                                 std::span<const TokenStates> examples, Execution execution) {
  for (const auto& ex : examples) ex.validate(c.relish.input_dim);
  std::vector<double> out(examples.size());
  std::vector<std::exception_ptr> errors(examples.size());
  auto body = [&](std::size_t i) {
    try {
      Graph<float> g(params);
      const double z = g.scalar(build_prediction(g, c, examples[i]));
      out[i] = raw_units(c) ? z : normalizer.denormalize(z);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (execution == Execution::kParallel) {
    kernels::parallel::for_each_index(examples.size(), body);
  } else {
    kernels::serial::for_each_index(examples.size(), body);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<double> targets_of(std::span<const TokenStates> examples) {
  std::vector<double> y;
  y.reserve(examples.size());
  for (const auto& ex : examples) {
    if (!ex.target) throw DataError("example '" + ex.id + "' has no target");
    y.push_back(*ex.target);
  }
  return y;
}

}  // namespace

TrainResult train(const TrainConfig& config, const Dataset& data) {
  if (data.train.empty() || data.val.empty()) {
    throw DataError("training needs non-empty train and val splits");
  }
  const TrainConfig c = resolve_config(config, data.dim);
  for (const auto* split : {&data.train, &data.val}) {
    for (const auto& ex : *split) ex.validate(c.relish.input_dim);
  }

  const std::vector<double> train_y = targets_of(data.train);
  const std::vector<double> val_y = targets_of(data.val);
  TargetNormalizer normalizer;
  if (raw_units(c)) {
    normalizer = TargetNormalizer{0.0, 1.0, 0.0};
  } else {
    normalizer = TargetNormalizer::fit(train_y);
  }

  ParamStore<float> params = init_params(c, c.seed);
  ParamStore<float> best = params;
  AdamW<float> optimizer(AdamWOptions{0.9, 0.999, 1e-8, c.weight_decay});

  const std::size_t micro_batches =
      (data.train.size() + c.micro_batch - 1) / c.micro_batch;
  const std::size_t steps_per_epoch = (micro_batches + c.accum_steps - 1) / c.accum_steps;
  // The schedule spans the planned run; early stopping only truncates it.
  const LinearWarmupSchedule schedule(c.lr, c.max_epochs * steps_per_epoch, c.warmup_ratio);

  Rng dropout_rng(mix64(c.seed ^ 0x64726f706f7574ull));
  EarlyStopper stopper(c.patience);
  TrainHistory history;
  std::size_t step = 0;

  for (std::size_t epoch = 1; epoch <= c.max_epochs; ++epoch) {
    const std::vector<Batch> batches = make_batches(data.train, c.micro_batch, c.seed, epoch);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    params.zero_grad();
    for (std::size_t group = 0; group * c.accum_steps < batches.size(); ++group) {
      const std::size_t first = group * c.accum_steps;
      const std::size_t last = std::min(batches.size(), first + c.accum_steps);
      std::size_t group_examples = 0;
      for (std::size_t b = first; b < last; ++b) group_examples += batches[b].examples.size();
      const float weight = 1.0f / static_cast<float>(group_examples);
      const std::size_t this_step = step + 1;

      for (std::size_t b = first; b < last; ++b) {
        for (std::size_t k = 0; k < batches[b].examples.size(); ++k) {
          const TokenStates& ex = batches[b].examples[k];
          const double target = raw_units(c) ? batches[b].targets[k]
                                              : normalizer.normalize(batches[b].targets[k]);
          try {
            Graph<float> g(&params, &dropout_rng);
            const Var loss = build_loss(g, c, build_prediction(g, c, ex), target);
            loss_sum += g.scalar(loss);
            g.backward(loss, weight);
          } catch (const EvaluationError& e) {
            throw TrainingError("divergence at epoch " + std::to_string(epoch) + ", step " +
                                std::to_string(this_step) + ": " + e.what());
          }
          ++seen;
        }
      }
      optimizer.step(params, schedule.lr_at(this_step));
      params.zero_grad();
      step = this_step;
      for (const auto& [name, entry] : params.entries()) {
        if (!entry.value.all_finite()) {
          throw TrainingError("parameter '" + name + "' became non-finite at epoch " +
                              std::to_string(epoch) + ", step " + std::to_string(step));
        }
      }
    }

    history.train_loss.push_back(loss_sum / static_cast<double>(seen));
    const std::vector<double> val_pred =
        predict_with(c, normalizer, params, data.val, Execution::kParallel);
    const double val_rmse = rmse(val_pred, val_y);
    if (!std::isfinite(val_rmse)) {
      throw TrainingError("validation RMSE is non-finite after epoch " + std::to_string(epoch));
    }
    history.val_rmse.push_back(val_rmse);
    const bool stop = stopper.observe(val_rmse);
    if (stopper.improved()) best = params;
    if (stop) {
      history.stop = StopReason::kEarlyStop;
      break;
    }
  }
  history.best_epoch = stopper.best_epoch();
  history.steps = step;
  return TrainResult{Model{c, c.relish.input_dim, normalizer, std::move(best)}, history};
}

std::vector<double> predict(const Model& model, std::span<const TokenStates> examples,
                            Execution execution) {
  for (const auto& ex : examples) {
    if (ex.dim() != model.input_dim) {
      throw ShapeError("checkpoint expects d=" + std::to_string(model.input_dim) +
                       " but example '" + ex.id + "' has d=" + std::to_string(ex.dim()));
    }
  }
  return predict_with(model.config, model.normalizer, model.params, examples, execution);
}

RunRecord evaluate(const Model& model, std::span<const TokenStates> examples, GoldRange gold,
                   Execution execution) {
  if (examples.empty()) throw DataError("cannot evaluate an empty split");
  const std::vector<double> preds = predict(model, examples, execution);
  const std::vector<double> golds = targets_of(examples);
  RunRecord r = score_run(preds, golds, gold.lo, gold.hi);
  r.method = std::string(method_name(model.config.method));
  r.seed = model.config.seed;
  return r;
}

namespace {

AblationRow run_cell(TrainConfig config, const Dataset& data, GoldRange gold, std::string label) {
  TrainResult result = train(config, data);
  AblationRow row;
  row.label = std::move(label);
  row.layers = result.model.config.relish.layers;
  row.loss = result.model.config.loss;
  row.parameters = result.model.params.parameter_count();
  row.record = evaluate(result.model, data.test, gold);
  row.record.method = row.label;
  row.history = std::move(result.history);
  return row;
}

}  // namespace

std::vector<AblationRow> ablate_depth(const TrainConfig& base, std::span<const std::size_t> layers,
                                      std::span<const std::uint64_t> seeds, const Dataset& data,
                                      GoldRange gold) {
  if (layers.empty() || seeds.empty()) throw ConfigError("depth ablation needs layers and seeds");
  std::vector<AblationRow> rows;
  for (const std::size_t l : layers) {
    for (const std::uint64_t seed : seeds) {
      TrainConfig c = base;
      c.method = Method::kRelish;
      c.relish.layers = l;
      c.seed = seed;
      rows.push_back(run_cell(c, data, gold,
                              l == 1 ? std::string(kAttentionPoolingLabel)
                                     : "relish-L" + std::to_string(l)));
    }
  }
  return rows;
}

std::vector<AblationRow> ablate_loss(const TrainConfig& base, std::span<const std::uint64_t> seeds,
                                     const Dataset& data, GoldRange gold) {
  if (seeds.empty()) throw ConfigError("loss ablation needs seeds");
  std::vector<AblationRow> rows;
  for (const std::uint64_t seed : seeds) {
    for (const LossKind loss : {LossKind::kHuber, LossKind::kMse}) {
      TrainConfig c = base;
      c.seed = seed;
      c.loss = loss;
      rows.push_back(run_cell(c, data, gold,
                              std::string(method_name(c.method)) + "-" +
                                  std::string(loss_name(loss))));
    }
  }
  return rows;
}

namespace {

std::string cell(const AggregateStat& s) {
  char buf[64];
  if (s.stddev_defined) {
    std::snprintf(buf, sizeof buf, "%.4f ± %.4f", s.mean, s.stddev);
  } else {
    std::snprintf(buf, sizeof buf, "%.4f", s.mean);
  }
  return buf;
}

struct MetricColumn {
  const char* name;
  double RunRecord::*field;
};

constexpr MetricColumn kMetricColumns[] = {
    {"pearson", &RunRecord::pearson},
    {"spearman", &RunRecord::spearman},
    {"nrmse", &RunRecord::nrmse},
    {"rmse", &RunRecord::rmse},
};

std::string pad(std::string s, std::size_t width) {
  // Width counts code points so the ± sign does not skew columns.
  std::size_t visible = 0;
  for (const char ch : s) visible += (static_cast<unsigned char>(ch) & 0xC0) != 0x80;
  if (visible < width) s.append(width - visible, ' ');
  return s;
}

}  // namespace

std::string format_metrics_table(std::span<const RunRecord> records) {
  std::vector<std::string> methods;
  std::map<std::string, std::vector<RunRecord>> by_method;
  for (const auto& r : records) {
    if (!by_method.contains(r.method)) methods.push_back(r.method);
    by_method[r.method].push_back(r);
  }
  constexpr std::size_t kWidth = 20;
  std::string out = pad("metric", 10);
  for (const auto& m : methods) out += pad(m, kWidth);
  out += '\n';
  for (const auto& col : kMetricColumns) {
    out += pad(col.name, 10);
    for (const auto& m : methods) {
      const auto stat = macro_aggregate(by_method[m], [&](const RunRecord& r) {
        return r.*(col.field);
      });
      out += pad(cell(stat), kWidth);
    }
    out += '\n';
  }
  return out;
}

std::string format_depth_table(std::span<const AblationRow> rows) {
  std::vector<std::size_t> depths;
  std::map<std::size_t, std::vector<RunRecord>> by_depth;
  std::map<std::size_t, std::size_t> params;
  std::map<std::size_t, std::string> labels;
  for (const auto& r : rows) {
    labels[r.layers] = r.label;
    if (!by_depth.contains(r.layers)) depths.push_back(r.layers);
    by_depth[r.layers].push_back(r.record);
    params[r.layers] = r.parameters;
  }
  constexpr std::size_t kWidth = 20;
  std::size_t label_width = 8;
  for (const auto& [l, s] : labels) label_width = std::max(label_width, s.size() + 2);
  std::string out = pad("L", 4) + pad("model", label_width) + pad("params", 10);
  for (const auto& col : kMetricColumns) out += pad(col.name, kWidth);
  out += '\n';
  for (const std::size_t l : depths) {
    out += pad(std::to_string(l), 4) + pad(labels[l], label_width) + pad(std::to_string(params[l]), 10);
    for (const auto& col : kMetricColumns) {
      const auto stat = macro_aggregate(by_depth[l], [&](const RunRecord& r) {
        return r.*(col.field);
      });
      out += pad(cell(stat), kWidth);
    }
    out += '\n';
  }
  return out;
}

namespace {

constexpr char kCheckpointMagic[4] = {'R', 'C', 'K', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, std::string_view source)
      : bytes_(bytes), source_(source) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes_[pos_ + static_cast<std::size_t>(i)];
    pos_ += 4;
    return v;
  }
  std::string text(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  [[nodiscard]] bool done() const { return pos_ == bytes_.size(); }
  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError(std::string(source_) + ": " + what);
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) fail("truncated checkpoint");
  }
  std::span<const std::uint8_t> bytes_;
  std::string_view source_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Model& model, std::optional<GoldRange> gold) {
  json header{{"config", train_config_to_json(model.config)},
              {"input_dim", model.input_dim},
              {"normalizer",
               {{"mean", model.normalizer.mean},
                {"stddev", model.normalizer.stddev},
                {"eps", model.normalizer.eps}}}};
  header["gold_range"] = gold ? json{gold->lo, gold->hi} : json(nullptr);
  const std::string text = header.dump();

  std::vector<std::uint8_t> out(std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  put_u32(out, static_cast<std::uint32_t>(model.params.tensor_count()));
  for (const auto& [name, entry] : model.params.entries()) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put_u32(out, static_cast<std::uint32_t>(entry.value.rows()));
    put_u32(out, static_cast<std::uint32_t>(entry.value.cols()));
    for (const float v : entry.value.span()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

Model decode_checkpoint(std::span<const std::uint8_t> bytes, GoldRange* gold,
                        std::string_view source) {
  Reader in(bytes, source);
  if (in.text(4) != std::string_view(kCheckpointMagic, 4)) in.fail("bad checkpoint magic");
  const std::uint32_t version = in.u32();
  if (version != kCheckpointVersion) {
    in.fail("unsupported checkpoint version " + std::to_string(version));
  }
  json header;
  try {
    header = json::parse(in.text(in.u32()));
  } catch (const json::exception& e) {
    in.fail(std::string("bad checkpoint header: ") + e.what());
  }

  Model model;
  try {
    model.config = train_config_from_json(header.at("config"));
    model.config.seed = header.at("config").at("train").at("seed").get<std::uint64_t>();
    model.input_dim = header.at("input_dim").get<std::size_t>();
    const json& norm = header.at("normalizer");
    model.normalizer = TargetNormalizer{norm.at("mean").get<double>(),
                                        norm.at("stddev").get<double>(),
                                        norm.at("eps").get<double>()};
    if (gold && !header.at("gold_range").is_null()) {
      *gold = {header["gold_range"][0].get<double>(), header["gold_range"][1].get<double>()};
    }
  } catch (const json::exception& e) {
    in.fail(std::string("bad checkpoint header: ") + e.what());
  }
  model.config = resolve_config(model.config, model.input_dim);

  // Shapes must match what the echoed config would build.
  const ParamStore<float> skeleton = init_params(model.config, 0);
  const std::uint32_t count = in.u32();
  if (count != skeleton.tensor_count()) {
    in.fail("checkpoint has " + std::to_string(count) + " tensors, config expects " +
            std::to_string(skeleton.tensor_count()));
  }
  for (std::uint32_t t = 0; t < count; ++t) {
    const std::string name = in.text(in.u32());
    const std::uint32_t rows = in.u32();
    const std::uint32_t cols = in.u32();
    if (!skeleton.contains(name)) in.fail("unexpected tensor '" + name + "'");
    const Tensor2f& like = skeleton.value(name);
    if (rows != like.rows() || cols != like.cols()) {
      in.fail("tensor '" + name + "' is " + std::to_string(rows) + "x" + std::to_string(cols) +
              ", expected " + shape_string(like));
    }
    Tensor2f value(rows, cols);
    for (std::size_t i = 0; i < value.size(); ++i) value[i] = std::bit_cast<float>(in.u32());
    if (!value.all_finite()) in.fail("tensor '" + name + "' has non-finite values");
    model.params.add(name, std::move(value));
  }
  if (!in.done()) in.fail("trailing bytes after the last tensor");
  return model;
}

void save_checkpoint(const fs::path& path, const Model& model, std::optional<GoldRange> gold) {
  const std::vector<std::uint8_t> bytes = encode_checkpoint(model, gold);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

Model load_checkpoint(const fs::path& path, GoldRange* gold) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes, gold, path.string());
}

}  // namespace relish
