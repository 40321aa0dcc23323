// SPDX-FileCopyrightText: © 2026 The relish-head Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "relish/relish_head.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "relish/error.hpp"
#include "relish/random.hpp"

namespace relish {

void RelishConfig::validate() const {
  if (input_dim == 0) throw ConfigError("input_dim must be positive");
  if (head_dim == 0) throw ConfigError("head_dim must be positive");
  if (heads == 0 || head_dim % heads != 0) {
    throw ConfigError("head_dim " + std::to_string(head_dim) + " is not divisible by " +
                      std::to_string(heads) + " heads");
  }
  if (layers == 0) throw ConfigError("layers must be at least 1");
  if (ffn_hidden == 0) throw ConfigError("ffn_hidden must be at least 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (!(huber_delta > 0.0)) throw ConfigError("huber_delta must be positive");
}

void TokenStates::validate(std::size_t expected_dim) const {
  if (states.rows() == 0 || states.cols() == 0) {
    throw ShapeError("example '" + id + "' has empty hidden states");
  }
  if (mask.size() != states.rows()) {
    throw ShapeError("example '" + id + "' mask length " + std::to_string(mask.size()) +
                     " does not match " + std::to_string(states.rows()) + " tokens");
  }
  if (expected_dim != 0 && states.cols() != expected_dim) {
    throw ShapeError("example '" + id + "' has d=" + std::to_string(states.cols()) +
                     ", expected d=" + std::to_string(expected_dim));
  }
  if (std::none_of(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; })) {
    throw EmptySupportError("example '" + id + "' has no unmasked token");
  }
}

TargetNormalizer TargetNormalizer::fit(std::span<const double> train_targets, double eps) {
  if (train_targets.empty()) throw DataError("cannot fit normalizer on an empty target list");
  if (!(eps > 0.0)) throw DataError("normalizer eps must be positive");
  const double n = static_cast<double>(train_targets.size());
  const double mean = std::accumulate(train_targets.begin(), train_targets.end(), 0.0) / n;
  double ss = 0.0;
  for (const double y : train_targets) ss += (y - mean) * (y - mean);
  return TargetNormalizer{mean, std::sqrt(ss / n), eps};
}

std::size_t count_parameters(const RelishConfig& config, bool with_projection) {
  const std::size_t d = config.input_dim;
  const std::size_t h = config.head_dim;
  const std::size_t f = config.ffn_hidden;
  const std::size_t projection = with_projection ? d * h + h : 0;
  const std::size_t attention = 4 * (h * h + h);
  const std::size_t ffn = (h * f + f) + (f * h + h);
  const std::size_t norms = 4 * h;
  return projection + h + config.layers * (attention + ffn + norms) + (h + 1);
}

namespace relish_names {
std::string block(std::size_t index, const char* leaf) {
  return "block" + std::to_string(index) + "." + leaf;
}
}  // namespace relish_names

namespace {

struct Shape {
  std::string name;
  std::size_t rows;
  std::size_t cols;
  enum class Init { weight, zero, one, latent } init;
  std::size_t fan_in = 0;
};

std::vector<Shape> relish_layout(const RelishConfig& c) {
  using namespace relish_names;
  using I = Shape::Init;
  const std::size_t h = c.head_dim, f = c.ffn_hidden;
  std::vector<Shape> out{
      {kProjWeight, c.input_dim, h, I::weight, c.input_dim},
      {kProjBias, 1, h, I::zero},
      {kLatent, 1, h, I::latent},
      {kOutWeight, 1, h, I::weight, h},
      {kOutBias, 1, 1, I::zero},
  };
  for (std::size_t b = 0; b < c.layers; ++b) {
    for (const char* proj : {"attn.q", "attn.k", "attn.v", "attn.out"}) {
      out.push_back({block(b, proj) + ".weight", h, h, I::weight, h});
      out.push_back({block(b, proj) + ".bias", 1, h, I::zero});
    }
    out.push_back({block(b, "ffn.fc1.weight"), h, f, I::weight, h});
    out.push_back({block(b, "ffn.fc1.bias"), 1, f, I::zero});
    out.push_back({block(b, "ffn.fc2.weight"), f, h, I::weight, f});
    out.push_back({block(b, "ffn.fc2.bias"), 1, h, I::zero});
    for (const char* ln : {"ln1", "ln2"}) {
      out.push_back({block(b, ln) + std::string(".gamma"), 1, h, I::one});
      out.push_back({block(b, ln) + std::string(".beta"), 1, h, I::zero});
    }
  }
  std::sort(out.begin(), out.end(), [](const Shape& a, const Shape& b) { return a.name < b.name; });
  return out;
}

}  // namespace

ParamStore<float> init_relish_params(const RelishConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  ParamStore<float> store;
  for (const Shape& s : relish_layout(config)) {
    Tensor2f t(s.rows, s.cols);
    switch (s.init) {
      case Shape::Init::weight: {
        const double bound = std::sqrt(1.0 / static_cast<double>(s.fan_in));
        for (std::size_t i = 0; i < t.size(); ++i) {
          t[i] = static_cast<float>(rng.uniform(-bound, bound));
        }
        break;
      }
      case Shape::Init::latent:
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(rng.uniform(-0.1, 0.1));
        break;
      case Shape::Init::one:
        t.fill(1.0f);
        break;
      case Shape::Init::zero:
        break;
    }
    store.add(s.name, std::move(t));
  }
  return store;
}

template <typename T>
Var project_tokens(Graph<T>& graph, Var states) {
  using namespace relish_names;
  return graph.add_row(graph.matmul(states, graph.param(kProjWeight)), graph.param(kProjBias));
}

template <typename T>
Var refine_step(Graph<T>& graph, Var latent, Var memory, std::span<const std::uint8_t> mask,
                std::size_t index, const RelishConfig& config) {
  using relish_names::block;
  auto affine = [&](Var x, const std::string& prefix) {
    return graph.add_row(graph.matmul(x, graph.param(prefix + ".weight")),
                         graph.param(prefix + ".bias"));
  };
  const T rate = static_cast<T>(config.dropout);

  const Var query = affine(latent, block(index, "attn.q"));
  const Var keys = affine(memory, block(index, "attn.k"));
  const Var values = affine(memory, block(index, "attn.v"));
  const Var heads = graph.attention(query, keys, values, mask, config.heads);
  const Var attended = graph.dropout(affine(heads, block(index, "attn.out")), rate);
  const Var mid = graph.layer_norm(graph.add(latent, attended), graph.param(block(index, "ln1.gamma")),
                                   graph.param(block(index, "ln1.beta")));

  const Var hidden = graph.dropout(graph.gelu(affine(mid, block(index, "ffn.fc1"))), rate);
  const Var ffn = affine(hidden, block(index, "ffn.fc2"));
  return graph.layer_norm(graph.add(mid, ffn), graph.param(block(index, "ln2.gamma")),
                          graph.param(block(index, "ln2.beta")));
}

template <typename T>
Var relish_forward(Graph<T>& graph, const Tensor2<T>& states, std::span<const std::uint8_t> mask,
                   const RelishConfig& config) {
  using namespace relish_names;
  if (states.cols() != config.input_dim) {
    throw ShapeError("hidden states have d=" + std::to_string(states.cols()) +
                     " but the head expects d=" + std::to_string(config.input_dim));
  }
  if (mask.size() != states.rows()) {
    throw ShapeError("mask length " + std::to_string(mask.size()) + " for " +
                     std::to_string(states.rows()) + " tokens");
  }
  const Var memory = project_tokens(graph, graph.constant(states));
  Var latent = graph.param(kLatent);
  for (std::size_t b = 0; b < config.layers; ++b) {
    latent = refine_step(graph, latent, memory, mask, b, config);
  }
  return graph.add_row(graph.matmul_nt(latent, graph.param(kOutWeight)), graph.param(kOutBias));
}

template <typename T>
T relish_predict(const ParamStore<T>& params, const Tensor2<T>& states,
                 std::span<const std::uint8_t> mask, const RelishConfig& config) {
  Graph<T> graph(params);
  return graph.scalar(relish_forward(graph, states, mask, config));
}

#define RELISH_INSTANTIATE(T)                                                                   \
  template Var project_tokens<T>(Graph<T>&, Var);                                               \
  template Var refine_step<T>(Graph<T>&, Var, Var, std::span<const std::uint8_t>, std::size_t,  \
                              const RelishConfig&);                                             \
  template Var relish_forward<T>(Graph<T>&, const Tensor2<T>&, std::span<const std::uint8_t>,   \
                                 const RelishConfig&);                                          \
  template T relish_predict<T>(const ParamStore<T>&, const Tensor2<T>&,                         \
                               std::span<const std::uint8_t>, const RelishConfig&);

RELISH_INSTANTIATE(float)
RELISH_INSTANTIATE(double)

#undef RELISH_INSTANTIATE

}  // namespace relish
