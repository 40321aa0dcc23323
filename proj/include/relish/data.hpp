// SPDX-FileCopyrightText: © 2026 The relish-head Authors
//
// SPDX-License-Identifier: Apache-2.0

// Hidden-state files, manifests, synthetic backbones, planted tasks and
// padded batching.
//
// HSF layout (all integers and floats little-endian):
//   offset 0   "HSF1"
//   offset 4   u32 version = 1
//   offset 8   u32 S (rows, ≥ 1)
//   offset 12  u32 d (cols, ≥ 1)
//   offset 16  S·d float32, row-major
// File size is exactly 16 + 4·S·d.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "relish/relish_head.hpp"
#include "relish/tensor.hpp"

namespace relish {

inline constexpr std::array<char, 4> kHsfMagic = {'H', 'S', 'F', '1'};
inline constexpr std::uint32_t kHsfVersion = 1;
inline constexpr std::size_t kHsfHeaderBytes = 16;

struct HsfHeader {
  std::uint32_t version = kHsfVersion;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
};

/// Serializes a matrix to HSF bytes. Throws RangeError on non-finite values.
std::vector<std::uint8_t> encode_hsf(const Tensor2f& states);
/// Parses HSF bytes; `source` names the origin in error messages.
Tensor2f decode_hsf(std::span<const std::uint8_t> bytes, std::string_view source = "<memory>");
/// Checks header, size formula and payload finiteness without keeping the payload.
HsfHeader inspect_hsf(std::span<const std::uint8_t> bytes, std::string_view source = "<memory>");

void write_hsf(const std::filesystem::path& path, const Tensor2f& states);
Tensor2f read_hsf(const std::filesystem::path& path);
HsfHeader validate_hsf(const std::filesystem::path& path);

enum class Split { kTrain, kVal, kTest };
std::string_view split_name(Split split);
Split parse_split(std::string_view text);

struct ManifestRecord {
  std::string id;
  std::string path;  // relative to the manifest's directory
  double target = 0.0;
  Split split = Split::kTrain;
  std::size_t line = 0;
};

struct Manifest {
  std::filesystem::path base_dir;
  std::vector<ManifestRecord> records;
  std::size_t dim = 0;  // 0 until resolved

  [[nodiscard]] std::map<Split, std::size_t> split_counts() const;
  [[nodiscard]] std::filesystem::path resolve(const ManifestRecord& record) const {
    return base_dir / record.path;
  }
};

/// One record per line: id, relative HSF path, target, split, separated by
/// tabs or spaces. Blank lines and lines starting with '#' are skipped.
Manifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir,
                        std::string_view source = "<memory>");

/// Parses the file and, with `resolve`, checks that every HSF exists and that
/// all of them share one d.
Manifest load_manifest(const std::filesystem::path& path, bool resolve = true);

std::string format_manifest(std::span<const ManifestRecord> records);

/// In-memory examples grouped by split.
struct Dataset {
  std::vector<TokenStates> train;
  std::vector<TokenStates> val;
  std::vector<TokenStates> test;
  std::size_t dim = 0;

  [[nodiscard]] const std::vector<TokenStates>& split(Split s) const;
  [[nodiscard]] std::size_t size() const { return train.size() + val.size() + test.size(); }
};

/// Reads every HSF referenced by the manifest (all-ones masks).
Dataset load_dataset(const Manifest& manifest);

/// Writes `<dir>/manifest.tsv` and `<dir>/hsf/<id>.hsf`. Refuses to overwrite
/// an existing manifest.
std::filesystem::path write_dataset(const Dataset& dataset, const std::filesystem::path& dir);

/// Deterministic stand-in for a frozen backbone. See README for the exact
/// mixing and Box–Muller order.
Tensor2f synth_backbone(std::span<const std::uint64_t> token_ids, std::uint64_t seed,
                        std::size_t dim);

/// Unnormalized Gaussian embedding of one token id.
std::vector<double> synth_token_embedding(std::uint64_t token_id, std::uint64_t seed,
                                          std::size_t dim);

/// Byte-level token ids for a string (trivial tokenizer for synth runs).
std::vector<std::uint64_t> byte_tokens(std::string_view text);

struct PlantedSpec {
  std::size_t examples = 2000;
  std::size_t tokens = 64;
  std::size_t dim = 64;
  double amplitude = 4.0;  // needle strength along the key direction
  double target_lo = 0.0;
  double target_hi = 5.0;
  double noise_std = 1.0;
  double train_fraction = 0.8;
  double val_fraction = 0.1;

  void validate() const;
};

struct PlantedDirections {
  std::vector<double> key;
  std::vector<double> value;
};

/// Orthonormal key/value directions drawn from `seed`.
PlantedDirections planted_directions(std::size_t dim, std::uint64_t seed);

/// Each example: Gaussian noise rows; one uniformly chosen needle row gets
/// amplitude·key + y·value with y ~ U[lo, hi]; target = y.
Dataset planted_task(const PlantedSpec& spec, std::uint64_t seed);

/// Split sizes used by the planted generators: round(n·train), round(n·val), rest.
std::array<std::size_t, 3> split_sizes(std::size_t n, double train_fraction,
                                       double val_fraction);

struct OrdinalSpec {
  std::size_t examples = 600;
  std::size_t dim = 16;
  std::size_t levels = 6;  // targets 0..levels-1
  double noise_std = 0.5;
  double train_fraction = 0.8;
  double val_fraction = 0.1;

  void validate() const;
};

/// Single-token examples whose state is a per-level prototype plus noise;
/// targets are integer levels, so every conditional mean lies on the grid hull.
Dataset planted_ordinal_task(const OrdinalSpec& spec, std::uint64_t seed);

struct Batch {
  std::vector<std::size_t> indices;  // positions in the split
  std::vector<TokenStates> examples;  // padded to max_length
  std::vector<double> targets;
  std::size_t max_length = 0;
};

/// Shuffled, padded batches for one epoch. The order depends only on
/// (seed, epoch); the last partial batch is kept.
std::vector<Batch> make_batches(std::span<const TokenStates> split, std::size_t batch_size,
                                std::uint64_t seed, std::uint64_t epoch);

/// The permutation make_batches uses.
std::vector<std::size_t> epoch_order(std::size_t count, std::uint64_t seed, std::uint64_t epoch);

/// Appends zero rows with mask 0 up to `length`.
TokenStates pad_to(const TokenStates& example, std::size_t length);

}  // namespace relish
