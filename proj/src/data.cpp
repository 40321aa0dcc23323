// SPDX-FileCopyrightText: © 2026 The relish-head Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "relish/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "relish/decisions.hpp"
#include "relish/error.hpp"
#include "relish/random.hpp"

namespace relish {

namespace fs = std::filesystem;

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | bytes[offset + static_cast<std::size_t>(i)];
  return v;
}

std::string src(std::string_view source) { return std::string(source) + ": "; }

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for " + path.string());
  return bytes;
}

void write_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

std::vector<std::uint8_t> encode_hsf(const Tensor2f& states) {
  if (states.rows() == 0 || states.cols() == 0) {
    throw ShapeError("HSF needs S >= 1 and d >= 1, got " + shape_string(states));
  }
  if (states.rows() > UINT32_MAX || states.cols() > UINT32_MAX) {
    throw ShapeError("HSF dimensions exceed 32 bits: " + shape_string(states));
  }
  if (!states.all_finite()) throw RangeError("HSF payload must be finite");
  std::vector<std::uint8_t> out;
  out.reserve(kHsfHeaderBytes + 4 * states.size());
  out.insert(out.end(), kHsfMagic.begin(), kHsfMagic.end());
  put_u32(out, kHsfVersion);
  put_u32(out, static_cast<std::uint32_t>(states.rows()));
  put_u32(out, static_cast<std::uint32_t>(states.cols()));
  for (const float v : states.span()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

HsfHeader inspect_hsf(std::span<const std::uint8_t> bytes, std::string_view source) {
  if (bytes.size() < kHsfHeaderBytes) {
    throw FormatError(src(source) + "truncated header (" + std::to_string(bytes.size()) +
                      " bytes)");
  }
  if (!std::equal(kHsfMagic.begin(), kHsfMagic.end(), bytes.begin())) {
    throw FormatError(src(source) + "bad magic '" +
                      std::string(reinterpret_cast<const char*>(bytes.data()), 4) + "'");
  }
  HsfHeader h;
  h.version = get_u32(bytes, 4);
  h.rows = get_u32(bytes, 8);
  h.cols = get_u32(bytes, 12);
  if (h.version != kHsfVersion) {
    throw FormatError(src(source) + "unsupported version " + std::to_string(h.version));
  }
  if (h.rows == 0 || h.cols == 0) {
    throw FormatError(src(source) + "S and d must be positive, got S=" + std::to_string(h.rows) +
                      " d=" + std::to_string(h.cols));
  }
  const std::uint64_t expected =
      kHsfHeaderBytes + 4ull * static_cast<std::uint64_t>(h.rows) * h.cols;
  if (bytes.size() != expected) {
    throw FormatError(src(source) + "size " + std::to_string(bytes.size()) + " bytes, expected " +
                      std::to_string(expected) + " for S=" + std::to_string(h.rows) +
                      " d=" + std::to_string(h.cols));
  }
  for (std::size_t off = kHsfHeaderBytes; off < bytes.size(); off += 4) {
    if (!std::isfinite(std::bit_cast<float>(get_u32(bytes, off)))) {
      throw FormatError(src(source) + "non-finite value at element " +
                        std::to_string((off - kHsfHeaderBytes) / 4));
    }
  }
  return h;
}

Tensor2f decode_hsf(std::span<const std::uint8_t> bytes, std::string_view source) {
  const HsfHeader h = inspect_hsf(bytes, source);
  Tensor2f out(h.rows, h.cols);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::bit_cast<float>(get_u32(bytes, kHsfHeaderBytes + 4 * i));
  }
  return out;
}

void write_hsf(const fs::path& path, const Tensor2f& states) {
  write_bytes(path, encode_hsf(states));
}

Tensor2f read_hsf(const fs::path& path) { return decode_hsf(read_bytes(path), path.string()); }

HsfHeader validate_hsf(const fs::path& path) {
  return inspect_hsf(read_bytes(path), path.string());
}

std::string_view split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  throw InternalError("unknown split");
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "val") return Split::kVal;
  if (text == "test") return Split::kTest;
  throw ManifestError("unknown split '" + std::string(text) + "' (expected train, val or test)");
}

std::map<Split, std::size_t> Manifest::split_counts() const {
  std::map<Split, std::size_t> counts{{Split::kTrain, 0}, {Split::kVal, 0}, {Split::kTest, 0}};
  for (const auto& r : records) ++counts[r.split];
  return counts;
}

Manifest parse_manifest(std::string_view text, const fs::path& base_dir, std::string_view source) {
  Manifest m;
  m.base_dir = base_dir;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    std::vector<std::string> parts;
    for (std::string f; fields >> f;) parts.push_back(f);
    const std::string where = std::string(source) + " line " + std::to_string(line_no) + ": ";
    if (parts.size() != 4) {
      throw ManifestError(where + "expected 4 fields (id, path, target, split), got " +
                          std::to_string(parts.size()));
    }
    ManifestRecord r;
    r.id = parts[0];
    r.path = parts[1];
    r.line = line_no;
    const auto target = try_parse_numeric(parts[2]);
    if (!target) throw ManifestError(where + "target '" + parts[2] + "' is not a number");
    r.target = *target;
    try {
      r.split = parse_split(parts[3]);
    } catch (const ManifestError& e) {
      throw ManifestError(where + e.what());
    }
    if (!seen.insert(r.id).second) throw ManifestError(where + "duplicate id '" + r.id + "'");
    m.records.push_back(std::move(r));
  }
  return m;
}

Manifest load_manifest(const fs::path& path, bool resolve) {
  const std::vector<std::uint8_t> bytes = read_bytes(path);
  Manifest m = parse_manifest(std::string_view(reinterpret_cast<const char*>(bytes.data()),
                                               bytes.size()),
                              path.parent_path(), path.string());
  if (!resolve) return m;
  for (const auto& r : m.records) {
    const fs::path p = m.resolve(r);
    if (!fs::is_regular_file(p)) {
      throw IoError(path.string() + " line " + std::to_string(r.line) + ": HSF file not found: " +
                    p.string());
    }
    const HsfHeader h = validate_hsf(p);
    if (m.dim == 0) {
      m.dim = h.cols;
    } else if (h.cols != m.dim) {
      throw ShapeError(p.string() + " has d=" + std::to_string(h.cols) +
                          " but earlier files have d=" + std::to_string(m.dim));
    }
  }
  return m;
}

std::string format_manifest(std::span<const ManifestRecord> records) {
  std::string out = "# id\tpath\ttarget\tsplit\n";
  for (const auto& r : records) {
    out += r.id + '\t' + r.path + '\t' + format_numeric(r.target) + '\t' +
           std::string(split_name(r.split)) + '\n';
  }
  return out;
}

const std::vector<TokenStates>& Dataset::split(Split s) const {
  switch (s) {
    case Split::kTrain: return train;
    case Split::kVal: return val;
    case Split::kTest: return test;
  }
  throw InternalError("unknown split");
}

Dataset load_dataset(const Manifest& manifest) {
  Dataset ds;
  for (const auto& r : manifest.records) {
    TokenStates ex;
    ex.states = read_hsf(manifest.resolve(r));
    ex.mask.assign(ex.states.rows(), 1);
    ex.id = r.id;
    ex.target = r.target;
    if (ds.dim == 0) ds.dim = ex.dim();
    if (ex.dim() != ds.dim) {
      throw ShapeError("record '" + r.id + "' has d=" + std::to_string(ex.dim()) +
                          ", expected " + std::to_string(ds.dim));
    }
    switch (r.split) {
      case Split::kTrain: ds.train.push_back(std::move(ex)); break;
      case Split::kVal: ds.val.push_back(std::move(ex)); break;
      case Split::kTest: ds.test.push_back(std::move(ex)); break;
    }
  }
  return ds;
}

fs::path write_dataset(const Dataset& dataset, const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.tsv";
  if (fs::exists(manifest_path)) {
    throw IoError("refusing to overwrite existing manifest " + manifest_path.string());
  }
  fs::create_directories(dir / "hsf");
  std::vector<ManifestRecord> records;
  for (const Split s : {Split::kTrain, Split::kVal, Split::kTest}) {
    for (const auto& ex : dataset.split(s)) {
      if (!ex.target) throw DataError("example '" + ex.id + "' has no target");
      ManifestRecord r;
      r.id = ex.id;
      r.path = "hsf/" + ex.id + ".hsf";
      r.target = *ex.target;
      r.split = s;
      write_hsf(dir / r.path, ex.states);
      records.push_back(std::move(r));
    }
  }
  const std::string text = format_manifest(records);
  write_bytes(manifest_path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                                       text.size()));
  return manifest_path;
}

std::vector<double> synth_token_embedding(std::uint64_t token_id, std::uint64_t seed,
                                          std::size_t dim) {
  const std::uint64_t base = mix64(mix64(token_id) ^ seed);
  std::vector<double> e(dim);
  for (std::size_t k = 0; 2 * k < dim; ++k) {
    const double u1 = bits_to_unit(mix64(base + 2 * k));
    const double u2 = bits_to_unit(mix64(base + 2 * k + 1));
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    e[2 * k] = radius * std::cos(angle);
    if (2 * k + 1 < dim) e[2 * k + 1] = radius * std::sin(angle);
  }
  return e;
}

Tensor2f synth_backbone(std::span<const std::uint64_t> token_ids, std::uint64_t seed,
                        std::size_t dim) {
  if (token_ids.empty() || dim == 0) throw ShapeError("synth_backbone needs S >= 1 and d >= 1");
  Tensor2f out(token_ids.size(), dim);
  std::vector<double> prev;
  const double target_norm = std::sqrt(static_cast<double>(dim));
  for (std::size_t t = 0; t < token_ids.size(); ++t) {
    std::vector<double> cur = synth_token_embedding(token_ids[t], seed, dim);
    std::vector<double> row = cur;
    if (t > 0) {
      for (std::size_t c = 0; c < dim; ++c) row[c] += 0.5 * prev[c];
    }
    double ss = 0.0;
    for (const double v : row) ss += v * v;
    const double scale = ss > 0.0 ? target_norm / std::sqrt(ss) : 0.0;
    for (std::size_t c = 0; c < dim; ++c) out(t, c) = static_cast<float>(row[c] * scale);
    prev = std::move(cur);
  }
  return out;
}

std::vector<std::uint64_t> byte_tokens(std::string_view text) {
  std::vector<std::uint64_t> ids;
  ids.reserve(text.size());
  for (const char c : text) ids.push_back(static_cast<unsigned char>(c));
  return ids;
}

void PlantedSpec::validate() const {
  if (examples == 0 || tokens == 0) throw ConfigError("planted task needs examples and tokens");
  if (dim < 2) throw ConfigError("planted task needs d >= 2 for orthogonal directions");
  if (!(target_hi > target_lo)) throw ConfigError("planted target range is empty");
  if (!(noise_std >= 0.0) || !std::isfinite(amplitude)) {
    throw ConfigError("planted noise must be >= 0 and amplitude finite");
  }
  if (!(train_fraction > 0.0) || !(val_fraction >= 0.0) || train_fraction + val_fraction > 1.0) {
    throw ConfigError("planted split fractions must be positive and sum to at most 1");
  }
}

void OrdinalSpec::validate() const {
  if (examples == 0 || dim == 0 || levels < 2) {
    throw ConfigError("ordinal task needs examples, d >= 1 and at least 2 levels");
  }
  if (!(noise_std >= 0.0)) throw ConfigError("ordinal noise must be >= 0");
  if (!(train_fraction > 0.0) || !(val_fraction >= 0.0) || train_fraction + val_fraction > 1.0) {
    throw ConfigError("ordinal split fractions must be positive and sum to at most 1");
  }
}

std::array<std::size_t, 3> split_sizes(std::size_t n, double train_fraction,
                                       double val_fraction) {
  const auto round_count = [n](double f) {
    return std::min(n, static_cast<std::size_t>(std::llround(static_cast<double>(n) * f)));
  };
  const std::size_t train = round_count(train_fraction);
  const std::size_t val = std::min(n - train, round_count(val_fraction));
  return {train, val, n - train - val};
}

PlantedDirections planted_directions(std::size_t dim, std::uint64_t seed) {
  Rng rng(mix64(seed ^ 0x6b65792f76616c75ull));
  auto unit = [](std::vector<double>& v) {
    double ss = 0.0;
    for (const double x : v) ss += x * x;
    const double n = std::sqrt(ss);
    for (double& x : v) x /= n;
  };
  PlantedDirections dirs{std::vector<double>(dim), std::vector<double>(dim)};
  for (double& x : dirs.key) x = rng.normal();
  unit(dirs.key);
  for (double& x : dirs.value) x = rng.normal();
  double dot = 0.0;
  for (std::size_t i = 0; i < dim; ++i) dot += dirs.key[i] * dirs.value[i];
  for (std::size_t i = 0; i < dim; ++i) dirs.value[i] -= dot * dirs.key[i];
  unit(dirs.value);
  return dirs;
}

namespace {

void assign_splits(Dataset& ds, std::vector<TokenStates> examples, double train_fraction,
                   double val_fraction) {
  const auto sizes = split_sizes(examples.size(), train_fraction, val_fraction);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (i < sizes[0]) {
      ds.train.push_back(std::move(examples[i]));
    } else if (i < sizes[0] + sizes[1]) {
      ds.val.push_back(std::move(examples[i]));
    } else {
      ds.test.push_back(std::move(examples[i]));
    }
  }
}

std::string example_id(const char* prefix, std::size_t i) {
  std::string digits = std::to_string(i);
  if (digits.size() < 6) digits.insert(0, 6 - digits.size(), '0');
  return std::string(prefix) + digits;
}

}  // namespace

Dataset planted_task(const PlantedSpec& spec, std::uint64_t seed) {
  spec.validate();
  const PlantedDirections dirs = planted_directions(spec.dim, seed);
  Rng rng(seed);
  std::vector<TokenStates> examples;
  examples.reserve(spec.examples);
  for (std::size_t i = 0; i < spec.examples; ++i) {
    TokenStates ex;
    ex.id = example_id("planted-", i);
    ex.states = Tensor2f(spec.tokens, spec.dim);
    ex.mask.assign(spec.tokens, 1);
    std::vector<double> rows(spec.tokens * spec.dim);
    for (double& v : rows) v = spec.noise_std * rng.normal();
    const std::size_t needle = rng.below(spec.tokens);
    const double y = rng.uniform(spec.target_lo, spec.target_hi);
    for (std::size_t c = 0; c < spec.dim; ++c) {
      rows[needle * spec.dim + c] += spec.amplitude * dirs.key[c] + y * dirs.value[c];
    }
    for (std::size_t k = 0; k < rows.size(); ++k) ex.states[k] = static_cast<float>(rows[k]);
    ex.target = y;
    examples.push_back(std::move(ex));
  }
  Dataset ds;
  ds.dim = spec.dim;
  assign_splits(ds, std::move(examples), spec.train_fraction, spec.val_fraction);
  return ds;
}

Dataset planted_ordinal_task(const OrdinalSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  std::vector<std::vector<double>> prototypes(spec.levels, std::vector<double>(spec.dim));
  for (auto& p : prototypes) {
    for (double& x : p) x = rng.normal();
  }
  std::vector<TokenStates> examples;
  examples.reserve(spec.examples);
  for (std::size_t i = 0; i < spec.examples; ++i) {
    const std::size_t level = rng.below(spec.levels);
    TokenStates ex;
    ex.id = example_id("ordinal-", i);
    ex.states = Tensor2f(1, spec.dim);
    ex.mask.assign(1, 1);
    for (std::size_t c = 0; c < spec.dim; ++c) {
      ex.states[c] = static_cast<float>(prototypes[level][c] + spec.noise_std * rng.normal());
    }
    ex.target = static_cast<double>(level);
    examples.push_back(std::move(ex));
  }
  Dataset ds;
  ds.dim = spec.dim;
  assign_splits(ds, std::move(examples), spec.train_fraction, spec.val_fraction);
  return ds;
}

std::vector<std::size_t> epoch_order(std::size_t count, std::uint64_t seed, std::uint64_t epoch) {
  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  Rng rng(mix64(seed) ^ mix64(epoch + 0x5eedull));
  for (std::size_t i = count; i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

TokenStates pad_to(const TokenStates& example, std::size_t length) {
  if (length < example.length()) {
    throw ShapeError("cannot pad " + std::to_string(example.length()) + " tokens down to " +
                     std::to_string(length));
  }
  TokenStates out;
  out.id = example.id;
  out.target = example.target;
  out.states = Tensor2f(length, example.dim());
  std::copy(example.states.span().begin(), example.states.span().end(), out.states.span().begin());
  out.mask = example.mask;
  out.mask.resize(length, 0);
  return out;
}

std::vector<Batch> make_batches(std::span<const TokenStates> split, std::size_t batch_size,
                                std::uint64_t seed, std::uint64_t epoch) {
  if (split.empty()) throw DataError("cannot batch an empty split");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  const std::vector<std::size_t> order = epoch_order(split.size(), seed, epoch);
  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    Batch b;
    for (std::size_t k = start; k < end; ++k) {
      b.max_length = std::max(b.max_length, split[order[k]].length());
    }
    for (std::size_t k = start; k < end; ++k) {
      const TokenStates& ex = split[order[k]];
      if (!ex.target) throw DataError("example '" + ex.id + "' has no target");
      b.indices.push_back(order[k]);
      b.examples.push_back(pad_to(ex, b.max_length));
      b.targets.push_back(*ex.target);
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

}  // namespace relish
