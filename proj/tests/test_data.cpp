// SPDX-FileCopyrightText: © 2026 The relish-head Authors
//
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include "relish/data.hpp"
#include "relish/error.hpp"
#include "relish/heads.hpp"
#include "test_util.hpp"

namespace relish {
namespace {

namespace fs = std::filesystem;
using testing::random_tensor;
using testing::scratch_dir;

void put_u32(std::vector<std::uint8_t>& b, std::size_t at, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

TEST(Hsf, LayoutIsLittleEndianRowMajor) {
  const Tensor2f t(2, 3, {1, 2, 3, 4, 5, -0.5f});
  const auto bytes = encode_hsf(t);
  ASSERT_EQ(bytes.size(), 40u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "HSF1");
  const std::vector<std::uint8_t> header = {1, 0, 0, 0, 2, 0, 0, 0, 3, 0, 0, 0};
  EXPECT_TRUE(std::equal(header.begin(), header.end(), bytes.begin() + 4));
  // 1.0f = 0x3F800000, last value -0.5f = 0xBF000000
  EXPECT_EQ(bytes[16], 0x00);
  EXPECT_EQ(bytes[19], 0x3F);
  EXPECT_EQ(bytes[18], 0x80);
  EXPECT_EQ(bytes[39], 0xBF);
  EXPECT_EQ(bytes[38], 0x00);
}

TEST(Hsf, FileRoundTripIsBitExact) {
  const fs::path dir = scratch_dir("hsf-roundtrip");
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor2f t = random_tensor<float>(rng, 1 + rng.below(20), 1 + rng.below(40), 1e3);
    t[0] = std::numeric_limits<float>::denorm_min();
    t[t.size() - 1] = -0.0f;
    const fs::path p = dir / ("t" + std::to_string(trial) + ".hsf");
    write_hsf(p, t);
    EXPECT_EQ(fs::file_size(p), 16 + 4 * t.size());
    const Tensor2f back = read_hsf(p);
    ASSERT_EQ(back.rows(), t.rows());
    ASSERT_EQ(back.cols(), t.cols());
    ASSERT_EQ(std::memcmp(back.span().data(), t.span().data(), 4 * t.size()), 0);
  }
}

TEST(Hsf, MalformedInputsAreFormatErrors) {
  const auto good = encode_hsf(Tensor2f(2, 3, 1.0f));
  auto bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_hsf(bad_magic), FormatError);
  auto bad_version = good;
  put_u32(bad_version, 4, 2);
  EXPECT_THROW(decode_hsf(bad_version), FormatError);
  auto zero_rows = good;
  put_u32(zero_rows, 8, 0);
  EXPECT_THROW(decode_hsf(zero_rows), FormatError);
  auto truncated = good;
  truncated.pop_back();
  EXPECT_THROW(decode_hsf(truncated), FormatError);
  auto extra = good;
  extra.push_back(0);
  EXPECT_THROW(decode_hsf(extra), FormatError);
  EXPECT_THROW(decode_hsf(std::vector<std::uint8_t>(good.begin(), good.begin() + 10)), FormatError);
  auto nan_payload = good;
  put_u32(nan_payload, 20, 0x7FC00000u);
  EXPECT_THROW(decode_hsf(nan_payload), FormatError);
  EXPECT_THROW(encode_hsf(Tensor2f(1, 1, NAN)), RangeError);
  EXPECT_EQ(inspect_hsf(good).cols, 3u);
}

TEST(Hsf, MissingFileIsIoError) {
  EXPECT_THROW(read_hsf("/nonexistent/dir/x.hsf"), IoError);
}

TEST(Manifest, ParsesValidLines) {
  const Manifest m = parse_manifest(
      "# id path target split\n"
      "a\thsf/a.hsf\t1.5\ttrain\n"
      "\n"
      "b hsf/b.hsf -2 val\n"
      "c\thsf/c.hsf\t3e0\ttest\n",
      "/base");
  ASSERT_EQ(m.records.size(), 3u);
  EXPECT_EQ(m.records[1].id, "b");
  EXPECT_EQ(m.records[1].target, -2.0);
  EXPECT_EQ(m.records[1].split, Split::kVal);
  EXPECT_EQ(m.records[2].line, 5u);
  EXPECT_EQ(m.resolve(m.records[0]), fs::path("/base/hsf/a.hsf"));
  const auto counts = m.split_counts();
  EXPECT_EQ(counts.at(Split::kTrain), 1u);
  EXPECT_EQ(counts.at(Split::kTest), 1u);
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ManifestError& e) {
    return e.what();
  }
  return "";
}

TEST(Manifest, ErrorsNameTheProblem) {
  const std::string dup = error_of([] {
    (void)parse_manifest("x a.hsf 1 train\nx b.hsf 2 test\n", ".");
  });
  EXPECT_NE(dup.find("'x'"), std::string::npos) << dup;
  EXPECT_NE(dup.find("2"), std::string::npos) << dup;

  const std::string fields = error_of([] { (void)parse_manifest("x a.hsf 1\n", "."); });
  EXPECT_NE(fields.find("line 1"), std::string::npos) << fields;
  EXPECT_NE(error_of([] { (void)parse_manifest("x a.hsf one train\n", "."); }), "");
  EXPECT_NE(error_of([] { (void)parse_manifest("x a.hsf 1 dev\n", "."); }), "");
}

TEST(Manifest, LoadChecksFilesAndDimension) {
  const fs::path dir = scratch_dir("manifest-load");
  fs::create_directories(dir / "hsf");
  write_hsf(dir / "hsf/a.hsf", Tensor2f(3, 4, 1.0f));
  write_hsf(dir / "hsf/b.hsf", Tensor2f(5, 4, 2.0f));
  write_hsf(dir / "hsf/c.hsf", Tensor2f(2, 6, 3.0f));

  write_text(dir / "ok.tsv", "a hsf/a.hsf 1 train\nb hsf/b.hsf 2 test\n");
  const Manifest ok = load_manifest(dir / "ok.tsv");
  EXPECT_EQ(ok.dim, 4u);
  EXPECT_EQ(ok.base_dir, dir);

  write_text(dir / "missing.tsv", "a hsf/a.hsf 1 train\nz hsf/zzz.hsf 2 test\n");
  try {
    (void)load_manifest(dir / "missing.tsv");
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("zzz.hsf"), std::string::npos);
  }
  EXPECT_NO_THROW((void)load_manifest(dir / "missing.tsv", false));

  write_text(dir / "mixed.tsv", "a hsf/a.hsf 1 train\nc hsf/c.hsf 2 test\n");
  EXPECT_THROW((void)load_manifest(dir / "mixed.tsv"), ShapeError);
}

TEST(Dataset, WriteLoadRoundTrip) {
  const fs::path dir = scratch_dir("dataset-roundtrip");
  PlantedSpec spec;
  spec.examples = 20;
  spec.tokens = 5;
  spec.dim = 6;
  const Dataset ds = planted_task(spec, 3);
  const fs::path manifest = write_dataset(ds, dir / "out");
  EXPECT_THROW(write_dataset(ds, dir / "out"), IoError);

  const Dataset back = load_dataset(load_manifest(manifest));
  ASSERT_EQ(back.train.size(), ds.train.size());
  ASSERT_EQ(back.val.size(), ds.val.size());
  ASSERT_EQ(back.test.size(), ds.test.size());
  for (const Split s : {Split::kTrain, Split::kVal, Split::kTest}) {
    for (std::size_t i = 0; i < ds.split(s).size(); ++i) {
      EXPECT_EQ(back.split(s)[i].id, ds.split(s)[i].id);
      EXPECT_EQ(back.split(s)[i].states, ds.split(s)[i].states);
      EXPECT_EQ(*back.split(s)[i].target, *ds.split(s)[i].target);
    }
  }
}

TEST(SynthBackbone, MatchesDocumentedGenerator) {
  // Reference values from an independent implementation of the documented
  // mixing and Box–Muller pairing.
  const auto e = synth_token_embedding(7, 42, 5);
  const double expect[5] = {1.712920305929927, -0.9141229799525381, 0.4016339144801236,
                            0.31438754696997445, -0.14894008210226115};
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(e[i], expect[i], 1e-12);
  const auto z = synth_token_embedding(0, 0, 3);
  EXPECT_NEAR(z[1], 1.9849691040237878, 1e-12);

  const std::vector<std::uint64_t> toks = byte_tokens("hi");
  const Tensor2f h = synth_backbone(toks, 3, 4);
  const float row1[4] = {-0.6829674243927002f, 0.7330401539802551f, 0.2623216509819031f,
                         1.7109631299972534f};
  for (int c = 0; c < 4; ++c) EXPECT_NEAR(h(1, c), row1[c], 1e-6);
}

TEST(SynthBackbone, DeterministicAndNormalized) {
  const auto toks = byte_tokens("the quick brown fox");
  const Tensor2f a = synth_backbone(toks, 9, 33);
  EXPECT_EQ(a, synth_backbone(toks, 9, 33));
  EXPECT_NE(a, synth_backbone(toks, 10, 33));
  for (std::size_t t = 0; t < a.rows(); ++t) {
    double ss = 0;
    for (const float v : a.row(t)) ss += static_cast<double>(v) * v;
    EXPECT_NEAR(std::sqrt(ss), std::sqrt(33.0), 1e-4);
  }
  // single token: its own embedding, rescaled
  const std::vector<std::uint64_t> one = {77};
  const Tensor2f s = synth_backbone(one, 9, 33);
  const auto e = synth_token_embedding(77, 9, 33);
  double n = 0;
  for (const double v : e) n += v * v;
  for (std::size_t c = 0; c < 33; ++c) EXPECT_NEAR(s[c], e[c] * std::sqrt(33.0 / n), 1e-5);
  EXPECT_THROW(synth_backbone(std::span<const std::uint64_t>{}, 1, 4), ShapeError);
}

TEST(SynthBackbone, EmbeddingMomentsWithinClt) {
  const std::size_t n = 10000, d = 8;
  std::vector<double> sum(d, 0.0), sq(d, 0.0);
  for (std::uint64_t tok = 0; tok < n; ++tok) {
    const auto e = synth_token_embedding(tok, 1234, d);
    for (std::size_t c = 0; c < d; ++c) sum[c] += e[c], sq[c] += e[c] * e[c];
  }
  const double se = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t c = 0; c < d; ++c) {
    EXPECT_LT(std::abs(sum[c] / n), 5 * se) << c;
    // Var of x² is 2 for a standard normal.
    EXPECT_LT(std::abs(sq[c] / n - 1.0), 5 * std::sqrt(2.0) * se) << c;
  }
}

TEST(Planted, DirectionsOrthonormal) {
  const auto dirs = planted_directions(64, 5);
  double kk = 0, vv = 0, kv = 0;
  for (std::size_t i = 0; i < 64; ++i) {
    kk += dirs.key[i] * dirs.key[i];
    vv += dirs.value[i] * dirs.value[i];
    kv += dirs.key[i] * dirs.value[i];
  }
  EXPECT_NEAR(kk, 1.0, 1e-12);
  EXPECT_NEAR(vv, 1.0, 1e-12);
  EXPECT_NEAR(kv, 0.0, 1e-12);
}

TEST(Planted, NoiselessTargetIsRecoverable) {
  PlantedSpec spec;
  spec.examples = 50;
  spec.tokens = 64;
  spec.dim = 16;
  spec.amplitude = 0.0;
  spec.noise_std = 0.0;
  const Dataset ds = planted_task(spec, 11);
  const auto dirs = planted_directions(spec.dim, 11);
  for (const auto& ex : ds.train) {
    std::size_t nonzero_rows = 0;
    double coefficient = 0;
    for (std::size_t t = 0; t < ex.length(); ++t) {
      const auto row = ex.states.row(t);
      if (std::any_of(row.begin(), row.end(), [](float v) { return v != 0.0f; })) {
        ++nonzero_rows;
        for (std::size_t c = 0; c < spec.dim; ++c) coefficient += row[c] * dirs.value[c];
      }
    }
    ASSERT_EQ(nonzero_rows, 1u);
    EXPECT_NEAR(coefficient, *ex.target, 1e-5);
    const Tensor2f pooled = masked_mean_pool<float>(ex.states, ex.mask);
    double pooled_coeff = 0;
    for (std::size_t c = 0; c < spec.dim; ++c) pooled_coeff += pooled[c] * dirs.value[c];
    EXPECT_NEAR(pooled_coeff, *ex.target / 64.0, 1e-6);
  }
}

TEST(Planted, DeterministicSplitsAndRange) {
  PlantedSpec spec;
  spec.examples = 100;
  spec.tokens = 4;
  spec.dim = 8;
  const Dataset a = planted_task(spec, 2026);
  const Dataset b = planted_task(spec, 2026);
  EXPECT_EQ(a.train.size(), 80u);
  EXPECT_EQ(a.val.size(), 10u);
  EXPECT_EQ(a.test.size(), 10u);
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    ASSERT_EQ(a.train[i].states, b.train[i].states);
    ASSERT_GE(*a.train[i].target, spec.target_lo);
    ASSERT_LE(*a.train[i].target, spec.target_hi);
  }
  EXPECT_NE(planted_task(spec, 2027).train[0].states, a.train[0].states);
  spec.dim = 1;
  EXPECT_THROW(planted_task(spec, 1), ConfigError);
}

TEST(Planted, OrdinalTargetsAreLevels) {
  OrdinalSpec spec;
  const Dataset ds = planted_ordinal_task(spec, 4);
  EXPECT_EQ(ds.size(), spec.examples);
  std::set<double> seen;
  for (const auto& ex : ds.train) {
    EXPECT_EQ(ex.length(), 1u);
    seen.insert(*ex.target);
  }
  EXPECT_EQ(seen.size(), spec.levels);
  EXPECT_EQ(*seen.begin(), 0.0);
  EXPECT_EQ(*seen.rbegin(), static_cast<double>(spec.levels - 1));
}

std::vector<TokenStates> varied_examples(std::size_t n) {
  std::vector<TokenStates> out;
  for (std::size_t i = 0; i < n; ++i) {
    TokenStates ex;
    ex.id = "ex" + std::to_string(i);
    ex.states = Tensor2f(1 + i % 4, 3, static_cast<float>(i));
    ex.mask.assign(ex.states.rows(), 1);
    ex.target = static_cast<double>(i);
    out.push_back(std::move(ex));
  }
  return out;
}

TEST(Batching, SizesPaddingAndDeterminism) {
  const auto examples = varied_examples(10);
  const auto batches = make_batches(examples, 4, 42, 0);
  ASSERT_EQ(batches.size(), 3u);
  EXPECT_EQ(batches[0].examples.size(), 4u);
  EXPECT_EQ(batches[1].examples.size(), 4u);
  EXPECT_EQ(batches[2].examples.size(), 2u);
  for (const Batch& b : batches) {
    for (std::size_t k = 0; k < b.examples.size(); ++k) {
      const TokenStates& padded = b.examples[k];
      const TokenStates& original = examples[b.indices[k]];
      ASSERT_EQ(padded.length(), b.max_length);
      EXPECT_EQ(b.targets[k], *original.target);
      for (std::size_t t = 0; t < b.max_length; ++t) {
        EXPECT_EQ(padded.mask[t], t < original.length() ? 1 : 0);
        for (std::size_t c = 0; c < 3; ++c) {
          EXPECT_EQ(padded.states(t, c), t < original.length() ? original.states(t, c) : 0.0f);
        }
      }
    }
  }
  const auto again = make_batches(examples, 4, 42, 0);
  for (std::size_t i = 0; i < batches.size(); ++i) EXPECT_EQ(again[i].indices, batches[i].indices);
  EXPECT_THROW(make_batches(std::span<const TokenStates>{}, 4, 1, 0), DataError);
}

TEST(Batching, PropertyEpochOrderIsPermutation) {
  for (std::uint64_t epoch = 0; epoch < 20; ++epoch) {
    auto order = epoch_order(37, 5, epoch);
    std::sort(order.begin(), order.end());
    for (std::size_t i = 0; i < order.size(); ++i) ASSERT_EQ(order[i], i);
  }
  EXPECT_NE(epoch_order(37, 5, 0), epoch_order(37, 5, 1));
  EXPECT_NE(epoch_order(37, 5, 0), epoch_order(37, 6, 0));
}

TEST(Batching, PadRejectsShrink) {
  const auto ex = varied_examples(4)[3];
  EXPECT_THROW(pad_to(ex, 1), ShapeError);
}

TEST(Splits, NamesRoundTrip) {
  for (const Split s : {Split::kTrain, Split::kVal, Split::kTest}) {
    EXPECT_EQ(parse_split(split_name(s)), s);
  }
  EXPECT_THROW(parse_split("dev"), ManifestError);
  EXPECT_EQ(split_sizes(100, 0.8, 0.1), (std::array<std::size_t, 3>{80, 10, 10}));
  EXPECT_EQ(split_sizes(7, 0.8, 0.1), (std::array<std::size_t, 3>{6, 1, 0}));
}

}  // namespace
}  // namespace relish
