#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "drcl/data.hpp"
#include "drcl/errors.hpp"
#include "json.hpp"
#include "oracles.hpp"

namespace drcl {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("drcl_test_data_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

FormatErrorKind read_error_kind(const std::string& bytes) {
  std::istringstream in(bytes);
  try {
    read_features(in);
  } catch (const FormatError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no FormatError";
  return FormatErrorKind::kMalformedMagic;
}

std::string header(std::uint32_t rows, std::uint32_t cols, std::uint32_t reserved = 0) {
  std::string h = "DFM1";
  for (std::uint32_t v : {rows, cols, reserved})
    for (int b = 0; b < 4; ++b) h.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
  return h;
}

TEST(FeatureFile, RoundTripLayout) {
  const Matrix m{{1, 2, 3}, {4, 5, 6}};
  const fs::path p = scratch_dir("layout") / "m.dfm";
  write_features(p, m);
  const std::string bytes = file_bytes(p);
  ASSERT_EQ(bytes.size(), 16u + 24u);
  EXPECT_EQ(bytes.substr(0, 16), header(2, 3));
  // 1.0f little-endian
  EXPECT_EQ(bytes.substr(16, 4), std::string("\x00\x00\x80\x3f", 4));
  EXPECT_EQ(read_features(p), m);
}

TEST(FeatureFile, RandomRoundTripBitExact) {
  SeededRng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t r = 1 + rng.below(100), c = 1 + rng.below(100);
    Matrix m(r, c);
    for (double& v : m.values()) v = static_cast<double>(static_cast<float>(rng.normal() * 1e3));
    std::stringstream s;
    write_features(s, m);
    EXPECT_EQ(read_features(s), m);
  }
}

TEST(FeatureFile, EmptyInputIsMalformedMagic) {
  EXPECT_EQ(read_error_kind(""), FormatErrorKind::kMalformedMagic);
  EXPECT_EQ(read_error_kind("DLB1xxxxxxxxxxxx"), FormatErrorKind::kMalformedMagic);
}

TEST(FeatureFile, ShortPayloadIsTruncated) {
  std::string bytes = header(10, 3) + std::string(2 * 3 * 4, '\0');
  EXPECT_EQ(read_error_kind(bytes), FormatErrorKind::kTruncatedPayload);
  EXPECT_EQ(read_error_kind("DFM1\x01\x00"), FormatErrorKind::kTruncatedPayload);
}

TEST(FeatureFile, HugeDimensionsOverflow) {
  EXPECT_EQ(read_error_kind(header(0xffffffffu, 0xffffffffu)), FormatErrorKind::kDimensionOverflow);
  EXPECT_EQ(read_error_kind(header(0, 3)), FormatErrorKind::kDimensionOverflow);
}

TEST(FeatureFile, ErrorsAreIoErrors) {
  std::istringstream in("");
  EXPECT_THROW(read_features(in), IoError);
  EXPECT_THROW(read_features(fs::path("/nonexistent/drcl/x.dfm")), IoError);
}

TEST(LabelFile, RoundTrip) {
  const fs::path p = scratch_dir("labels") / "l.dlb";
  const std::vector<int> labels{0, 2, 1, 2};
  write_labels(p, labels, 3);
  const auto lf = read_labels(p);
  EXPECT_EQ(lf.labels, labels);
  EXPECT_EQ(lf.num_classes, 3u);
  EXPECT_EQ(file_bytes(p).size(), 12u + 16u);
}

MultimodalDataset tiny_dataset() {
  SynthConfig cfg;
  cfg.num_modalities = 2;
  cfg.num_classes = 3;
  cfg.feature_dims = {4, 5};
  cfg.noise = {0.1, 0.2};
  cfg.samples_per_class = 10;
  cfg.seed = 3;
  return synth_generate(cfg);
}

TEST(Manifest, RoundTripReproducesDataset) {
  const auto ds = tiny_dataset();
  const fs::path manifest = save_dataset(ds, scratch_dir("manifest"));
  const auto loaded = load_manifest(manifest);
  EXPECT_EQ(loaded.num_modalities(), 2u);
  EXPECT_EQ(loaded, ds);
}

TEST(Manifest, LabelIndexAtCIsSchemaError) {
  const fs::path dir = scratch_dir("badlabel");
  const auto ds = tiny_dataset();
  const fs::path manifest = save_dataset(ds, dir);
  // Rewrite one label file with an out-of-range index, bypassing the writer's check.
  const fs::path lab = dir / "train_modality0.dlb";
  std::string bytes = file_bytes(lab);
  bytes[12] = 3;  // first label := C
  std::ofstream(lab, std::ios::binary) << bytes;
  EXPECT_THROW(load_manifest(manifest), SchemaError);
}

TEST(Manifest, RowCountMismatchIsInvariantError) {
  const fs::path dir = scratch_dir("rows");
  const auto ds = tiny_dataset();
  const fs::path manifest = save_dataset(ds, dir);
  Matrix fewer(ds.train[0].features.rows() - 1, ds.train[0].dim());
  write_features(dir / "train_modality0.dfm", fewer);
  EXPECT_THROW(load_manifest(manifest), InvariantError);
}

TEST(Manifest, MissingFileIsIoError) {
  EXPECT_THROW(load_manifest("/nonexistent/drcl/manifest.json"), IoError);
  const fs::path dir = scratch_dir("missing");
  const fs::path manifest = save_dataset(tiny_dataset(), dir);
  fs::remove(dir / "test_modality1.dfm");
  EXPECT_THROW(load_manifest(manifest), IoError);
}

TEST(Manifest, SchemaViolations) {
  const fs::path dir = scratch_dir("schema");
  const auto write = [&](const std::string& text) {
    std::ofstream(dir / "m.json") << text;
    return dir / "m.json";
  };
  EXPECT_THROW(load_manifest(write("not json")), SchemaError);
  EXPECT_THROW(load_manifest(write("[]")), SchemaError);
  EXPECT_THROW(load_manifest(write(R"({"num_classes": 0, "splits": {}})")), SchemaError);
  EXPECT_THROW(load_manifest(write(R"({"num_classes": 2, "splits": {"dev": []}})")), SchemaError);
}

TEST(Dataset, RequiresTwoModalities) {
  auto ds = tiny_dataset();
  ds.train.pop_back();
  ds.val.pop_back();
  ds.test.pop_back();
  EXPECT_THROW(ds.validate(), InvariantError);
}

TEST(Dataset, UnpairedModalitiesAllowed) {
  auto ds = tiny_dataset();
  ds.train[1].features = ds.train[1].features.gather_rows(std::vector<std::size_t>{0, 1, 2});
  ds.train[1].labels.resize(3);
  EXPECT_NO_THROW(ds.validate());
}

TEST(Dataset, OneHotHasSingleOne) {
  const auto ds = tiny_dataset();
  const Matrix y = ds.train[0].one_hot(ds.num_classes);
  for (std::size_t i = 0; i < y.rows(); ++i) {
    double s = 0.0;
    for (double v : y.row(i)) s += v;
    EXPECT_EQ(s, 1.0);
    EXPECT_EQ(y(i, ds.train[0].labels[i]), 1.0);
  }
}

TEST(Synth, Deterministic) {
  SynthConfig cfg;
  EXPECT_EQ(synth_generate(cfg), synth_generate(cfg));
  auto other = cfg;
  other.seed = 2;
  EXPECT_NE(synth_generate(cfg), synth_generate(other));
}

TEST(Synth, DefaultShapeAndSplit) {
  const auto ds = synth_generate(SynthConfig{});
  ASSERT_EQ(ds.num_modalities(), 3u);
  EXPECT_EQ(ds.num_classes, 5u);
  const std::vector<std::size_t> dims{32, 24, 40};
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(ds.train[k].dim(), dims[k]);
    EXPECT_EQ(ds.train[k].size(), 5u * 32u);
    EXPECT_EQ(ds.val[k].size(), 5u * 4u);
    EXPECT_EQ(ds.test[k].size(), 5u * 4u);
  }
  EXPECT_NO_THROW(ds.validate());
}

TEST(Synth, ZeroNoiseCollapsesClasses) {
  SynthConfig cfg;
  cfg.num_modalities = 2;
  cfg.feature_dims = {6, 9};
  cfg.noise = {0.0, 0.0};
  const auto ds = synth_generate(cfg);
  for (Split s : {Split::kTrain, Split::kVal, Split::kTest}) {
    for (const auto& m : ds.split(s)) {
      std::set<std::vector<double>> distinct;
      for (std::size_t i = 0; i < m.size(); ++i) {
        distinct.emplace(m.features.row(i).begin(), m.features.row(i).end());
        for (std::size_t j = 0; j < m.size(); ++j)
          if (m.labels[i] == m.labels[j]) EXPECT_TRUE(std::ranges::equal(m.features.row(i), m.features.row(j)));
      }
      EXPECT_LE(distinct.size(), cfg.num_classes);
    }
  }
}

TEST(Synth, RejectsBadConfig) {
  SynthConfig cfg;
  cfg.separation = 0.0;
  EXPECT_THROW(synth_generate(cfg), ConfigError);
  cfg = SynthConfig{};
  cfg.noise = {0.1, -0.1, 0.1};
  EXPECT_THROW(synth_generate(cfg), ConfigError);
}

std::vector<std::size_t> sizes(const std::vector<std::vector<std::size_t>>& batches) {
  std::vector<std::size_t> out;
  for (const auto& b : batches) out.push_back(b.size());
  return out;
}

TEST(Minibatch, SizesAndMergeRule) {
  SeededRng rng(1);
  EXPECT_EQ(sizes(minibatch_iter(10, 4, rng)), (std::vector<std::size_t>{4, 4, 2}));
  EXPECT_EQ(sizes(minibatch_iter(5, 4, rng)), (std::vector<std::size_t>{5}));
  EXPECT_EQ(sizes(minibatch_iter(9, 4, rng)), (std::vector<std::size_t>{4, 5}));
}

TEST(Minibatch, Deterministic) {
  SeededRng a(8), b(8);
  EXPECT_EQ(minibatch_iter(37, 6, a), minibatch_iter(37, 6, b));
}

TEST(Minibatch, VisitsEachIndexOnce) {
  SeededRng rng(2);
  for (std::size_t n = 2; n < 60; n += 7) {
    for (std::size_t b = 2; b < 12; b += 3) {
      std::vector<std::size_t> seen;
      for (const auto& batch : minibatch_iter(n, b, rng)) {
        EXPECT_GE(batch.size(), std::min<std::size_t>(2, n));
        seen.insert(seen.end(), batch.begin(), batch.end());
      }
      std::sort(seen.begin(), seen.end());
      ASSERT_EQ(seen.size(), n);
      for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(seen[i], i);
    }
  }
}

TEST(Minibatch, RejectsBatchOfOne) {
  SeededRng rng(1);
  EXPECT_THROW(minibatch_iter(10, 1, rng), std::invalid_argument);
}

}  // namespace
}  // namespace drcl
