#include "drcl/data.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>

#include "drcl/errors.hpp"
#include "json.hpp"

namespace drcl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<char, 4> kFeatureMagic{'D', 'F', 'M', '1'};
constexpr std::array<char, 4> kLabelMagic{'D', 'L', 'B', '1'};
constexpr std::uint64_t kMaxEntries = std::uint64_t{1} << 31;

void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                         static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes, 4);
}

std::uint32_t get_u32(const unsigned char* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[3]} << 24);
}

// Reads exactly n bytes; returns the count actually read.
std::size_t read_bytes(std::istream& in, void* dst, std::size_t n) {
  in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  return static_cast<std::size_t>(in.gcount());
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > std::numeric_limits<std::uint32_t>::max())
    throw FormatError(FormatErrorKind::kDimensionOverflow, std::string(what) + " does not fit in 32 bits");
  return static_cast<std::uint32_t>(v);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  return in;
}

}  // namespace

Matrix ModalityData::one_hot(std::span<const std::size_t> indices, std::size_t num_classes) const {
  Matrix y(indices.size(), num_classes);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const int c = labels.at(indices[i]);
    if (c < 0 || static_cast<std::size_t>(c) >= num_classes) throw ShapeError("label outside [0, C)");
    y(i, static_cast<std::size_t>(c)) = 1.0;
  }
  return y;
}

Matrix ModalityData::one_hot(std::size_t num_classes) const {
  std::vector<std::size_t> all(size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return one_hot(all, num_classes);
}

const char* split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

const std::vector<ModalityData>& MultimodalDataset::split(Split s) const {
  switch (s) {
    case Split::kTrain: return train;
    case Split::kVal: return val;
    case Split::kTest: return test;
  }
  return train;
}

std::vector<ModalityData>& MultimodalDataset::split(Split s) {
  return const_cast<std::vector<ModalityData>&>(std::as_const(*this).split(s));
}

void MultimodalDataset::validate() const {
  if (num_classes == 0) throw SchemaError("num_classes must be >= 1");
  if (train.size() < 2) throw InvariantError("dataset needs at least 2 modalities");
  for (Split s : {Split::kTrain, Split::kVal, Split::kTest}) {
    const auto& mods = split(s);
    const std::string where = std::string(split_name(s)) + " split";
    if (mods.size() != train.size()) throw InvariantError(where + ": modality count differs from train");
    for (std::size_t k = 0; k < mods.size(); ++k) {
      const ModalityData& m = mods[k];
      const std::string who = where + ", modality '" + m.name + "'";
      if (m.name != train[k].name) throw InvariantError(where + ": modality order/name differs from train");
      if (m.labels.empty()) throw InvariantError(who + ": no samples");
      if (m.features.rows() != m.labels.size())
        throw InvariantError(who + ": " + std::to_string(m.features.rows()) + " feature rows but " +
                             std::to_string(m.labels.size()) + " labels");
      if (m.features.cols() != train[k].features.cols())
        throw InvariantError(who + ": feature dimension differs from train");
      for (int c : m.labels)
        if (c < 0 || static_cast<std::size_t>(c) >= num_classes)
          throw SchemaError(who + ": class index " + std::to_string(c) + " outside [0, " +
                            std::to_string(num_classes) + ")");
      if (!m.features.all_finite()) throw InvariantError(who + ": non-finite feature value");
    }
  }
}

// --- DFM1 ------------------------------------------------------------------

void write_features(std::ostream& out, const Matrix& features) {
  if (features.empty()) throw ShapeError("write_features: empty matrix");
  out.write(kFeatureMagic.data(), 4);
  put_u32(out, checked_u32(features.rows(), "rows"));
  put_u32(out, checked_u32(features.cols(), "cols"));
  put_u32(out, 0);
  for (double v : features.values()) {
    const auto f = static_cast<float>(v);
    if (!std::isfinite(f)) throw NumericError("write_features: value not representable as finite float32");
    put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
  if (!out) throw IoError("write_features: stream write failed");
}

Matrix read_features(std::istream& in) {
  unsigned char header[16];
  const std::size_t got = read_bytes(in, header, sizeof header);
  if (got < 4 || !std::equal(kFeatureMagic.begin(), kFeatureMagic.end(), reinterpret_cast<const char*>(header)))
    throw FormatError(FormatErrorKind::kMalformedMagic, "feature file: malformed magic (expected DFM1)");
  if (got < sizeof header) throw FormatError(FormatErrorKind::kTruncatedPayload, "feature file: truncated header");
  const std::uint32_t rows = get_u32(header + 4);
  const std::uint32_t cols = get_u32(header + 8);
  if (get_u32(header + 12) != 0)
    throw FormatError(FormatErrorKind::kMalformedMagic, "feature file: reserved header field is not zero");
  const std::uint64_t entries = std::uint64_t{rows} * cols;
  if (rows == 0 || cols == 0 || entries > kMaxEntries)
    throw FormatError(FormatErrorKind::kDimensionOverflow,
                      "feature file: unsupported dimensions " + std::to_string(rows) + "x" + std::to_string(cols));

  std::vector<unsigned char> payload(entries * 4);
  if (read_bytes(in, payload.data(), payload.size()) != payload.size())
    throw FormatError(FormatErrorKind::kTruncatedPayload,
                      "feature file: payload shorter than " + std::to_string(rows) + "x" + std::to_string(cols));
  std::vector<double> data(entries);
  for (std::size_t i = 0; i < entries; ++i)
    data[i] = static_cast<double>(std::bit_cast<float>(get_u32(payload.data() + 4 * i)));
  return Matrix(rows, cols, std::move(data));
}

void write_features(const fs::path& path, const Matrix& features) {
  auto out = open_out(path);
  write_features(out, features);
}

Matrix read_features(const fs::path& path) {
  auto in = open_in(path);
  return read_features(in);
}

// --- DLB1 ------------------------------------------------------------------

void write_labels(const fs::path& path, std::span<const int> labels, std::size_t num_classes) {
  auto out = open_out(path);
  out.write(kLabelMagic.data(), 4);
  put_u32(out, checked_u32(labels.size(), "rows"));
  put_u32(out, checked_u32(num_classes, "num_classes"));
  for (int c : labels) {
    if (c < 0 || static_cast<std::size_t>(c) >= num_classes) throw SchemaError("write_labels: label outside [0, C)");
    put_u32(out, static_cast<std::uint32_t>(c));
  }
  if (!out) throw IoError("write_labels: write failed: " + path.string());
}

LabelFile read_labels(const fs::path& path) {
  auto in = open_in(path);
  unsigned char header[12];
  const std::size_t got = read_bytes(in, header, sizeof header);
  if (got < 4 || !std::equal(kLabelMagic.begin(), kLabelMagic.end(), reinterpret_cast<const char*>(header)))
    throw FormatError(FormatErrorKind::kMalformedMagic, "label file: malformed magic (expected DLB1): " + path.string());
  if (got < sizeof header) throw FormatError(FormatErrorKind::kTruncatedPayload, "label file: truncated header");
  const std::uint32_t rows = get_u32(header + 4);
  LabelFile file;
  file.num_classes = get_u32(header + 8);
  if (rows > kMaxEntries || file.num_classes > std::numeric_limits<int>::max())
    throw FormatError(FormatErrorKind::kDimensionOverflow, "label file: unsupported dimensions");
  std::vector<unsigned char> payload(std::size_t{rows} * 4);
  if (read_bytes(in, payload.data(), payload.size()) != payload.size())
    throw FormatError(FormatErrorKind::kTruncatedPayload, "label file: payload truncated: " + path.string());
  file.labels.resize(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const std::uint32_t c = get_u32(payload.data() + 4 * i);
    if (c >= file.num_classes)
      throw SchemaError("label file: class index " + std::to_string(c) + " >= num_classes " +
                        std::to_string(file.num_classes) + ": " + path.string());
    file.labels[i] = static_cast<int>(c);
  }
  return file;
}

// --- manifest ----------------------------------------------------------------

MultimodalDataset load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("manifest is not valid JSON: " + std::string(e.what()));
  }
  const fs::path base = path.parent_path();

  MultimodalDataset ds;
  try {
    if (!doc.is_object()) throw SchemaError("manifest: top level must be an object");
    const auto& nc = doc.at("num_classes");
    if (!nc.is_number_unsigned() || nc.get<std::uint64_t>() == 0)
      throw SchemaError("manifest: num_classes must be a positive integer");
    ds.num_classes = nc.get<std::size_t>();
    const auto& splits = doc.at("splits");
    if (!splits.is_object()) throw SchemaError("manifest: 'splits' must be an object");
    for (const auto& [key, _] : splits.items())
      if (key != "train" && key != "val" && key != "test") throw SchemaError("manifest: unknown split '" + key + "'");

    for (Split s : {Split::kTrain, Split::kVal, Split::kTest}) {
      const auto& entries = splits.at(split_name(s));
      if (!entries.is_array()) throw SchemaError(std::string("manifest: split '") + split_name(s) + "' must be a list");
      for (const auto& e : entries) {
        ModalityData m;
        m.name = e.at("name").get<std::string>();
        fs::path feat = e.at("features").get<std::string>();
        fs::path lab = e.at("labels").get<std::string>();
        if (feat.is_relative()) feat = base / feat;
        if (lab.is_relative()) lab = base / lab;
        m.features = read_features(feat);
        LabelFile lf = read_labels(lab);
        if (lf.num_classes != ds.num_classes)
          throw SchemaError("label file " + lab.string() + " declares " + std::to_string(lf.num_classes) +
                            " classes, manifest says " + std::to_string(ds.num_classes));
        m.labels = std::move(lf.labels);
        ds.split(s).push_back(std::move(m));
      }
    }
  } catch (const json::exception& e) {
    throw SchemaError("manifest schema violation: " + std::string(e.what()));
  }
  ds.validate();
  return ds;
}

fs::path save_dataset(const MultimodalDataset& dataset, const fs::path& dir) {
  fs::create_directories(dir);
  json splits = json::object();
  for (Split s : {Split::kTrain, Split::kVal, Split::kTest}) {
    json entries = json::array();
    for (const ModalityData& m : dataset.split(s)) {
      const std::string stem = std::string(split_name(s)) + "_" + m.name;
      write_features(dir / (stem + ".dfm"), m.features);
      write_labels(dir / (stem + ".dlb"), m.labels, dataset.num_classes);
      entries.push_back({{"name", m.name}, {"features", stem + ".dfm"}, {"labels", stem + ".dlb"}});
    }
    splits[split_name(s)] = std::move(entries);
  }
  const json doc = {{"num_classes", dataset.num_classes}, {"splits", std::move(splits)}};
  const fs::path manifest = dir / "manifest.json";
  std::ofstream out(manifest, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest: " + manifest.string());
  out << doc.dump(2) << '\n';
  return manifest;
}

// --- synthetic data ----------------------------------------------------------

void SynthConfig::validate() const {
  if (num_modalities < 1) throw ConfigError("synth.num_modalities must be >= 1");
  if (num_classes < 1) throw ConfigError("synth.num_classes must be >= 1");
  if (feature_dims.size() != num_modalities)
    throw ConfigError("synth.feature_dims must list one dimension per modality");
  for (std::size_t d : feature_dims)
    if (d == 0) throw ConfigError("synth.feature_dims entries must be >= 1");
  if (noise.size() != num_modalities) throw ConfigError("synth.noise must list one value per modality");
  for (double s : noise)
    if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("synth.noise must be finite and >= 0");
  if (!(separation > 0.0) || !std::isfinite(separation)) throw ConfigError("synth.separation must be > 0");
  if (samples_per_class < 3) throw ConfigError("synth.samples_per_class must be >= 3 (train/val/test each need one)");
}

MultimodalDataset synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  const std::size_t latent = *std::max_element(cfg.feature_dims.begin(), cfg.feature_dims.end());
  const std::size_t n_classes = cfg.num_classes;

  // Class centers, redrawn until every pair is at least `separation` apart.
  SeededRng center_rng(derive_seed(cfg.seed, stream::kSynthCenters));
  Matrix centers(n_classes, latent);
  bool separated = false;
  for (int attempt = 0; attempt < 1000 && !separated; ++attempt) {
    for (double& v : centers.values()) v = cfg.separation * center_rng.normal();
    separated = true;
    for (std::size_t a = 0; a < n_classes && separated; ++a)
      for (std::size_t b = a + 1; b < n_classes && separated; ++b) {
        double d2 = 0.0;
        for (std::size_t j = 0; j < latent; ++j) {
          const double diff = centers(a, j) - centers(b, j);
          d2 += diff * diff;
        }
        separated = std::sqrt(d2) >= cfg.separation;
      }
  }
  if (!separated) throw NumericError("synth_generate: could not place class centers at the requested separation");

  const std::size_t per_class = cfg.samples_per_class;
  const std::size_t n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(0.1 * per_class + 0.5)));
  const std::size_t n_test = n_val;
  const std::size_t n_train = per_class - n_val - n_test;

  MultimodalDataset ds;
  ds.num_classes = n_classes;
  for (std::size_t k = 0; k < cfg.num_modalities; ++k) {
    const std::size_t dim = cfg.feature_dims[k];
    SeededRng map_rng(derive_seed(cfg.seed, stream::kSynthMaps, k));
    Matrix projection(latent, dim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(latent));
    for (double& v : projection.values()) v = scale * map_rng.normal();

    SeededRng noise_rng(derive_seed(cfg.seed, stream::kSynthNoise, k));
    SeededRng split_rng(derive_seed(cfg.seed, stream::kSynthSplit, k));
    const std::string name = "modality" + std::to_string(k);

    std::array<std::vector<std::vector<double>>, 3> rows;
    std::array<std::vector<int>, 3> labels;
    for (std::size_t c = 0; c < n_classes; ++c) {
      std::vector<double> mapped(dim, 0.0);
      for (std::size_t j = 0; j < dim; ++j)
        for (std::size_t l = 0; l < latent; ++l) mapped[j] += centers(c, l) * projection(l, j);

      std::vector<std::vector<double>> samples(per_class, std::vector<double>(dim));
      for (auto& s : samples)
        for (std::size_t j = 0; j < dim; ++j)
          s[j] = static_cast<double>(static_cast<float>(mapped[j] + cfg.noise[k] * noise_rng.normal()));

      const auto order = split_rng.permutation(per_class);
      for (std::size_t i = 0; i < per_class; ++i) {
        const std::size_t part = i < n_train ? 0 : (i < n_train + n_val ? 1 : 2);
        rows[part].push_back(samples[order[i]]);
        labels[part].push_back(static_cast<int>(c));
      }
    }

    for (std::size_t part = 0; part < 3; ++part) {
      ModalityData m;
      m.name = name;
      m.features = Matrix(rows[part].size(), dim);
      for (std::size_t i = 0; i < rows[part].size(); ++i)
        std::copy(rows[part][i].begin(), rows[part][i].end(), m.features.row(i).begin());
      m.labels = std::move(labels[part]);
      ds.split(static_cast<Split>(part)).push_back(std::move(m));
    }
  }
  return ds;
}

// --- mini-batches ------------------------------------------------------------

std::vector<std::vector<std::size_t>> minibatch_iter(std::size_t n, std::size_t batch_size, SeededRng& rng) {
  if (batch_size < 2) throw std::invalid_argument("minibatch_iter: batch_size must be >= 2");
  if (n == 0) throw std::invalid_argument("minibatch_iter: no samples");
  const auto order = rng.permutation(n);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    if (end - start < 2 && !batches.empty()) {
      batches.back().insert(batches.back().end(), order.begin() + start, order.begin() + end);
    } else {
      batches.emplace_back(order.begin() + start, order.begin() + end);
    }
  }
  return batches;
}

}  // namespace drcl
