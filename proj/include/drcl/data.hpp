#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "drcl/matrix.hpp"
#include "drcl/rng.hpp"

namespace drcl {

// One modality's raw features and single-label class assignments.
struct ModalityData {
  std::string name;
  Matrix features;          // N x D
  std::vector<int> labels;  // N class indices in [0, C)

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dim() const noexcept { return features.cols(); }

  // One-hot rows for the given sample indices (|indices| x C).
  Matrix one_hot(std::span<const std::size_t> indices, std::size_t num_classes) const;
  Matrix one_hot(std::size_t num_classes) const;

  friend bool operator==(const ModalityData&, const ModalityData&) = default;
};

enum class Split { kTrain, kVal, kTest };
const char* split_name(Split s);

// Modalities need not be paired: sample counts may differ within a split.
struct MultimodalDataset {
  std::size_t num_classes = 0;
  std::vector<ModalityData> train;
  std::vector<ModalityData> val;
  std::vector<ModalityData> test;

  const std::vector<ModalityData>& split(Split s) const;
  std::vector<ModalityData>& split(Split s);
  std::size_t num_modalities() const noexcept { return train.size(); }

  // Throws InvariantError / SchemaError on the first violated invariant.
  void validate() const;

  friend bool operator==(const MultimodalDataset&, const MultimodalDataset&) = default;
};

// --- binary formats -------------------------------------------------------
//
// DFM1 feature file: "DFM1", rows u32le, cols u32le, reserved u32 = 0, then
// rows*cols float32 little-endian, row-major.
// DLB1 label file: "DLB1", rows u32le, num_classes u32le, then rows u32le.

void write_features(std::ostream& out, const Matrix& features);
Matrix read_features(std::istream& in);
void write_features(const std::filesystem::path& path, const Matrix& features);
Matrix read_features(const std::filesystem::path& path);

struct LabelFile {
  std::vector<int> labels;
  std::uint32_t num_classes = 0;
};
void write_labels(const std::filesystem::path& path, std::span<const int> labels, std::size_t num_classes);
LabelFile read_labels(const std::filesystem::path& path);

// Manifest JSON: { "num_classes": C, "splits": { "train"|"val"|"test":
// [ { "name", "features", "labels" } ] } }. Relative paths resolve against
// the manifest's directory.
MultimodalDataset load_manifest(const std::filesystem::path& path);
// Writes <dir>/<split>_<name>.dfm / .dlb and <dir>/manifest.json; returns the manifest path.
std::filesystem::path save_dataset(const MultimodalDataset& dataset, const std::filesystem::path& dir);

// --- synthetic data --------------------------------------------------------

struct SynthConfig {
  std::size_t num_modalities = 3;
  std::size_t num_classes = 5;
  std::vector<std::size_t> feature_dims{32, 24, 40};
  std::size_t samples_per_class = 40;
  double separation = 0.3;
  std::vector<double> noise{0.1, 0.1, 0.1};
  std::uint64_t seed = 1;

  void validate() const;  // throws ConfigError
};

// Class centers live in a shared latent space of dimension max(D_k) with
// pairwise distance >= separation. Modality k maps them through a seeded
// Gaussian linear map to D_k and adds N(0, noise_k^2). Each class is split
// 80/10/10 into train/val/test. Features are rounded to float32 so the
// dataset survives a DFM1 round trip unchanged.
MultimodalDataset synth_generate(const SynthConfig& cfg);

// --- mini-batches ----------------------------------------------------------

// One epoch: a seeded permutation of [0, n) cut into batch_size chunks. A
// trailing chunk shorter than 2 is merged into the previous batch.
std::vector<std::vector<std::size_t>> minibatch_iter(std::size_t n, std::size_t batch_size, SeededRng& rng);
inline std::vector<std::vector<std::size_t>> minibatch_iter(const ModalityData& modality, std::size_t batch_size,
                                                            SeededRng& rng) {
  return minibatch_iter(modality.size(), batch_size, rng);
}

}  // namespace drcl
