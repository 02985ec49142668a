#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "drcl/config.hpp"
#include "drcl/data.hpp"
#include "drcl/encoder.hpp"
#include "drcl/matrix.hpp"

namespace drcl {

inline constexpr const char* kRandomPriorSource = "random";

// The selected d x C transformation matrix with its cached pseudo-inverse.
struct PriorMatrix {
  Matrix w;  // d x C
  Matrix l;  // C x d
  double score = 0.0;
  std::string source;  // modality name, or "random" when SPL was skipped
  std::uint64_t seed = 0;

  std::size_t dim() const noexcept { return w.rows(); }
  std::size_t num_classes() const noexcept { return w.cols(); }
  std::vector<double> column(std::size_t c) const;
};

struct PriorCandidate {
  Matrix w;
  double score = 0.0;
  std::string modality;
};

struct PriorTraining {
  PriorCandidate candidate;
  EncoderParams encoder;
  std::vector<double> epoch_losses;  // mean J_p per epoch
};

struct SplReport {
  std::vector<std::string> modalities;
  std::vector<double> scores;
  std::size_t chosen = 0;
  std::vector<std::vector<double>> epoch_losses;
};

struct SplResult {
  PriorMatrix prior;
  SplReport report;
};

// Jointly trains a fresh encoder and W (starting from w_init) on the prior
// loss with the scheduled q, then scores W on the full training split.
// modality_index only feeds seed derivation.
PriorTraining train_prior_for_modality(const ModalityData& data, std::size_t num_classes, const Matrix& w_init,
                                       const RunConfig& cfg, std::size_t modality_index);

// Highest score wins; exact ties go to the earliest candidate. Caches the
// pseudo-inverse. Throws std::invalid_argument on an empty list.
PriorMatrix select_prior(std::span<const PriorCandidate> candidates);

// The shared orthonormal starting point W_random for a run.
Matrix initial_prior_weights(const RunConfig& cfg, std::size_t num_classes);

// All modalities start from the same W_random; the SPL-phase encoders are discarded.
SplResult run_spl(const MultimodalDataset& dataset, const RunConfig& cfg);

// W_random with its pseudo-inverse, source "random" (skip_spl ablation).
PriorMatrix random_prior(const RunConfig& cfg, std::size_t num_classes);

// One line of JSON {"format":"drcl-prior","d","C","score","source","seed"}
// then W and L as DFM1 blocks.
void save_prior(const std::filesystem::path& path, const PriorMatrix& prior);
PriorMatrix load_prior(const std::filesystem::path& path);

nlohmann::json to_json(const SplReport& report);

}  // namespace drcl
