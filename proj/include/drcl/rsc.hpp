#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "drcl/config.hpp"
#include "drcl/data.hpp"
#include "drcl/encoder.hpp"
#include "drcl/rng.hpp"
#include "drcl/spl.hpp"

namespace drcl {

// Mixup in the embedding space: row i is mixed with row partner[i] using the
// same lambda for embeddings and labels.
struct AugmentedBatch {
  Matrix f;  // B x d
  Matrix y;  // B x C soft labels
  std::vector<std::size_t> partner;
  double lambda = 1.0;
};

// Throws ShapeError for B < 2 or lambda outside (0, 1].
AugmentedBatch feature_augment(const Matrix& f, const Matrix& y, double lambda, SeededRng& rng);
// Mixes rows of any matrix with a given partner map.
Matrix mix_rows(const Matrix& m, std::span<const std::size_t> partner, double lambda);
// Gradient w.r.t. the unmixed rows; both branches of every mix receive their share.
Matrix mix_rows_backward(const Matrix& grad_mixed, std::span<const std::size_t> partner, double lambda);

// Label-derived targets Y L (no normalization).
struct InvariantTargets {
  Matrix t;
};
InvariantTargets recast_invariant(const Matrix& y, const PriorMatrix& prior);

struct RscEpochStats {
  double label = 0.0;
  double disc = 0.0;
  double mse = 0.0;
  double total = 0.0;
  double q = 0.0;
  double label_residual = 0.0;  // mean ||f~ W - y~||, diagnostic only
  double seconds = 0.0;
};

struct RscTraining {
  EncoderParams encoder;
  std::vector<RscEpochStats> epochs;
  std::uint64_t seed = 0;
};

// Trains a freshly initialized encoder against the fixed prior.
RscTraining train_rsc_for_modality(const ModalityData& data, std::size_t num_classes, const PriorMatrix& prior,
                                   const RunConfig& cfg, std::size_t modality_index);

// The prior actually used in RSC: the selected (or random) W with L being
// its pseudo-inverse, or W^T under the use_transpose ablation.
PriorMatrix prepare_prior(PriorMatrix prior, const RunConfig& cfg);

struct TrainResult {
  PriorMatrix prior;
  std::optional<SplReport> spl;  // empty when SPL was skipped
  std::vector<std::string> modalities;
  std::vector<RscTraining> encoders;
};

// SPL (or the random prior), then independent RSC per modality. With
// cfg.threads > 1 the per-modality runs execute concurrently; results do not
// depend on the thread count.
TrainResult train_all(const MultimodalDataset& dataset, const RunConfig& cfg);

// Per-epoch loss components, q, timings and seeds.
nlohmann::json training_report(const TrainResult& result, const RunConfig& cfg);

}  // namespace drcl
