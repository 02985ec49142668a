#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "drcl/config.hpp"
#include "drcl/data.hpp"
#include "drcl/encoder.hpp"
#include "drcl/matrix.hpp"

namespace drcl {

// Forward pass at test time. Each row is encoded independently, so a row's
// embedding does not depend on what else is in the batch.
Matrix embed(const EncoderParams& encoder, const Matrix& features);

// Gallery indices by descending cosine to the query; ties by ascending index.
std::vector<std::size_t> rank_gallery(std::span<const double> query, const Matrix& gallery);

// (1/R) sum_{k<=n_rank} (R_k / k) * rel_k, R = relevant items in the top
// n_rank, R_k = relevant items in the top k. 0 when R = 0.
// Throws std::out_of_range unless 1 <= n_rank <= relevance.size().
double average_precision(std::span<const int> relevance, std::size_t n_rank);

struct RetrievalResult {
  std::vector<double> ap;  // per query
  std::size_t n_rank = 0;  // effective depth after clamping
  double map = 0.0;
};

// Relevance is label equality. An n_rank deeper than the gallery is clamped.
// Per-query work runs in parallel; the mean is summed in query order.
RetrievalResult map_score(const Matrix& queries, std::span<const int> query_labels, const Matrix& gallery,
                          std::span<const int> gallery_labels, const NRank& n_rank);

struct PrPoint {
  std::size_t rank = 0;
  double recall = 0.0;
  double precision = 0.0;
};

// Precision and recall at every cutoff k = 1..N_g, averaged over queries at
// fixed k. Queries without any relevant gallery item count as recall 0.
struct PrCurve {
  std::vector<PrPoint> points;
};

PrCurve pr_curve(const Matrix& queries, std::span<const int> query_labels, const Matrix& gallery,
                 std::span<const int> gallery_labels);

struct PairScore {
  std::string query;
  std::string gallery;
  double map = 0.0;
};

struct CrossModalTable {
  std::vector<PairScore> pairs;  // every ordered pair (a, b), a != b
  double avg = 0.0;
  NRank n_rank;
};

// Each modality's split is embedded with its own encoder; queries from
// modality a are ranked against the gallery of modality b.
CrossModalTable cross_modal_eval(std::span<const EncoderParams> encoders, std::span<const ModalityData> split,
                                 const NRank& n_rank);

// Same, also returning the PR curve of every pair (in pair order).
CrossModalTable cross_modal_eval(std::span<const EncoderParams> encoders, std::span<const ModalityData> split,
                                 const NRank& n_rank, std::vector<PrCurve>* curves);

nlohmann::json to_json(const CrossModalTable& table);
void write_pr_csv(const std::filesystem::path& path, const PrCurve& curve);

namespace serial {
RetrievalResult map_score(const Matrix& queries, std::span<const int> query_labels, const Matrix& gallery,
                          std::span<const int> gallery_labels, const NRank& n_rank);
}  // namespace serial

}  // namespace drcl
