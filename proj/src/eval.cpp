#include "drcl/eval.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "drcl/errors.hpp"
#include "drcl/numerics.hpp"

namespace drcl {

namespace {

void check_retrieval_inputs(const Matrix& queries, std::span<const int> query_labels, const Matrix& gallery,
                            std::span<const int> gallery_labels) {
  if (gallery.empty() || gallery_labels.empty()) throw std::invalid_argument("retrieval: empty gallery");
  if (queries.rows() != query_labels.size()) throw ShapeError("retrieval: query rows != query labels");
  if (gallery.rows() != gallery_labels.size()) throw ShapeError("retrieval: gallery rows != gallery labels");
  if (queries.cols() != gallery.cols()) throw ShapeError("retrieval: query and gallery dimensions differ");
}

std::size_t effective_depth(const NRank& n_rank, std::size_t gallery_size) {
  return n_rank.depth ? std::min(*n_rank.depth, gallery_size) : gallery_size;
}

std::vector<int> relevance_of(std::span<const std::size_t> order, int query_label, std::span<const int> gallery_labels) {
  std::vector<int> rel(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) rel[k] = gallery_labels[order[k]] == query_label ? 1 : 0;
  return rel;
}

double query_ap(const Matrix& queries, std::size_t i, std::span<const int> query_labels, const Matrix& gallery,
                std::span<const int> gallery_labels, std::size_t depth) {
  const auto order = rank_gallery(queries.row(i), gallery);
  return average_precision(relevance_of(order, query_labels[i], gallery_labels), depth);
}

RetrievalResult finish(std::vector<double> ap, std::size_t depth) {
  RetrievalResult r;
  r.n_rank = depth;
  double sum = 0.0;
  for (double v : ap) sum += v;
  r.map = ap.empty() ? 0.0 : sum / static_cast<double>(ap.size());
  r.ap = std::move(ap);
  return r;
}

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace

Matrix embed(const EncoderParams& encoder, const Matrix& features) {
  if (features.cols() != encoder.input_dim())
    throw ShapeError("embed: features have " + std::to_string(features.cols()) + " columns, encoder expects " +
                     std::to_string(encoder.input_dim()));
  return encode(encoder, features);
}

std::vector<std::size_t> rank_gallery(std::span<const double> query, const Matrix& gallery) {
  if (gallery.empty()) throw std::invalid_argument("rank_gallery: empty gallery");
  std::vector<double> sim(gallery.rows());
  for (std::size_t j = 0; j < gallery.rows(); ++j) sim[j] = cosine(query, gallery.row(j));
  std::vector<std::size_t> order(gallery.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sim[a] > sim[b]; });
  return order;
}

double average_precision(std::span<const int> relevance, std::size_t n_rank) {
  if (relevance.empty()) throw std::out_of_range("average_precision: empty relevance list");
  if (n_rank < 1 || n_rank > relevance.size())
    throw std::out_of_range("average_precision: n_rank must lie in [1, " + std::to_string(relevance.size()) + "]");
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t k = 0; k < n_rank; ++k) {
    if (relevance[k] == 0) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(k + 1);
  }
  return hits == 0 ? 0.0 : sum / static_cast<double>(hits);
}

RetrievalResult map_score(const Matrix& queries, std::span<const int> query_labels, const Matrix& gallery,
                          std::span<const int> gallery_labels, const NRank& n_rank) {
  check_retrieval_inputs(queries, query_labels, gallery, gallery_labels);
  const std::size_t depth = effective_depth(n_rank, gallery.rows());
  std::vector<double> ap(queries.rows());
  const auto n = static_cast<std::ptrdiff_t>(queries.rows());
#pragma omp parallel for schedule(dynamic, 4) if (queries.rows() * gallery.rows() > 4096)
  for (std::ptrdiff_t i = 0; i < n; ++i) ap[i] = query_ap(queries, i, query_labels, gallery, gallery_labels, depth);
  return finish(std::move(ap), depth);
}

namespace serial {

RetrievalResult map_score(const Matrix& queries, std::span<const int> query_labels, const Matrix& gallery,
                          std::span<const int> gallery_labels, const NRank& n_rank) {
  check_retrieval_inputs(queries, query_labels, gallery, gallery_labels);
  const std::size_t depth = effective_depth(n_rank, gallery.rows());
  std::vector<double> ap(queries.rows());
  for (std::size_t i = 0; i < queries.rows(); ++i)
    ap[i] = query_ap(queries, i, query_labels, gallery, gallery_labels, depth);
  return finish(std::move(ap), depth);
}

}  // namespace serial

PrCurve pr_curve(const Matrix& queries, std::span<const int> query_labels, const Matrix& gallery,
                 std::span<const int> gallery_labels) {
  check_retrieval_inputs(queries, query_labels, gallery, gallery_labels);
  const std::size_t ng = gallery.rows();
  const std::size_t nq = queries.rows();
  // Per-query cumulative hit counts; summed in query order afterwards.
  std::vector<std::vector<std::size_t>> hits(nq, std::vector<std::size_t>(ng));
  std::vector<std::size_t> relevant_total(nq);
  const auto n = static_cast<std::ptrdiff_t>(nq);
#pragma omp parallel for schedule(dynamic, 4) if (nq * ng > 4096)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto rel = relevance_of(rank_gallery(queries.row(i), gallery), query_labels[i], gallery_labels);
    std::size_t h = 0;
    for (std::size_t k = 0; k < ng; ++k) hits[i][k] = h += static_cast<std::size_t>(rel[k]);
    relevant_total[i] = h;
  }

  PrCurve curve;
  curve.points.resize(ng);
  for (std::size_t k = 0; k < ng; ++k) {
    double recall = 0.0;
    double precision = 0.0;
    for (std::size_t i = 0; i < nq; ++i) {
      const auto h = static_cast<double>(hits[i][k]);
      if (relevant_total[i] > 0) recall += h / static_cast<double>(relevant_total[i]);
      precision += h / static_cast<double>(k + 1);
    }
    curve.points[k] = {k + 1, nq ? recall / static_cast<double>(nq) : 0.0, nq ? precision / static_cast<double>(nq) : 0.0};
  }
  return curve;
}

CrossModalTable cross_modal_eval(std::span<const EncoderParams> encoders, std::span<const ModalityData> split,
                                 const NRank& n_rank) {
  return cross_modal_eval(encoders, split, n_rank, nullptr);
}

CrossModalTable cross_modal_eval(std::span<const EncoderParams> encoders, std::span<const ModalityData> split,
                                 const NRank& n_rank, std::vector<PrCurve>* curves) {
  if (encoders.size() != split.size()) throw ShapeError("cross_modal_eval: one encoder per modality required");
  std::vector<Matrix> embeddings;
  for (std::size_t k = 0; k < split.size(); ++k) embeddings.push_back(embed(encoders[k], split[k].features));

  CrossModalTable table;
  table.n_rank = n_rank;
  if (curves) curves->clear();
  for (std::size_t a = 0; a < split.size(); ++a)
    for (std::size_t b = 0; b < split.size(); ++b) {
      if (a == b) continue;
      const auto r = map_score(embeddings[a], split[a].labels, embeddings[b], split[b].labels, n_rank);
      table.pairs.push_back({split[a].name, split[b].name, r.map});
      if (curves) curves->push_back(pr_curve(embeddings[a], split[a].labels, embeddings[b], split[b].labels));
    }
  double sum = 0.0;
  for (const auto& p : table.pairs) sum += p.map;
  table.avg = table.pairs.empty() ? 0.0 : sum / static_cast<double>(table.pairs.size());
  return table;
}

nlohmann::json to_json(const CrossModalTable& table) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : table.pairs) pairs.push_back({{"query", p.query}, {"gallery", p.gallery}, {"map", p.map}});
  nlohmann::json n_rank = table.n_rank.depth ? nlohmann::json(*table.n_rank.depth) : nlohmann::json("all");
  return {{"pairs", std::move(pairs)}, {"avg", table.avg}, {"n_rank", std::move(n_rank)}};
}

void write_pr_csv(const std::filesystem::path& path, const PrCurve& curve) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write PR curve: " + path.string());
  out << "rank,recall,precision\n";
  for (const auto& p : curve.points)
    out << p.rank << ',' << format_double(p.recall) << ',' << format_double(p.precision) << '\n';
  if (!out) throw IoError("PR curve write failed: " + path.string());
}

}  // namespace drcl
