#include "drcl/spl.hpp"

#include <cmath>
#include <exception>
#include <fstream>
#include <stdexcept>

#include "drcl/errors.hpp"
#include "drcl/losses.hpp"
#include "drcl/numerics.hpp"

namespace drcl {

std::vector<double> PriorMatrix::column(std::size_t c) const {
  std::vector<double> col(w.rows());
  for (std::size_t r = 0; r < w.rows(); ++r) col[r] = w(r, c);
  return col;
}

PriorTraining train_prior_for_modality(const ModalityData& data, std::size_t num_classes, const Matrix& w_init,
                                       const RunConfig& cfg, std::size_t modality_index) {
  if (w_init.rows() != cfg.dim || w_init.cols() != num_classes)
    throw ShapeError("train_prior_for_modality: W_init must be dim x num_classes");

  SeededRng init_rng(derive_seed(cfg.seed, stream::kSplEncoder, modality_index));
  SeededRng batch_rng(derive_seed(cfg.seed, stream::kSplBatches, modality_index));

  PriorTraining out;
  out.encoder = init_params(data.dim(), cfg.hidden, cfg.dim, init_rng);
  Matrix w = w_init;
  const QSchedule schedule{cfg.q_start, 1.0, cfg.spl_epochs};

  for (std::size_t epoch = 0; epoch < cfg.spl_epochs; ++epoch) {
    const double q = q_at(schedule, epoch);
    double epoch_loss = 0.0;
    for (const auto& batch : minibatch_iter(data, cfg.batch_size, batch_rng)) {
      const ForwardCache cache = forward(out.encoder, data.features.gather_rows(batch));
      const LossValue loss = prior_loss(cache.output, data.one_hot(batch, num_classes), w, q);
      if (!std::isfinite(loss.value))
        throw NumericError("SPL: non-finite prior loss on modality '" + data.name + "'");
      sgd_step(out.encoder, backward(out.encoder, cache, loss.grad_f), cfg.lr);
      auto wv = w.values();
      const auto gv = loss.grad_w.values();
      for (std::size_t i = 0; i < wv.size(); ++i) wv[i] -= cfg.lr * gv[i];
      epoch_loss += loss.value * static_cast<double>(batch.size());
    }
    out.epoch_losses.push_back(epoch_loss / static_cast<double>(data.size()));
  }

  out.candidate.score = quality_score(encode(out.encoder, data.features), data.one_hot(num_classes), w);
  out.candidate.w = std::move(w);
  out.candidate.modality = data.name;
  return out;
}

namespace {

// First index attaining the maximum score.
std::size_t best_candidate(std::span<const PriorCandidate> candidates) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < candidates.size(); ++k)
    if (candidates[k].score > candidates[best].score) best = k;
  return best;
}

}  // namespace

PriorMatrix select_prior(std::span<const PriorCandidate> candidates) {
  if (candidates.empty()) throw std::invalid_argument("select_prior: no candidates");
  const std::size_t best = best_candidate(candidates);
  PriorMatrix prior;
  prior.w = candidates[best].w;
  prior.l = pseudo_inverse(prior.w);
  prior.score = candidates[best].score;
  prior.source = candidates[best].modality;
  return prior;
}

Matrix initial_prior_weights(const RunConfig& cfg, std::size_t num_classes) {
  if (cfg.dim < num_classes)
    throw ConfigError("dim (" + std::to_string(cfg.dim) + ") must be >= the number of classes (" +
                      std::to_string(num_classes) + ") for an orthogonal starting prior");
  SeededRng rng(derive_seed(cfg.seed, stream::kPriorInit));
  return random_orthogonal(cfg.dim, num_classes, rng);
}

SplResult run_spl(const MultimodalDataset& dataset, const RunConfig& cfg) {
  const Matrix w_random = initial_prior_weights(cfg, dataset.num_classes);
  const std::size_t k_count = dataset.train.size();
  if (k_count == 0) throw std::invalid_argument("run_spl: dataset has no modalities");

  std::vector<PriorTraining> runs(k_count);
  std::vector<std::exception_ptr> errors(k_count);
  const auto n = static_cast<std::ptrdiff_t>(k_count);
#pragma omp parallel for schedule(static, 1) num_threads(cfg.threads) if (cfg.threads > 1)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    try {
      runs[k] = train_prior_for_modality(dataset.train[k], dataset.num_classes, w_random, cfg, k);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<PriorCandidate> candidates;
  SplResult result;
  for (auto& r : runs) {
    result.report.modalities.push_back(r.candidate.modality);
    result.report.scores.push_back(r.candidate.score);
    result.report.epoch_losses.push_back(std::move(r.epoch_losses));
    candidates.push_back(std::move(r.candidate));
  }
  result.prior = select_prior(candidates);
  result.prior.seed = cfg.seed;
  result.report.chosen = best_candidate(candidates);
  return result;
}

PriorMatrix random_prior(const RunConfig& cfg, std::size_t num_classes) {
  PriorMatrix prior;
  prior.w = initial_prior_weights(cfg, num_classes);
  prior.l = pseudo_inverse(prior.w);
  prior.source = kRandomPriorSource;
  prior.seed = cfg.seed;
  return prior;
}

void save_prior(const std::filesystem::path& path, const PriorMatrix& prior) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write prior: " + path.string());
  const nlohmann::json header = {{"format", "drcl-prior"}, {"d", prior.dim()},         {"C", prior.num_classes()},
                                 {"score", prior.score},   {"source", prior.source}, {"seed", prior.seed}};
  out << header.dump() << '\n';
  write_features(out, prior.w);
  write_features(out, prior.l);
  if (!out) throw IoError("prior write failed: " + path.string());
}

PriorMatrix load_prior(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open prior: " + path.string());
  std::string line;
  std::getline(in, line);
  PriorMatrix prior;
  try {
    const auto header = nlohmann::json::parse(line);
    if (header.at("format").get<std::string>() != "drcl-prior") throw SchemaError("not a prior file");
    prior.score = header.at("score").get<double>();
    prior.source = header.at("source").get<std::string>();
    prior.seed = header.at("seed").get<std::uint64_t>();
    prior.w = read_features(in);
    prior.l = read_features(in);
    if (prior.w.rows() != header.at("d").get<std::size_t>() || prior.w.cols() != header.at("C").get<std::size_t>() ||
        prior.l.rows() != prior.w.cols() || prior.l.cols() != prior.w.rows())
      throw SchemaError("prior tensors do not match header dimensions");
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("prior header invalid: " + path.string() + ": " + e.what());
  }
  return prior;
}

nlohmann::json to_json(const SplReport& report) {
  nlohmann::json mods = nlohmann::json::array();
  for (std::size_t k = 0; k < report.modalities.size(); ++k)
    mods.push_back({{"name", report.modalities[k]}, {"score", report.scores[k]}, {"epoch_loss", report.epoch_losses[k]}});
  return {{"modalities", std::move(mods)}, {"chosen", report.modalities.at(report.chosen)}};
}

}  // namespace drcl
