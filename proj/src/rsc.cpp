#include "drcl/rsc.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <stdexcept>

#include "drcl/errors.hpp"
#include "drcl/kernels.hpp"
#include "drcl/losses.hpp"
#include "drcl/numerics.hpp"

namespace drcl {

Matrix mix_rows(const Matrix& m, std::span<const std::size_t> partner, double lambda) {
  if (partner.size() != m.rows()) throw ShapeError("mix_rows: partner map length != rows");
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto a = m.row(i);
    const auto b = m.row(partner[i]);
    auto o = out.row(i);
    for (std::size_t c = 0; c < o.size(); ++c) o[c] = lambda * a[c] + (1.0 - lambda) * b[c];
  }
  return out;
}

Matrix mix_rows_backward(const Matrix& grad_mixed, std::span<const std::size_t> partner, double lambda) {
  if (partner.size() != grad_mixed.rows()) throw ShapeError("mix_rows_backward: partner map length != rows");
  Matrix g(grad_mixed.rows(), grad_mixed.cols());
  for (std::size_t i = 0; i < grad_mixed.rows(); ++i) {
    const auto gm = grad_mixed.row(i);
    auto gi = g.row(i);
    auto gp = g.row(partner[i]);
    for (std::size_t c = 0; c < gm.size(); ++c) {
      gi[c] += lambda * gm[c];
      gp[c] += (1.0 - lambda) * gm[c];
    }
  }
  return g;
}

AugmentedBatch feature_augment(const Matrix& f, const Matrix& y, double lambda, SeededRng& rng) {
  if (f.rows() < 2) throw ShapeError("feature_augment: batch needs at least 2 rows");
  if (f.rows() != y.rows()) throw ShapeError("feature_augment: embeddings and labels differ in batch size");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw std::invalid_argument("feature_augment: lambda must lie in (0, 1]");
  AugmentedBatch batch;
  batch.partner = rng.permutation(f.rows());
  batch.lambda = lambda;
  batch.f = mix_rows(f, batch.partner, lambda);
  batch.y = mix_rows(y, batch.partner, lambda);
  return batch;
}

InvariantTargets recast_invariant(const Matrix& y, const PriorMatrix& prior) {
  if (prior.l.empty()) throw std::invalid_argument("recast_invariant: prior has no cached inverse");
  if (y.cols() != prior.l.rows()) throw ShapeError("recast_invariant: label width does not match L");
  return {kernels::matmul(y, prior.l)};
}

PriorMatrix prepare_prior(PriorMatrix prior, const RunConfig& cfg) {
  prior.l = cfg.ablation.use_transpose ? prior.w.transposed() : pseudo_inverse(prior.w);
  return prior;
}

namespace {

double mean_label_residual(const Matrix& f, const Matrix& y, const Matrix& w) {
  const Matrix r = kernels::matmul(f, w) - y;
  double s = 0.0;
  for (std::size_t i = 0; i < r.rows(); ++i) s += norm2(r.row(i));
  return s / static_cast<double>(r.rows());
}

}  // namespace

RscTraining train_rsc_for_modality(const ModalityData& data, std::size_t num_classes, const PriorMatrix& prior,
                                   const RunConfig& cfg, std::size_t modality_index) {
  if (prior.w.rows() != cfg.dim || prior.w.cols() != num_classes)
    throw ShapeError("train_rsc_for_modality: prior does not match dim x num_classes");

  RscTraining out;
  out.seed = derive_seed(cfg.seed, stream::kRscEncoder, modality_index);
  SeededRng init_rng(out.seed);
  SeededRng batch_rng(derive_seed(cfg.seed, stream::kRscBatches, modality_index));
  SeededRng mix_rng(derive_seed(cfg.seed, stream::kRscMixing, modality_index));
  out.encoder = init_params(data.dim(), cfg.hidden, cfg.dim, init_rng);

  const AblationFlags& ab = cfg.ablation;
  const TotalLossWeights weights{ab.drop_label ? 0.0 : 1.0, ab.drop_disc ? 0.0 : cfg.alpha,
                                 ab.drop_mse ? 0.0 : cfg.beta};
  const QSchedule schedule{cfg.q_start, 1.0, cfg.rsc_epochs};

  for (std::size_t epoch = 0; epoch < cfg.rsc_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    RscEpochStats stats;
    stats.q = ab.fixed_q ? *ab.fixed_q : q_at(schedule, epoch);

    for (const auto& batch : minibatch_iter(data, cfg.batch_size, batch_rng)) {
      const Matrix x = data.features.gather_rows(batch);
      const Matrix y = data.one_hot(batch, num_classes);

      ForwardCache cache;
      Matrix f_mixed, y_mixed;
      std::vector<std::size_t> partner;
      if (ab.fa_input_space) {
        if (x.rows() < 2) throw ShapeError("input-space mixing needs batches of at least 2 rows");
        partner = mix_rng.permutation(x.rows());
        cache = forward(out.encoder, mix_rows(x, partner, cfg.lambda));
        f_mixed = cache.output;
        y_mixed = mix_rows(y, partner, cfg.lambda);
      } else if (ab.fa_off) {
        cache = forward(out.encoder, x);
        f_mixed = cache.output;
        y_mixed = y;
      } else {
        cache = forward(out.encoder, x);
        AugmentedBatch aug = feature_augment(cache.output, y, cfg.lambda, mix_rng);
        partner = std::move(aug.partner);
        f_mixed = std::move(aug.f);
        y_mixed = std::move(aug.y);
      }

      const TotalLoss loss = total_loss(f_mixed, y_mixed, prior.w, prior.l, stats.q, weights, ab.fixed_q.has_value());
      if (!std::isfinite(loss.value))
        throw NumericError("RSC: non-finite loss on modality '" + data.name + "'");

      // In embedding-space mixing the gradient flows back through both mixing branches.
      const bool embedding_mix = !ab.fa_input_space && !ab.fa_off;
      const Matrix grad_f = embedding_mix ? mix_rows_backward(loss.grad_f, partner, cfg.lambda) : loss.grad_f;
      sgd_step(out.encoder, backward(out.encoder, cache, grad_f), cfg.lr);

      const auto weight = static_cast<double>(batch.size());
      stats.label += weight * loss.label;
      stats.disc += weight * loss.disc;
      stats.mse += weight * loss.mse;
      stats.total += weight * loss.value;
      stats.label_residual += weight * mean_label_residual(f_mixed, y_mixed, prior.w);
    }
    const auto n = static_cast<double>(data.size());
    stats.label /= n;
    stats.disc /= n;
    stats.mse /= n;
    stats.total /= n;
    stats.label_residual /= n;
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.epochs.push_back(stats);
  }
  return out;
}

TrainResult train_all(const MultimodalDataset& dataset, const RunConfig& cfg) {
  cfg.validate();
  TrainResult result;
  if (cfg.ablation.skip_spl) {
    result.prior = random_prior(cfg, dataset.num_classes);
  } else {
    SplResult spl = run_spl(dataset, cfg);
    result.prior = std::move(spl.prior);
    result.spl = std::move(spl.report);
  }
  result.prior = prepare_prior(std::move(result.prior), cfg);

  const std::size_t k_count = dataset.train.size();
  result.encoders.resize(k_count);
  std::vector<std::exception_ptr> errors(k_count);
  const auto n = static_cast<std::ptrdiff_t>(k_count);
#pragma omp parallel for schedule(static, 1) num_threads(cfg.threads) if (cfg.threads > 1)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    try {
      result.encoders[k] = train_rsc_for_modality(dataset.train[k], dataset.num_classes, result.prior, cfg, k);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  for (const auto& m : dataset.train) result.modalities.push_back(m.name);
  return result;
}

nlohmann::json training_report(const TrainResult& result, const RunConfig& cfg) {
  using nlohmann::json;
  json mods = json::array();
  for (std::size_t k = 0; k < result.encoders.size(); ++k) {
    json epochs = json::array();
    const auto& e = result.encoders[k].epochs;
    for (std::size_t t = 0; t < e.size(); ++t)
      epochs.push_back({{"epoch", t},
                        {"q", e[t].q},
                        {"J_L", e[t].label},
                        {"J_D", e[t].disc},
                        {"J_MSE", e[t].mse},
                        {"J", e[t].total},
                        {"label_residual", e[t].label_residual},
                        {"seconds", e[t].seconds}});
    mods.push_back({{"name", result.modalities.at(k)}, {"seed", result.encoders[k].seed}, {"epochs", std::move(epochs)}});
  }
  return {{"seed", cfg.seed},
          {"prior", {{"source", result.prior.source}, {"score", result.prior.score}, {"seed", result.prior.seed}}},
          {"spl", result.spl ? to_json(*result.spl) : json(nullptr)},
          {"rsc", std::move(mods)}};
}

}  // namespace drcl
