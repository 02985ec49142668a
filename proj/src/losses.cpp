#include "drcl/losses.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "drcl/errors.hpp"
#include "drcl/kernels.hpp"
#include "drcl/numerics.hpp"

namespace drcl {

namespace {

void check_q(double q, bool allow_above_one) {
  if (!(q > 0.0) || !std::isfinite(q)) throw std::invalid_argument("q must be > 0, got " + std::to_string(q));
  if (q > 1.0 && !allow_above_one)
    throw std::invalid_argument("q must lie in (0, 1]; q > 1 is only accepted in ablation mode");
}

void check_label_shapes(const Matrix& f, const Matrix& y, const Matrix& w) {
  if (f.rows() != y.rows()) throw ShapeError("embeddings and labels have different batch sizes");
  if (f.cols() != w.rows()) throw ShapeError("embedding dimension does not match W rows");
  if (y.cols() != w.cols()) throw ShapeError("label width does not match W columns");
  for (double v : y.values())
    if (v < 0.0 || !std::isfinite(v)) throw std::invalid_argument("label entries must be finite and >= 0");
}

void check_target_shapes(const Matrix& f, const Matrix& y, const Matrix& l) {
  if (f.rows() != y.rows()) throw ShapeError("embeddings and labels have different batch sizes");
  if (y.cols() != l.rows()) throw ShapeError("label width does not match L rows");
  if (f.cols() != l.cols()) throw ShapeError("embedding dimension does not match L columns");
}

// log of p_i = sum_c y_ic softmax_c(z_i), from the log-softmax row.
double log_label_mass(std::span<const double> y, std::span<const double> log_s) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < y.size(); ++c)
    if (y[c] > 0.0) m = std::max(m, std::log(y[c]) + log_s[c]);
  if (!std::isfinite(m)) throw std::invalid_argument("label row has no positive mass");
  double s = 0.0;
  for (std::size_t c = 0; c < y.size(); ++c)
    if (y[c] > 0.0) s += std::exp(std::log(y[c]) + log_s[c] - m);
  return m + std::log(s);
}

struct GceResult {
  double value = 0.0;
  Matrix grad_logits;  // B x C
};

// (1/(qB)) sum_i (1 - p_i^q) and its gradient w.r.t. the logits:
//   dJ/dz_ic = -(1/B) p_i^(q-1) s_ic (y_ic - p_i)
GceResult gce_on_logits(const Matrix& logits, const Matrix& y, double q) {
  const std::size_t b = logits.rows();
  const double inv_b = 1.0 / static_cast<double>(b);
  GceResult r{0.0, Matrix(b, logits.cols())};
  for (std::size_t i = 0; i < b; ++i) {
    const auto log_s = log_softmax(logits.row(i));
    const auto yi = y.row(i);
    const double log_p = log_label_mass(yi, log_s);
    const double p = std::exp(log_p);
    r.value += gce_term(log_p, q);
    auto g = r.grad_logits.row(i);
    for (std::size_t c = 0; c < g.size(); ++c)
      g[c] = -inv_b * std::exp((q - 1.0) * log_p + log_s[c]) * (yi[c] - p);
  }
  r.value *= inv_b;
  return r;
}

}  // namespace

double q_at(const QSchedule& schedule, std::size_t epoch) {
  if (epoch >= schedule.total_epochs)
    throw std::out_of_range("q_at: epoch " + std::to_string(epoch) + " outside [0, " +
                            std::to_string(schedule.total_epochs) + ")");
  if (schedule.total_epochs == 1) return schedule.q_end;
  const double t = static_cast<double>(epoch) / static_cast<double>(schedule.total_epochs - 1);
  return schedule.q_start + (schedule.q_end - schedule.q_start) * t;
}

double gce_term(double log_p, double q) { return -std::expm1(q * log_p) / q; }

LossValue prior_loss(const Matrix& f, const Matrix& y, const Matrix& w, double q) {
  check_q(q, false);
  check_label_shapes(f, y, w);
  const GceResult g = gce_on_logits(kernels::matmul(f, w), y, q);
  return {g.value, kernels::matmul_nt(g.grad_logits, w), kernels::matmul_tn(f, g.grad_logits)};
}

double quality_score(const Matrix& f, const Matrix& y, const Matrix& w) {
  check_label_shapes(f, y, w);
  const Matrix logits = kernels::matmul(f, w);
  double s = 0.0;
  for (std::size_t i = 0; i < logits.rows(); ++i)
    s += std::exp(log_label_mass(y.row(i), log_softmax(logits.row(i))));
  return s / static_cast<double>(logits.rows());
}

LossValue label_loss(const Matrix& f, const Matrix& y, const Matrix& w, double q, bool allow_q_above_one) {
  check_q(q, allow_q_above_one);
  check_label_shapes(f, y, w);
  const GceResult g = gce_on_logits(kernels::matmul(f, w), y, q);
  return {g.value, kernels::matmul_nt(g.grad_logits, w), {}};
}

LossValue mse_loss(const Matrix& f, const Matrix& y, const Matrix& l) {
  check_target_shapes(f, y, l);
  const Matrix diff = f - kernels::matmul(y, l);
  const double inv_b = 1.0 / static_cast<double>(f.rows());
  double value = 0.0;
  for (double v : diff.values()) value += v * v;
  return {value * inv_b, (2.0 * inv_b) * diff, {}};
}

LossValue disc_loss(const Matrix& f, const Matrix& y, const Matrix& l) {
  check_target_shapes(f, y, l);
  auto r = kernels::pairwise_cosine_consistency(f, kernels::matmul(y, l));
  return {r.value, std::move(r.grad), {}};
}

TotalLoss total_loss(const Matrix& f, const Matrix& y, const Matrix& w, const Matrix& l, double q,
                     const TotalLossWeights& weights, bool allow_q_above_one) {
  if (!(weights.alpha >= 0.0) || !(weights.beta >= 0.0) || !(weights.label >= 0.0))
    throw std::invalid_argument("total_loss: weights must be >= 0");
  const LossValue jl = label_loss(f, y, w, q, allow_q_above_one);
  const LossValue jd = disc_loss(f, y, l);
  const LossValue jm = mse_loss(f, y, l);

  TotalLoss t;
  t.label = jl.value;
  t.disc = jd.value;
  t.mse = jm.value;
  t.value = weights.label * jl.value + weights.alpha * jd.value + weights.beta * jm.value;
  t.grad_f = Matrix(f.rows(), f.cols());
  auto g = t.grad_f.values();
  const auto gl = jl.grad_f.values();
  const auto gd = jd.grad_f.values();
  const auto gm = jm.grad_f.values();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = weights.label * gl[i] + weights.alpha * gd[i] + weights.beta * gm[i];
  return t;
}

}  // namespace drcl
