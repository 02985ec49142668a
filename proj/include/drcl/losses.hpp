#pragma once

#include <cstddef>

#include "drcl/matrix.hpp"

namespace drcl {

// Linear ramp of the hardness factor q over the training epochs.
struct QSchedule {
  double q_start = 0.01;
  double q_end = 1.0;
  std::size_t total_epochs = 1;
};

// q_start + (q_end - q_start) * epoch / (total_epochs - 1); q_end when
// total_epochs == 1. Throws std::out_of_range for epoch >= total_epochs.
double q_at(const QSchedule& schedule, std::size_t epoch);

struct LossValue {
  double value = 0.0;
  Matrix grad_f;  // w.r.t. the embeddings
  Matrix grad_w;  // w.r.t. W; empty when W is not differentiated
};

// The generalized cross-entropy term (1 - p^q) / q, evaluated from log p so
// it stays accurate as q -> 0 (where it tends to -ln p).
double gce_term(double log_p, double q);

// (1/(qB)) sum_i (1 - p_i^q), p_i = sum_c y_ic softmax_c(f_i W).
// Gradients w.r.t. F and W. Requires q in (0, 1].
LossValue prior_loss(const Matrix& f, const Matrix& y, const Matrix& w, double q);

// Mean true-class softmax probability. Strictly inside (0, 1) for finite logits.
double quality_score(const Matrix& f, const Matrix& y, const Matrix& w);

// Same form as prior_loss with soft labels; W is held fixed (no grad_w).
// Soft-label rows must be nonnegative. q > 1 is only accepted with
// allow_q_above_one (ablation runs).
LossValue label_loss(const Matrix& f, const Matrix& y, const Matrix& w, double q, bool allow_q_above_one = false);

// (1/B) sum_i ||f_i - y_i L||^2.
LossValue mse_loss(const Matrix& f, const Matrix& y, const Matrix& l);

// Pairwise cosine consistency between embeddings and recast targets y_i L.
LossValue disc_loss(const Matrix& f, const Matrix& y, const Matrix& l);

struct TotalLossWeights {
  double label = 1.0;  // 0 drops the label term
  double alpha = 0.1;  // discrimination term
  double beta = 0.1;   // MSE term
};

struct TotalLoss {
  double value = 0.0;
  double label = 0.0;
  double disc = 0.0;
  double mse = 0.0;
  Matrix grad_f;
};

// J = label * J_L + alpha * J_D + beta * J_MSE. Component values are always
// reported, even for terms with weight zero.
TotalLoss total_loss(const Matrix& f, const Matrix& y, const Matrix& w, const Matrix& l, double q,
                     const TotalLossWeights& weights = {}, bool allow_q_above_one = false);

}  // namespace drcl
