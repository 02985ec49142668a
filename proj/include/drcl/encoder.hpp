#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "drcl/matrix.hpp"
#include "drcl/rng.hpp"

namespace drcl {

// Modality-specific encoder: two ReLU hidden layers of width H and a linear
// representation layer of width d whose output rows are L2-normalized.
// Biases are stored as 1 x width matrices.
struct EncoderParams {
  Matrix w1, b1;  // D x H, 1 x H
  Matrix w2, b2;  // H x H, 1 x H
  Matrix w3, b3;  // H x d, 1 x d

  std::size_t input_dim() const noexcept { return w1.rows(); }
  std::size_t hidden() const noexcept { return w1.cols(); }
  std::size_t output_dim() const noexcept { return w3.cols(); }

  // The six tensors in checkpoint order.
  std::vector<Matrix*> tensors();
  std::vector<const Matrix*> tensors() const;

  friend bool operator==(const EncoderParams&, const EncoderParams&) = default;
};

// Gradients have exactly the parameter layout.
using EncoderGrads = EncoderParams;

struct ForwardCache {
  Matrix input;          // B x D
  Matrix z1, a1;         // B x H
  Matrix z2, a2;         // B x H
  Matrix z3;             // B x d, before normalization
  Matrix output;         // B x d, normalized
  std::vector<double> norms;          // per-row ||z3||
  std::vector<bool> degenerate;       // per-row norm <= kNormEpsilon
};

// Weights ~ U(-sqrt(3/fan_in), sqrt(3/fan_in)), biases zero.
EncoderParams init_params(std::size_t input_dim, std::size_t hidden, std::size_t output_dim, SeededRng& rng);

// Throws ShapeError when x.cols() != input_dim.
ForwardCache forward(const EncoderParams& params, const Matrix& x);

// Convenience wrapper when no cache is needed.
Matrix encode(const EncoderParams& params, const Matrix& x);

// Backpropagates dJ/dF through the normalization, linear and ReLU layers.
// ReLU'(0) = 0. Degenerate rows pass the gradient through unchanged (the
// forward left them unnormalized).
EncoderGrads backward(const EncoderParams& params, const ForwardCache& cache, const Matrix& grad_output);

// Like backward(), additionally returning dJ/dX (used when mixing happens in
// the input space and by the gradient tests).
EncoderGrads backward(const EncoderParams& params, const ForwardCache& cache, const Matrix& grad_output,
                      Matrix* grad_input);

// theta <- theta - lr * g. Throws ShapeError on layout mismatch, std::invalid_argument if lr <= 0.
void sgd_step(EncoderParams& params, const EncoderGrads& grads, double lr);

// Checkpoint: one line of JSON {"format":"drcl-encoder","modality",
// "input_dim","hidden","output_dim"} terminated by '\n', followed by
// w1, b1, w2, b2, w3, b3 each as a DFM1 block.
void save_checkpoint(const std::filesystem::path& path, const EncoderParams& params, const std::string& modality);
struct Checkpoint {
  std::string modality;
  EncoderParams params;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace drcl
