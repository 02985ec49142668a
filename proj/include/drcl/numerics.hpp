#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "drcl/matrix.hpp"
#include "drcl/rng.hpp"

namespace drcl {

inline constexpr double kNormEpsilon = 1e-12;
inline constexpr double kSvdRelativeCutoff = 1e-10;

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);

struct NormalizeResult {
  std::vector<double> values;
  double norm = 0.0;
  bool degenerate = false;  // input norm <= kNormEpsilon; values returned unchanged
};

NormalizeResult l2_normalize(std::span<const double> v);

// In-place variant used on matrix rows. Returns the pre-normalization norm;
// rows with norm <= kNormEpsilon are left untouched.
double l2_normalize_inplace(std::span<double> v);

// Max-subtracted softmax.
std::vector<double> softmax(std::span<const double> logits);
// log-softmax, same stabilization.
std::vector<double> log_softmax(std::span<const double> logits);

// Cosine similarity clamped to [-1, 1]; 0 when either side has norm <= kNormEpsilon.
double cosine(std::span<const double> a, std::span<const double> b);

// Moore-Penrose pseudo-inverse by SVD; singular values <= kSvdRelativeCutoff * sigma_max
// are treated as zero. Throws NumericError if the decomposition fails.
Matrix pseudo_inverse(const Matrix& w);

// d x C matrix with orthonormal columns: thin QR of a standard-Gaussian
// draw, with the diagonal of R made positive. Throws ShapeError if d < C.
Matrix random_orthogonal(std::size_t d, std::size_t c, SeededRng& rng);

}  // namespace drcl
