// Straightforward single-threaded versions of the kernels in kernels.cpp.
// Kept as the reference the parallel code is tested and benchmarked against.

#include <cstddef>
#include <vector>

#include "drcl/errors.hpp"
#include "drcl/kernels.hpp"
#include "drcl/numerics.hpp"

namespace drcl::kernels::serial {

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ShapeError("matmul: inner dimension mismatch");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) { return matmul(a.transposed(), b); }

Matrix matmul_nt(const Matrix& a, const Matrix& b) { return matmul(a, b.transposed()); }

namespace {

// Adds coeff * d cos(a, b) / da to g.
void add_cosine_grad(std::span<double> g, std::span<const double> a, std::span<const double> b, double coeff) {
  const double na = norm2(a);
  const double nb = norm2(b);
  if (na <= kNormEpsilon || nb <= kNormEpsilon) return;
  const double c = cosine(a, b);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += coeff * (b[i] / nb - c * a[i] / na) / na;
}

}  // namespace

PairwiseCosineResult pairwise_cosine_consistency(const Matrix& f, const Matrix& t) {
  if (f.rows() != t.rows() || f.cols() != t.cols())
    throw ShapeError("pairwise_cosine_consistency: F and T must have the same shape");
  const std::size_t b = f.rows();
  const double scale = 1.0 / static_cast<double>(b * b);

  PairwiseCosineResult result;
  result.grad = Matrix(f.rows(), f.cols());
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      const double self = cosine(t.row(i), t.row(j)) - cosine(f.row(i), f.row(j));
      const double cross = cosine(t.row(i), f.row(j)) - cosine(f.row(i), t.row(j));
      result.value += scale * (self * self + cross * cross);

      // self^2: depends on f_i and f_j through cos(f_i, f_j)
      add_cosine_grad(result.grad.row(i), f.row(i), f.row(j), -2.0 * self * scale);
      add_cosine_grad(result.grad.row(j), f.row(j), f.row(i), -2.0 * self * scale);
      // cross^2: + on cos(t_i, f_j), - on cos(f_i, t_j)
      add_cosine_grad(result.grad.row(j), f.row(j), t.row(i), 2.0 * cross * scale);
      add_cosine_grad(result.grad.row(i), f.row(i), t.row(j), -2.0 * cross * scale);
    }
  }
  return result;
}

}  // namespace drcl::kernels::serial
