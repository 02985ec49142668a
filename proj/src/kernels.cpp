#include "drcl/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "drcl/errors.hpp"
#include "drcl/numerics.hpp"

namespace drcl::kernels {

namespace {

// Below this many multiply-adds the fork/join costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 14;

void check_inner(std::size_t a, std::size_t b, const char* op) {
  if (a != b) throw ShapeError(std::string(op) + ": inner dimension mismatch");
}

struct NormalizedRows {
  Matrix unit;                // rows scaled to unit norm (zero when degenerate)
  std::vector<double> norms;  // original norms
  std::vector<char> valid;    // norm > kNormEpsilon
};

NormalizedRows normalize_rows(const Matrix& m) {
  NormalizedRows out{Matrix(m.rows(), m.cols()), std::vector<double>(m.rows()), std::vector<char>(m.rows())};
  const auto n = static_cast<std::ptrdiff_t>(m.rows());
#pragma omp parallel for schedule(static) if (m.size() > kParallelWork)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto src = m.row(i);
    const double norm = norm2(src);
    out.norms[i] = norm;
    out.valid[i] = norm > kNormEpsilon;
    if (out.valid[i]) {
      auto dst = out.unit.row(i);
      for (std::size_t c = 0; c < src.size(); ++c) dst[c] = src[c] / norm;
    }
  }
  return out;
}

double unit_cosine(const NormalizedRows& a, std::size_t i, const NormalizedRows& b, std::size_t j) {
  if (!a.valid[i] || !b.valid[j]) return 0.0;
  return std::clamp(dot(a.unit.row(i), b.unit.row(j)), -1.0, 1.0);
}

}  // namespace

void set_num_threads(int n) { omp_set_num_threads(std::max(1, n)); }

int num_threads() { return omp_get_max_threads(); }

Matrix matmul(const Matrix& a, const Matrix& b) {
  check_inner(a.cols(), b.rows(), "matmul");
  Matrix out(a.rows(), b.cols());
  const auto n = static_cast<std::ptrdiff_t>(a.rows());
  const std::size_t inner = a.cols();
  const std::size_t cols = b.cols();
#pragma omp parallel for schedule(static) if (a.rows() * inner * cols > kParallelWork)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double* o = out.row(i).data();
    const double* ai = a.row(i).data();
    for (std::size_t k = 0; k < inner; ++k) {
      const double aik = ai[k];
      const double* bk = b.row(k).data();
      for (std::size_t j = 0; j < cols; ++j) o[j] += aik * bk[j];
    }
  }
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  check_inner(a.rows(), b.rows(), "matmul_tn");
  Matrix out(a.cols(), b.cols());
  const auto m = static_cast<std::ptrdiff_t>(a.cols());
  const std::size_t inner = a.rows();
  const std::size_t cols = b.cols();
#pragma omp parallel for schedule(static) if (a.cols() * inner * cols > kParallelWork)
  for (std::ptrdiff_t i = 0; i < m; ++i) {
    double* o = out.row(i).data();
    for (std::size_t r = 0; r < inner; ++r) {
      const double ari = a(r, i);
      const double* br = b.row(r).data();
      for (std::size_t j = 0; j < cols; ++j) o[j] += ari * br[j];
    }
  }
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  check_inner(a.cols(), b.cols(), "matmul_nt");
  Matrix out(a.rows(), b.rows());
  const auto n = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static) if (a.rows() * a.cols() * b.rows() > kParallelWork)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = dot(a.row(i), b.row(j));
  return out;
}

PairwiseCosineResult pairwise_cosine_consistency(const Matrix& f, const Matrix& t) {
  if (f.rows() != t.rows() || f.cols() != t.cols())
    throw ShapeError("pairwise_cosine_consistency: F and T must have the same shape");
  const std::size_t b = f.rows();
  const std::size_t d = f.cols();
  const auto nb = static_cast<std::ptrdiff_t>(b);
  const bool parallel = b * b * d > kParallelWork;

  const NormalizedRows fu = normalize_rows(f);
  const NormalizedRows tu = normalize_rows(t);

  // cff(i,j) = cos(f_i, f_j), ctt(i,j) = cos(t_i, t_j), ctf(i,j) = cos(t_i, f_j)
  Matrix cff(b, b), ctt(b, b), ctf(b, b);
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t i = 0; i < nb; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      cff(i, j) = unit_cosine(fu, i, fu, j);
      ctt(i, j) = unit_cosine(tu, i, tu, j);
      ctf(i, j) = unit_cosine(tu, i, fu, j);
    }
  }

  std::vector<double> row_value(b, 0.0);
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t i = 0; i < nb; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < b; ++j) {
      const double self = ctt(i, j) - cff(i, j);
      const double cross = ctf(i, j) - ctf(j, i);
      s += self * self + cross * cross;
    }
    row_value[i] = s;
  }

  const double scale = 1.0 / static_cast<double>(b * b);
  PairwiseCosineResult result;
  for (double v : row_value) result.value += v;
  result.value *= scale;

  // d cos(a, b) / da = (b_hat - cos * a_hat) / |a|
  result.grad = Matrix(b, d);
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t k = 0; k < nb; ++k) {
    if (!fu.valid[k]) continue;
    auto g = result.grad.row(k);
    const auto fk = fu.unit.row(k);
    for (std::size_t j = 0; j < b; ++j) {
      // Self term: both argument slots of cos(f_k, f_j) and cos(f_j, f_k).
      const double w_self = -4.0 * (ctt(k, j) - cff(k, j));
      // Cross term: cos(t_j, f_k) appears with coefficient 4 (M_jk - M_kj).
      const double w_cross = 4.0 * (ctf(j, k) - ctf(k, j));
      const auto fj = fu.unit.row(j);
      const auto tj = tu.unit.row(j);
      for (std::size_t c = 0; c < d; ++c) {
        g[c] += w_self * (fj[c] - cff(k, j) * fk[c]);
        g[c] += w_cross * (tj[c] - ctf(j, k) * fk[c]);
      }
    }
    const double inv = scale / fu.norms[k];
    for (double& v : g) v *= inv;
  }
  return result;
}

}  // namespace drcl::kernels
