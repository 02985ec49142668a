#include "drcl/numerics.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "drcl/errors.hpp"

namespace drcl {

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMajorMatrix> as_eigen(const Matrix& m) {
  return {m.data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols())};
}

Matrix from_eigen(const Eigen::MatrixXd& m) {
  Matrix out(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out(r, c) = m(r, c);
  return out;
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

NormalizeResult l2_normalize(std::span<const double> v) {
  if (v.empty()) throw ShapeError("l2_normalize: empty vector");
  NormalizeResult r;
  r.values.assign(v.begin(), v.end());
  r.norm = l2_normalize_inplace(r.values);
  r.degenerate = r.norm <= kNormEpsilon;
  return r;
}

double l2_normalize_inplace(std::span<double> v) {
  const double n = norm2(v);
  if (n > kNormEpsilon)
    for (double& x : v) x /= n;
  return n;
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw ShapeError("softmax: empty vector");
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return out;
}

std::vector<double> log_softmax(std::span<const double> logits) {
  if (logits.empty()) throw ShapeError("log_softmax: empty vector");
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - m);
  const double lse = m + std::log(sum);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("cosine: length mismatch");
  const double na = norm2(a);
  const double nb = norm2(b);
  if (na <= kNormEpsilon || nb <= kNormEpsilon) return 0.0;
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

Matrix pseudo_inverse(const Matrix& w) {
  if (w.empty()) throw ShapeError("pseudo_inverse: empty matrix");
  if (!w.all_finite()) throw NumericError("pseudo_inverse: non-finite input");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(as_eigen(w)), Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericError("pseudo_inverse: SVD did not converge");

  const Eigen::VectorXd& sigma = svd.singularValues();
  const double sigma_max = sigma.size() ? sigma(0) : 0.0;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sigma.size());
  for (Eigen::Index i = 0; i < sigma.size(); ++i)
    if (sigma(i) > kSvdRelativeCutoff * sigma_max) inv(i) = 1.0 / sigma(i);

  const Eigen::MatrixXd l = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
  Matrix out = from_eigen(l);
  if (!out.all_finite()) throw NumericError("pseudo_inverse: non-finite result");
  return out;
}

Matrix random_orthogonal(std::size_t d, std::size_t c, SeededRng& rng) {
  if (d == 0 || c == 0) throw ShapeError("random_orthogonal: dimensions must be >= 1");
  if (d < c) throw ShapeError("random_orthogonal: requires d >= C");

  Eigen::MatrixXd g(d, c);
  // Row-major fill order fixes the draw sequence.
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t k = 0; k < c; ++k) g(r, k) = rng.normal();

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, c);
  const Eigen::MatrixXd& packed = qr.matrixQR();
  for (std::size_t k = 0; k < c; ++k)
    if (packed(k, k) < 0.0) q.col(k) *= -1.0;
  return from_eigen(q);
}

}  // namespace drcl
