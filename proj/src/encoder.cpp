#include "drcl/encoder.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "drcl/data.hpp"
#include "drcl/errors.hpp"
#include "drcl/kernels.hpp"
#include "drcl/numerics.hpp"
#include "json.hpp"

namespace drcl {

namespace {

Matrix uniform_weights(std::size_t fan_in, std::size_t fan_out, SeededRng& rng) {
  const double bound = std::sqrt(3.0 / static_cast<double>(fan_in));
  Matrix w(fan_in, fan_out);
  for (double& v : w.values()) v = rng.uniform(-bound, bound);
  return w;
}

// x * w + b (b broadcast over rows)
Matrix affine(const Matrix& x, const Matrix& w, const Matrix& b) {
  Matrix z = kernels::matmul(x, w);
  for (std::size_t r = 0; r < z.rows(); ++r) {
    auto row = z.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += b(0, c);
  }
  return z;
}

Matrix relu(const Matrix& z) {
  Matrix a = z;
  for (double& v : a.values()) v = v > 0.0 ? v : 0.0;
  return a;
}

// Zeroes grad where the pre-activation was not strictly positive.
void relu_backward(Matrix& grad, const Matrix& z) {
  auto g = grad.values();
  auto zv = z.values();
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!(zv[i] > 0.0)) g[i] = 0.0;
}

Matrix column_sums(const Matrix& m) {
  Matrix s(1, m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) s(0, c) += m(r, c);
  return s;
}

void check_layout(const EncoderParams& a, const EncoderParams& b) {
  const auto ta = a.tensors();
  const auto tb = b.tensors();
  for (std::size_t i = 0; i < ta.size(); ++i)
    if (ta[i]->rows() != tb[i]->rows() || ta[i]->cols() != tb[i]->cols())
      throw ShapeError("encoder tensor layout mismatch");
}

}  // namespace

std::vector<Matrix*> EncoderParams::tensors() { return {&w1, &b1, &w2, &b2, &w3, &b3}; }

std::vector<const Matrix*> EncoderParams::tensors() const { return {&w1, &b1, &w2, &b2, &w3, &b3}; }

EncoderParams init_params(std::size_t input_dim, std::size_t hidden, std::size_t output_dim, SeededRng& rng) {
  if (input_dim == 0 || hidden == 0 || output_dim == 0) throw ShapeError("init_params: dimensions must be >= 1");
  EncoderParams p;
  p.w1 = uniform_weights(input_dim, hidden, rng);
  p.b1 = Matrix(1, hidden);
  p.w2 = uniform_weights(hidden, hidden, rng);
  p.b2 = Matrix(1, hidden);
  p.w3 = uniform_weights(hidden, output_dim, rng);
  p.b3 = Matrix(1, output_dim);
  return p;
}

ForwardCache forward(const EncoderParams& params, const Matrix& x) {
  if (x.cols() != params.input_dim())
    throw ShapeError("forward: input has " + std::to_string(x.cols()) + " columns, encoder expects " +
                     std::to_string(params.input_dim()));
  ForwardCache c;
  c.input = x;
  c.z1 = affine(x, params.w1, params.b1);
  c.a1 = relu(c.z1);
  c.z2 = affine(c.a1, params.w2, params.b2);
  c.a2 = relu(c.z2);
  c.z3 = affine(c.a2, params.w3, params.b3);
  c.output = c.z3;
  c.norms.resize(x.rows());
  c.degenerate.resize(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    c.norms[r] = l2_normalize_inplace(c.output.row(r));
    c.degenerate[r] = c.norms[r] <= kNormEpsilon;
  }
  return c;
}

Matrix encode(const EncoderParams& params, const Matrix& x) { return forward(params, x).output; }

EncoderGrads backward(const EncoderParams& params, const ForwardCache& cache, const Matrix& grad_output) {
  return backward(params, cache, grad_output, nullptr);
}

EncoderGrads backward(const EncoderParams& params, const ForwardCache& cache, const Matrix& grad_output,
                      Matrix* grad_input) {
  if (grad_output.rows() != cache.output.rows() || grad_output.cols() != cache.output.cols())
    throw ShapeError("backward: dJ/dF shape does not match the forward output");
  if (cache.z1.cols() != params.hidden() || cache.z3.cols() != params.output_dim())
    throw ShapeError("backward: cache was not produced by these parameters");

  // d(z/|z|)/dz = (I - u u^T) / |z|
  Matrix dz3 = grad_output;
  for (std::size_t r = 0; r < dz3.rows(); ++r) {
    if (cache.degenerate[r]) continue;
    auto g = dz3.row(r);
    const auto u = cache.output.row(r);
    const double proj = dot(g, u);
    for (std::size_t c = 0; c < g.size(); ++c) g[c] = (g[c] - proj * u[c]) / cache.norms[r];
  }

  EncoderGrads grads;
  grads.w3 = kernels::matmul_tn(cache.a2, dz3);
  grads.b3 = column_sums(dz3);
  Matrix dz2 = kernels::matmul_nt(dz3, params.w3);
  relu_backward(dz2, cache.z2);
  grads.w2 = kernels::matmul_tn(cache.a1, dz2);
  grads.b2 = column_sums(dz2);
  Matrix dz1 = kernels::matmul_nt(dz2, params.w2);
  relu_backward(dz1, cache.z1);
  grads.w1 = kernels::matmul_tn(cache.input, dz1);
  grads.b1 = column_sums(dz1);
  if (grad_input) *grad_input = kernels::matmul_nt(dz1, params.w1);
  return grads;
}

void sgd_step(EncoderParams& params, const EncoderGrads& grads, double lr) {
  if (!(lr > 0.0)) throw std::invalid_argument("sgd_step: learning rate must be > 0");
  check_layout(params, grads);
  auto p = params.tensors();
  const auto g = grads.tensors();
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto pv = p[i]->values();
    auto gv = g[i]->values();
    for (std::size_t j = 0; j < pv.size(); ++j) pv[j] -= lr * gv[j];
  }
}

void save_checkpoint(const std::filesystem::path& path, const EncoderParams& params, const std::string& modality) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint: " + path.string());
  const nlohmann::json header = {{"format", "drcl-encoder"},
                                 {"modality", modality},
                                 {"input_dim", params.input_dim()},
                                 {"hidden", params.hidden()},
                                 {"output_dim", params.output_dim()}};
  out << header.dump() << '\n';
  for (const Matrix* t : params.tensors()) write_features(out, *t);
  if (!out) throw IoError("checkpoint write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  std::string line;
  std::getline(in, line);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
    if (header.at("format").get<std::string>() != "drcl-encoder") throw SchemaError("not an encoder checkpoint");
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("checkpoint header invalid: " + path.string() + ": " + e.what());
  }
  Checkpoint ck;
  ck.modality = header.at("modality").get<std::string>();
  for (Matrix* t : ck.params.tensors()) *t = read_features(in);

  const auto d = header.at("input_dim").get<std::size_t>();
  const auto h = header.at("hidden").get<std::size_t>();
  const auto o = header.at("output_dim").get<std::size_t>();
  const EncoderParams& p = ck.params;
  const bool ok = p.w1.rows() == d && p.w1.cols() == h && p.b1.rows() == 1 && p.b1.cols() == h && p.w2.rows() == h &&
                  p.w2.cols() == h && p.b2.rows() == 1 && p.b2.cols() == h && p.w3.rows() == h && p.w3.cols() == o &&
                  p.b3.rows() == 1 && p.b3.cols() == o;
  if (!ok) throw SchemaError("checkpoint tensors do not match header dimensions: " + path.string());
  return ck;
}

}  // namespace drcl
