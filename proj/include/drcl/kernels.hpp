#pragma once

// Data-parallel hot loops. Each kernel has an OpenMP implementation in
// drcl::kernels and a plain serial reference in drcl::kernels::serial that
// the tests and the benchmark compare against. Parallel kernels partition
// work by output row and never reduce across threads, so their results do
// not depend on the thread count.

#include <cstddef>
#include "drcl/matrix.hpp"

namespace drcl::kernels {

void set_num_threads(int n);
int num_threads();

// a * b
Matrix matmul(const Matrix& a, const Matrix& b);
// a^T * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// a * b^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);

// Value and gradient (w.r.t. the embeddings) of the pairwise cosine
// consistency objective between embeddings F and targets T, both B x d:
//   1/B^2 sum_ij (cos(t_i,t_j) - cos(f_i,f_j))^2
// + 1/B^2 sum_ij (cos(t_i,f_j) - cos(f_i,t_j))^2
struct PairwiseCosineResult {
  double value = 0.0;
  Matrix grad;  // B x d
};
PairwiseCosineResult pairwise_cosine_consistency(const Matrix& f, const Matrix& t);

namespace serial {

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);
PairwiseCosineResult pairwise_cosine_consistency(const Matrix& f, const Matrix& t);

}  // namespace serial

}  // namespace drcl::kernels
