#include <gtest/gtest.h>

#include <cmath>

#include "drcl/errors.hpp"
#include "drcl/numerics.hpp"
#include "oracles.hpp"

namespace drcl {
namespace {

using testing::frob;
using testing::naive_mul;
using testing::random_matrix;

TEST(L2Normalize, ThreeFourFive) {
  const std::vector<double> v{3.0, 4.0};
  const auto r = l2_normalize(v);
  EXPECT_FALSE(r.degenerate);
  EXPECT_DOUBLE_EQ(r.norm, 5.0);
  EXPECT_NEAR(r.values[0], 0.6, 1e-15);
  EXPECT_NEAR(r.values[1], 0.8, 1e-15);
}

TEST(L2Normalize, ZeroVectorIsFlagged) {
  const std::vector<double> v{0.0, 0.0};
  const auto r = l2_normalize(v);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.values, v);
}

TEST(L2Normalize, BelowEpsilonUnchanged) {
  const std::vector<double> v{1e-13, 0.0};
  const auto r = l2_normalize(v);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.values, v);
}

TEST(L2Normalize, Symmetric) {
  const std::vector<double> v{1.0, 1.0, 1.0, 1.0};
  for (double x : l2_normalize(v).values) EXPECT_DOUBLE_EQ(x, 0.5);
}

TEST(L2Normalize, InplaceMatchesCopy) {
  std::vector<double> v{0.3, -1.2, 2.5};
  const auto expected = l2_normalize(v);
  const double n = l2_normalize_inplace(v);
  EXPECT_EQ(n, expected.norm);
  EXPECT_EQ(v, expected.values);
}

TEST(Softmax, EqualLogits) {
  const auto p = softmax(std::vector<double>{0.0, 0.0});
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
}

TEST(Softmax, LogTwo) {
  const auto p = softmax(std::vector<double>{std::log(2.0), 0.0});
  EXPECT_NEAR(p[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(p[1], 1.0 / 3.0, 1e-15);
}

TEST(Softmax, LargeLogitNoOverflow) {
  const auto p = softmax(std::vector<double>{1000.0, 0.0});
  EXPECT_TRUE(std::isfinite(p[0]));
  EXPECT_TRUE(std::isfinite(p[1]));
  EXPECT_NEAR(p[0], 1.0, 1e-15);
  EXPECT_GE(p[1], 0.0);
  EXPECT_LT(p[1], 1e-300);
}

TEST(Softmax, SumsToOneAndShiftInvariant) {
  SeededRng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> z(1 + rng.below(10));
    for (double& v : z) v = 5.0 * rng.normal();
    const auto p = softmax(z);
    double s = 0.0;
    for (double v : p) {
      EXPECT_GT(v, 0.0);
      EXPECT_LE(v, 1.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
    const double shift = rng.uniform(-50.0, 50.0);
    auto shifted = z;
    for (double& v : shifted) v += shift;
    const auto q = softmax(shifted);
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(p[i], q[i], 1e-12);
  }
}

TEST(LogSoftmax, MatchesLogOfSoftmax) {
  const std::vector<double> z{0.2, -1.0, 3.5};
  const auto p = softmax(z);
  const auto lp = log_softmax(z);
  for (std::size_t i = 0; i < z.size(); ++i) EXPECT_NEAR(lp[i], std::log(p[i]), 1e-14);
}

TEST(Cosine, Examples) {
  EXPECT_EQ(cosine(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 0.0);
  EXPECT_DOUBLE_EQ(cosine(std::vector<double>{2, 0}, std::vector<double>{5, 0}), 1.0);
  EXPECT_EQ(cosine(std::vector<double>{1, 0}, std::vector<double>{0, 0}), 0.0);
}

TEST(Cosine, SymmetricScaleInvariantBounded) {
  SeededRng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(8);
    std::vector<double> a(n), b(n);
    for (double& v : a) v = rng.normal() * std::pow(10.0, rng.uniform(-3, 3));
    for (double& v : b) v = rng.normal() * std::pow(10.0, rng.uniform(-3, 3));
    const double c = cosine(a, b);
    EXPECT_GE(c, -1.0);
    EXPECT_LE(c, 1.0);
    EXPECT_EQ(c, cosine(b, a));
    auto scaled = a;
    const double s = rng.uniform(0.01, 100.0);
    for (double& v : scaled) v *= s;
    EXPECT_NEAR(cosine(scaled, b), c, 1e-12);
  }
}

TEST(PseudoInverse, Diagonal) {
  const Matrix w{{2, 0}, {0, 4}, {0, 0}};
  const Matrix expected{{0.5, 0, 0}, {0, 0.25, 0}};
  const Matrix l = pseudo_inverse(w);
  ASSERT_EQ(l.rows(), 2u);
  ASSERT_EQ(l.cols(), 3u);
  EXPECT_LE(frob(l - expected), 1e-15);
}

TEST(PseudoInverse, OrthonormalColumnsGiveTranspose) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SeededRng rng(seed);
    const std::size_t c = 2 + rng.below(7);
    const std::size_t d = c + rng.below(10);
    const Matrix w = random_orthogonal(d, c, rng);
    EXPECT_LE(frob(pseudo_inverse(w) - w.transposed()), 1e-10);
  }
}

TEST(PseudoInverse, PenroseConditionsRandom) {
  SeededRng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 3 + rng.below(14);
    const std::size_t c = 2 + rng.below(7);
    const Matrix w = random_matrix(d, c, rng);
    const Matrix l = pseudo_inverse(w);
    const Matrix wl = naive_mul(w, l);
    const Matrix lw = naive_mul(l, w);
    EXPECT_LE(frob(naive_mul(wl, w) - w), 1e-8 * frob(w));
    EXPECT_LE(frob(naive_mul(lw, l) - l), 1e-8 * frob(l));
    EXPECT_LE(frob(wl.transposed() - wl), 1e-8);
    EXPECT_LE(frob(lw.transposed() - lw), 1e-8);
  }
}

TEST(PseudoInverse, RankDeficient) {
  // Two identical columns: rank one.
  const Matrix w{{1, 1}, {2, 2}, {3, 3}};
  const Matrix l = pseudo_inverse(w);
  EXPECT_LE(frob(naive_mul(naive_mul(w, l), w) - w), 1e-12);
  EXPECT_LE(frob(naive_mul(naive_mul(l, w), l) - l), 1e-12);
}

TEST(RandomOrthogonal, ColumnsOrthonormal) {
  for (auto [d, c] : {std::pair<std::size_t, std::size_t>{4, 4}, {8, 3}, {16, 5}}) {
    SeededRng rng(d * 31 + c);
    const Matrix w = random_orthogonal(d, c, rng);
    EXPECT_LE(frob(naive_mul(w.transposed(), w) - Matrix::identity(c)), 1e-10);
  }
}

TEST(RandomOrthogonal, DeterministicAndPositiveDiagonal) {
  SeededRng a(42), b(42);
  const Matrix wa = random_orthogonal(8, 3, a);
  const Matrix wb = random_orthogonal(8, 3, b);
  EXPECT_EQ(wa, wb);
  SeededRng c(43);
  EXPECT_NE(wa, random_orthogonal(8, 3, c));
}

TEST(RandomOrthogonal, RejectsWide) {
  SeededRng rng(1);
  EXPECT_THROW(random_orthogonal(2, 3, rng), ShapeError);
}

TEST(SeededRng, ReproducibleStreams) {
  SeededRng a(7), b(7);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(a.uniform(), b.uniform());
    EXPECT_EQ(a.normal(), b.normal());
    EXPECT_EQ(a.below(13), b.below(13));
  }
  EXPECT_EQ(a.permutation(20), b.permutation(20));
}

TEST(SeededRng, FirstEngineOutputIsStandard) {
  // std::mt19937_64 default-seed 10000th output is fixed by the standard.
  SeededRng rng(5489u);
  std::uint64_t v = 0;
  for (int i = 0; i < 10000; ++i) v = rng.next_u64();
  EXPECT_EQ(v, 9981545732273789042ull);
}

TEST(SeededRng, UniformAndPermutationRanges) {
  SeededRng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
  auto p = rng.permutation(50);
  std::sort(p.begin(), p.end());
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(p[i], i);
}

TEST(DeriveSeed, DistinctPerStreamAndIndex) {
  EXPECT_NE(derive_seed(1, 1, 0), derive_seed(1, 2, 0));
  EXPECT_NE(derive_seed(1, 1, 0), derive_seed(1, 1, 1));
  EXPECT_NE(derive_seed(1, 1, 0), derive_seed(2, 1, 0));
  EXPECT_EQ(derive_seed(9, 4, 2), derive_seed(9, 4, 2));
}

}  // namespace
}  // namespace drcl
