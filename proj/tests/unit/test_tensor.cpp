#include "concpd/tensor.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

namespace concpd {
namespace {

TEST(DenseTensor, OffsetMatchesEnumerationOrder) {
  const std::vector<std::size_t> dims{3, 1, 4, 2};
  DenseTensor t(dims);
  std::vector<std::size_t> idx(dims.size(), 0);
  std::size_t count = 0;
  do {
    EXPECT_EQ(t.offset(idx), count);
    ++count;
  } while (oracle::next_index(idx, dims));
  EXPECT_EQ(count, t.size());
}

TEST(DenseTensor, RejectsBadShapes) {
  EXPECT_THROW(DenseTensor(std::vector<std::size_t>{}), std::invalid_argument);
  EXPECT_THROW(DenseTensor(std::vector<std::size_t>{2, 0, 3}), std::invalid_argument);
  EXPECT_THROW(DenseTensor(std::vector<std::size_t>(9, 1)), std::invalid_argument);
  EXPECT_THROW(DenseTensor({2, 2}, std::vector<double>(3, 0.0)), std::invalid_argument);
}

TEST(DenseTensor, OffsetRejectsOutOfRange) {
  DenseTensor t({2, 3});
  const std::vector<std::size_t> bad{2, 0};
  EXPECT_THROW((void)t.offset(bad), std::out_of_range);
  const std::vector<std::size_t> short_idx{1};
  EXPECT_THROW((void)t.offset(short_idx), std::invalid_argument);
}

TEST(DenseTensor, NormAndPredicates) {
  DenseTensor t({2, 2}, {3.0, 0.0, -4.0, 0.0});
  EXPECT_DOUBLE_EQ(t.frobenius_norm(), 5.0);
  EXPECT_FALSE(t.is_nonnegative());
  EXPECT_TRUE(t.all_finite());
  t.values()[1] = std::numeric_limits<double>::infinity();
  EXPECT_FALSE(t.all_finite());
}

TEST(Matricize, MatchesIndexArithmetic) {
  Rng rng(11);
  for (const auto& dims : std::vector<std::vector<std::size_t>>{
           {4}, {2, 3}, {3, 4, 2}, {2, 3, 2, 3}, {1, 5, 1}}) {
    std::size_t size = 1;
    for (auto d : dims) size *= d;
    std::vector<double> values(size);
    for (auto& v : values) v = rng.uniform(-1.0, 1.0);
    const DenseTensor t(dims, values);
    for (std::size_t n = 0; n < dims.size(); ++n) {
      EXPECT_EQ(matricize(t, n), oracle::unfold(t, n)) << "mode " << n;
      EXPECT_EQ(fold(matricize(t, n), n, dims), t) << "mode " << n;
    }
    EXPECT_EQ(vectorize(t), oracle::unfold(t, 0).reshaped());
  }
}

TEST(Matricize, RejectsBadMode) {
  DenseTensor t({2, 2});
  EXPECT_THROW((void)matricize(t, 2), std::out_of_range);
  EXPECT_THROW((void)fold(Matrix::Zero(3, 2), 0, {2, 2}), std::invalid_argument);
}

TEST(KhatriRao, HandExample) {
  Matrix a(2, 2);
  a << 1, 2, 3, 4;
  Matrix b(2, 2);
  b << 0, 1, 1, 0;
  Matrix want(4, 2);
  want << 0, 2, 1, 0, 0, 4, 3, 0;
  const std::vector<Matrix> ms{a, b};
  EXPECT_EQ(khatri_rao(ms), want);
}

TEST(KhatriRao, DescendingMatchesPairwiseOracle) {
  Rng rng(5);
  std::vector<Matrix> us;
  for (Index rows : {2, 3, 4, 2}) us.push_back(rng.uniform_matrix(rows, 3, -1.0, 1.0));
  EXPECT_TRUE(khatri_rao_descending(us).isApprox(oracle::kr_descending(us, us.size()), 1e-14));
  for (std::size_t skip = 0; skip < us.size(); ++skip) {
    EXPECT_TRUE(khatri_rao_descending(us, skip).isApprox(oracle::kr_descending(us, skip), 1e-14));
  }
  const std::vector<Matrix> single{us[0]};
  EXPECT_EQ(khatri_rao_descending(single, 0), Matrix::Ones(1, 3));
}

TEST(KhatriRao, RejectsColumnMismatch) {
  const std::vector<Matrix> ms{Matrix::Ones(2, 2), Matrix::Ones(2, 3)};
  EXPECT_THROW((void)khatri_rao(ms), std::invalid_argument);
}

TEST(HadamardGram, EqualsGramOfKhatriRao) {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const auto order = static_cast<std::size_t>(2 + trial % 3);
    const Index r = 1 + trial % 4;
    std::vector<Matrix> us;
    for (std::size_t n = 0; n < order; ++n) {
      us.push_back(rng.uniform_matrix(2 + static_cast<Index>(n), r, -1.0, 1.0));
    }
    const Matrix kr = oracle::kr_descending(us, order);
    EXPECT_LT(oracle::relative_error(hadamard_gram(us), kr.transpose() * kr), 1e-12);
    for (std::size_t skip = 0; skip < order; ++skip) {
      const Matrix krs = oracle::kr_descending(us, skip);
      EXPECT_LT(oracle::relative_error(hadamard_gram(us, skip), krs.transpose() * krs), 1e-12);
    }
  }
}

TEST(HadamardGram, CrossGramAndProduct) {
  Rng rng(2);
  std::vector<Matrix> a, b;
  for (Index rows : {3, 4, 2}) {
    a.push_back(rng.uniform_matrix(rows, 3));
    b.push_back(rng.uniform_matrix(rows, 2));
  }
  const Matrix want = oracle::kr_descending(a, 3).transpose() * oracle::kr_descending(b, 3);
  EXPECT_LT(oracle::relative_error(hadamard_cross_gram(a, b), want), 1e-12);

  std::vector<Matrix> grams;
  for (const auto& m : a) grams.push_back(m.transpose() * m);
  EXPECT_LT(oracle::relative_error(hadamard_product(grams), hadamard_gram(a)), 1e-12);
}

TEST(SpectralNorm, MatchesEigensolverOnGrams) {
  Rng rng(3);
  for (int trial = 0; trial < 25; ++trial) {
    const Index r = 1 + trial % 6;
    const Matrix u = rng.uniform_matrix(r + 3, r);
    const Matrix g = u.transpose() * u;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(g);
    const double want = eig.eigenvalues().maxCoeff();
    EXPECT_NEAR(spectral_norm(g), want, 1e-8 * want);
  }
}

TEST(SpectralNorm, OnesStartOrthogonalToDominantDirection) {
  Matrix m(2, 2);
  m << 3, -2, -2, 3;  // the all-ones vector is the eigenvalue-1 eigenvector
  EXPECT_NEAR(spectral_norm(m), 5.0, 1e-12);
}

TEST(SpectralNorm, EdgeCases) {
  EXPECT_EQ(spectral_norm(Matrix::Zero(3, 3)), 0.0);
  EXPECT_DOUBLE_EQ(spectral_norm(Matrix::Identity(4, 4)), 1.0);
  EXPECT_THROW((void)spectral_norm(Matrix::Zero(2, 3)), std::invalid_argument);
}

}  // namespace
}  // namespace concpd
