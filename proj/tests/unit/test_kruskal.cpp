#include "concpd/kruskal.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

namespace concpd {
namespace {

KruskalTensor random_model(Rng& rng, std::vector<Index> dims, Index rank) {
  std::vector<Matrix> f;
  for (Index d : dims) f.push_back(rng.uniform_matrix(d, rank, -1.0, 1.0));
  return {std::move(f), rng.uniform_vector(rank, 0.5, 2.0)};
}

TEST(Reconstruct, MatchesLoopOracle) {
  Rng rng(21);
  for (const auto& dims : std::vector<std::vector<Index>>{{4}, {3, 5}, {3, 4, 2}, {2, 3, 2, 2}}) {
    for (Index r : {1, 3}) {
      const KruskalTensor k = random_model(rng, dims, r);
      const DenseTensor got = reconstruct(k);
      const DenseTensor want = oracle::reconstruct(k);
      ASSERT_EQ(got.dims(), want.dims());
      EXPECT_LT((got.as_vector() - want.as_vector()).norm(), 1e-12 * want.frobenius_norm());
    }
  }
}

TEST(Reconstruct, VecIsKhatriRaoTimesWeights) {
  Rng rng(4);
  const KruskalTensor k = random_model(rng, {3, 2, 4}, 3);
  const Vector want = oracle::kr_descending(k.factors, k.order()) * k.weights;
  EXPECT_LT((vectorize(reconstruct(k)) - want).norm(), 1e-12 * want.norm());
}

TEST(Reconstruct, RejectsInconsistentModel) {
  KruskalTensor k({Matrix::Ones(2, 2), Matrix::Ones(3, 3)}, Vector::Ones(2));
  EXPECT_THROW((void)reconstruct(k), std::invalid_argument);
}

TEST(Ddiag, RoundTrip) {
  const Vector v = Vector::LinSpaced(3, 1.0, 3.0);
  const DenseTensor t = ddiag_to_tensor(v, 3);
  EXPECT_EQ(t.dims(), (std::vector<std::size_t>{3, 3, 3}));
  EXPECT_EQ(tensor_to_ddiag(t), v);
  EXPECT_DOUBLE_EQ(t.frobenius_norm(), v.norm());
  EXPECT_THROW((void)tensor_to_ddiag(DenseTensor({2, 3})), std::invalid_argument);
}

TEST(NormalizeColumns, PreservesTensorAndNamesZeroColumn) {
  Rng rng(8);
  const KruskalTensor k = random_model(rng, {3, 4, 2}, 2);
  const KruskalTensor nk = normalize_columns(k);
  for (const auto& u : nk.factors) {
    EXPECT_TRUE(u.colwise().norm().isApprox(Eigen::RowVectorXd::Ones(2), 1e-14));
  }
  EXPECT_LT((reconstruct(nk).as_vector() - reconstruct(k).as_vector()).norm(), 1e-12);

  KruskalTensor bad = k;
  bad.factors[1].col(1).setZero();
  try {
    (void)normalize_columns(bad);
    FAIL() << "expected ZeroColumnError";
  } catch (const ZeroColumnError& e) {
    EXPECT_EQ(e.mode(), 1u);
    EXPECT_EQ(e.column(), 1);
  }
}

TEST(CoupledFactorSet, FromBlocksSharesPrefix) {
  Rng rng(12);
  const Matrix shared = rng.uniform_matrix(4, 2);
  std::vector<KruskalTensor> blocks;
  for (int s = 0; s < 3; ++s) {
    KruskalTensor k = random_model(rng, {4, 3, 5}, 3);
    k.factors[0].leftCols(2) = shared;
    blocks.push_back(k);
  }
  const std::vector<std::size_t> coupled{2, 0, 0};
  const CoupledFactorSet f = CoupledFactorSet::from_blocks(blocks, coupled);
  EXPECT_EQ(f.num_blocks(), 3u);
  EXPECT_EQ(f.coupled_counts(), coupled);
  EXPECT_EQ(f.common(0), shared);
  for (std::size_t s = 0; s < 3; ++s) {
    for (std::size_t n = 0; n < 3; ++n) EXPECT_EQ(f.factor(s, n), blocks[s].factors[n]);
    EXPECT_EQ(f.weights(s), blocks[s].weights);
  }
}

TEST(CoupledFactorSet, FromBlocksNamesMismatch) {
  Rng rng(13);
  std::vector<KruskalTensor> blocks{random_model(rng, {3, 3}, 2), random_model(rng, {3, 3}, 2)};
  try {
    (void)CoupledFactorSet::from_blocks(blocks, {1, 0});
    FAIL() << "expected a mismatch error";
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("mode 1"), std::string::npos) << what;
    EXPECT_NE(what.find("block 2"), std::string::npos) << what;
  }
  EXPECT_THROW((void)CoupledFactorSet::from_blocks(blocks, {3, 0}), std::invalid_argument);
}

TEST(CoupledFactorSet, SetFactorUpdatesSharedBlockForAll) {
  Rng rng(14);
  CoupledFactorSet f({rng.uniform_matrix(3, 1), rng.uniform_matrix(2, 0)},
                     {{rng.uniform_matrix(3, 1), rng.uniform_matrix(2, 2)},
                      {rng.uniform_matrix(3, 2), rng.uniform_matrix(2, 3)}},
                     {Vector::Ones(2), Vector::Ones(3)});
  Matrix full = Matrix::Constant(3, 2, 7.0);
  f.set_factor(0, 0, full);
  EXPECT_EQ(f.factor(1, 0).col(0), full.col(0));
  EXPECT_THROW(f.set_factor(0, 0, Matrix::Zero(3, 3)), std::invalid_argument);
  EXPECT_TRUE(f.is_nonnegative());
  f.weights(1)(0) = -1.0;
  EXPECT_FALSE(f.is_nonnegative());
}

TEST(CoupledFactorSet, RejectsShapeMismatch) {
  EXPECT_THROW(CoupledFactorSet({Matrix::Ones(3, 1)}, {{Matrix::Ones(4, 1)}}, {Vector::Ones(2)}),
               std::invalid_argument);
  EXPECT_THROW(CoupledFactorSet({Matrix::Ones(3, 1)}, {{Matrix::Ones(3, 1)}}, {Vector::Ones(3)}),
               std::invalid_argument);
}

}  // namespace
}  // namespace concpd
