#include <gtest/gtest.h>

#include <cmath>

#include "lsvd/error.hpp"
#include "lsvd/matrix.hpp"
#include "support.hpp"

namespace lsvd {
namespace {

TEST(Matrix, ReverseColumnsAndRows) {
  const Matrix m{{1, 2}, {3, 4}};
  EXPECT_EQ(reverse_columns(m), (Matrix{{2, 1}, {4, 3}}));
  EXPECT_EQ(reverse_rows(m), (Matrix{{3, 4}, {1, 2}}));
}

TEST(Matrix, ReversalIsAnInvolution) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix m = test::random_matrix(1 + seed % 7, 1 + (seed * 3) % 5, seed);
    EXPECT_EQ(reverse_columns(reverse_columns(m)), m);
    EXPECT_EQ(reverse_rows(reverse_rows(m)), m);
  }
  const Vector v{1, 2, 3};
  EXPECT_EQ(reversed(reversed(v)), v);
  EXPECT_EQ(reversed(v), (Vector{3, 2, 1}));
}

TEST(Matrix, FrobeniusDistance) {
  const Matrix a{{1, 2}};
  EXPECT_DOUBLE_EQ(frobenius_distance(a, a), 0.0);
  EXPECT_DOUBLE_EQ(frobenius_distance(a, Matrix{{0, 0}}), std::sqrt(5.0));
  EXPECT_DOUBLE_EQ(squared_frobenius_distance(a, Matrix{{0, 0}}), 5.0);
  EXPECT_THROW(frobenius_distance(a, Matrix{{0}, {0}}), ValidationError);
}

TEST(Matrix, ProductsMatchNaiveOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix a = test::random_matrix(5, 7, seed);
    const Matrix b = test::random_matrix(7, 3, seed + 100);
    EXPECT_LT(test::max_abs_diff(multiply(a, b), test::naive_product(a, b)), 1e-13);
    const Matrix c = test::random_matrix(5, 4, seed + 200);
    EXPECT_LT(test::max_abs_diff(multiply_tn(a, c), test::naive_product(a.transposed(), c)), 1e-13);
  }
}

TEST(Matrix, BlocksAndDiagonal) {
  const Matrix m{{1, 2, 3}, {4, 5, 6}};
  EXPECT_EQ(m.col_block(1, 2), (Matrix{{2, 3}, {5, 6}}));
  EXPECT_EQ(m.row_block(1, 1), (Matrix{{4, 5, 6}}));
  EXPECT_EQ(m.transposed(), (Matrix{{1, 4}, {2, 5}, {3, 6}}));
  const Vector d{2, 0};
  EXPECT_EQ(Matrix::diagonal(d), (Matrix{{2, 0}, {0, 0}}));
}

}  // namespace
}  // namespace lsvd
