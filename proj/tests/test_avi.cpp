#include <gtest/gtest.h>

#include <cmath>

#include "lsvd/avi.hpp"
#include "lsvd/error.hpp"
#include "support.hpp"

namespace lsvd {
namespace {

Vector random_vector(std::size_t n, std::uint64_t seed) {
  NormalSampler g(seed);
  Vector v(n);
  for (double& x : v) x = g.next();
  return v;
}

TEST(AttributeBases, RhoZeroKeepsX) {
  const SvdTriple x = svd(test::random_matrix(8, 8, 1)), z = svd(test::random_matrix(8, 8, 2));
  const AttributeBases b = build_attribute_bases(x, z, 4, 0.0);
  EXPECT_EQ(b.U_hat, x.U);
  EXPECT_EQ(b.V_hat, x.V);
}

TEST(AttributeBases, FourByFourBruteForceAssembly) {
  const SvdTriple x = svd(test::random_matrix(4, 4, 3)), z = svd(test::random_matrix(4, 4, 4));
  const AttributeBases b = build_attribute_bases(x, z, 2, 1.0);
  // Columns: Ux0, Ux1, Uz3, Uz2. Rows of V: Vx0, Vx1, Vz3, Vz2.
  const std::size_t ucols[4] = {0, 1, 3, 2};
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 4; ++c) {
      const double expect_u = c < 2 ? x.U(r, ucols[c]) : z.U(r, ucols[c]);
      const double expect_v = r < 2 ? x.V(ucols[r], c) : z.V(ucols[r], c);
      EXPECT_EQ(b.U_hat(r, c), expect_u);
      EXPECT_EQ(b.V_hat(r, c), expect_v);
    }
}

TEST(AttributeBases, SelfPairUsesReversedLeadingColumns) {
  const SvdTriple x = svd(test::random_matrix(8, 8, 5));
  const AttributeBases b = build_attribute_bases(x, x, 4, 1.0);
  for (std::size_t r = 0; r < 8; ++r)
    for (std::size_t c = 4; c < 8; ++c) EXPECT_EQ(b.U_hat(r, c), x.U(r, 7 - (c - 4)));
}

TEST(AttributeBases, MatchesOracleIncludingNarrowK) {
  for (std::size_t n : {4u, 6u, 8u, 11u, 16u}) {
    for (std::size_t k = 1; 2 * k <= n; ++k) {
      for (double rho : {0.0, 0.3, 1.0, 1.5}) {
        const SvdTriple x = svd(test::random_matrix(n, n, n * 100 + k));
        const SvdTriple z = svd(test::random_matrix(n, n, n * 100 + k + 50));
        const AttributeBases b = build_attribute_bases(x, z, k, rho);
        Matrix U, V;
        test::oracle_bases(x, z, k, rho, U, V);
        EXPECT_LT(test::max_abs_diff(b.U_hat, U), 1e-15);
        EXPECT_LT(test::max_abs_diff(b.V_hat, V), 1e-15);
      }
    }
  }
}

TEST(AttributeBases, RejectsOutOfRangeConfig) {
  const SvdTriple x = svd(test::random_matrix(8, 8, 1));
  EXPECT_THROW(build_attribute_bases(x, x, 0, 1.0), ValidationError);
  EXPECT_THROW(build_attribute_bases(x, x, 5, 1.0), ValidationError);
  EXPECT_THROW(build_attribute_bases(x, x, 4, 1.6), ValidationError);
  EXPECT_THROW(build_attribute_bases(x, x, 4, -0.1), ValidationError);
  const SvdTriple small = svd(test::random_matrix(4, 4, 1));
  EXPECT_THROW(build_attribute_bases(x, small, 2, 1.0), ValidationError);
}

TEST(AviForward, EightByEightMatchesTripleProductOracle) {
  const Matrix xc = test::random_matrix(8, 8, 10), zc = test::random_matrix(8, 8, 11);
  const Vector S = random_vector(8, 12), ds = random_vector(8, 13);
  const AviConfig cfg{4, 0.5, {}};
  const AviOutput train = avi_forward(xc, zc, S, ds, cfg, Stage::Training);
  const AviOutput infer = avi_forward(xc, zc, S, ds, cfg, Stage::Inference);

  Matrix U, V;
  test::oracle_bases(svd(xc), svd(zc), 4, 0.5, U, V);
  Matrix Ur(8, 8), Vr(8, 8);
  Vector shifted(8);
  for (std::size_t i = 0; i < 8; ++i) {
    shifted[i] = S[i] + ds[i];
    for (std::size_t j = 0; j < 8; ++j) {
      Ur(i, j) = U(i, 7 - j);
      Vr(i, j) = V(7 - i, j);
    }
  }
  const Matrix y_hat = test::naive_triple(U, S, V);
  const Matrix y_tilde = test::naive_triple(Ur, shifted, Vr);
  EXPECT_LE(test::naive_rel_error(*train.y_hat, y_hat), 1e-10);
  EXPECT_LE(test::naive_rel_error(*train.y_tilde, y_tilde), 1e-10);
  EXPECT_LE(test::naive_rel_error(*infer.y_pred, y_hat), 1e-10);
}

TEST(AviForward, StageContract) {
  const Matrix xc = test::random_matrix(6, 6, 1), zc = test::random_matrix(6, 6, 2);
  const Vector S(6, 1.0), ds(6, 0.0);
  const AviOutput t = avi_forward(xc, zc, S, ds, {3, 1.0, {}}, Stage::Training);
  EXPECT_TRUE(t.y_hat && t.y_tilde);
  EXPECT_FALSE(t.y_pred || t.U_hat || t.V_hat);
  const AviOutput i = avi_forward(xc, zc, S, ds, {3, 1.0, {}}, Stage::Inference);
  EXPECT_TRUE(i.y_pred && i.U_hat && i.V_hat);
  EXPECT_FALSE(i.y_hat || i.y_tilde);
  EXPECT_EQ(t.S_x, svd(xc).S);
}

TEST(AviForward, IdentityConfigurationReproducesX) {
  const Matrix xc = test::random_matrix(16, 16, 21), zc = test::random_matrix(16, 16, 22);
  const Vector sx = svd(xc).S;
  const Vector zero(16, 0.0);
  const AviOutput out = avi_forward(xc, zc, sx, zero, {8, 0.0, {}}, Stage::Training);
  EXPECT_LE(relative_frobenius_error(*out.y_hat, xc), 1e-5);

  // Delta chosen so that S + ds = reverse(S): y_tilde undoes the reversal.
  Vector ds(16);
  for (std::size_t i = 0; i < 16; ++i) ds[i] = sx[15 - i] - sx[i];
  const AviOutput rev = avi_forward(xc, zc, sx, ds, {8, 0.0, {}}, Stage::Training);
  EXPECT_LE(relative_frobenius_error(*rev.y_tilde, xc), 1e-5);
}

TEST(AviForward, RejectsBadVectors) {
  const Matrix xc = test::random_matrix(4, 4, 1);
  const Vector bad(3, 0.0), ok(4, 0.0);
  EXPECT_THROW(avi_forward(xc, xc, bad, ok, {2, 1.0, {}}, Stage::Training), ValidationError);
  Vector nan = ok;
  nan[1] = std::nan("");
  EXPECT_THROW(avi_forward(xc, xc, ok, nan, {2, 1.0, {}}, Stage::Training), ValidationError);
  EXPECT_THROW(avi_forward(xc, test::random_matrix(4, 5, 1), ok, ok, {2, 1.0, {}}, Stage::Training),
               ValidationError);
}

TEST(Losses, SpecExamples) {
  const Matrix z = test::random_matrix(3, 3, 1);
  EXPECT_EQ(loss_l1(z, z), 0.0);
  EXPECT_EQ(loss_l3(Vector{1, 2}, Vector{0, 0}), 5.0);
  EXPECT_EQ(loss_l4(Vector{1, 1}, Vector{0.5, -0.5}, Vector{1.5, 0.5}), 0.0);
  EXPECT_EQ(loss_total({1, 1, 1, 1}, LossWeights{}), 33.0);
  EXPECT_EQ(loss_total({0, 0, 0, 0}, LossWeights{}), 0.0);
  EXPECT_EQ(loss_total({2, 0, 0, 0}, LossWeights{}), 6.0);
}

TEST(Losses, DefaultWeights) {
  const LossWeights w;
  EXPECT_EQ(w.l1, 3.0);
  EXPECT_EQ(w.l2, 10.0);
  EXPECT_EQ(w.l3, 10.0);
  EXPECT_EQ(w.l4, 10.0);
  const AviConfig cfg;
  EXPECT_EQ(cfg.k, 32u);
  EXPECT_EQ(cfg.rho, 1.0);
}

TEST(Losses, NonnegativeAndMonotoneInParts) {
  Xoshiro256 pick(3);
  for (int i = 0; i < 100; ++i) {
    LossParts p{pick.uniform(), pick.uniform(), pick.uniform(), pick.uniform()};
    const double base = loss_total(p, {});
    EXPECT_GE(base, 0.0);
    p.l3 += 0.1;
    EXPECT_GE(loss_total(p, {}), base);
  }
}

TEST(LossGradient, PartsMatchForwardAndFiniteDifferences) {
  for (std::size_t k : {2u, 4u}) {
    const Matrix xc = test::random_matrix(8, 8, 30 + k), zc = test::random_matrix(8, 8, 40 + k);
    const SvdTriple sx = svd(xc), sz = svd(zc);
    const AviConfig cfg{k, 0.7, {3, 10, 10, 10}};
    const Vector S = random_vector(8, 50), ds = random_vector(8, 51);
    const AviLossGradient g = avi_loss_and_gradient(sx, sz, xc, zc, S, ds, cfg);

    const AviOutput fwd = avi_forward(sx, sz, S, ds, cfg, Stage::Training);
    EXPECT_DOUBLE_EQ(g.parts.l1, loss_l1(*fwd.y_hat, zc));
    EXPECT_DOUBLE_EQ(g.parts.l2, loss_l2(*fwd.y_tilde, xc));
    EXPECT_DOUBLE_EQ(g.total, loss_total(g.parts, cfg.lambdas));

    auto total_at = [&](const Vector& s, const Vector& d) {
      return avi_loss_and_gradient(sx, sz, xc, zc, s, d, cfg).total;
    };
    const double h = 1e-5;
    for (std::size_t i = 0; i < 8; ++i) {
      Vector sp = S, sm = S, dp = ds, dm = ds;
      sp[i] += h;
      sm[i] -= h;
      dp[i] += h;
      dm[i] -= h;
      const double fd_s = (total_at(sp, ds) - total_at(sm, ds)) / (2 * h);
      const double fd_d = (total_at(S, dp) - total_at(S, dm)) / (2 * h);
      EXPECT_NEAR(g.grad_S[i], fd_s, 1e-6 * std::max(1.0, std::abs(fd_s)));
      EXPECT_NEAR(g.grad_delta_s[i], fd_d, 1e-6 * std::max(1.0, std::abs(fd_d)));
    }
  }
}

}  // namespace
}  // namespace lsvd
