#pragma once

#include "lsvd/matrix.hpp"

namespace lsvd {

// Singular value decomposition M = U * diag(S) * V.
//
// V holds the right singular vectors as ROWS, so the product is written
// without a transpose. In the textbook form M = U * Sigma * W^T this V is
// W^T. For an m x n input, U is m x m, V is n x n and S has min(m, n)
// entries in nonincreasing order. diag(S) is understood as the m x n
// rectangular diagonal.
//
// Sign convention: in every column of U the entry of largest magnitude
// (first one on ties) is nonnegative; the matching row of V is flipped with
// it. Equal singular values keep the order of the Jacobi output columns.
struct SvdTriple {
  Matrix U;
  Vector S;
  Matrix V;
};

struct SvdOptions {
  // A column pair is treated as orthogonal once |a_i . a_j| <= tol * |a_i| |a_j|.
  double tolerance = 1e-12;
  int max_sweeps = 60;
};

// One-sided (Hestenes) Jacobi with cyclic row-by-row pair order. Wide inputs
// are decomposed through their transpose. Throws ValidationError on empty or
// non-finite input and NumericError if `max_sweeps` sweeps do not converge.
SvdTriple svd(const Matrix& m, const SvdOptions& options = {});

// U * diag(S) * V using the leading S.size() columns of U and rows of V.
Matrix reconstruct(const Matrix& U, std::span<const double> S, const Matrix& V);

// Largest singular value.
double spectral_norm(const Matrix& m);

}  // namespace lsvd
