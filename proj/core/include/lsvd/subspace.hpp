#pragma once

#include <cstddef>

#include "lsvd/matrix.hpp"

namespace lsvd {

// Orthonormal basis for the span of the first `p` columns of `a`, computed by
// modified Gram-Schmidt with one reorthogonalization pass. Throws
// ValidationError when a column's residual falls below 1e-10 of its original
// norm (rank below p) or when `a` has fewer than p columns.
Matrix orthonormal_basis(const Matrix& a, std::size_t p);

// Principal angles theta_1 <= ... <= theta_p in [0, pi/2] between the spans
// of the leading p columns of A and B. The cosines are the singular values of
// Qa^T Qb clamped to [-1, 1]. Angles whose cosine exceeds 1/sqrt(2) are taken
// from the matching sine (singular values of Qb - Qa Qa^T Qb) instead, which
// keeps small angles accurate where arccos is ill-conditioned.
Vector principal_angles(const Matrix& a, const Matrix& b, std::size_t p);

// Grassmannian geodesic distance sqrt(sum theta_k^2) over p principal angles.
double geodesic_distance(const Matrix& a, const Matrix& b, std::size_t p);

}  // namespace lsvd
