#include "lsvd/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "lsvd/error.hpp"
#include "lsvd/svd.hpp"

namespace lsvd {

Matrix orthonormal_basis(const Matrix& a, std::size_t p) {
  if (p == 0) throw ValidationError("subspace dimension p must be positive");
  if (a.cols() < p || a.rows() < p) {
    throw ValidationError("subspace: matrix " + std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + " cannot span " + std::to_string(p) +
                          " dimensions");
  }
  const std::size_t n = a.rows();
  Matrix q(n, p);
  std::vector<double> v(n);
  for (std::size_t j = 0; j < p; ++j) {
    double original = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = a(i, j);
      original += v[i] * v[i];
    }
    original = std::sqrt(original);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < j; ++k) {
        double proj = 0.0;
        for (std::size_t i = 0; i < n; ++i) proj += q(i, k) * v[i];
        for (std::size_t i = 0; i < n; ++i) v[i] -= proj * q(i, k);
      }
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (original == 0.0 || norm <= 1e-10 * original) {
      throw ValidationError("subspace: rank deficient, column " + std::to_string(j) +
                            " is dependent on earlier columns (p=" + std::to_string(p) + ")");
    }
    for (std::size_t i = 0; i < n; ++i) q(i, j) = v[i] / norm;
  }
  return q;
}

Vector principal_angles(const Matrix& a, const Matrix& b, std::size_t p) {
  if (a.rows() != b.rows()) {
    throw ValidationError("principal_angles: ambient dimensions differ (" +
                          std::to_string(a.rows()) + " vs " + std::to_string(b.rows()) + ")");
  }
  const Matrix qa = orthonormal_basis(a, p);
  const Matrix qb = orthonormal_basis(b, p);

  const Matrix cross = multiply_tn(qa, qb);  // p x p
  Vector cosines = svd(cross).S;             // descending
  for (double& c : cosines) c = std::clamp(c, -1.0, 1.0);

  const Matrix residual = qb - multiply(qa, cross);  // n x p
  Vector sines = svd(residual).S;
  std::reverse(sines.begin(), sines.end());  // ascending, paired with descending cosines
  for (double& s : sines) s = std::clamp(s, -1.0, 1.0);

  Vector angles(p);
  for (std::size_t k = 0; k < p; ++k) {
    angles[k] = cosines[k] > std::numbers::sqrt2 / 2.0 ? std::asin(sines[k]) : std::acos(cosines[k]);
  }
  std::sort(angles.begin(), angles.end());
  return angles;
}

double geodesic_distance(const Matrix& a, const Matrix& b, std::size_t p) {
  double sum = 0.0;
  for (double theta : principal_angles(a, b, p)) sum += theta * theta;
  return std::sqrt(sum);
}

}  // namespace lsvd
