#include "lsvd/svd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include "lsvd/error.hpp"

namespace lsvd {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void rotate(double* a, double* b, std::size_t n, double c, double s) {
  for (std::size_t i = 0; i < n; ++i) {
    const double ai = a[i];
    const double bi = b[i];
    a[i] = c * ai - s * bi;
    b[i] = s * ai + c * bi;
  }
}

// Column-major working storage for the tall case.
struct ColumnMajor {
  std::size_t rows;
  std::size_t cols;
  std::vector<double> data;
  double* col(std::size_t j) { return data.data() + j * rows; }
  const double* col(std::size_t j) const { return data.data() + j * rows; }
};

// Orthonormalizes `candidate` against the first `count` columns of `basis`
// (classical Gram-Schmidt applied twice). Returns the residual norm before
// normalization.
double orthogonalize(ColumnMajor& basis, std::size_t count, std::vector<double>& candidate) {
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t j = 0; j < count; ++j) {
      const double proj = dot(basis.col(j), candidate.data(), basis.rows);
      const double* q = basis.col(j);
      for (std::size_t i = 0; i < basis.rows; ++i) candidate[i] -= proj * q[i];
    }
  }
  const double norm = std::sqrt(dot(candidate.data(), candidate.data(), candidate.size()));
  if (norm > 0.0)
    for (double& v : candidate) v /= norm;
  return norm;
}

// Decomposes a tall (rows >= cols) matrix. Returns U (m x m), S (n) and the
// right singular vectors as columns of W (n x n), i.e. M = U diag(S) W^T.
struct TallSvd {
  ColumnMajor U;
  Vector S;
  ColumnMajor W;
};

TallSvd jacobi_tall(const Matrix& m, const SvdOptions& options) {
  const std::size_t rows = m.rows();
  const std::size_t cols = m.cols();

  ColumnMajor a{rows, cols, std::vector<double>(rows * cols)};
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) a.col(c)[r] = m(r, c);

  ColumnMajor w{cols, cols, std::vector<double>(cols * cols, 0.0)};
  for (std::size_t c = 0; c < cols; ++c) w.col(c)[c] = 1.0;

  double total = 0.0;
  for (double v : a.data) total += v * v;
  // Pairs whose norms are both at this level carry no information.
  const double negligible = total * std::numeric_limits<double>::epsilon() *
                            std::numeric_limits<double>::epsilon();

  bool converged = cols < 2 || total == 0.0;
  double worst = 0.0;
  for (int sweep = 0; sweep < options.max_sweeps && !converged; ++sweep) {
    bool rotated = false;
    worst = 0.0;
    for (std::size_t i = 0; i + 1 < cols; ++i) {
      for (std::size_t j = i + 1; j < cols; ++j) {
        double* ai = a.col(i);
        double* aj = a.col(j);
        const double alpha = dot(ai, ai, rows);
        const double beta = dot(aj, aj, rows);
        const double gamma = dot(ai, aj, rows);
        const double scale = std::sqrt(alpha * beta);
        if (gamma == 0.0 || scale <= negligible) continue;
        const double off = std::abs(gamma) / scale;
        worst = std::max(worst, off);
        if (off <= options.tolerance) continue;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        rotate(ai, aj, rows, c, s);
        rotate(w.col(i), w.col(j), cols, c, s);
        rotated = true;
      }
    }
    converged = !rotated;
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "svd: Jacobi iteration did not converge after " << options.max_sweeps
        << " sweeps (residual off-diagonal ratio " << worst << ")";
    throw NumericError(msg.str());
  }

  std::vector<double> norms(cols);
  for (std::size_t c = 0; c < cols; ++c) norms[c] = std::sqrt(dot(a.col(c), a.col(c), rows));

  std::vector<std::size_t> order(cols);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return norms[x] > norms[y]; });

  TallSvd out{ColumnMajor{rows, rows, std::vector<double>(rows * rows, 0.0)}, Vector(cols),
              ColumnMajor{cols, cols, std::vector<double>(cols * cols)}};

  const double largest = cols ? norms[order[0]] : 0.0;
  const double cutoff = largest * static_cast<double>(std::max(rows, cols)) *
                        std::numeric_limits<double>::epsilon();

  std::vector<bool> needs_completion(rows, false);
  for (std::size_t k = 0; k < cols; ++k) {
    const std::size_t src = order[k];
    out.S[k] = norms[src];
    std::copy_n(w.col(src), cols, out.W.col(k));
    if (norms[src] > cutoff && norms[src] > 0.0) {
      const double inv = 1.0 / norms[src];
      const double* from = a.col(src);
      double* to = out.U.col(k);
      for (std::size_t r = 0; r < rows; ++r) to[r] = from[r] * inv;
    } else {
      needs_completion[k] = true;
    }
  }
  for (std::size_t k = cols; k < rows; ++k) needs_completion[k] = true;

  // Fill null-space columns of U from the standard basis, in index order.
  if (std::find(needs_completion.begin(), needs_completion.end(), true) != needs_completion.end()) {
    // Pack the valid columns first so orthogonalize() sees a contiguous prefix.
    ColumnMajor basis{rows, rows, std::vector<double>(rows * rows, 0.0)};
    std::size_t filled = 0;
    for (std::size_t k = 0; k < rows; ++k) {
      if (!needs_completion[k]) std::copy_n(out.U.col(k), rows, basis.col(filled++));
    }
    const double accept = 0.5 / std::sqrt(static_cast<double>(rows));
    std::size_t next_unit = 0;
    std::vector<double> candidate(rows);
    for (std::size_t k = 0; k < rows; ++k) {
      if (!needs_completion[k]) continue;
      for (;; ++next_unit) {
        if (next_unit >= rows) throw NumericError("svd: failed to complete orthonormal basis");
        std::fill(candidate.begin(), candidate.end(), 0.0);
        candidate[next_unit] = 1.0;
        if (orthogonalize(basis, filled, candidate) > accept) break;
      }
      ++next_unit;
      std::copy(candidate.begin(), candidate.end(), basis.col(filled++));
      std::copy(candidate.begin(), candidate.end(), out.U.col(k));
    }
  }
  return out;
}

void apply_sign_convention(Matrix& U, Matrix& V) {
  for (std::size_t c = 0; c < U.cols(); ++c) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t r = 0; r < U.rows(); ++r) {
      const double mag = std::abs(U(r, c));
      if (mag > best) {
        best = mag;
        arg = r;
      }
    }
    if (U(arg, c) >= 0.0) continue;
    for (std::size_t r = 0; r < U.rows(); ++r) U(r, c) = -U(r, c);
    if (c < V.rows())
      for (double& v : V.row(c)) v = -v;
  }
}

}  // namespace

SvdTriple svd(const Matrix& m, const SvdOptions& options) {
  if (m.empty()) throw ValidationError("svd: empty matrix");
  if (!m.all_finite()) throw ValidationError("svd: non-finite input");

  const bool wide = m.rows() < m.cols();
  const TallSvd tall = jacobi_tall(wide ? m.transposed() : m, options);

  // tall: T = Ut diag(S) Wt^T with column-major Ut, Wt.
  const std::size_t tr = tall.U.rows;
  const std::size_t tc = tall.W.rows;
  Matrix ut(tr, tr);
  for (std::size_t c = 0; c < tr; ++c)
    for (std::size_t r = 0; r < tr; ++r) ut(r, c) = tall.U.col(c)[r];
  Matrix wt(tc, tc);
  for (std::size_t c = 0; c < tc; ++c)
    for (std::size_t r = 0; r < tc; ++r) wt(r, c) = tall.W.col(c)[r];

  SvdTriple out;
  out.S = tall.S;
  if (!wide) {
    out.U = std::move(ut);
    out.V = wt.transposed();
  } else {
    // M = T^T = Wt diag(S) Ut^T.
    out.U = std::move(wt);
    out.V = ut.transposed();
  }
  apply_sign_convention(out.U, out.V);
  return out;
}

Matrix reconstruct(const Matrix& U, std::span<const double> S, const Matrix& V) {
  const std::size_t k = S.size();
  if (k > U.cols() || k > V.rows()) {
    throw ValidationError("reconstruct: " + std::to_string(k) + " singular values for U with " +
                          std::to_string(U.cols()) + " columns and V with " +
                          std::to_string(V.rows()) + " rows");
  }
  Matrix scaled(U.rows(), k);
  for (std::size_t r = 0; r < U.rows(); ++r)
    for (std::size_t c = 0; c < k; ++c) scaled(r, c) = U(r, c) * S[c];
  return multiply(scaled, V.row_block(0, k));
}

double spectral_norm(const Matrix& m) { return svd(m).S.front(); }

}  // namespace lsvd
