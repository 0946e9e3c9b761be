#pragma once

#include <atomic>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "lsvd/matrix.hpp"
#include "lsvd/rng.hpp"
#include "lsvd/svd.hpp"

namespace lsvd::test {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("lsvd_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  NormalSampler g(seed);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = g.next();
  return m;
}

// ---- dense oracles, written without any library helper ----

// sum_k U[i][k] * s[k] * V[k][j] over k < s.size(), accumulated per element.
inline Matrix naive_triple(const Matrix& U, const std::vector<double>& s, const Matrix& V) {
  Matrix out(U.rows(), V.cols());
  for (std::size_t i = 0; i < U.rows(); ++i) {
    for (std::size_t j = 0; j < V.cols(); ++j) {
      long double acc = 0.0L;
      for (std::size_t k = 0; k < s.size(); ++k) {
        acc += static_cast<long double>(U(i, k)) * s[k] * V(k, j);
      }
      out(i, j) = static_cast<double>(acc);
    }
  }
  return out;
}

inline Matrix naive_product(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      long double acc = 0.0L;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += static_cast<long double>(a(i, k)) * b(k, j);
      out(i, j) = static_cast<double>(acc);
    }
  }
  return out;
}

inline double naive_frobenius_diff(const Matrix& a, const Matrix& b) {
  long double acc = 0.0L;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const long double d = static_cast<long double>(a(i, j)) - b(i, j);
      acc += d * d;
    }
  }
  return static_cast<double>(std::sqrt(acc));
}

inline double naive_rel_error(const Matrix& a, const Matrix& b) {
  const double denom = naive_frobenius_diff(b, Matrix(b.rows(), b.cols()));
  const double diff = naive_frobenius_diff(a, b);
  return denom > 0.0 ? diff / denom : diff;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) worst = std::max(worst, std::abs(a(i, j) - b(i, j)));
  }
  return worst;
}

// Largest |(A^T A - I)_ij| for the columns of A.
inline double orthonormality_residual(const Matrix& a) {
  double worst = 0.0;
  for (std::size_t p = 0; p < a.cols(); ++p) {
    for (std::size_t q = 0; q < a.cols(); ++q) {
      long double dot = 0.0L;
      for (std::size_t i = 0; i < a.rows(); ++i) dot += static_cast<long double>(a(i, p)) * a(i, q);
      const double target = p == q ? 1.0 : 0.0;
      worst = std::max(worst, std::abs(static_cast<double>(dot) - target));
    }
  }
  return worst;
}

// Spectral norm by power iteration on A^T A; oracle independent of the Jacobi SVD.
inline double power_spectral_norm(const Matrix& a, int iters = 2000) {
  std::vector<double> v(a.cols(), 1.0);
  double lambda = 0.0;
  for (int it = 0; it < iters; ++it) {
    std::vector<double> av(a.rows(), 0.0), w(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i)
      for (std::size_t j = 0; j < a.cols(); ++j) av[i] += a(i, j) * v[j];
    for (std::size_t j = 0; j < a.cols(); ++j)
      for (std::size_t i = 0; i < a.rows(); ++i) w[j] += a(i, j) * av[i];
    double n = 0.0;
    for (double x : w) n += x * x;
    n = std::sqrt(n);
    if (n == 0.0) return 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) v[j] = w[j] / n;
    lambda = n;
  }
  return std::sqrt(lambda);
}

// Blended bases assembled entry by entry from the definitions, no helpers.
inline void oracle_bases(const SvdTriple& x, const SvdTriple& z, std::size_t k, double rho,
                         Matrix& U, Matrix& V) {
  const std::size_t n = x.U.rows();
  Matrix uz_rev(n, n), vz_rev(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      uz_rev(r, c) = z.U(r, n - 1 - c);
      vz_rev(r, c) = z.V(n - 1 - r, c);
    }
  U = Matrix(n, n);
  V = Matrix(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      if (c < k) {
        U(r, c) = x.U(r, c);
      } else {
        const double zpart = (c - k) < k ? uz_rev(r, c - k) : 0.0;
        U(r, c) = (1 - rho) * x.U(r, c) + rho * zpart;
      }
      if (r < k) {
        V(r, c) = x.V(r, c);
      } else {
        const double zpart = (r - k) < k ? vz_rev(r - k, c) : 0.0;
        V(r, c) = (1 - rho) * x.V(r, c) + rho * zpart;
      }
    }
}

}  // namespace lsvd::test
