#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lsvd {

using Vector = std::vector<double>;

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  // Nested initializer, one inner list per row. Rows must have equal length.
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> diag);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  Matrix transposed() const;
  // Columns [first, first + count).
  Matrix col_block(std::size_t first, std::size_t count) const;
  // Rows [first, first + count).
  Matrix row_block(std::size_t first, std::size_t count) const;

  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);

// Plain i-k-j product; the summation order over k is fixed.
Matrix multiply(const Matrix& a, const Matrix& b);
// a^T * b without forming the transpose.
Matrix multiply_tn(const Matrix& a, const Matrix& b);

Matrix reverse_columns(const Matrix& m);
Matrix reverse_rows(const Matrix& m);
Vector reversed(std::span<const double> v);

double frobenius_norm(const Matrix& m);
double frobenius_distance(const Matrix& a, const Matrix& b);
double squared_frobenius_distance(const Matrix& a, const Matrix& b);
double squared_distance(std::span<const double> a, std::span<const double> b);
// ||a - b||_F / ||b||_F, or the absolute distance when b is zero.
double relative_frobenius_error(const Matrix& a, const Matrix& b);

// Throws ValidationError with `what` in the message unless shapes agree.
void require_same_shape(const Matrix& a, const Matrix& b, const char* what);

}  // namespace lsvd
