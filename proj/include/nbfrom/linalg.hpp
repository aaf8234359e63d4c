#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace nbfrom {

/// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  /// Reshapes in place, reusing storage. Contents are unspecified afterwards.
  void resize(std::size_t rows, std::size_t cols);

  std::vector<double> column(std::size_t c) const;
  void set_column(std::size_t c, std::span<const double> values);

  /// "rows x cols", used in error messages.
  std::string shape() const;

  bool operator==(const DenseMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix transpose(const DenseMatrix& a);
double frobenius_norm(const DenseMatrix& a);
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

/// Thin SVD of an N x D matrix with D <= N: a = u * diag(sigma) * vt.
struct SvdResult {
  DenseMatrix u;              ///< N x D, orthonormal columns
  std::vector<double> sigma;  ///< D values, non-increasing, >= 0
  DenseMatrix vt;             ///< D x D, orthonormal rows
};

/// One-sided Jacobi SVD for tall, skinny matrices.
///
/// Column pairs are rotated until every off-diagonal Gram entry satisfies
/// |a_p . a_q| <= 1e-14 * ||a_p|| ||a_q||, for at most 60 sweeps. Each right
/// singular vector is signed so that its first non-negligible component is
/// positive; the matching left vector follows. Columns whose singular value is
/// numerically zero get an orthonormal completion so u always has orthonormal
/// columns.
///
/// Throws std::invalid_argument for an empty or wide matrix and
/// std::runtime_error if the sweep cap is hit.
SvdResult thin_svd(const DenseMatrix& a);

}  // namespace nbfrom
