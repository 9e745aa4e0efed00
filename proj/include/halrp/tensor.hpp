#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace halrp {

using Vector = std::vector<double>;

/// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  Matrix transposed() const;
  Vector column(std::size_t c) const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double c, const Matrix& a);

/// Layer weight tensor, laid out (out J, in I, kernel d, kernel d).
///
/// Dense layers use d = 1, so the storage is exactly the J x I matrix and
/// `as_matrix()` of a conv kernel is the J x (I*d*d) im2col weight matrix.
class Tensor4 {
 public:
  Tensor4() = default;
  Tensor4(std::size_t out, std::size_t in, std::size_t kernel, double fill = 0.0)
      : out_(out), in_(in), kernel_(kernel), data_(out * in * kernel * kernel, fill) {}

  static Tensor4 from_matrix(const Matrix& m);

  std::size_t out() const noexcept { return out_; }
  std::size_t in() const noexcept { return in_; }
  std::size_t kernel() const noexcept { return kernel_; }
  std::size_t spatial() const noexcept { return kernel_ * kernel_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t j, std::size_t i, std::size_t p, std::size_t q) {
    return data_[((j * in_ + i) * kernel_ + p) * kernel_ + q];
  }
  double operator()(std::size_t j, std::size_t i, std::size_t p, std::size_t q) const {
    return data_[((j * in_ + i) * kernel_ + p) * kernel_ + q];
  }
  /// Entry at flattened spatial position `pq` in [0, d*d).
  double& at(std::size_t j, std::size_t i, std::size_t pq) { return data_[(j * in_ + i) * spatial() + pq]; }
  double at(std::size_t j, std::size_t i, std::size_t pq) const { return data_[(j * in_ + i) * spatial() + pq]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  /// J x (I*d*d) view copied into a Matrix.
  Matrix as_matrix() const { return Matrix(out_, in_ * spatial(), data_); }

  bool same_shape(const Tensor4& o) const noexcept {
    return out_ == o.out_ && in_ == o.in_ && kernel_ == o.kernel_;
  }

  bool operator==(const Tensor4&) const = default;

 private:
  std::size_t out_ = 0;
  std::size_t in_ = 0;
  std::size_t kernel_ = 1;
  std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> v);
bool all_finite(std::span<const double> v);

}  // namespace halrp
