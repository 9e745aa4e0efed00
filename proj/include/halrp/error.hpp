#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace halrp {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes that do not chain or match.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Argument outside its documented domain (rank too large, alpha outside [0,1], ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// An iterative kernel did not converge.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, std::size_t rows, std::size_t cols)
      : Error(what + " (" + std::to_string(rows) + "x" + std::to_string(cols) + ")"),
        rows_(rows),
        cols_(cols) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

 private:
  std::size_t rows_;
  std::size_t cols_;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  explicit DivergenceError(std::size_t epoch)
      : Error("training diverged (non-finite loss) in epoch " + std::to_string(epoch)),
        epoch_(epoch) {}

  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

/// Malformed file or config contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint integrity failure.
class ChecksumError : public FormatError {
 public:
  using FormatError::FormatError;
};

}  // namespace halrp
