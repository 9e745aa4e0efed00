#pragma once

#include <cstddef>

#include "halrp/tensor.hpp"

namespace halrp::linalg {

/// Economy singular value decomposition M = U diag(sigma) V^T.
///
/// U is rows x r, V is cols x r with r = min(rows, cols). Singular values
/// are sorted descending; the first entry of each U column whose magnitude
/// is not negligible is nonnegative, so the factors are reproducible.
struct SVDFactors {
  Matrix u;
  Vector sigma;
  Matrix v;

  std::size_t rank_capacity() const noexcept { return sigma.size(); }
};

/// Leading-k slice of an SVD. k = 0 is the zero matrix of the parent shape.
struct LowRankFactors {
  Matrix u;      // rows x k
  Vector sigma;  // k
  Matrix v;      // cols x k

  std::size_t k() const noexcept { return sigma.size(); }
  bool operator==(const LowRankFactors&) const = default;
};

struct SvdOptions {
  std::size_t max_sweeps = 60;
  double tolerance = 1e-12;
};

/// Relative cutoff below which a singular value counts as an exact zero.
inline constexpr double kZeroSingularValue = 1e-12;

/// One-sided (Hestenes) Jacobi SVD. Throws NumericalError when the sweep
/// cap is reached without every column pair becoming orthogonal.
SVDFactors svd(const Matrix& m, const SvdOptions& options = {});

/// Throws InvalidArgument when k exceeds the number of singular values.
LowRankFactors truncate(const SVDFactors& f, std::size_t k);

Matrix reconstruct(const LowRankFactors& f);
Matrix reconstruct(const SVDFactors& f);

/// sqrt(sigma_{k+1}^2 + ... + sigma_r^2) over the non-negligible singular
/// values; 0 at k = numerical_rank(f).
double truncation_error(const SVDFactors& f, std::size_t k);

/// Number of singular values >= kZeroSingularValue * sigma[0].
std::size_t numerical_rank(const SVDFactors& f);

double frobenius_norm(const Matrix& m);

/// Eigenvalues of a symmetric matrix (cyclic Jacobi), ascending.
Vector symmetric_eigenvalues(const Matrix& m);

}  // namespace halrp::linalg
