#include "halrp/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "halrp/error.hpp"

namespace halrp::linalg {

namespace {

// Orthogonalizes the columns of A in place (A stored column-wise: cols[j]
// is column j, length m) and accumulates the right rotations into V
// (also column-wise, n x n).
void hestenes_sweeps(std::vector<Vector>& cols, std::vector<Vector>& v, std::size_t m_rows,
                     std::size_t n_cols, const SvdOptions& opt) {
  const std::size_t n = cols.size();
  for (std::size_t sweep = 0; sweep < opt.max_sweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        Vector& ap = cols[p];
        Vector& aq = cols[q];
        const double alpha = squared_norm(ap);
        const double beta = squared_norm(aq);
        const double gamma = dot(ap, aq);
        if (gamma == 0.0 || alpha == 0.0 || beta == 0.0) continue;
        if (std::abs(gamma) <= opt.tolerance * std::sqrt(alpha) * std::sqrt(beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < ap.size(); ++i) {
          const double x = ap[i];
          const double y = aq[i];
          ap[i] = c * x - s * y;
          aq[i] = s * x + c * y;
        }
        Vector& vp = v[p];
        Vector& vq = v[q];
        for (std::size_t i = 0; i < vp.size(); ++i) {
          const double x = vp[i];
          const double y = vq[i];
          vp[i] = c * x - s * y;
          vq[i] = s * x + c * y;
        }
      }
    }
    if (!rotated) return;
  }
  throw NumericalError("svd: one-sided Jacobi did not converge in " + std::to_string(opt.max_sweeps) + " sweeps",
                       m_rows, n_cols);
}

// Replaces `basis[j]` for every flagged j with a unit vector orthogonal to
// all other columns, drawn from the standard basis by Gram-Schmidt.
void complete_orthonormal(std::vector<Vector>& basis, const std::vector<bool>& missing) {
  if (basis.empty()) return;
  const std::size_t dim = basis.front().size();
  std::size_t candidate = 0;
  for (std::size_t j = 0; j < basis.size(); ++j) {
    if (!missing[j]) continue;
    for (; candidate < dim; ++candidate) {
      Vector e(dim, 0.0);
      e[candidate] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t o = 0; o < basis.size(); ++o) {
          if (o == j || (missing[o] && o > j)) continue;
          const double proj = dot(e, basis[o]);
          for (std::size_t i = 0; i < dim; ++i) e[i] -= proj * basis[o][i];
        }
      }
      const double norm = std::sqrt(squared_norm(e));
      if (norm > 0.5) {
        for (double& x : e) x /= norm;
        basis[j] = std::move(e);
        ++candidate;
        break;
      }
    }
  }
}

}  // namespace

SVDFactors svd(const Matrix& m, const SvdOptions& options) {
  if (m.rows() == 0 || m.cols() == 0) throw ShapeError("svd: empty matrix");
  if (!all_finite(m.data())) throw InvalidArgument("svd: non-finite input");

  // Work on the orientation with at least as many rows as columns.
  const bool flip = m.rows() < m.cols();
  const Matrix a = flip ? m.transposed() : m;
  const std::size_t rows = a.rows();
  const std::size_t n = a.cols();

  std::vector<Vector> cols(n, Vector(rows));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < n; ++j) cols[j][i] = a(i, j);
  std::vector<Vector> vcols(n, Vector(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) vcols[j][j] = 1.0;

  hestenes_sweeps(cols, vcols, m.rows(), m.cols(), options);

  Vector sigma(n);
  for (std::size_t j = 0; j < n; ++j) sigma[j] = std::sqrt(squared_norm(cols[j]));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  std::vector<Vector> left(n);
  std::vector<Vector> right(n);
  std::vector<bool> missing(n, false);
  Vector sorted(n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t j = order[r];
    sorted[r] = sigma[j];
    right[r] = vcols[j];
    if (sigma[j] > 0.0 && std::isnormal(sigma[j])) {
      left[r] = cols[j];
      for (double& x : left[r]) x /= sigma[j];
    } else {
      sorted[r] = 0.0;
      left[r] = Vector(rows, 0.0);
      missing[r] = true;
    }
  }
  complete_orthonormal(left, missing);

  // Sign convention on the left factor of the original orientation.
  std::vector<Vector>& u_cols = flip ? right : left;
  std::vector<Vector>& v_cols = flip ? left : right;
  for (std::size_t r = 0; r < n; ++r) {
    double peak = 0.0;
    for (double x : u_cols[r]) peak = std::max(peak, std::abs(x));
    for (double x : u_cols[r]) {
      if (std::abs(x) > kZeroSingularValue * peak) {
        if (x < 0.0) {
          for (double& y : u_cols[r]) y = -y;
          for (double& y : v_cols[r]) y = -y;
        }
        break;
      }
    }
  }

  SVDFactors f;
  f.sigma = std::move(sorted);
  f.u = Matrix(m.rows(), n);
  f.v = Matrix(m.cols(), n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < m.rows(); ++i) f.u(i, r) = u_cols[r][i];
    for (std::size_t i = 0; i < m.cols(); ++i) f.v(i, r) = v_cols[r][i];
  }
  return f;
}

LowRankFactors truncate(const SVDFactors& f, std::size_t k) {
  if (k > f.sigma.size()) {
    throw InvalidArgument("truncate: rank " + std::to_string(k) + " exceeds " + std::to_string(f.sigma.size()));
  }
  LowRankFactors t;
  t.sigma.assign(f.sigma.begin(), f.sigma.begin() + static_cast<std::ptrdiff_t>(k));
  t.u = Matrix(f.u.rows(), k);
  t.v = Matrix(f.v.rows(), k);
  for (std::size_t i = 0; i < f.u.rows(); ++i)
    for (std::size_t c = 0; c < k; ++c) t.u(i, c) = f.u(i, c);
  for (std::size_t i = 0; i < f.v.rows(); ++i)
    for (std::size_t c = 0; c < k; ++c) t.v(i, c) = f.v(i, c);
  return t;
}

Matrix reconstruct(const LowRankFactors& f) {
  Matrix out(f.u.rows(), f.v.rows());
  for (std::size_t j = 0; j < out.rows(); ++j) {
    for (std::size_t i = 0; i < out.cols(); ++i) {
      double s = 0.0;
      for (std::size_t c = 0; c < f.k(); ++c) s += f.u(j, c) * f.sigma[c] * f.v(i, c);
      out(j, i) = s;
    }
  }
  return out;
}

Matrix reconstruct(const SVDFactors& f) { return reconstruct(truncate(f, f.sigma.size())); }

std::size_t numerical_rank(const SVDFactors& f) {
  if (f.sigma.empty() || f.sigma.front() == 0.0) return 0;
  const double cut = kZeroSingularValue * f.sigma.front();
  return static_cast<std::size_t>(std::count_if(f.sigma.begin(), f.sigma.end(), [&](double s) { return s >= cut; }));
}

double truncation_error(const SVDFactors& f, std::size_t k) {
  if (k > f.sigma.size()) {
    throw InvalidArgument("truncation_error: rank " + std::to_string(k) + " exceeds " +
                          std::to_string(f.sigma.size()));
  }
  const std::size_t rank = numerical_rank(f);
  double tail = 0.0;
  // Smallest first for accuracy.
  for (std::size_t i = rank; i > k; --i) tail += f.sigma[i - 1] * f.sigma[i - 1];
  return std::sqrt(tail);
}

double frobenius_norm(const Matrix& m) { return std::sqrt(squared_norm(m.data())); }

Vector symmetric_eigenvalues(const Matrix& m) {
  if (m.rows() != m.cols()) throw ShapeError("symmetric_eigenvalues: matrix is not square");
  Matrix a = m;
  const std::size_t n = a.rows();
  constexpr std::size_t kMaxSweeps = 100;
  for (std::size_t sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off <= 1e-30 * std::max(1.0, squared_norm(a.data()))) break;
    if (sweep + 1 == kMaxSweeps) throw NumericalError("symmetric_eigenvalues: no convergence", n, n);
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  Vector eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

}  // namespace halrp::linalg
