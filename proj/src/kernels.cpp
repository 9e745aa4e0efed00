#include "halrp/kernels.hpp"

#include <string>

#include "halrp/error.hpp"

namespace halrp::kernels {

namespace {

struct GemmShape {
  std::size_t m, k, n;
};

GemmShape gemm_shape(const Matrix& a, Trans ta, const Matrix& b, Trans tb) {
  const std::size_t m = ta == Trans::No ? a.rows() : a.cols();
  const std::size_t ka = ta == Trans::No ? a.cols() : a.rows();
  const std::size_t kb = tb == Trans::No ? b.rows() : b.cols();
  const std::size_t n = tb == Trans::No ? b.cols() : b.rows();
  if (ka != kb) {
    throw ShapeError("gemm: inner dimensions " + std::to_string(ka) + " and " + std::to_string(kb));
  }
  return {m, ka, n};
}

void check_im2col(const Matrix& inputs, const ConvGeometry& g) {
  if (inputs.cols() != g.input_size()) {
    throw ShapeError("im2col: sample width " + std::to_string(inputs.cols()) + " != " +
                     std::to_string(g.input_size()));
  }
  if (g.kernel == 0 || g.stride == 0 || g.height + 2 * g.padding < g.kernel ||
      g.width + 2 * g.padding < g.kernel) {
    throw ShapeError("im2col: kernel does not fit the padded input");
  }
}

// Patch row for output position (oy, ox) of sample n.
template <typename Src>
void fill_patch(const Src& src, const ConvGeometry& g, std::size_t oy, std::size_t ox, double* dst) {
  const auto h = static_cast<std::ptrdiff_t>(g.height);
  const auto w = static_cast<std::ptrdiff_t>(g.width);
  std::size_t col = 0;
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t p = 0; p < g.kernel; ++p) {
      const auto y = static_cast<std::ptrdiff_t>(oy * g.stride + p) - static_cast<std::ptrdiff_t>(g.padding);
      for (std::size_t q = 0; q < g.kernel; ++q, ++col) {
        const auto x = static_cast<std::ptrdiff_t>(ox * g.stride + q) - static_cast<std::ptrdiff_t>(g.padding);
        dst[col] = (y >= 0 && y < h && x >= 0 && x < w)
                       ? src[(c * g.height + static_cast<std::size_t>(y)) * g.width + static_cast<std::size_t>(x)]
                       : 0.0;
      }
    }
  }
}

}  // namespace

Matrix gemm(const Matrix& a, Trans ta, const Matrix& b, Trans tb) {
  const auto [m, k, n] = gemm_shape(a, ta, b, tb);
  // Row-major operands with contiguous inner dimension.
  const Matrix lhs = ta == Trans::No ? a : a.transposed();
  const Matrix rhs = tb == Trans::Yes ? b : b.transposed();
  Matrix c(m, n);
  const double* ld = lhs.data().data();
  const double* rd = rhs.data().data();
  double* cd = c.data().data();
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static) if (m * n * k > 32768)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const double* li = ld + static_cast<std::size_t>(i) * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* rj = rd + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += li[p] * rj[p];
      cd[static_cast<std::size_t>(i) * n + j] = s;
    }
  }
  return c;
}

Matrix im2col(const Matrix& inputs, const ConvGeometry& g) {
  check_im2col(inputs, g);
  const std::size_t batch = inputs.rows();
  const std::size_t ow = g.out_width();
  const std::size_t positions = g.positions();
  Matrix cols(batch * positions, g.patch());
  const auto total = static_cast<std::ptrdiff_t>(batch * positions);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < total; ++r) {
    const auto row = static_cast<std::size_t>(r);
    const std::size_t n = row / positions;
    const std::size_t pos = row % positions;
    fill_patch(inputs.row(n), g, pos / ow, pos % ow, cols.row(row).data());
  }
  return cols;
}

Matrix col2im(const Matrix& cols, std::size_t batch, const ConvGeometry& g) {
  const std::size_t positions = g.positions();
  if (cols.rows() != batch * positions || cols.cols() != g.patch()) {
    throw ShapeError("col2im: patch matrix shape mismatch");
  }
  const std::size_t ow = g.out_width();
  Matrix out(batch, g.input_size());
  const auto nb = static_cast<std::ptrdiff_t>(batch);
  // Samples are independent; within a sample positions are scattered in order.
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t sn = 0; sn < nb; ++sn) {
    const auto n = static_cast<std::size_t>(sn);
    auto dst = out.row(n);
    for (std::size_t pos = 0; pos < positions; ++pos) {
      const std::size_t oy = pos / ow;
      const std::size_t ox = pos % ow;
      auto src = cols.row(n * positions + pos);
      std::size_t col = 0;
      for (std::size_t c = 0; c < g.channels; ++c) {
        for (std::size_t p = 0; p < g.kernel; ++p) {
          const auto y = static_cast<std::ptrdiff_t>(oy * g.stride + p) - static_cast<std::ptrdiff_t>(g.padding);
          for (std::size_t q = 0; q < g.kernel; ++q, ++col) {
            const auto x = static_cast<std::ptrdiff_t>(ox * g.stride + q) - static_cast<std::ptrdiff_t>(g.padding);
            if (y >= 0 && y < static_cast<std::ptrdiff_t>(g.height) && x >= 0 &&
                x < static_cast<std::ptrdiff_t>(g.width)) {
              dst[(c * g.height + static_cast<std::size_t>(y)) * g.width + static_cast<std::size_t>(x)] += src[col];
            }
          }
        }
      }
    }
  }
  return out;
}

namespace serial {

Matrix gemm(const Matrix& a, Trans ta, const Matrix& b, Trans tb) {
  const auto [m, k, n] = gemm_shape(a, ta, b, tb);
  Matrix c(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        const double x = ta == Trans::No ? a(i, p) : a(p, i);
        const double y = tb == Trans::No ? b(p, j) : b(j, p);
        s += x * y;
      }
      c(i, j) = s;
    }
  }
  return c;
}

Matrix im2col(const Matrix& inputs, const ConvGeometry& g) {
  check_im2col(inputs, g);
  const std::size_t positions = g.positions();
  Matrix cols(inputs.rows() * positions, g.patch());
  for (std::size_t n = 0; n < inputs.rows(); ++n) {
    for (std::size_t oy = 0; oy < g.out_height(); ++oy) {
      for (std::size_t ox = 0; ox < g.out_width(); ++ox) {
        const std::size_t row = n * positions + oy * g.out_width() + ox;
        fill_patch(inputs.row(n), g, oy, ox, cols.row(row).data());
      }
    }
  }
  return cols;
}

Matrix col2im(const Matrix& cols, std::size_t batch, const ConvGeometry& g) {
  if (cols.rows() != batch * g.positions() || cols.cols() != g.patch()) {
    throw ShapeError("col2im: patch matrix shape mismatch");
  }
  Matrix out(batch, g.input_size());
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t oy = 0; oy < g.out_height(); ++oy) {
      for (std::size_t ox = 0; ox < g.out_width(); ++ox) {
        const std::size_t row = n * g.positions() + oy * g.out_width() + ox;
        for (std::size_t c = 0; c < g.channels; ++c) {
          for (std::size_t p = 0; p < g.kernel; ++p) {
            for (std::size_t q = 0; q < g.kernel; ++q) {
              const long y = static_cast<long>(oy * g.stride + p) - static_cast<long>(g.padding);
              const long x = static_cast<long>(ox * g.stride + q) - static_cast<long>(g.padding);
              if (y < 0 || x < 0 || y >= static_cast<long>(g.height) || x >= static_cast<long>(g.width)) continue;
              out(n, (c * g.height + static_cast<std::size_t>(y)) * g.width + static_cast<std::size_t>(x)) +=
                  cols(row, (c * g.kernel + p) * g.kernel + q);
            }
          }
        }
      }
    }
  }
  return out;
}

}  // namespace serial

}  // namespace halrp::kernels
