#pragma once

#include <cstddef>

#include "halrp/tensor.hpp"

// Dense kernels used by the training core. Each kernel has an OpenMP
// version (namespace halrp::kernels) and a serial reference (namespace
// halrp::kernels::serial). Both accumulate every output element in the
// same order, so their results are bit-identical for any thread count.
namespace halrp::kernels {

enum class Trans { No, Yes };

/// Geometry of a 2-D convolution over CHW-flattened samples.
struct ConvGeometry {
  std::size_t channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;

  std::size_t out_height() const { return (height + 2 * padding - kernel) / stride + 1; }
  std::size_t out_width() const { return (width + 2 * padding - kernel) / stride + 1; }
  std::size_t positions() const { return out_height() * out_width(); }
  std::size_t patch() const { return channels * kernel * kernel; }
  std::size_t input_size() const { return channels * height * width; }
};

/// op(A) * op(B).
Matrix gemm(const Matrix& a, Trans ta, const Matrix& b, Trans tb);

/// N x (C*H*W) inputs -> (N*P) x (C*d*d) patch rows, P = output positions.
Matrix im2col(const Matrix& inputs, const ConvGeometry& g);

/// Adjoint of im2col: scatters patch rows back into an N x (C*H*W) matrix.
Matrix col2im(const Matrix& cols, std::size_t batch, const ConvGeometry& g);

namespace serial {
Matrix gemm(const Matrix& a, Trans ta, const Matrix& b, Trans tb);
Matrix im2col(const Matrix& inputs, const ConvGeometry& g);
Matrix col2im(const Matrix& cols, std::size_t batch, const ConvGeometry& g);
}  // namespace serial

}  // namespace halrp::kernels
