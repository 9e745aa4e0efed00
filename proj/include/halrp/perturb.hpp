#pragma once

#include <cstddef>
#include <vector>

#include "halrp/linalg.hpp"
#include "halrp/tensor.hpp"

namespace halrp {

/// Task classifier: logits = weight * features + bias, weight is C x F.
struct Head {
  Matrix weight;
  Vector bias;
  bool operator==(const Head&) const = default;
};

/// Low-rank perturbation of one base layer:
///   W = diag(r) * W_base * diag(s) + U diag(sigma) V^T
/// with the J x I low-rank term broadcast over the d x d kernel positions.
struct TaskLayerParams {
  Vector r;                        // J row scales
  Vector s;                        // I column scales
  linalg::LowRankFactors low_rank; // U: J x k, sigma: k, V: I x k
  std::size_t layer_index = 0;

  std::size_t k() const noexcept { return low_rank.k(); }
  bool operator==(const TaskLayerParams&) const = default;
};

/// Everything a task owns on top of the frozen base.
///
/// `layers` is empty for the base task and for the reference modes.
/// `own_weights` is only used by single-task mode, where each task keeps
/// an independent trunk.
struct TaskPrivateParams {
  int task_id = 0;
  std::vector<TaskLayerParams> layers;
  std::vector<Vector> biases;
  Head head;
  std::vector<Tensor4> own_weights;

  bool operator==(const TaskPrivateParams&) const = default;
};

/// Closed-form row scales minimizing ||W_free - diag(r) W_base||_F^2.
/// Rows whose base entries are all zero get r = 1.
Vector solve_r(const Matrix& w_free, const Matrix& w_base);
/// Column scales minimizing ||W_free - diag(r) W_base diag(s)||_F^2 for fixed r.
Vector solve_s(const Matrix& w_free, const Matrix& w_base, const Vector& r);
/// W_free - diag(r) W_base diag(s).
Matrix residual_b(const Matrix& w_free, const Matrix& w_base, const Vector& r, const Vector& s);

// Kernel-tensor versions: the least-squares sums also run over the d x d
// spatial positions. d = 1 reduces to the matrix versions.
Vector solve_r(const Tensor4& w_free, const Tensor4& w_base);
Vector solve_s(const Tensor4& w_free, const Tensor4& w_base, const Vector& r);
/// Residual averaged over the spatial positions (J x I).
Matrix averaged_residual(const Tensor4& w_free, const Tensor4& w_base, const Vector& r, const Vector& s);

struct Decomposition {
  Vector r;
  Vector s;
  Matrix residual;
  linalg::SVDFactors factors;
};

Decomposition decompose_fc(const Matrix& w_free, const Matrix& w_base);
Decomposition decompose_conv(const Tensor4& w_free, const Tensor4& w_base);

/// Warm-start parameters from a decomposition truncated to rank k.
TaskLayerParams init_layer_params(const Decomposition& d, std::size_t k, std::size_t layer_index);

Matrix low_rank_term(const TaskLayerParams& p);
Matrix reconstruct_weights(const Matrix& w_base, const TaskLayerParams& p);
Tensor4 reconstruct_weights(const Tensor4& w_base, const TaskLayerParams& p);

/// Stored parameters for rank k on a J x I layer: (I + J)(k + 1) + k.
std::size_t param_count(std::size_t out, std::size_t in, std::size_t k);
/// param_count / (J * I).
double increment_ratio(std::size_t out, std::size_t in, std::size_t k);

}  // namespace halrp
