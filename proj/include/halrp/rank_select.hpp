#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "halrp/tensor.hpp"

namespace halrp {

/// Marginal loss contribution of keeping singular direction `rank_index`
/// (1-based) of layer `layer_index`: |g_l|^2 * sigma_{l,i}^2.
struct ImportanceItem {
  std::size_t layer_index = 0;
  std::size_t rank_index = 1;
  double score = 0.0;
};

struct RankBudget {
  double alpha = 0.0;
  std::vector<std::size_t> k_per_layer;
  double total_score = 0.0;
  double selected_score = 0.0;
};

/// |g|^2, which equals the Frobenius norm of the outer product g g^T and
/// stands in for |H|_F under the empirical Fisher approximation.
double fisher_norm(std::span<const double> gradient);

/// One item per (layer, singular value); grad_norms_sq[l] is |g_l|^2.
std::vector<ImportanceItem> importance_scores(std::span<const double> grad_norms_sq,
                                              std::span<const Vector> spectra);

/// Greedy budget: take items by descending score (ties: lower layer, then
/// lower rank) until the selected mass reaches alpha of the total.
/// `ranks_per_layer[l]` bounds k_l and fixes the number of layers.
RankBudget select_ranks(std::span<const ImportanceItem> items, double alpha,
                        std::span<const std::size_t> ranks_per_layer);

/// 1/2 * h_norm * sigma_tail_sq (the second-order term of the loss change).
double loss_perturbation_bound(double h_norm, double sigma_tail_sq);

struct QuadraticCheck {
  double actual = 0.0;
  double bound = 0.0;
  /// Equality cases (rank-one H along delta) may exceed the bound by rounding only.
  bool holds() const noexcept { return actual <= bound * (1.0 + 1e-12); }
};

/// For L(w) = 1/2 (w - w*)^T H (w - w*): actual = L(w* - delta) - L(w*),
/// bound = 1/2 |H|_F |delta|^2. Throws InvalidArgument unless H is
/// symmetric positive semi-definite.
QuadraticCheck verify_theorem1(const Matrix& hessian, std::span<const double> w_star,
                               std::span<const double> delta);

}  // namespace halrp
