#include "halrp/rank_select.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "halrp/error.hpp"
#include "halrp/linalg.hpp"

namespace halrp {

double fisher_norm(std::span<const double> gradient) { return squared_norm(gradient); }

std::vector<ImportanceItem> importance_scores(std::span<const double> grad_norms_sq,
                                              std::span<const Vector> spectra) {
  if (grad_norms_sq.size() != spectra.size()) {
    throw ShapeError("importance_scores: " + std::to_string(grad_norms_sq.size()) + " gradient norms for " +
                     std::to_string(spectra.size()) + " spectra");
  }
  std::vector<ImportanceItem> items;
  for (std::size_t l = 0; l < spectra.size(); ++l) {
    for (std::size_t i = 0; i < spectra[l].size(); ++i) {
      const double sigma = spectra[l][i];
      items.push_back({l, i + 1, grad_norms_sq[l] * sigma * sigma});
    }
  }
  return items;
}

RankBudget select_ranks(std::span<const ImportanceItem> items, double alpha,
                        std::span<const std::size_t> ranks_per_layer) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("select_ranks: alpha must lie in [0, 1]");
  RankBudget budget;
  budget.alpha = alpha;
  budget.k_per_layer.assign(ranks_per_layer.size(), 0);

  std::vector<ImportanceItem> sorted(items.begin(), items.end());
  for (const auto& it : sorted) {
    if (it.layer_index >= ranks_per_layer.size()) throw ShapeError("select_ranks: item layer out of range");
    if (!(it.score >= 0.0)) throw InvalidArgument("select_ranks: negative or NaN importance score");
  }
  std::sort(sorted.begin(), sorted.end(), [](const ImportanceItem& a, const ImportanceItem& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.layer_index != b.layer_index) return a.layer_index < b.layer_index;
    return a.rank_index < b.rank_index;
  });
  // Summed in selection order so that covering every positive item
  // reproduces the total exactly (alpha = 1 needs no zero-score items).
  for (const auto& it : sorted) budget.total_score += it.score;
  if (budget.total_score <= 0.0) return budget;

  const double target = alpha * budget.total_score;
  for (const auto& it : sorted) {
    if (budget.selected_score >= target) break;
    if (budget.k_per_layer[it.layer_index] >= ranks_per_layer[it.layer_index]) continue;
    budget.selected_score += it.score;
    ++budget.k_per_layer[it.layer_index];
  }
  return budget;
}

double loss_perturbation_bound(double h_norm, double sigma_tail_sq) {
  if (h_norm < 0.0 || sigma_tail_sq < 0.0) throw InvalidArgument("loss_perturbation_bound: negative input");
  return 0.5 * h_norm * sigma_tail_sq;
}

QuadraticCheck verify_theorem1(const Matrix& hessian, std::span<const double> w_star,
                               std::span<const double> delta) {
  const std::size_t n = hessian.rows();
  if (hessian.cols() != n || w_star.size() != n || delta.size() != n) {
    throw ShapeError("verify_theorem1: dimension mismatch");
  }
  double scale = 0.0;
  for (double x : hessian.data()) scale = std::max(scale, std::abs(x));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(hessian(i, j) - hessian(j, i)) > 1e-12 * std::max(scale, 1.0)) {
        throw InvalidArgument("verify_theorem1: Hessian is not symmetric");
      }
  const Vector eig = linalg::symmetric_eigenvalues(hessian);
  if (!eig.empty() && eig.front() < -1e-10 * std::max(scale, 1.0)) {
    throw InvalidArgument("verify_theorem1: Hessian is not positive semi-definite");
  }

  auto quadratic = [&](std::span<const double> w) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < n; ++j) row += hessian(i, j) * (w[j] - w_star[j]);
      total += (w[i] - w_star[i]) * row;
    }
    return 0.5 * total;
  };
  Vector moved(n);
  for (std::size_t i = 0; i < n; ++i) moved[i] = w_star[i] - delta[i];

  QuadraticCheck check;
  check.actual = quadratic(moved) - quadratic(w_star);
  check.bound = 0.5 * linalg::frobenius_norm(hessian) * squared_norm(delta);
  return check;
}

}  // namespace halrp
