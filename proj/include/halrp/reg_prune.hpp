#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "halrp/perturb.hpp"

namespace halrp {

/// L1 (lambda0) and squared-L2 (lambda1) weights of the fine-tuning penalty.
struct RegCoefficients {
  double lambda0 = 0.0;
  double lambda1 = 0.0;
};

/// sum over layers of lambda0 (|U|_1 + |V|_1) + lambda1 (|r|^2 + |s|^2 + |U|^2 + |V|^2).
/// sigma, biases and heads are not penalized.
double reg_loss(std::span<const TaskLayerParams> layers, const RegCoefficients& c);
double reg_loss(const TaskPrivateParams& params, const RegCoefficients& c);

/// Adds the penalty's (sub)gradient to `grad`: lambda0 sign(x) with sign(0) = 0
/// on U and V, 2 lambda1 x on r, s, U and V.
void add_reg_gradient(const TaskLayerParams& p, const RegCoefficients& c, TaskLayerParams& grad);

enum class PruneMode { Off, Absolute, Percentile, Mixed };

PruneMode parse_prune_mode(std::string_view name);
std::string_view to_string(PruneMode mode);

struct PruneSpec {
  PruneMode mode = PruneMode::Off;
  double tau = 1e-5;   // absolute threshold
  double gamma = 0.2;  // retention target for the percentile threshold
  bool operator==(const PruneSpec&) const = default;
};

/// Zeroes entries with |x| < tau in place. Returns the number zeroed.
std::size_t prune_absolute(std::span<double> values, double tau);

/// Nearest-rank (1 - gamma) percentile of |x| over the pool.
/// Throws InvalidArgument on an empty pool or gamma outside (0, 1].
double prune_percentile(std::span<const double> pool, double gamma);

/// Threshold max(tau, percentile) applied to `values`; the percentile is
/// taken over `pool`. Returns the threshold used.
double prune_mixed(std::span<double> values, std::span<const double> pool, double tau, double gamma);

/// Low-rank entries (U and V) of every task, in task then layer order.
std::vector<double> lowrank_pool(std::span<const TaskPrivateParams> tasks);

/// Threshold a spec selects for the given pool. Mode must not be Off.
double prune_threshold(const PruneSpec& spec, std::span<const double> pool);

/// Applies `threshold` to the U and V entries of every task. Returns the number zeroed.
std::size_t prune_tasks(std::span<TaskPrivateParams> tasks, double threshold);

}  // namespace halrp
