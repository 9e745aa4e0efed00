#include "halrp/reg_prune.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "halrp/error.hpp"

namespace halrp {

namespace {

double l1(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

double reg_loss(std::span<const TaskLayerParams> layers, const RegCoefficients& c) {
  double total = 0.0;
  for (const auto& p : layers) {
    const auto u = p.low_rank.u.data();
    const auto v = p.low_rank.v.data();
    total += c.lambda0 * (l1(u) + l1(v)) +
             c.lambda1 * (squared_norm(p.r) + squared_norm(p.s) + squared_norm(u) + squared_norm(v));
  }
  return total;
}

double reg_loss(const TaskPrivateParams& params, const RegCoefficients& c) { return reg_loss(params.layers, c); }

void add_reg_gradient(const TaskLayerParams& p, const RegCoefficients& c, TaskLayerParams& grad) {
  for (std::size_t j = 0; j < p.r.size(); ++j) grad.r[j] += 2.0 * c.lambda1 * p.r[j];
  for (std::size_t i = 0; i < p.s.size(); ++i) grad.s[i] += 2.0 * c.lambda1 * p.s[i];
  auto apply = [&](std::span<const double> x, std::span<double> g) {
    for (std::size_t n = 0; n < x.size(); ++n) g[n] += c.lambda0 * sign(x[n]) + 2.0 * c.lambda1 * x[n];
  };
  apply(p.low_rank.u.data(), grad.low_rank.u.data());
  apply(p.low_rank.v.data(), grad.low_rank.v.data());
}

PruneMode parse_prune_mode(std::string_view name) {
  if (name == "off") return PruneMode::Off;
  if (name == "absolute") return PruneMode::Absolute;
  if (name == "percentile") return PruneMode::Percentile;
  if (name == "mixed") return PruneMode::Mixed;
  throw InvalidArgument("unknown prune mode '" + std::string(name) + "' (expected off|absolute|percentile|mixed)");
}

std::string_view to_string(PruneMode mode) {
  switch (mode) {
    case PruneMode::Off: return "off";
    case PruneMode::Absolute: return "absolute";
    case PruneMode::Percentile: return "percentile";
    case PruneMode::Mixed: return "mixed";
  }
  return "off";
}

std::size_t prune_absolute(std::span<double> values, double tau) {
  if (!(tau > 0.0)) throw InvalidArgument("prune_absolute: tau must be positive");
  std::size_t zeroed = 0;
  for (double& x : values) {
    if (std::abs(x) < tau && x != 0.0) {
      x = 0.0;
      ++zeroed;
    }
  }
  return zeroed;
}

double prune_percentile(std::span<const double> pool, double gamma) {
  if (pool.empty()) throw InvalidArgument("prune_percentile: empty parameter pool");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw InvalidArgument("prune_percentile: gamma must lie in (0, 1]");
  std::vector<double> mags(pool.size());
  std::transform(pool.begin(), pool.end(), mags.begin(), [](double x) { return std::abs(x); });
  std::sort(mags.begin(), mags.end());
  // Nearest rank: ceil(q * N), clamped to [1, N]; the tiny slack absorbs
  // representation error in (1 - gamma) * N.
  const double q = 1.0 - gamma;
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(mags.size()) - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, mags.size());
  return mags[rank - 1];
}

double prune_mixed(std::span<double> values, std::span<const double> pool, double tau, double gamma) {
  const double threshold = std::max(tau, prune_percentile(pool, gamma));
  if (threshold > 0.0) prune_absolute(values, threshold);
  return threshold;
}

std::vector<double> lowrank_pool(std::span<const TaskPrivateParams> tasks) {
  std::vector<double> pool;
  for (const auto& t : tasks) {
    for (const auto& l : t.layers) {
      const auto u = l.low_rank.u.data();
      const auto v = l.low_rank.v.data();
      pool.insert(pool.end(), u.begin(), u.end());
      pool.insert(pool.end(), v.begin(), v.end());
    }
  }
  return pool;
}

double prune_threshold(const PruneSpec& spec, std::span<const double> pool) {
  switch (spec.mode) {
    case PruneMode::Absolute: return spec.tau;
    case PruneMode::Percentile: return prune_percentile(pool, spec.gamma);
    case PruneMode::Mixed: return std::max(spec.tau, prune_percentile(pool, spec.gamma));
    case PruneMode::Off: break;
  }
  throw InvalidArgument("prune_threshold: pruning is off");
}

std::size_t prune_tasks(std::span<TaskPrivateParams> tasks, double threshold) {
  if (!(threshold > 0.0)) return 0;
  std::size_t zeroed = 0;
  for (auto& t : tasks) {
    for (auto& l : t.layers) {
      zeroed += prune_absolute(l.low_rank.u.data(), threshold);
      zeroed += prune_absolute(l.low_rank.v.data(), threshold);
    }
  }
  return zeroed;
}

}  // namespace halrp
