#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "halrp/linalg.hpp"

namespace halrp::verify {

struct SuiteResult {
  std::string name;
  std::size_t trials = 0;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool passed = true;
  std::string detail;  // first failure, if any
};

using SvdFn = std::function<linalg::SVDFactors(const Matrix&)>;

/// Truncation error against the direct residual, monotonicity in k, and
/// optimality against swapped component subsets and random rank-k pairs.
SuiteResult eckart_young(std::uint64_t seed, const SvdFn& svd_fn = [](const Matrix& m) { return linalg::svd(m); });
/// Closed-form scales against a scalar line-search minimizer, plus the
/// exact reconstruction identity, for dense and kernel-tensor layers.
SuiteResult lse_optimality(std::uint64_t seed);
/// W_free = c W_base recovers r = c, s = 1 and a zero residual.
SuiteResult scaling_invariance(std::uint64_t seed);
/// Greedy budget against exhaustive search over per-layer prefixes.
SuiteResult greedy_bruteforce(std::uint64_t seed);
/// Quadratic-model loss change against the Frobenius bound, and the
/// Fisher norm against an explicit outer product.
SuiteResult theorem1(std::uint64_t seed);
/// Backprop against central differences for every layer kind and the
/// reparameterized layers with the penalty.
SuiteResult gradient_check(std::uint64_t seed);

std::vector<SuiteResult> run_all(std::uint64_t seed);

/// One line per suite: name, PASS/FAIL, trials, max error, tolerance.
std::string format_report(const std::vector<SuiteResult>& results);

}  // namespace halrp::verify
