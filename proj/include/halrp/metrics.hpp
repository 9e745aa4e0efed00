#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "halrp/nn.hpp"
#include "halrp/perturb.hpp"

namespace halrp {

/// A[i][j]: accuracy on task j after finishing task i, defined for j <= i.
class AccuracyMatrix {
 public:
  AccuracyMatrix() = default;
  explicit AccuracyMatrix(std::size_t tasks);

  std::size_t tasks() const noexcept { return tasks_; }
  void set(std::size_t i, std::size_t j, double value);
  double at(std::size_t i, std::size_t j) const;
  bool defined(std::size_t i, std::size_t j) const;
  /// Defined entries of row i (length i + 1).
  std::vector<double> row(std::size_t i) const;
  /// Leading n x n block.
  AccuracyMatrix prefix(std::size_t n) const;

  bool operator==(const AccuracyMatrix&) const = default;

 private:
  std::size_t tasks_ = 0;
  std::vector<double> values_;
  std::vector<bool> defined_;
};

/// Mean of the last row.
double final_avg_accuracy(const AccuracyMatrix& a);

/// (1/(T-1)) sum_{j<T-1} (A[T-1][j] - A[j][j]); 0 when T < 2.
double bwt(const AccuracyMatrix& a);

/// Final per-task accuracies of R runs, keyed by canonical task id.
struct OrderRunSet {
  std::vector<std::map<int, double>> runs;
};

/// Per-task max - min across runs, keyed by canonical task id. Throws
/// InvalidArgument when runs cover different task sets.
std::map<int, double> opd(const OrderRunSet& runs);

struct OpdSummary {
  double mopd = 0.0;
  double aopd = 0.0;
};

OpdSummary mopd_aopd(std::span<const double> opds);

struct IncrementReport {
  std::size_t base_size = 0;                 // base trunk weight count
  std::vector<std::size_t> added;            // per task position
  std::vector<double> per_task;              // added / base_size
  std::vector<double> cumulative;            // running sum / base_size
};

/// Parameter growth of low-rank task parameters over the base trunk;
/// biases and heads are not counted.
IncrementReport increment_report(const Network& base, std::span<const TaskPrivateParams> tasks);

}  // namespace halrp
