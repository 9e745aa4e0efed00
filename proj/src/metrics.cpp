#include "halrp/metrics.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "halrp/error.hpp"

namespace halrp {

AccuracyMatrix::AccuracyMatrix(std::size_t tasks)
    : tasks_(tasks), values_(tasks * tasks, 0.0), defined_(tasks * tasks, false) {}

void AccuracyMatrix::set(std::size_t i, std::size_t j, double value) {
  if (i >= tasks_ || j > i) throw InvalidArgument("accuracy matrix entry (" + std::to_string(i) + "," + std::to_string(j) + ") outside the lower triangle");
  if (!(value >= 0.0 && value <= 1.0)) throw InvalidArgument("accuracy " + std::to_string(value) + " outside [0, 1]");
  values_[i * tasks_ + j] = value;
  defined_[i * tasks_ + j] = true;
}

bool AccuracyMatrix::defined(std::size_t i, std::size_t j) const {
  return i < tasks_ && j < tasks_ && defined_[i * tasks_ + j];
}

double AccuracyMatrix::at(std::size_t i, std::size_t j) const {
  if (!defined(i, j)) throw InvalidArgument("accuracy matrix entry (" + std::to_string(i) + "," + std::to_string(j) + ") is undefined");
  return values_[i * tasks_ + j];
}

std::vector<double> AccuracyMatrix::row(std::size_t i) const {
  std::vector<double> r;
  for (std::size_t j = 0; j <= i; ++j) r.push_back(at(i, j));
  return r;
}

AccuracyMatrix AccuracyMatrix::prefix(std::size_t n) const {
  AccuracyMatrix p(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j)
      if (defined(i, j)) p.set(i, j, at(i, j));
  return p;
}

double final_avg_accuracy(const AccuracyMatrix& a) {
  if (a.tasks() == 0) return 0.0;
  const auto last = a.row(a.tasks() - 1);
  double sum = 0.0;
  for (double v : last) sum += v;
  return sum / static_cast<double>(last.size());
}

double bwt(const AccuracyMatrix& a) {
  const std::size_t t = a.tasks();
  if (t < 2) return 0.0;
  double sum = 0.0;
  for (std::size_t j = 0; j + 1 < t; ++j) sum += a.at(t - 1, j) - a.at(j, j);
  return sum / static_cast<double>(t - 1);
}

std::map<int, double> opd(const OrderRunSet& runs) {
  std::map<int, double> out;
  if (runs.runs.empty()) throw InvalidArgument("opd: no runs");
  const auto& first = runs.runs.front();
  for (const auto& run : runs.runs) {
    if (run.size() != first.size() ||
        !std::equal(run.begin(), run.end(), first.begin(), [](const auto& a, const auto& b) { return a.first == b.first; })) {
      throw InvalidArgument("opd: runs cover different task sets");
    }
  }
  for (const auto& [task, _] : first) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& run : runs.runs) {
      lo = std::min(lo, run.at(task));
      hi = std::max(hi, run.at(task));
    }
    out[task] = hi - lo;
  }
  return out;
}

OpdSummary mopd_aopd(std::span<const double> opds) {
  if (opds.empty()) throw InvalidArgument("mopd_aopd: empty OPD list");
  OpdSummary s;
  double sum = 0.0;
  s.mopd = opds.front();
  for (double v : opds) {
    s.mopd = std::max(s.mopd, v);
    sum += v;
  }
  s.aopd = sum / static_cast<double>(opds.size());
  return s;
}

IncrementReport increment_report(const Network& base, std::span<const TaskPrivateParams> tasks) {
  IncrementReport r;
  for (const auto& p : base.params()) r.base_size += p.weight.size();
  std::size_t running = 0;
  for (const auto& t : tasks) {
    std::size_t added = 0;
    for (const auto& l : t.layers) {
      const auto& w = base.params().at(l.layer_index).weight;
      added += param_count(w.out(), w.in(), l.k());
    }
    for (const auto& w : t.own_weights) added += w.size();
    running += added;
    r.added.push_back(added);
    r.per_task.push_back(r.base_size ? static_cast<double>(added) / static_cast<double>(r.base_size) : 0.0);
    r.cumulative.push_back(r.base_size ? static_cast<double>(running) / static_cast<double>(r.base_size) : 0.0);
  }
  return r;
}

}  // namespace halrp
