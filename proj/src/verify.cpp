#include "halrp/verify.hpp"

#include <algorithm>
#include <compare>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "halrp/kernels.hpp"
#include "halrp/nn.hpp"
#include "halrp/perturb.hpp"
#include "halrp/random.hpp"
#include "halrp/rank_select.hpp"
#include "halrp/reg_prune.hpp"

namespace halrp::verify {

namespace {

Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (double& x : m.data()) x = rng.normal();
  return m;
}

Tensor4 random_tensor(Rng& rng, std::size_t out, std::size_t in, std::size_t d) {
  Tensor4 t(out, in, d);
  for (double& x : t.data()) x = rng.normal();
  return t;
}

double frob(const Matrix& m) {
  double s = 0.0;
  for (double x : m.data()) s += x * x;
  return std::sqrt(s);
}

Matrix outer_sum(const Matrix& u, const Vector& sigma, const Matrix& v, const std::vector<std::size_t>& pick) {
  Matrix out(u.rows(), v.rows());
  for (std::size_t c : pick)
    for (std::size_t i = 0; i < u.rows(); ++i)
      for (std::size_t j = 0; j < v.rows(); ++j) out(i, j) += u(i, c) * sigma[c] * v(j, c);
  return out;
}

void record(SuiteResult& r, double err, const std::string& what) {
  r.max_error = std::max(r.max_error, err);
  if (!(err <= r.tolerance) && r.passed) {
    r.passed = false;
    r.detail = what;
  }
}

void fail(SuiteResult& r, const std::string& what) {
  if (r.passed) r.detail = what;
  r.passed = false;
}

// argmin_x sum (a_n - x b_n)^2 by bisection on the sign of the derivative.
double line_minimizer(const std::vector<double>& a, const std::vector<double>& b) {
  auto slope = [&](double x) {
    double s = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) s -= b[n] * (a[n] - x * b[n]);
    return s;
  };
  double bound = 1.0;
  for (std::size_t n = 0; n < a.size(); ++n)
    if (b[n] != 0.0) bound = std::max(bound, std::abs(a[n] / b[n]) + 1.0);
  double lo = -bound, hi = bound;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (slope(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

SuiteResult eckart_young(std::uint64_t seed, const SvdFn& svd_fn) {
  SuiteResult res{"eckart_young", 0, 0.0, 1e-6, true, {}};
  Rng rng(mix_seed(seed, 1));
  for (std::size_t trial = 0; trial < 100; ++trial) {
    const std::size_t rows = 1 + rng.index(64), cols = 1 + rng.index(48);
    Matrix a = random_matrix(rng, rows, cols);
    if (trial % 4 == 3) {
      const std::size_t q = 1 + rng.index(std::min(rows, cols));
      a = kernels::gemm(random_matrix(rng, rows, q), kernels::Trans::No, random_matrix(rng, cols, q),
                        kernels::Trans::Yes);
    }
    const double scale = std::max(frob(a), std::numeric_limits<double>::min());
    const linalg::SVDFactors f = svd_fn(a);
    const std::size_t r = f.sigma.size();
    const std::string tag = "matrix " + std::to_string(trial) + " (" + std::to_string(rows) + "x" +
                            std::to_string(cols) + ")";
    for (std::size_t i = 0; i < r; ++i) {
      if (f.sigma[i] < 0.0 || (i + 1 < r && f.sigma[i] < f.sigma[i + 1])) {
        fail(res, tag + ": singular values are not sorted descending");
        break;
      }
    }

    std::vector<double> direct(r + 1);
    double prev_te = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k <= r; ++k) {
      direct[k] = frob(a - linalg::reconstruct(linalg::truncate(f, k)));
      const double te = linalg::truncation_error(f, k);
      ++res.trials;
      record(res, std::abs(te - direct[k]) / scale, tag + ": truncation error differs from the residual at k=" +
                                                        std::to_string(k));
      if (te > prev_te) fail(res, tag + ": truncation error increases at k=" + std::to_string(k));
      if (k > 0 && direct[k] > direct[k - 1] + 1e-12 * scale) {
        fail(res, tag + ": residual increases at k=" + std::to_string(k));
      }
      prev_te = te;
    }

    // Swapping the last kept component for a dropped one never helps.
    for (std::size_t k = 1; k < r; ++k) {
      std::vector<std::size_t> pick(k);
      std::iota(pick.begin(), pick.end(), 0);
      for (std::size_t m = k; m < std::min(r, k + 2); ++m) {
        pick.back() = m;
        const double alt = frob(a - outer_sum(f.u, f.sigma, f.v, pick));
        if (alt < direct[k] - 1e-10 * scale) {
          fail(res, tag + ": a different rank-" + std::to_string(k) + " component subset beats the truncation");
        }
      }
    }

    const std::size_t k = 1 + rng.index(r);
    const Matrix guess = kernels::gemm(random_matrix(rng, rows, k), kernels::Trans::No, random_matrix(rng, cols, k),
                                       kernels::Trans::Yes);
    if (frob(a - guess) < direct[k] - 1e-10 * scale) {
      fail(res, tag + ": a random rank-" + std::to_string(k) + " matrix beats the truncation");
    }
  }
  return res;
}

SuiteResult lse_optimality(std::uint64_t seed) {
  SuiteResult res{"lse_optimality", 0, 0.0, 1e-6, true, {}};
  Rng rng(mix_seed(seed, 2));
  double identity_err = 0.0;
  for (std::size_t trial = 0; trial < 100; ++trial) {
    const std::size_t out = 1 + rng.index(12), in = 1 + rng.index(12);
    const std::size_t d = trial % 2 == 0 ? 1 : 2 + rng.index(2);
    const std::size_t dd = d * d;
    Tensor4 base = random_tensor(rng, out, in, d);
    if (trial % 10 == 9) {
      const std::size_t j0 = rng.index(out);
      for (std::size_t i = 0; i < in; ++i)
        for (std::size_t pq = 0; pq < dd; ++pq) base.at(j0, i, pq) = 0.0;
    }
    Tensor4 free(out, in, d);
    std::vector<double> r0(out), s0(in);
    for (double& x : r0) x = rng.uniform(-2.0, 2.0);
    for (double& x : s0) x = rng.uniform(-2.0, 2.0);
    for (std::size_t j = 0; j < out; ++j)
      for (std::size_t i = 0; i < in; ++i)
        for (std::size_t pq = 0; pq < dd; ++pq)
          free.at(j, i, pq) = r0[j] * base.at(j, i, pq) * s0[i] + 0.3 * rng.normal();

    const Vector r = solve_r(free, base);
    const Vector s = solve_s(free, base, r);
    const std::string tag = "pair " + std::to_string(trial);
    for (std::size_t j = 0; j < out; ++j) {
      std::vector<double> a, b;
      for (std::size_t i = 0; i < in; ++i)
        for (std::size_t pq = 0; pq < dd; ++pq) {
          a.push_back(free.at(j, i, pq));
          b.push_back(base.at(j, i, pq));
        }
      const bool degenerate = std::all_of(b.begin(), b.end(), [](double x) { return x == 0.0; });
      const double want = degenerate ? 1.0 : line_minimizer(a, b);
      ++res.trials;
      record(res, std::abs(r[j] - want) / std::max(1.0, std::abs(want)), tag + ": r_" + std::to_string(j));
    }
    for (std::size_t i = 0; i < in; ++i) {
      std::vector<double> a, b;
      for (std::size_t j = 0; j < out; ++j)
        for (std::size_t pq = 0; pq < dd; ++pq) {
          a.push_back(free.at(j, i, pq));
          b.push_back(r[j] * base.at(j, i, pq));
        }
      const bool degenerate = std::all_of(b.begin(), b.end(), [](double x) { return x == 0.0; });
      const double want = degenerate ? 1.0 : line_minimizer(a, b);
      ++res.trials;
      record(res, std::abs(s[i] - want) / std::max(1.0, std::abs(want)), tag + ": s_" + std::to_string(i));
    }

    if (d == 1) {
      const Matrix fm = free.as_matrix(), bm = base.as_matrix();
      const Matrix resid = residual_b(fm, bm, r, s);
      for (std::size_t j = 0; j < out; ++j)
        for (std::size_t i = 0; i < in; ++i) {
          const double back = r[j] * bm(j, i) * s[i] + resid(j, i);
          identity_err = std::max(identity_err, std::abs(back - fm(j, i)));
        }
    }
  }
  if (identity_err > 1e-12) {
    fail(res, "r W_base s + B differs from W_free by " + std::to_string(identity_err));
  }
  return res;
}

SuiteResult scaling_invariance(std::uint64_t seed) {
  SuiteResult res{"scaling_invariance", 0, 0.0, 1e-10, true, {}};
  Rng rng(mix_seed(seed, 3));
  for (std::size_t trial = 0; trial < 20; ++trial) {
    double c = 0.0;
    while (c == 0.0) c = rng.uniform(-3.0, 3.0);
    const std::size_t out = 1 + rng.index(16), in = 1 + rng.index(16);
    const std::size_t d = trial % 2 == 0 ? 1 : 3;
    const Tensor4 base = random_tensor(rng, out, in, d);
    Tensor4 free = base;
    for (double& x : free.data()) x *= c;
    const Decomposition dec = decompose_conv(free, base);
    const std::string tag = "c=" + std::to_string(c);
    ++res.trials;
    for (double x : dec.r) record(res, std::abs(x - c), tag + ": r differs from c");
    for (double x : dec.s) record(res, std::abs(x - 1.0), tag + ": s differs from 1");
    record(res, frob(dec.residual), tag + ": residual is not zero");
  }
  return res;
}

namespace {

struct Key {
  double score;
  std::size_t layer;
  std::size_t rank;
  std::partial_ordering operator<=>(const Key& o) const {
    if (score != o.score) return o.score <=> score;
    if (layer != o.layer) return layer <=> o.layer;
    return rank <=> o.rank;
  }
  bool operator==(const Key&) const = default;
};

// Minimal-count prefix assignment covering alpha of the total; ties go to
// the assignment whose sorted item keys are lexicographically smallest.
std::vector<std::size_t> brute_force(const std::vector<Vector>& scores, double alpha) {
  const std::size_t layers = scores.size();
  double total = 0.0;
  std::vector<double> all;
  for (const auto& l : scores) all.insert(all.end(), l.begin(), l.end());
  std::sort(all.begin(), all.end(), std::greater<>());
  for (double x : all) total += x;
  std::vector<std::size_t> best(layers, 0);
  if (total <= 0.0) return best;
  const double target = alpha * total;

  std::size_t best_count = std::numeric_limits<std::size_t>::max();
  std::vector<Key> best_keys;
  std::vector<std::size_t> k(layers, 0);
  while (true) {
    double sum = 0.0;
    std::size_t count = 0;
    std::vector<Key> keys;
    for (std::size_t l = 0; l < layers; ++l)
      for (std::size_t i = 0; i < k[l]; ++i) {
        sum += scores[l][i];
        keys.push_back({scores[l][i], l, i + 1});
      }
    count = keys.size();
    std::sort(keys.begin(), keys.end());
    if (sum >= target && (count < best_count || (count == best_count && keys < best_keys))) {
      best_count = count;
      best_keys = keys;
      best = k;
    }
    std::size_t l = 0;
    while (l < layers && k[l] == scores[l].size()) k[l++] = 0;
    if (l == layers) break;
    ++k[l];
  }
  return best;
}

}  // namespace

SuiteResult greedy_bruteforce(std::uint64_t seed) {
  SuiteResult res{"greedy_bruteforce", 0, 0.0, 0.0, true, {}};
  Rng rng(mix_seed(seed, 4));
  const std::vector<double> alphas = {0.0, 0.25, 0.5, 0.75, 0.9, 1.0};
  for (std::size_t trial = 0; trial < 1000; ++trial) {
    const std::size_t layers = 1 + rng.index(4);
    std::vector<double> grad(layers);
    std::vector<Vector> spectra(layers);
    std::vector<std::size_t> caps(layers);
    for (std::size_t l = 0; l < layers; ++l) {
      grad[l] = static_cast<double>(rng.index(5));
      caps[l] = rng.index(4);
      for (std::size_t i = 0; i < caps[l]; ++i) spectra[l].push_back(static_cast<double>(rng.index(7)));
      std::sort(spectra[l].begin(), spectra[l].end(), std::greater<>());
    }
    std::vector<Vector> scores(layers);
    for (std::size_t l = 0; l < layers; ++l)
      for (double sg : spectra[l]) scores[l].push_back(grad[l] * sg * sg);

    const auto items = importance_scores(grad, spectra);
    std::vector<double> trial_alphas = alphas;
    trial_alphas.push_back(rng.uniform());
    std::sort(trial_alphas.begin(), trial_alphas.end());
    std::vector<std::size_t> prev(layers, 0);
    const std::string tag = "case " + std::to_string(trial);
    for (double alpha : trial_alphas) {
      const RankBudget b = select_ranks(items, alpha, caps);
      ++res.trials;
      double selected = 0.0;
      for (std::size_t l = 0; l < layers; ++l) {
        if (b.k_per_layer[l] > caps[l]) fail(res, tag + ": rank exceeds the layer capacity");
        for (std::size_t i = 0; i < std::min(b.k_per_layer[l], caps[l]); ++i) selected += scores[l][i];
        if (b.k_per_layer[l] < prev[l]) fail(res, tag + ": larger alpha selected a smaller rank");
      }
      if (selected < alpha * b.total_score) fail(res, tag + ": selection misses the alpha coverage");
      if (b.k_per_layer != brute_force(scores, alpha)) {
        res.max_error += 1.0;
        fail(res, tag + ": greedy differs from exhaustive search at alpha=" + std::to_string(alpha));
      }
      prev = b.k_per_layer;
    }
  }
  return res;
}

SuiteResult theorem1(std::uint64_t seed) {
  SuiteResult res{"theorem1", 0, 0.0, 1e-10, true, {}};
  Rng rng(mix_seed(seed, 5));
  std::size_t violations = 0;
  for (std::size_t trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.index(8), m = 1 + rng.index(n);
    const Matrix a = random_matrix(rng, n, m);
    Matrix h(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < m; ++c) s += a(i, c) * a(j, c);
        h(i, j) = h(j, i) = s;
      }
    Vector w(n), delta(n);
    for (double& x : w) x = rng.normal();
    for (double& x : delta) x = rng.normal() * rng.uniform(0.0, 2.0);

    double quad = 0.0, hf = 0.0, dd = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      dd += delta[i] * delta[i];
      for (std::size_t j = 0; j < n; ++j) {
        quad += delta[i] * h(i, j) * delta[j];
        hf += h(i, j) * h(i, j);
      }
    }
    const double want_actual = 0.5 * quad, want_bound = 0.5 * std::sqrt(hf) * dd;
    const QuadraticCheck check = verify_theorem1(h, w, delta);
    ++res.trials;
    record(res, std::abs(check.actual - want_actual) / std::max(1.0, std::abs(want_actual)),
           "model " + std::to_string(trial) + ": loss change differs from the direct quadratic form");
    record(res, std::abs(check.bound - want_bound) / std::max(1.0, want_bound),
           "model " + std::to_string(trial) + ": bound differs from the direct Frobenius bound");
    if (!check.holds() || want_actual > want_bound * (1.0 + 1e-12)) ++violations;
  }
  for (std::size_t trial = 0; trial < 1000; ++trial) {
    Vector g(1 + rng.index(64));
    for (double& x : g) x = rng.normal() * std::pow(10.0, rng.uniform(-3.0, 3.0));
    double outer = 0.0;
    for (double x : g)
      for (double y : g) outer += (x * y) * (x * y);
    outer = std::sqrt(outer);
    ++res.trials;
    record(res, std::abs(fisher_norm(g) - outer) / std::max(outer, std::numeric_limits<double>::min()),
           "vector " + std::to_string(trial) + ": Fisher norm differs from |g g^T|_F");
  }
  if (violations) fail(res, std::to_string(violations) + " bound violations");
  return res;
}

namespace {

struct GradSlot {
  double* value;
  double grad;
  bool l1_kink_check;  // entry carries an L1 term
};

std::vector<GradSlot> collect_slots(Network& net, int task, const Gradients& g) {
  std::vector<GradSlot> slots;
  auto add = [&](std::span<double> v, std::span<const double> gv, bool l1) {
    for (std::size_t i = 0; i < v.size(); ++i) slots.push_back({&v[i], gv[i], l1});
  };
  for (std::size_t l = 0; l < net.params().size(); ++l) {
    ParamLayer& layer = net.params()[l];
    const LayerGrad& lg = g.layers[l];
    if (layer.perturbation) {
      TaskLayerParams& p = *layer.perturbation;
      const TaskLayerParams& gp = *lg.perturbation;
      add(p.r, gp.r, false);
      add(p.s, gp.s, false);
      add(p.low_rank.u.data(), gp.low_rank.u.data(), true);
      add(p.low_rank.sigma, gp.low_rank.sigma, false);
      add(p.low_rank.v.data(), gp.low_rank.v.data(), true);
    } else {
      add(layer.weight.data(), lg.weight.data(), false);
    }
    add(layer.bias, lg.bias, false);
  }
  Head& h = net.heads().at(task);
  add(h.weight.data(), g.head.weight.data(), false);
  add(h.bias, g.head.bias, false);
  return slots;
}

Batch random_batch(Rng& rng, std::size_t n, std::size_t features, std::size_t classes) {
  Batch b;
  b.inputs = Matrix(n, features);
  for (double& x : b.inputs.data()) x = rng.uniform();
  for (std::size_t i = 0; i < n; ++i) b.labels.push_back(static_cast<std::uint32_t>(rng.index(classes)));
  return b;
}

// Reparameterizes every layer around a jittered copy of its weights.
void perturb_all(Network& net, Rng& rng) {
  for (std::size_t l = 0; l < net.params().size(); ++l) {
    ParamLayer& layer = net.params()[l];
    Tensor4 free = layer.weight;
    for (double& x : free.data()) x = x * rng.uniform(0.5, 1.5) + 0.2 * rng.normal();
    const Decomposition dec = decompose_conv(free, layer.weight);
    const std::size_t k = std::min<std::size_t>(2, dec.factors.sigma.size());
    TaskLayerParams p = init_layer_params(dec, k, l);
    for (double& x : p.r) x += 0.1 * rng.normal();
    for (double& x : p.s) x += 0.1 * rng.normal();
    for (auto* m : {&p.low_rank.u, &p.low_rank.v})
      for (double& x : m->data())
        if (std::abs(x) < 0.05) x = x < 0.0 ? -0.05 : 0.05;
    layer.perturbation = std::move(p);
  }
}

}  // namespace

SuiteResult gradient_check(std::uint64_t seed) {
  SuiteResult res{"gradient_check", 0, 0.0, 1e-4, true, {}};
  Rng rng(mix_seed(seed, 6));
  struct Case {
    std::string name;
    Shape input;
    std::vector<LayerSpec> trunk;
    bool perturbed;
  };
  const std::vector<Case> cases = {
      {"dense", {6, 1, 1}, {LayerSpec::dense(5), LayerSpec::relu(), LayerSpec::dense(4)}, false},
      {"conv+pool", {2, 6, 6},
       {LayerSpec::conv2d(3, 3, 1, 1), LayerSpec::relu(), LayerSpec::maxpool(2), LayerSpec::flatten(),
        LayerSpec::dense(4)},
       false},
      {"strided conv", {1, 7, 7},
       {LayerSpec::conv2d(2, 3, 2, 1), LayerSpec::relu(), LayerSpec::conv2d(3, 2, 1, 0), LayerSpec::maxpool(3),
        LayerSpec::flatten()},
       false},
      {"low-rank dense", {6, 1, 1}, {LayerSpec::dense(5), LayerSpec::relu(), LayerSpec::dense(4)}, true},
      {"low-rank conv", {2, 6, 6},
       {LayerSpec::conv2d(3, 3, 1, 1), LayerSpec::relu(), LayerSpec::maxpool(2), LayerSpec::flatten(),
        LayerSpec::dense(4)},
       true},
  };
  const RegCoefficients reg{0.05, 0.03};
  const double h = 1e-5;
  for (const auto& c : cases) {
    Network net(c.input, c.trunk);
    net.initialize(rng.next());
    net.add_head(0, 3, rng.next());
    for (auto& layer : net.params())
      for (double& b : layer.bias) b = 0.1 * rng.normal();
    if (c.perturbed) perturb_all(net, rng);
    const Batch batch = random_batch(rng, 4, c.input.size(), 3);

    auto objective = [&] {
      double f = loss(forward(net, 0, batch.inputs), batch.labels);
      if (c.perturbed) f += network_reg_loss(net, reg);
      return f;
    };
    BackwardResult br = backward(net, 0, batch);
    if (c.perturbed) {
      for (std::size_t l = 0; l < net.params().size(); ++l) {
        add_reg_gradient(*net.params()[l].perturbation, reg, *br.grads.layers[l].perturbation);
      }
    }
    for (const GradSlot& slot : collect_slots(net, 0, br.grads)) {
      if (slot.l1_kink_check && std::abs(*slot.value) <= 10.0 * h) continue;
      const double x = *slot.value;
      *slot.value = x + h;
      const double up = objective();
      *slot.value = x - h;
      const double down = objective();
      *slot.value = x;
      const double numeric = (up - down) / (2.0 * h);
      const double err =
          std::abs(slot.grad - numeric) / std::max({std::abs(slot.grad), std::abs(numeric), 1e-6});
      ++res.trials;
      record(res, err, c.name + ": analytic " + std::to_string(slot.grad) + " vs numeric " + std::to_string(numeric));
    }
  }
  return res;
}

std::vector<SuiteResult> run_all(std::uint64_t seed) {
  return {eckart_young(seed),     lse_optimality(seed), scaling_invariance(seed),
          greedy_bruteforce(seed), theorem1(seed),       gradient_check(seed)};
}

std::string format_report(const std::vector<SuiteResult>& results) {
  std::ostringstream os;
  for (const auto& r : results) {
    char line[256];
    std::snprintf(line, sizeof line, "%-20s %s  trials=%zu  max_error=%.3e  tolerance=%.1e", r.name.c_str(),
                  r.passed ? "PASS" : "FAIL", r.trials, r.max_error, r.tolerance);
    os << line;
    if (!r.passed) os << "  (" << r.detail << ")";
    os << "\n";
  }
  return os.str();
}

}  // namespace halrp::verify
