#include "halrp/perturb.hpp"

#include <string>

#include "halrp/error.hpp"

namespace halrp {

namespace {

void require_same(const Tensor4& a, const Tensor4& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": free " + std::to_string(a.out()) + "x" + std::to_string(a.in()) + "x" +
                     std::to_string(a.kernel()) + " vs base " + std::to_string(b.out()) + "x" +
                     std::to_string(b.in()) + "x" + std::to_string(b.kernel()));
  }
}

void require_scales(const Tensor4& base, const Vector& r, const Vector* s) {
  if (r.size() != base.out()) throw ShapeError("row scale length does not match output dimension");
  if (s != nullptr && s->size() != base.in()) throw ShapeError("column scale length does not match input dimension");
}

}  // namespace

Vector solve_r(const Tensor4& w_free, const Tensor4& w_base) {
  require_same(w_free, w_base, "solve_r");
  Vector r(w_base.out(), 1.0);
  for (std::size_t j = 0; j < w_base.out(); ++j) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < w_base.in(); ++i) {
      for (std::size_t pq = 0; pq < w_base.spatial(); ++pq) {
        const double b = w_base.at(j, i, pq);
        num += w_free.at(j, i, pq) * b;
        den += b * b;
      }
    }
    if (den > 0.0) r[j] = num / den;
  }
  return r;
}

Vector solve_s(const Tensor4& w_free, const Tensor4& w_base, const Vector& r) {
  require_same(w_free, w_base, "solve_s");
  require_scales(w_base, r, nullptr);
  Vector s(w_base.in(), 1.0);
  for (std::size_t i = 0; i < w_base.in(); ++i) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t j = 0; j < w_base.out(); ++j) {
      for (std::size_t pq = 0; pq < w_base.spatial(); ++pq) {
        const double rb = r[j] * w_base.at(j, i, pq);
        num += w_free.at(j, i, pq) * rb;
        den += rb * rb;
      }
    }
    if (den > 0.0) s[i] = num / den;
  }
  return s;
}

Matrix averaged_residual(const Tensor4& w_free, const Tensor4& w_base, const Vector& r, const Vector& s) {
  require_same(w_free, w_base, "residual");
  require_scales(w_base, r, &s);
  Matrix b(w_base.out(), w_base.in());
  const double positions = static_cast<double>(w_base.spatial());
  for (std::size_t j = 0; j < w_base.out(); ++j) {
    for (std::size_t i = 0; i < w_base.in(); ++i) {
      double sum = 0.0;
      for (std::size_t pq = 0; pq < w_base.spatial(); ++pq) {
        sum += w_free.at(j, i, pq) - r[j] * w_base.at(j, i, pq) * s[i];
      }
      b(j, i) = w_base.spatial() == 1 ? sum : sum / positions;
    }
  }
  return b;
}

Vector solve_r(const Matrix& w_free, const Matrix& w_base) {
  return solve_r(Tensor4::from_matrix(w_free), Tensor4::from_matrix(w_base));
}

Vector solve_s(const Matrix& w_free, const Matrix& w_base, const Vector& r) {
  return solve_s(Tensor4::from_matrix(w_free), Tensor4::from_matrix(w_base), r);
}

Matrix residual_b(const Matrix& w_free, const Matrix& w_base, const Vector& r, const Vector& s) {
  return averaged_residual(Tensor4::from_matrix(w_free), Tensor4::from_matrix(w_base), r, s);
}

Decomposition decompose_conv(const Tensor4& w_free, const Tensor4& w_base) {
  Decomposition d;
  d.r = solve_r(w_free, w_base);
  d.s = solve_s(w_free, w_base, d.r);
  d.residual = averaged_residual(w_free, w_base, d.r, d.s);
  d.factors = linalg::svd(d.residual);
  return d;
}

Decomposition decompose_fc(const Matrix& w_free, const Matrix& w_base) {
  return decompose_conv(Tensor4::from_matrix(w_free), Tensor4::from_matrix(w_base));
}

TaskLayerParams init_layer_params(const Decomposition& d, std::size_t k, std::size_t layer_index) {
  TaskLayerParams p;
  p.r = d.r;
  p.s = d.s;
  p.low_rank = linalg::truncate(d.factors, k);
  p.layer_index = layer_index;
  return p;
}

Matrix low_rank_term(const TaskLayerParams& p) { return linalg::reconstruct(p.low_rank); }

Tensor4 reconstruct_weights(const Tensor4& w_base, const TaskLayerParams& p) {
  require_scales(w_base, p.r, &p.s);
  if (p.low_rank.u.rows() != w_base.out() || p.low_rank.v.rows() != w_base.in()) {
    throw ShapeError("reconstruct_weights: low-rank factors do not match the base layer");
  }
  const Matrix b = low_rank_term(p);
  Tensor4 w(w_base.out(), w_base.in(), w_base.kernel());
  for (std::size_t j = 0; j < w.out(); ++j)
    for (std::size_t i = 0; i < w.in(); ++i)
      for (std::size_t pq = 0; pq < w.spatial(); ++pq) w.at(j, i, pq) = p.r[j] * w_base.at(j, i, pq) * p.s[i] + b(j, i);
  return w;
}

Matrix reconstruct_weights(const Matrix& w_base, const TaskLayerParams& p) {
  return reconstruct_weights(Tensor4::from_matrix(w_base), p).as_matrix();
}

std::size_t param_count(std::size_t out, std::size_t in, std::size_t k) {
  if (k > std::min(out, in)) throw InvalidArgument("param_count: rank exceeds min(J, I)");
  return (in + out) * (k + 1) + k;
}

double increment_ratio(std::size_t out, std::size_t in, std::size_t k) {
  return static_cast<double>(param_count(out, in, k)) / static_cast<double>(out * in);
}

}  // namespace halrp
