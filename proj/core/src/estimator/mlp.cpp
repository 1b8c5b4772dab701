#include "lily/estimator/mlp.hpp"

#include <algorithm>
#include <cmath>

namespace lily::estimator {
namespace {

using RowMajorMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using RowMajorMutMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

RowMajorMap weights(const DenseLayer& l, const double* params) { return {params + l.w_offset, l.out, l.in}; }
Eigen::Map<const Eigen::VectorXd> bias(const DenseLayer& l, const double* params) {
  return {params + l.b_offset, l.out};
}

double sigmoid(double a) {
  if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

double softplus(double a) { return std::max(a, 0.0) + std::log1p(std::exp(-std::abs(a))); }

Batch apply(Activation act, const Batch& a) { return a.unaryExpr([act](double v) { return activate(act, v); }); }
Batch apply_d1(Activation act, const Batch& a) {
  return a.unaryExpr([act](double v) { return activate_d1(act, v); });
}
Batch apply_d2(Activation act, const Batch& a) {
  return a.unaryExpr([act](double v) { return activate_d2(act, v); });
}

void accumulate_layer(const DenseLayer& l, const Batch& grad_pre, const Batch& input, double* grad_params) {
  if (grad_params == nullptr) return;
  RowMajorMutMap gw(grad_params + l.w_offset, l.out, l.in);
  gw.noalias() += grad_pre * input.transpose();
  Eigen::Map<Eigen::VectorXd> gb(grad_params + l.b_offset, l.out);
  gb.noalias() += grad_pre.rowwise().sum();
}

}  // namespace

double activate(Activation act, double a) {
  if (act == Activation::kLeakyRelu) return a >= 0.0 ? a : kLeakySlope * a;
  return kLeakySlope * a + (1.0 - kLeakySlope) * softplus(a);
}

double activate_d1(Activation act, double a) {
  if (act == Activation::kLeakyRelu) return a >= 0.0 ? 1.0 : kLeakySlope;
  return kLeakySlope + (1.0 - kLeakySlope) * sigmoid(a);
}

double activate_d2(Activation act, double a) {
  if (act == Activation::kLeakyRelu) return 0.0;
  const double s = sigmoid(a);
  return (1.0 - kLeakySlope) * s * (1.0 - s);
}

std::size_t Mlp::num_params() const {
  std::size_t total = 0;
  for (const auto& l : layers) total += static_cast<std::size_t>(l.out) * (l.in + 1);
  return total;
}

Mlp make_mlp(const std::vector<int>& widths, Activation activation, std::size_t& offset) {
  Mlp mlp;
  mlp.activation = activation;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    DenseLayer l;
    l.in = widths[i];
    l.out = widths[i + 1];
    l.w_offset = offset;
    offset += static_cast<std::size_t>(l.in) * l.out;
    l.b_offset = offset;
    offset += static_cast<std::size_t>(l.out);
    mlp.layers.push_back(l);
  }
  return mlp;
}

void init_mlp(const Mlp& mlp, double* params, Rng& rng) {
  for (const auto& l : mlp.layers) {
    const double bound = std::sqrt(6.0 / ((1.0 + kLeakySlope * kLeakySlope) * l.in));
    for (int i = 0; i < l.out * l.in; ++i) params[l.w_offset + i] = rng.uniform(-bound, bound);
    for (int i = 0; i < l.out; ++i) params[l.b_offset + i] = 0.0;
  }
}

Batch mlp_forward(const Mlp& mlp, const double* params, const Batch& input, MlpCache* cache) {
  if (cache != nullptr) {
    cache->inputs.resize(mlp.layers.size());
    cache->pre.resize(mlp.layers.size());
  }
  Batch h = input;
  for (std::size_t i = 0; i < mlp.layers.size(); ++i) {
    const auto& l = mlp.layers[i];
    Batch a = weights(l, params) * h;
    a.colwise() += bias(l, params);
    if (cache != nullptr) {
      cache->inputs[i] = std::move(h);
      cache->pre[i] = a;
    }
    h = (i + 1 < mlp.layers.size()) ? apply(mlp.activation, a) : std::move(a);
  }
  return h;
}

Batch mlp_backward(const Mlp& mlp, const double* params, const MlpCache& cache, const Batch& grad_out,
                   double* grad_params) {
  Batch g = grad_out;
  for (std::size_t i = mlp.layers.size(); i-- > 0;) {
    const auto& l = mlp.layers[i];
    if (i + 1 < mlp.layers.size()) g.array() *= apply_d1(mlp.activation, cache.pre[i]).array();
    accumulate_layer(l, g, cache.inputs[i], grad_params);
    g = weights(l, params).transpose() * g;
  }
  return g;
}

void mlp_forward_tangent(const Mlp& mlp, const double* params, const Batch& input, int tangent_index,
                         Eigen::RowVectorXd& value, Eigen::RowVectorXd& tangent, TangentCache& cache) {
  const std::size_t depth = mlp.layers.size();
  cache.value.inputs.resize(depth);
  cache.value.pre.resize(depth);
  cache.tangent_in.resize(depth);
  cache.tangent_pre.resize(depth);
  cache.tangent_index = tangent_index;
  const Eigen::Index batch = input.cols();

  Batch h = input;
  Batch dh;  // tangent of h; empty for the input layer (a unit vector)
  for (std::size_t i = 0; i < depth; ++i) {
    const auto& l = mlp.layers[i];
    const auto w = weights(l, params);
    Batch a = w * h;
    a.colwise() += bias(l, params);
    Batch da;
    if (i == 0) {
      da = w.col(tangent_index).replicate(1, batch);
    } else {
      da = w * dh;
    }
    cache.value.inputs[i] = std::move(h);
    cache.tangent_in[i] = std::move(dh);
    if (i + 1 < depth) {
      h = apply(mlp.activation, a);
      dh = (apply_d1(mlp.activation, a).array() * da.array()).matrix();
    } else {
      h = a;
      dh = da;
    }
    cache.value.pre[i] = std::move(a);
    cache.tangent_pre[i] = std::move(da);
  }
  value = h.row(0);
  tangent = dh.row(0);
}

Batch mlp_backward_tangent(const Mlp& mlp, const double* params, const TangentCache& cache,
                           const Eigen::RowVectorXd& grad_value, const Eigen::RowVectorXd& grad_tangent,
                           double* grad_params) {
  const std::size_t depth = mlp.layers.size();
  Batch g = grad_value;    // dL / d(layer output)
  Batch gt = grad_tangent;  // dL / d(tangent of layer output)
  for (std::size_t i = depth; i-- > 0;) {
    const auto& l = mlp.layers[i];
    const Batch& a = cache.value.pre[i];
    const Batch& da = cache.tangent_pre[i];
    if (i + 1 < depth) {
      // out = s(a), dout = s'(a) da
      const Batch d1 = apply_d1(mlp.activation, a);
      const Batch d2 = apply_d2(mlp.activation, a);
      g = (g.array() * d1.array() + gt.array() * d2.array() * da.array()).matrix();
      gt = (gt.array() * d1.array()).matrix();
    }
    const auto w = weights(l, params);
    accumulate_layer(l, g, cache.value.inputs[i], grad_params);
    if (i == 0) {
      // input tangent is the unit vector e_j: only column j of W sees gt
      if (grad_params != nullptr) {
        RowMajorMutMap gw(grad_params + l.w_offset, l.out, l.in);
        gw.col(cache.tangent_index) += gt.rowwise().sum();
      }
      g = w.transpose() * g;
    } else {
      if (grad_params != nullptr) {
        RowMajorMutMap gw(grad_params + l.w_offset, l.out, l.in);
        gw.noalias() += gt * cache.tangent_in[i].transpose();
      }
      Batch g_prev = w.transpose() * g;
      gt = w.transpose() * gt;
      g = std::move(g_prev);
    }
  }
  return g;
}

}  // namespace lily::estimator
