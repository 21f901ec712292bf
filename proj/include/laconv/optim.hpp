#pragma once

#include <cmath>
#include <vector>

#include "laconv/autodiff.hpp"
#include "laconv/errors.hpp"

namespace laconv {

/// Plain gradient step: p -= lr * g.
inline void sgd_step(const std::vector<NodePtr>& params, double lr) {
  for (const auto& p : params) {
    if (!p->grad.same_shape(p->value)) throw ShapeError("sgd_step: grad/value shape mismatch");
    for (std::size_t i = 0; i < p->value.data.size(); ++i)
      p->value.data[i] -= lr * p->grad.data[i];
  }
}

/// Per-parameter Adam moments. Moments start at zero; `t` counts completed steps.
struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  long t = 0;

  static AdamState init(const std::vector<NodePtr>& params) {
    AdamState s;
    for (const auto& p : params) {
      s.m.push_back(Tensor::zeros(p->value.shape));
      s.v.push_back(Tensor::zeros(p->value.shape));
    }
    return s;
  }
};

/// Adam update with bias correction.
inline void adam_step(const std::vector<NodePtr>& params, AdamState& state, double lr,
                      double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
  if (state.m.size() != params.size()) throw ShapeError("adam_step: state size mismatch");
  ++state.t;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = *params[k];
    if (!p.grad.same_shape(p.value)) throw ShapeError("adam_step: grad/value shape mismatch");
    for (std::size_t i = 0; i < p.value.data.size(); ++i) {
      const double g = p.grad.data[i];
      double& m = state.m[k].data[i];
      double& v = state.v[k].data[i];
      m = beta1 * m + (1.0 - beta1) * g;
      v = beta2 * v + (1.0 - beta2) * g * g;
      p.value.data[i] -= lr * (m / bc1) / (std::sqrt(v / bc2) + eps);
    }
  }
}

}  // namespace laconv
