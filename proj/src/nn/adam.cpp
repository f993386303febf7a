#include <cmath>

#include "dvrisk/error.hpp"
#include "dvrisk/nn/optim.hpp"

namespace dvrisk::nn {

AdamState AdamState::for_params(std::span<Tensor* const> params, double learning_rate) {
  AdamState state;
  state.learning_rate = learning_rate;
  for (const Tensor* p : params) {
    state.m.push_back(Tensor::zeros_like(*p));
    state.v.push_back(Tensor::zeros_like(*p));
  }
  return state;
}

void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw Error(ErrorKind::InvalidArgument, "adam_step: parameter/gradient/state count mismatch");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->shape() != grads[i].shape() || params[i]->shape() != state.m[i].shape()) {
      throw Error(ErrorKind::InvalidArgument, "adam_step: shape mismatch at parameter " + std::to_string(i));
    }
  }
  const std::uint64_t t = state.t + 1;
  const double correction1 = 1.0 - std::pow(state.beta1, static_cast<double>(t));
  const double correction2 = 1.0 - std::pow(state.beta2, static_cast<double>(t));

  std::vector<Tensor> next_m, next_v, next_p;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor m = state.m[i], v = state.v[i], p = *params[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double g = grads[i][k];
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g;
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g * g;
      const double m_hat = m[k] / correction1;
      const double v_hat = v[k] / correction2;
      p[k] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
    if (!p.all_finite()) throw Error(ErrorKind::NonFiniteUpdate, "parameter " + std::to_string(i));
    next_m.push_back(std::move(m));
    next_v.push_back(std::move(v));
    next_p.push_back(std::move(p));
  }
  for (std::size_t i = 0; i < params.size(); ++i) *params[i] = std::move(next_p[i]);
  state.m = std::move(next_m);
  state.v = std::move(next_v);
  state.t = t;
}

double clip_global_norm(std::span<Tensor> grads, double max_norm) {
  double total = 0.0;
  for (const Tensor& g : grads) total += g.squared_norm();
  const double norm = std::sqrt(total);
  if (norm > max_norm && norm > 0.0) {
    const double factor = max_norm / norm;
    for (Tensor& g : grads) g.scale(factor);
  }
  return norm;
}

}  // namespace dvrisk::nn
