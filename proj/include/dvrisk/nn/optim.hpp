#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "dvrisk/nn/tensor.hpp"

namespace dvrisk::nn {

struct AdamState {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t t = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;

  /// Moments sized to match `params`.
  static AdamState for_params(std::span<Tensor* const> params, double learning_rate = 0.001);
};

/// One bias-corrected Adam update; throws NonFiniteUpdate if any parameter
/// would become non-finite (parameters are left untouched in that case).
void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state);

/// Scales gradients so their global L2 norm is at most `max_norm`; returns the
/// norm before clipping.
double clip_global_norm(std::span<Tensor> grads, double max_norm);

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t coordinates_checked = 0;
};

/// Compares analytic gradients with central differences
/// (L(theta + eps) - L(theta - eps)) / (2 eps) on at least `min_coordinates`
/// sampled coordinates (all of them when there are fewer). Relative error is
/// |a - n| / max(|a|, |n|, 1e-8).
GradCheckResult grad_check(const std::function<double()>& loss, std::span<Tensor* const> params,
                           std::span<const Tensor> analytic, double eps, std::size_t min_coordinates = 200,
                           std::uint64_t seed = 0);

}  // namespace dvrisk::nn
