#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dvrisk/nn/tensor.hpp"

namespace dvrisk::nn {

/// Post-padded integer id batch, [batch x time] row-major.
struct TokenBatch {
  std::size_t batch = 0;
  std::size_t time = 0;
  std::vector<std::int32_t> ids;
  std::vector<std::size_t> lengths;

  std::int32_t id(std::size_t b, std::size_t t) const { return ids[b * time + t]; }
};

/// Row lookup into a [vocab x embed] table; throws IdOutOfRange.
Tensor embedding_forward(const TokenBatch& batch, const Tensor& table);

/// Scatter-adds input gradients into a table-shaped gradient. Steps at or
/// beyond each row's length are skipped.
void embedding_backward(const TokenBatch& batch, const Tensor& grad_inputs, Tensor& grad_table);

/// [batch x in] * [in x out] + [out].
Tensor linear_forward(const Tensor& x, const Tensor& weight, const Tensor& bias);

/// Accumulates weight/bias gradients and returns dL/dx.
Tensor linear_backward(const Tensor& x, const Tensor& weight, const Tensor& grad_out, Tensor& grad_weight,
                       Tensor& grad_bias);

double sigmoid(double z);

/// y = sigmoid(h . w + b) per row.
Tensor dense_sigmoid(const Tensor& h, const Tensor& w, double b);

/// Row-wise softmax with the row max subtracted first.
Tensor softmax_rows(const Tensor& logits);
Tensor dense_softmax(const Tensor& h, const Tensor& weight, const Tensor& bias);

inline constexpr double kProbabilityClamp = 1e-12;

/// Mean binary cross-entropy with predictions clamped to [1e-12, 1 - 1e-12].
/// Optional per-sample weights scale each term before the mean.
double binary_cross_entropy(std::span<const double> pred, std::span<const double> target,
                            std::span<const double> weights = {});
/// dL/dz for pred = sigmoid(z); zero where the clamp is active.
std::vector<double> binary_cross_entropy_logit_grad(std::span<const double> pred, std::span<const double> target,
                                                    std::span<const double> weights = {});

double categorical_cross_entropy(const Tensor& probs, std::span<const std::size_t> targets,
                                 std::span<const double> weights = {});
/// dL/dlogits for probs = softmax(logits).
Tensor categorical_cross_entropy_logit_grad(const Tensor& probs, std::span<const std::size_t> targets,
                                            std::span<const double> weights = {});

enum class Mode { Train, Eval };

/// Inverted-dropout mask: each entry is 0 with probability `rate`, otherwise
/// 1 / (1 - rate).
Tensor dropout_mask(const std::vector<std::size_t>& shape, double rate, std::uint64_t seed);

/// Eval mode is the identity; train mode multiplies by dropout_mask.
Tensor dropout(const Tensor& x, double rate, Mode mode, std::uint64_t seed);

}  // namespace dvrisk::nn
