#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dvrisk/nn/layers.hpp"
#include "dvrisk/nn/lstm.hpp"
#include "dvrisk/nn/tensor.hpp"

namespace dvrisk::nn {

enum class HeadKind { Sigmoid, Softmax };

struct ModelShape {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 0;
  std::size_t hidden_units = 0;
  /// 1 for the sigmoid head, number of classes for softmax.
  std::size_t output_size = 1;
  HeadKind head = HeadKind::Sigmoid;

  bool operator==(const ModelShape&) const = default;
};

/// Embedding -> masked LSTM -> dropout on the last hidden state -> dense head.
class SequenceModel {
 public:
  SequenceModel() = default;

  /// Embeddings uniform(-0.05, 0.05); LSTM per LstmParams::initialize; head
  /// scaled-uniform with zero bias.
  static SequenceModel initialize(const ModelShape& shape, std::uint64_t seed);

  const ModelShape& shape() const { return shape_; }

  /// Parameter tensors in a fixed order; names match parameter_names().
  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  static const std::vector<std::string>& parameter_names();

  /// Eval-mode output: [B] probabilities for sigmoid, [B x K] for softmax
  /// (returned as [B x 1] / [B x K]).
  Tensor predict(const TokenBatch& batch) const;

  /// Train-mode forward and exact backward. Targets are class codes (0/1 for
  /// the sigmoid head). Returns the mean loss and fills `grads` in
  /// parameters() order.
  double loss_and_gradients(const TokenBatch& batch, std::span<const std::size_t> targets, double dropout_rate,
                            std::uint64_t dropout_seed, std::vector<Tensor>& grads,
                            std::span<const double> sample_weights = {}) const;

  /// Loss only, with the same dropout mask as loss_and_gradients for equal seeds.
  double loss(const TokenBatch& batch, std::span<const std::size_t> targets, double dropout_rate,
              std::uint64_t dropout_seed, std::span<const double> sample_weights = {}) const;

  Tensor embedding;
  LstmParams lstm;
  Tensor head_weight;  // [H x K]
  Tensor head_bias;    // [K]

 private:
  ModelShape shape_;

  friend SequenceModel model_from_parts(const ModelShape&, std::vector<Tensor>);
};

/// Rebuilds a model from tensors in parameters() order (checkpoint loading).
SequenceModel model_from_parts(const ModelShape& shape, std::vector<Tensor> tensors);

}  // namespace dvrisk::nn
