#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dvrisk/nn/tensor.hpp"

namespace dvrisk::nn {

/// Gate blocks are stacked in the order input, forget, cell, output: rows
/// [k*H, (k+1)*H) of w, u and b belong to gate k.
struct LstmParams {
  std::size_t input_size = 0;
  std::size_t hidden_units = 0;
  Tensor w;  // [4H x E]
  Tensor u;  // [4H x H]
  Tensor b;  // [4H]

  static LstmParams zeros(std::size_t input_size, std::size_t hidden_units);
  /// Scaled-uniform weights (bound sqrt(6 / (fan_in + fan_out)) per gate
  /// block), zero biases except the forget gate at 1.0.
  static LstmParams initialize(std::size_t input_size, std::size_t hidden_units, std::uint64_t seed);
};

enum Gate : std::size_t { kInputGate = 0, kForgetGate = 1, kCellGate = 2, kOutputGate = 3 };

/// Forward intermediates kept for backpropagation through time.
struct LstmCache {
  std::size_t batch = 0, time = 0, input_size = 0, hidden = 0;
  Tensor inputs;   // [B x T x E]
  std::vector<std::size_t> lengths;
  Tensor gates;    // [B x T x 4H], post-activation
  Tensor cells;    // [B x (T+1) x H], index 0 is c_0
  Tensor hiddens;  // [B x (T+1) x H], index 0 is h_0
};

/// Runs the masked LSTM from h_0 = c_0 = 0. Steps at or beyond lengths[b]
/// carry h and c forward unchanged. Returns h after step lengths[b] - 1 (zero
/// for an empty row). Throws NonFiniteActivation.
Tensor lstm_forward(const LstmParams& params, const Tensor& inputs, std::span<const std::size_t> lengths,
                    LstmCache* cache = nullptr);

struct LstmGradients {
  Tensor w, u, b;
  Tensor inputs;  // [B x T x E]
};

LstmGradients lstm_backward(const LstmParams& params, const LstmCache& cache, const Tensor& grad_last_hidden);

}  // namespace dvrisk::nn
