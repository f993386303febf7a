#include "dvrisk/nn/layers.hpp"

#include <algorithm>
#include <cmath>

#include "dvrisk/error.hpp"
#include "dvrisk/random.hpp"

namespace dvrisk::nn {

namespace {

double weight_at(std::span<const double> weights, std::size_t i) { return weights.empty() ? 1.0 : weights[i]; }

void check_weights(std::span<const double> weights, std::size_t n) {
  if (!weights.empty() && weights.size() != n) {
    throw Error(ErrorKind::InvalidArgument, "sample weights length mismatch");
  }
}

}  // namespace

Tensor embedding_forward(const TokenBatch& batch, const Tensor& table) {
  const std::size_t vocab = table.dim(0);
  const std::size_t embed = table.dim(1);
  Tensor out({batch.batch, batch.time, embed});
  for (std::size_t b = 0; b < batch.batch; ++b) {
    for (std::size_t t = 0; t < batch.time; ++t) {
      const std::int32_t id = batch.id(b, t);
      if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
        throw Error(ErrorKind::IdOutOfRange, "id " + std::to_string(id) + " for vocabulary of " + std::to_string(vocab));
      }
      std::copy_n(table.raw() + static_cast<std::size_t>(id) * embed, embed, &out.at(b, t, 0));
    }
  }
  return out;
}

void embedding_backward(const TokenBatch& batch, const Tensor& grad_inputs, Tensor& grad_table) {
  const std::size_t embed = grad_table.dim(1);
  for (std::size_t b = 0; b < batch.batch; ++b) {
    for (std::size_t t = 0; t < batch.lengths[b]; ++t) {
      double* row = grad_table.raw() + static_cast<std::size_t>(batch.id(b, t)) * embed;
      const double* g = &grad_inputs.at(b, t, 0);
      for (std::size_t e = 0; e < embed; ++e) row[e] += g[e];
    }
  }
}

Tensor linear_forward(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  const std::size_t rows = x.dim(0), in = x.dim(1), out_dim = weight.dim(1);
  if (weight.dim(0) != in || bias.size() != out_dim) {
    throw Error(ErrorKind::InvalidArgument, "linear shape mismatch");
  }
  Tensor out({rows, out_dim});
  for (std::size_t r = 0; r < rows; ++r) {
    double* y = &out.at(r, 0);
    for (std::size_t k = 0; k < out_dim; ++k) y[k] = bias[k];
    for (std::size_t i = 0; i < in; ++i) {
      const double xi = x.at(r, i);
      const double* w = &weight.at(i, 0);
      for (std::size_t k = 0; k < out_dim; ++k) y[k] += xi * w[k];
    }
  }
  return out;
}

Tensor linear_backward(const Tensor& x, const Tensor& weight, const Tensor& grad_out, Tensor& grad_weight,
                       Tensor& grad_bias) {
  const std::size_t rows = x.dim(0), in = x.dim(1), out_dim = weight.dim(1);
  Tensor grad_x({rows, in});
  for (std::size_t r = 0; r < rows; ++r) {
    const double* g = &grad_out.at(r, 0);
    for (std::size_t k = 0; k < out_dim; ++k) grad_bias[k] += g[k];
    for (std::size_t i = 0; i < in; ++i) {
      const double xi = x.at(r, i);
      const double* w = &weight.at(i, 0);
      double* gw = &grad_weight.at(i, 0);
      double acc = 0.0;
      for (std::size_t k = 0; k < out_dim; ++k) {
        gw[k] += xi * g[k];
        acc += w[k] * g[k];
      }
      grad_x.at(r, i) = acc;
    }
  }
  return grad_x;
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Tensor dense_sigmoid(const Tensor& h, const Tensor& w, double b) {
  const std::size_t rows = h.dim(0), hidden = h.dim(1);
  if (w.size() != hidden) throw Error(ErrorKind::InvalidArgument, "dense_sigmoid weight length mismatch");
  Tensor out({rows});
  for (std::size_t r = 0; r < rows; ++r) {
    double z = b;
    for (std::size_t i = 0; i < hidden; ++i) z += h.at(r, i) * w[i];
    out[r] = sigmoid(z);
  }
  return out;
}

Tensor softmax_rows(const Tensor& logits) {
  const std::size_t rows = logits.dim(0), k = logits.dim(1);
  Tensor out({rows, k});
  for (std::size_t r = 0; r < rows; ++r) {
    const double* z = &logits.at(r, 0);
    const double top = *std::max_element(z, z + k);
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) total += (out.at(r, j) = std::exp(z[j] - top));
    for (std::size_t j = 0; j < k; ++j) out.at(r, j) /= total;
  }
  return out;
}

Tensor dense_softmax(const Tensor& h, const Tensor& weight, const Tensor& bias) {
  return softmax_rows(linear_forward(h, weight, bias));
}

double binary_cross_entropy(std::span<const double> pred, std::span<const double> target,
                            std::span<const double> weights) {
  if (pred.size() != target.size() || pred.empty()) throw Error(ErrorKind::InvalidArgument, "BCE size mismatch");
  check_weights(weights, pred.size());
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = std::clamp(pred[i], kProbabilityClamp, 1.0 - kProbabilityClamp);
    total -= weight_at(weights, i) * (target[i] * std::log(p) + (1.0 - target[i]) * std::log(1.0 - p));
  }
  return total / static_cast<double>(pred.size());
}

std::vector<double> binary_cross_entropy_logit_grad(std::span<const double> pred, std::span<const double> target,
                                                    std::span<const double> weights) {
  check_weights(weights, pred.size());
  std::vector<double> grad(pred.size(), 0.0);
  const double n = static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] < kProbabilityClamp || pred[i] > 1.0 - kProbabilityClamp) continue;
    grad[i] = weight_at(weights, i) * (pred[i] - target[i]) / n;
  }
  return grad;
}

double categorical_cross_entropy(const Tensor& probs, std::span<const std::size_t> targets,
                                 std::span<const double> weights) {
  const std::size_t rows = probs.dim(0);
  if (targets.size() != rows || rows == 0) throw Error(ErrorKind::InvalidArgument, "CE size mismatch");
  check_weights(weights, rows);
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double p = std::clamp(probs.at(r, targets[r]), kProbabilityClamp, 1.0 - kProbabilityClamp);
    total -= weight_at(weights, r) * std::log(p);
  }
  return total / static_cast<double>(rows);
}

Tensor categorical_cross_entropy_logit_grad(const Tensor& probs, std::span<const std::size_t> targets,
                                            std::span<const double> weights) {
  const std::size_t rows = probs.dim(0), k = probs.dim(1);
  check_weights(weights, rows);
  Tensor grad({rows, k});
  const double n = static_cast<double>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double pt = probs.at(r, targets[r]);
    if (pt < kProbabilityClamp || pt > 1.0 - kProbabilityClamp) continue;
    const double scale = weight_at(weights, r) / n;
    for (std::size_t j = 0; j < k; ++j) {
      grad.at(r, j) = scale * (probs.at(r, j) - (j == targets[r] ? 1.0 : 0.0));
    }
  }
  return grad;
}

Tensor dropout_mask(const std::vector<std::size_t>& shape, double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) throw Error(ErrorKind::InvalidArgument, "dropout rate must be in [0, 1)");
  Tensor mask(shape, 1.0);
  if (rate == 0.0) return mask;
  Rng rng(seed);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (double& m : mask.data()) m = rng.uniform() < rate ? 0.0 : keep_scale;
  return mask;
}

Tensor dropout(const Tensor& x, double rate, Mode mode, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) throw Error(ErrorKind::InvalidArgument, "dropout rate must be in [0, 1)");
  if (mode == Mode::Eval || rate == 0.0) return x;
  Tensor out = dropout_mask(x.shape(), rate, seed);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= x[i];
  return out;
}

}  // namespace dvrisk::nn
