#include "dvrisk/nn/sequence_model.hpp"

#include <cmath>

#include "dvrisk/error.hpp"
#include "dvrisk/random.hpp"

namespace dvrisk::nn {

namespace {

enum SeedStream : std::uint64_t { kEmbeddingStream = 1, kLstmStream = 2, kHeadStream = 3 };

struct ForwardState {
  Tensor inputs;
  LstmCache cache;
  Tensor last_hidden;
  Tensor mask;
  Tensor dropped;
  Tensor logits;
  Tensor probs;
};

Tensor head_probabilities(HeadKind head, const Tensor& logits) {
  if (head == HeadKind::Softmax) return softmax_rows(logits);
  Tensor probs(logits.shape());
  for (std::size_t i = 0; i < logits.size(); ++i) probs[i] = sigmoid(logits[i]);
  return probs;
}

}  // namespace

SequenceModel SequenceModel::initialize(const ModelShape& shape, std::uint64_t seed) {
  if (shape.vocab_size == 0 || shape.embed_dim == 0 || shape.hidden_units == 0 || shape.output_size == 0) {
    throw Error(ErrorKind::InvalidArgument, "model dimensions must be positive");
  }
  if (shape.head == HeadKind::Sigmoid && shape.output_size != 1) {
    throw Error(ErrorKind::InvalidArgument, "sigmoid head has exactly one output");
  }
  SequenceModel model;
  model.shape_ = shape;
  model.embedding = Tensor({shape.vocab_size, shape.embed_dim});
  Rng embed_rng(derive_seed(seed, kEmbeddingStream));
  for (double& x : model.embedding.data()) x = embed_rng.uniform(-0.05, 0.05);
  model.lstm = LstmParams::initialize(shape.embed_dim, shape.hidden_units, derive_seed(seed, kLstmStream));
  model.head_weight = Tensor({shape.hidden_units, shape.output_size});
  model.head_bias = Tensor({shape.output_size});
  Rng head_rng(derive_seed(seed, kHeadStream));
  const double bound = std::sqrt(6.0 / static_cast<double>(shape.hidden_units + shape.output_size));
  for (double& x : model.head_weight.data()) x = head_rng.uniform(-bound, bound);
  return model;
}

const std::vector<std::string>& SequenceModel::parameter_names() {
  static const std::vector<std::string> names = {"embedding", "lstm.w", "lstm.u", "lstm.b", "head.weight",
                                                 "head.bias"};
  return names;
}

std::vector<Tensor*> SequenceModel::parameters() {
  return {&embedding, &lstm.w, &lstm.u, &lstm.b, &head_weight, &head_bias};
}

std::vector<const Tensor*> SequenceModel::parameters() const {
  return {&embedding, &lstm.w, &lstm.u, &lstm.b, &head_weight, &head_bias};
}

Tensor SequenceModel::predict(const TokenBatch& batch) const {
  const Tensor inputs = embedding_forward(batch, embedding);
  const Tensor last = lstm_forward(lstm, inputs, batch.lengths);
  return head_probabilities(shape_.head, linear_forward(last, head_weight, head_bias));
}

namespace {

ForwardState forward_train(const SequenceModel& model, const TokenBatch& batch, double dropout_rate,
                           std::uint64_t dropout_seed) {
  ForwardState s;
  s.inputs = embedding_forward(batch, model.embedding);
  s.last_hidden = lstm_forward(model.lstm, s.inputs, batch.lengths, &s.cache);
  s.mask = dropout_mask(s.last_hidden.shape(), dropout_rate, dropout_seed);
  s.dropped = s.last_hidden;
  for (std::size_t i = 0; i < s.dropped.size(); ++i) s.dropped[i] *= s.mask[i];
  s.logits = linear_forward(s.dropped, model.head_weight, model.head_bias);
  s.probs = head_probabilities(model.shape().head, s.logits);
  return s;
}

double loss_from_probs(HeadKind head, const Tensor& probs, std::span<const std::size_t> targets,
                       std::span<const double> weights) {
  if (head == HeadKind::Softmax) return categorical_cross_entropy(probs, targets, weights);
  std::vector<double> t(targets.begin(), targets.end());
  return binary_cross_entropy(probs.data(), t, weights);
}

}  // namespace

double SequenceModel::loss(const TokenBatch& batch, std::span<const std::size_t> targets, double dropout_rate,
                           std::uint64_t dropout_seed, std::span<const double> sample_weights) const {
  const ForwardState s = forward_train(*this, batch, dropout_rate, dropout_seed);
  return loss_from_probs(shape_.head, s.probs, targets, sample_weights);
}

double SequenceModel::loss_and_gradients(const TokenBatch& batch, std::span<const std::size_t> targets,
                                         double dropout_rate, std::uint64_t dropout_seed, std::vector<Tensor>& grads,
                                         std::span<const double> sample_weights) const {
  if (targets.size() != batch.batch) throw Error(ErrorKind::InvalidArgument, "targets/batch size mismatch");
  for (std::size_t target : targets) {
    const std::size_t classes = shape_.head == HeadKind::Sigmoid ? 2 : shape_.output_size;
    if (target >= classes) throw Error(ErrorKind::InvalidArgument, "target class out of range");
  }
  const ForwardState s = forward_train(*this, batch, dropout_rate, dropout_seed);
  const double value = loss_from_probs(shape_.head, s.probs, targets, sample_weights);

  Tensor grad_logits;
  if (shape_.head == HeadKind::Softmax) {
    grad_logits = categorical_cross_entropy_logit_grad(s.probs, targets, sample_weights);
  } else {
    std::vector<double> t(targets.begin(), targets.end());
    grad_logits = Tensor({batch.batch, 1}, binary_cross_entropy_logit_grad(s.probs.data(), t, sample_weights));
  }

  grads.clear();
  for (const Tensor* p : parameters()) grads.push_back(Tensor::zeros_like(*p));
  Tensor grad_dropped = linear_backward(s.dropped, head_weight, grad_logits, grads[4], grads[5]);
  for (std::size_t i = 0; i < grad_dropped.size(); ++i) grad_dropped[i] *= s.mask[i];
  LstmGradients lg = lstm_backward(lstm, s.cache, grad_dropped);
  embedding_backward(batch, lg.inputs, grads[0]);
  grads[1] = std::move(lg.w);
  grads[2] = std::move(lg.u);
  grads[3] = std::move(lg.b);
  return value;
}

SequenceModel model_from_parts(const ModelShape& shape, std::vector<Tensor> tensors) {
  SequenceModel model = SequenceModel::initialize(shape, 0);
  auto params = model.parameters();
  if (tensors.size() != params.size()) throw Error(ErrorKind::InvalidCheckpoint, "wrong number of parameter tensors");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (tensors[i].shape() != params[i]->shape()) {
      throw Error(ErrorKind::InvalidCheckpoint, "parameter '" + SequenceModel::parameter_names()[i] + "' has shape " +
                                                    tensors[i].shape_string() + ", expected " +
                                                    params[i]->shape_string());
    }
    *params[i] = std::move(tensors[i]);
  }
  return model;
}

}  // namespace dvrisk::nn
