#include <doctest.h>

#include <cmath>
#include <numeric>

#include "dvrisk/error.hpp"
#include "dvrisk/nn/layers.hpp"
#include "dvrisk/nn/lstm.hpp"
#include "dvrisk/nn/optim.hpp"
#include "dvrisk/nn/sequence_model.hpp"
#include "dvrisk/random.hpp"

using namespace dvrisk;
using namespace dvrisk::nn;

namespace {

double sig(double z) { return 1.0 / (1.0 + std::exp(-z)); }

TokenBatch batch_of(std::vector<std::vector<std::int32_t>> rows, std::size_t time) {
  TokenBatch b;
  b.batch = rows.size();
  b.time = time;
  b.ids.assign(b.batch * time, 0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t t = 0; t < rows[r].size(); ++t) b.ids[r * time + t] = rows[r][t];
    b.lengths.push_back(rows[r].size());
  }
  return b;
}

void randomize(SequenceModel& model, std::uint64_t seed, double scale) {
  Rng rng(seed);
  for (Tensor* p : model.parameters()) {
    for (double& x : p->data()) x = rng.uniform(-scale, scale);
  }
}

}  // namespace

TEST_CASE("embedding lookup") {
  Tensor table({3, 2});
  table.at(2, 0) = 0.5;
  table.at(2, 1) = -0.5;
  table.at(0, 0) = 7.0;
  auto out = embedding_forward(batch_of({{2}}, 1), table);
  CHECK(out.shape() == std::vector<std::size_t>{1, 1, 2});
  CHECK(out[0] == 0.5);
  CHECK(out[1] == -0.5);

  auto pads = embedding_forward(batch_of({{0, 0, 0}}, 3), table);
  for (std::size_t t = 0; t < 3; ++t) CHECK(pads.at(0, t, 0) == 7.0);

  CHECK_THROWS_AS(embedding_forward(batch_of({{3}}, 1), table), Error);
}

TEST_CASE("lstm with zero parameters outputs zeros") {
  const auto params = LstmParams::zeros(3, 4);
  Tensor x({2, 5, 3}, 0.7);
  const std::vector<std::size_t> lengths{5, 2};
  auto h = lstm_forward(params, x, lengths);
  for (double v : h.data()) CHECK(v == 0.0);
}

TEST_CASE("lstm forward matches a hand trace") {
  // hidden 2, embed 1, two steps.
  auto p = LstmParams::zeros(1, 2);
  const double w[8] = {0.5, -0.3, 0.8, 0.2, -0.6, 0.9, 0.4, -0.1};
  const double u[8][2] = {{0.1, 0.2}, {-0.2, 0.3}, {0.05, -0.4}, {0.3, 0.1},
                          {0.7, -0.2}, {-0.5, 0.6}, {0.2, 0.2}, {-0.3, 0.4}};
  const double b[8] = {0.0, 0.1, 1.0, 1.0, -0.1, 0.2, 0.05, -0.05};
  for (int r = 0; r < 8; ++r) {
    p.w[r] = w[r];
    p.u.at(r, 0) = u[r][0];
    p.u.at(r, 1) = u[r][1];
    p.b[r] = b[r];
  }
  const double xs[2] = {0.5, -1.0};

  double h[2] = {0, 0}, c[2] = {0, 0};
  for (double x : xs) {
    double hn[2], cn[2];
    for (int j = 0; j < 2; ++j) {
      auto pre = [&](int gate) {
        const int r = gate * 2 + j;
        return w[r] * x + u[r][0] * h[0] + u[r][1] * h[1] + b[r];
      };
      const double i = sig(pre(0)), f = sig(pre(1)), g = std::tanh(pre(2)), o = sig(pre(3));
      cn[j] = f * c[j] + i * g;
      hn[j] = o * std::tanh(cn[j]);
    }
    for (int j = 0; j < 2; ++j) {
      h[j] = hn[j];
      c[j] = cn[j];
    }
  }

  Tensor inputs({1, 2, 1}, std::vector<double>{xs[0], xs[1]});
  const std::vector<std::size_t> lengths{2};
  auto out = lstm_forward(p, inputs, lengths);
  CHECK(std::abs(out[0] - h[0]) <= 1e-12);
  CHECK(std::abs(out[1] - h[1]) <= 1e-12);
  CHECK(std::abs(h[0]) > 1e-3);
}

TEST_CASE("lstm backward is linear in the upstream gradient") {
  auto p = LstmParams::initialize(3, 4, 7);
  Rng rng(3);
  Tensor x({2, 4, 3});
  for (double& v : x.data()) v = rng.uniform(-1, 1);
  const std::vector<std::size_t> lengths{4, 2};
  LstmCache cache;
  lstm_forward(p, x, lengths, &cache);

  Tensor zero({2, 4});
  auto g0 = lstm_backward(p, cache, zero);
  for (const Tensor* t : {&g0.w, &g0.u, &g0.b, &g0.inputs}) {
    for (double v : t->data()) CHECK(v == 0.0);
  }

  Tensor up({2, 4});
  for (double& v : up.data()) v = rng.uniform(-1, 1);
  Tensor up2 = up;
  up2.scale(2.0);
  auto g1 = lstm_backward(p, cache, up);
  auto g2 = lstm_backward(p, cache, up2);
  for (std::size_t i = 0; i < g1.w.size(); ++i) CHECK(g2.w[i] == doctest::Approx(2.0 * g1.w[i]).epsilon(1e-12));
  for (std::size_t i = 0; i < g1.inputs.size(); ++i) {
    CHECK(g2.inputs[i] == doctest::Approx(2.0 * g1.inputs[i]).epsilon(1e-12));
  }
  // Row 1 has length 2: its padded steps receive no gradient.
  for (std::size_t t = 2; t < 4; ++t) {
    for (std::size_t e = 0; e < 3; ++e) CHECK(g1.inputs.at(1, t, e) == 0.0);
  }
}

TEST_CASE("lstm rejects non-finite activations") {
  auto p = LstmParams::initialize(2, 3, 1);
  Tensor x({1, 1, 2}, std::numeric_limits<double>::infinity());
  const std::vector<std::size_t> lengths{1};
  CHECK_THROWS_AS(lstm_forward(p, x, lengths), Error);
}

TEST_CASE("dense sigmoid") {
  Tensor h({2, 2}, std::vector<double>{1, 0, -3, 4});
  Tensor w0({2});
  auto y = dense_sigmoid(h, w0, 0.0);
  CHECK(y[0] == 0.5);
  CHECK(y[1] == 0.5);
  auto sat = dense_sigmoid(h, w0, 20.0);
  CHECK(sat[0] < 1.0);
  CHECK(1.0 - sat[0] < 1e-8);
  Tensor w({2}, std::vector<double>{2, 3});
  CHECK(dense_sigmoid(h, w, -2.0)[0] == 0.5);
  CHECK(sigmoid(-700.0) > 0.0);
  CHECK(sigmoid(800.0) == 1.0);
}

TEST_CASE("softmax") {
  Tensor equal({1, 4}, 3.0);
  const Tensor uniform = softmax_rows(equal);
  for (double p : uniform.data()) CHECK(p == doctest::Approx(0.25).epsilon(1e-15));

  Tensor big({1, 2}, std::vector<double>{1000.0, 0.0});
  auto p = softmax_rows(big);
  CHECK(std::abs(p[0] - 1.0) <= 1e-12);
  CHECK(std::abs(p[1]) <= 1e-12);

  Tensor one({3, 1}, std::vector<double>{-5, 0, 900});
  const Tensor certain = softmax_rows(one);
  for (double v : certain.data()) CHECK(v == 1.0);

  Tensor h({1, 2}, std::vector<double>{1.0, 2.0});
  Tensor W({2, 3}, 0.0);
  Tensor b({3}, std::vector<double>{0.0, std::log(2.0), std::log(5.0)});
  auto d = dense_softmax(h, W, b);
  CHECK(d[0] == doctest::Approx(1.0 / 8.0).epsilon(1e-14));
  CHECK(d[2] == doctest::Approx(5.0 / 8.0).epsilon(1e-14));
}

TEST_CASE("cross entropy") {
  const std::vector<double> half{0.5, 0.5}, targets{0.0, 1.0};
  CHECK(std::abs(binary_cross_entropy(half, targets) - std::log(2.0)) <= 1e-12);

  const std::vector<double> perfect{1.0, 0.0}, perfect_t{1.0, 0.0};
  CHECK(binary_cross_entropy(perfect, perfect_t) <= 1e-11);
  // Clamped region passes no gradient.
  for (double g : binary_cross_entropy_logit_grad(perfect, std::vector<double>{0.0, 1.0})) CHECK(g == 0.0);

  Tensor one_hot({2, 3}, std::vector<double>{1, 0, 0, 0, 0, 1});
  const std::vector<std::size_t> cls{0, 2};
  CHECK(categorical_cross_entropy(one_hot, cls) <= 1e-11);

  Tensor uniform({2, 5}, 0.2);
  const std::vector<std::size_t> any{1, 4};
  CHECK(categorical_cross_entropy(uniform, any) == doctest::Approx(std::log(5.0)).epsilon(1e-14));

  const std::vector<double> w{2.0, 0.0};
  const std::vector<double> p{0.25, 0.9};
  CHECK(binary_cross_entropy(p, std::vector<double>{1.0, 1.0}, w) == doctest::Approx(-std::log(0.25)).epsilon(1e-14));
}

TEST_CASE("dropout") {
  Rng rng(5);
  Tensor x({4, 8});
  for (double& v : x.data()) v = rng.uniform(-2, 2);
  CHECK(dropout(x, 0.0, Mode::Train, 1) == x);
  CHECK(dropout(x, 0.0, Mode::Eval, 1) == x);
  CHECK(dropout(x, 0.2, Mode::Eval, 1) == x);
  CHECK(dropout(x, 0.2, Mode::Train, 9) == dropout(x, 0.2, Mode::Train, 9));
  CHECK_FALSE(dropout(x, 0.2, Mode::Train, 9) == dropout(x, 0.2, Mode::Train, 10));

  auto mask = dropout_mask({1000000}, 0.2, 42);
  double sum = 0.0;
  std::size_t dropped = 0;
  for (double m : mask.data()) {
    sum += m;
    if (m == 0.0) ++dropped;
    else CHECK(m == 1.25);
  }
  CHECK(std::abs(sum / 1e6 - 1.0) < 0.01);
  CHECK(std::abs(static_cast<double>(dropped) / 1e6 - 0.2) < 0.01);
}

TEST_CASE("adam") {
  Tensor p({3}, std::vector<double>{1.0, -2.0, 0.5});
  Tensor g({3}, std::vector<double>{0.3, -4.0, 0.05});
  std::vector<Tensor*> params{&p};
  auto state = AdamState::for_params(params, 0.001);
  const Tensor before = p;
  adam_step(params, std::span<const Tensor>(&g, 1), state);
  CHECK(state.t == 1);
  for (std::size_t i = 0; i < 3; ++i) {
    const double step = std::abs(p[i] - before[i]);
    CHECK(std::abs(step - 0.001) / 0.001 <= 1e-6);
    CHECK((p[i] - before[i]) * g[i] < 0.0);
  }

  // Constant gradient: m_hat / sqrt(v_hat) stays 1 at every step.
  const Tensor after_one = p;
  adam_step(params, std::span<const Tensor>(&g, 1), state);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(p[i] - after_one[i]) <= 0.001 * (1 + 1e-6));

  Tensor q({2}, 1.5);
  Tensor zero({2});
  std::vector<Tensor*> qp{&q};
  auto fresh = AdamState::for_params(qp);
  adam_step(qp, std::span<const Tensor>(&zero, 1), fresh);
  CHECK(q == Tensor({2}, 1.5));

  Tensor inf({2}, std::numeric_limits<double>::infinity());
  const Tensor q_before = q;
  CHECK_THROWS_AS(adam_step(qp, std::span<const Tensor>(&inf, 1), fresh), Error);
  CHECK(q == q_before);
}

TEST_CASE("global norm clipping") {
  std::vector<Tensor> g{Tensor({2}, std::vector<double>{3, 0}), Tensor({1}, std::vector<double>{4})};
  CHECK(clip_global_norm(g, 10.0) == doctest::Approx(5.0));
  CHECK(g[0][0] == 3.0);
  CHECK(clip_global_norm(g, 1.0) == doctest::Approx(5.0));
  CHECK(g[0][0] == doctest::Approx(0.6));
  CHECK(g[1][0] == doctest::Approx(0.8));
}

TEST_CASE("grad check on a quadratic") {
  Rng rng(2);
  Tensor theta({300});
  for (double& v : theta.data()) v = (rng.uniform(0, 1) < 0.5 ? -1 : 1) * rng.uniform(1, 3);
  std::vector<Tensor*> params{&theta};
  auto loss = [&] { return 0.5 * theta.squared_norm(); };
  const Tensor analytic = theta;
  auto r = grad_check(loss, params, std::span<const Tensor>(&analytic, 1), 1e-5);
  CHECK(r.coordinates_checked >= 200);
  CHECK(r.max_relative_error <= 1e-7);
}

TEST_CASE("full models pass the gradient check") {
  for (HeadKind head : {HeadKind::Sigmoid, HeadKind::Softmax}) {
    CAPTURE(static_cast<int>(head));
    const ModelShape shape{12, 4, 5, head == HeadKind::Sigmoid ? 1u : 6u, head};
    auto model = SequenceModel::initialize(shape, 42);
    randomize(model, 17, 0.5);
    const auto batch = batch_of({{3, 7, 11}, {5, 2}}, 3);
    const std::vector<std::size_t> targets = head == HeadKind::Sigmoid ? std::vector<std::size_t>{1, 0}
                                                                        : std::vector<std::size_t>{4, 1};
    std::vector<Tensor> grads;
    model.loss_and_gradients(batch, targets, 0.2, 99, grads);
    auto params = model.parameters();
    auto r = grad_check([&] { return model.loss(batch, targets, 0.2, 99); }, params, grads, 1e-5);
    CHECK(r.coordinates_checked >= 200);
    CHECK(r.max_relative_error <= 1e-4);
  }
}

TEST_CASE("padding never changes outputs or gradients") {
  for (HeadKind head : {HeadKind::Sigmoid, HeadKind::Softmax}) {
    const ModelShape shape{12, 4, 5, head == HeadKind::Sigmoid ? 1u : 6u, head};
    auto model = SequenceModel::initialize(shape, 3);
    randomize(model, 8, 0.5);
    const std::vector<std::vector<std::int32_t>> rows{{3, 7, 11}, {5, 2}};
    const std::vector<std::size_t> targets{0, 1};
    const auto base = batch_of(rows, 3);
    const Tensor out = model.predict(base);
    std::vector<Tensor> g_base;
    const double l_base = model.loss_and_gradients(base, targets, 0.1, 5, g_base);
    for (std::size_t extra = 1; extra <= 8; ++extra) {
      const auto padded = batch_of(rows, 3 + extra);
      CHECK(model.predict(padded) == out);
      std::vector<Tensor> g;
      CHECK(model.loss_and_gradients(padded, targets, 0.1, 5, g) == l_base);
      for (std::size_t k = 0; k < g.size(); ++k) {
        for (std::size_t i = 0; i < g[k].size(); ++i) CHECK(std::abs(g[k][i] - g_base[k][i]) <= 1e-15);
      }
    }
  }
}

TEST_CASE("sequence model initialization") {
  const ModelShape shape{20, 6, 7, 1, HeadKind::Sigmoid};
  auto a = SequenceModel::initialize(shape, 1);
  auto b = SequenceModel::initialize(shape, 1);
  auto c = SequenceModel::initialize(shape, 2);
  CHECK(a.embedding == b.embedding);
  CHECK_FALSE(a.embedding == c.embedding);
  for (double v : a.embedding.data()) CHECK(std::abs(v) <= 0.05);
  for (std::size_t j = 0; j < 7; ++j) {
    CHECK(a.lstm.b[kForgetGate * 7 + j] == 1.0);
    CHECK(a.lstm.b[kInputGate * 7 + j] == 0.0);
  }
  const double bound = std::sqrt(6.0 / (6 + 7));
  for (double v : a.lstm.w.data()) CHECK(std::abs(v) <= bound);
  CHECK_THROWS_AS(SequenceModel::initialize({20, 6, 7, 2, HeadKind::Sigmoid}, 1), Error);
}
