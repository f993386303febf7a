#include "dvrisk/nn/lstm.hpp"

#include <algorithm>
#include <cmath>

#include "dvrisk/error.hpp"
#include "dvrisk/nn/layers.hpp"
#include "dvrisk/random.hpp"

namespace dvrisk::nn {

LstmParams LstmParams::zeros(std::size_t input_size, std::size_t hidden_units) {
  LstmParams p;
  p.input_size = input_size;
  p.hidden_units = hidden_units;
  p.w = Tensor({4 * hidden_units, input_size});
  p.u = Tensor({4 * hidden_units, hidden_units});
  p.b = Tensor({4 * hidden_units});
  return p;
}

LstmParams LstmParams::initialize(std::size_t input_size, std::size_t hidden_units, std::uint64_t seed) {
  LstmParams p = zeros(input_size, hidden_units);
  Rng rng(seed);
  const double w_bound = std::sqrt(6.0 / static_cast<double>(input_size + hidden_units));
  const double u_bound = std::sqrt(6.0 / static_cast<double>(2 * hidden_units));
  for (double& x : p.w.data()) x = rng.uniform(-w_bound, w_bound);
  for (double& x : p.u.data()) x = rng.uniform(-u_bound, u_bound);
  for (std::size_t j = 0; j < hidden_units; ++j) p.b[kForgetGate * hidden_units + j] = 1.0;
  return p;
}

Tensor lstm_forward(const LstmParams& params, const Tensor& inputs, std::span<const std::size_t> lengths,
                    LstmCache* cache) {
  const std::size_t B = inputs.dim(0), T = inputs.dim(1), E = inputs.dim(2), H = params.hidden_units;
  if (E != params.input_size) throw Error(ErrorKind::InvalidArgument, "LSTM input width mismatch");
  if (lengths.size() != B) throw Error(ErrorKind::InvalidArgument, "LSTM lengths/batch mismatch");
  for (std::size_t len : lengths) {
    if (len > T) throw Error(ErrorKind::InvalidArgument, "sequence length exceeds time steps");
  }

  Tensor gates({B, T, 4 * H});
  Tensor cells({B, T + 1, H});
  Tensor hiddens({B, T + 1, H});
  Tensor last({B, H});
  std::vector<double> z(4 * H);

  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t t = 0; t < T; ++t) {
      const double* c_prev = &cells.at(b, t, 0);
      const double* h_prev = &hiddens.at(b, t, 0);
      double* c_next = &cells.at(b, t + 1, 0);
      double* h_next = &hiddens.at(b, t + 1, 0);
      if (t >= lengths[b]) {
        std::copy_n(c_prev, H, c_next);
        std::copy_n(h_prev, H, h_next);
        continue;
      }
      const double* x = &inputs.at(b, t, 0);
      for (std::size_t r = 0; r < 4 * H; ++r) {
        double acc = params.b[r];
        const double* wr = &params.w.at(r, 0);
        for (std::size_t e = 0; e < E; ++e) acc += wr[e] * x[e];
        const double* ur = &params.u.at(r, 0);
        for (std::size_t k = 0; k < H; ++k) acc += ur[k] * h_prev[k];
        z[r] = acc;
      }
      double* g = &gates.at(b, t, 0);
      for (std::size_t j = 0; j < H; ++j) {
        const double ig = sigmoid(z[kInputGate * H + j]);
        const double fg = sigmoid(z[kForgetGate * H + j]);
        const double cg = std::tanh(z[kCellGate * H + j]);
        const double og = sigmoid(z[kOutputGate * H + j]);
        g[kInputGate * H + j] = ig;
        g[kForgetGate * H + j] = fg;
        g[kCellGate * H + j] = cg;
        g[kOutputGate * H + j] = og;
        c_next[j] = fg * c_prev[j] + ig * cg;
        h_next[j] = og * std::tanh(c_next[j]);
      }
    }
    std::copy_n(&hiddens.at(b, lengths[b], 0), H, &last.at(b, 0));
  }
  if (!last.all_finite() || !cells.all_finite()) {
    throw Error(ErrorKind::NonFiniteActivation, "LSTM produced a non-finite activation");
  }
  if (cache) {
    cache->batch = B;
    cache->time = T;
    cache->input_size = E;
    cache->hidden = H;
    cache->inputs = inputs;
    cache->lengths.assign(lengths.begin(), lengths.end());
    cache->gates = std::move(gates);
    cache->cells = std::move(cells);
    cache->hiddens = std::move(hiddens);
  }
  return last;
}

LstmGradients lstm_backward(const LstmParams& params, const LstmCache& cache, const Tensor& grad_last_hidden) {
  const std::size_t B = cache.batch, T = cache.time, E = cache.input_size, H = cache.hidden;
  LstmGradients grads{Tensor(params.w.shape()), Tensor(params.u.shape()), Tensor(params.b.shape()),
                      Tensor({B, T, E})};
  std::vector<double> dh(H), dc(H), dz(4 * H), dh_prev(H);

  for (std::size_t b = 0; b < B; ++b) {
    std::copy_n(&grad_last_hidden.at(b, 0), H, dh.begin());
    std::fill(dc.begin(), dc.end(), 0.0);
    // Masked steps are identity maps on (h, c): the adjoint passes through.
    for (std::size_t t = cache.lengths[b]; t-- > 0;) {
      const double* g = &cache.gates.at(b, t, 0);
      const double* c_prev = &cache.cells.at(b, t, 0);
      const double* c_cur = &cache.cells.at(b, t + 1, 0);
      const double* h_prev = &cache.hiddens.at(b, t, 0);
      const double* x = &cache.inputs.at(b, t, 0);
      for (std::size_t j = 0; j < H; ++j) {
        const double ig = g[kInputGate * H + j];
        const double fg = g[kForgetGate * H + j];
        const double cg = g[kCellGate * H + j];
        const double og = g[kOutputGate * H + j];
        const double tc = std::tanh(c_cur[j]);
        const double d_o = dh[j] * tc;
        const double dcj = dc[j] + dh[j] * og * (1.0 - tc * tc);
        dz[kInputGate * H + j] = dcj * cg * ig * (1.0 - ig);
        dz[kForgetGate * H + j] = dcj * c_prev[j] * fg * (1.0 - fg);
        dz[kCellGate * H + j] = dcj * ig * (1.0 - cg * cg);
        dz[kOutputGate * H + j] = d_o * og * (1.0 - og);
        dc[j] = dcj * fg;
      }
      std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
      double* dx = &grads.inputs.at(b, t, 0);
      for (std::size_t r = 0; r < 4 * H; ++r) {
        const double d = dz[r];
        grads.b[r] += d;
        double* gw = &grads.w.at(r, 0);
        const double* wr = &params.w.at(r, 0);
        for (std::size_t e = 0; e < E; ++e) {
          gw[e] += d * x[e];
          dx[e] += d * wr[e];
        }
        double* gu = &grads.u.at(r, 0);
        const double* ur = &params.u.at(r, 0);
        for (std::size_t k = 0; k < H; ++k) {
          gu[k] += d * h_prev[k];
          dh_prev[k] += d * ur[k];
        }
      }
      dh.swap(dh_prev);
    }
  }
  return grads;
}

}  // namespace dvrisk::nn
