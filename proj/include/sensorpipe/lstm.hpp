#pragma once

// Single-layer LSTM with a linear head on the final hidden state.
//
// Gate rows are stacked [input i, forget f, cell candidate g, output o], each
// hidden_dim tall, with one combined bias per gate row:
//   a_t = W_ih x_t + W_hh h_{t-1} + b
//   i, f, o = sigmoid(a_i, a_f, a_o);  g = tanh(a_g)
//   c_t = f * c_{t-1} + i * g;  h_t = o * tanh(c_t)
//   y = W_out h_T + b_out
// Matrices are row-major. Training runs in double; deployed weights are float.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sensorpipe/errors.hpp"

namespace sensorpipe {

struct WindowedDataset;

struct ModelConfig {
  std::size_t input_dim = 2;
  std::size_t hidden_dim = 16;
  std::size_t output_dim = 96;
  std::size_t seq_len = 32;

  void validate() const {
    if (input_dim == 0 || hidden_dim == 0 || output_dim == 0 || seq_len == 0)
      throw ConfigError("model dimensions must all be positive");
  }
  std::size_t gate_rows() const { return 4 * hidden_dim; }

  bool operator==(const ModelConfig&) const = default;
};

template <typename T>
struct LstmParams {
  ModelConfig config;
  std::vector<T> w_ih;   // 4h x in
  std::vector<T> w_hh;   // 4h x h
  std::vector<T> b;      // 4h
  std::vector<T> w_out;  // out x h
  std::vector<T> b_out;  // out

  static LstmParams zeros(const ModelConfig& config) {
    config.validate();
    LstmParams p;
    p.config = config;
    const std::size_t g = config.gate_rows();
    p.w_ih.assign(g * config.input_dim, T{0});
    p.w_hh.assign(g * config.hidden_dim, T{0});
    p.b.assign(g, T{0});
    p.w_out.assign(config.output_dim * config.hidden_dim, T{0});
    p.b_out.assign(config.output_dim, T{0});
    return p;
  }

  template <typename U>
  LstmParams<U> cast() const {
    LstmParams<U> p;
    p.config = config;
    auto conv = [](const std::vector<T>& v) { return std::vector<U>(v.begin(), v.end()); };
    p.w_ih = conv(w_ih);
    p.w_hh = conv(w_hh);
    p.b = conv(b);
    p.w_out = conv(w_out);
    p.b_out = conv(b_out);
    return p;
  }

  // Tensors in serialization order.
  std::vector<std::vector<T>*> tensors() { return {&w_ih, &w_hh, &b, &w_out, &b_out}; }
  std::vector<const std::vector<T>*> tensors() const { return {&w_ih, &w_hh, &b, &w_out, &b_out}; }

  std::size_t parameter_count() const {
    return w_ih.size() + w_hh.size() + b.size() + w_out.size() + b_out.size();
  }

  bool shapes_match() const {
    const auto& c = config;
    const std::size_t g = c.gate_rows();
    return w_ih.size() == g * c.input_dim && w_hh.size() == g * c.hidden_dim && b.size() == g &&
           w_out.size() == c.output_dim * c.hidden_dim && b_out.size() == c.output_dim;
  }

  bool operator==(const LstmParams&) const = default;
};

// Every buffer forward() touches, sized once for a ModelConfig.
template <typename T>
class InferenceScratch {
 public:
  explicit InferenceScratch(const ModelConfig& config)
      : config_(config),
        h_(config.hidden_dim),
        c_(config.hidden_dim),
        gates_(config.gate_rows()),
        output_(config.output_dim) {
    config.validate();
  }

  const ModelConfig& config() const { return config_; }
  std::span<T> h() { return h_; }
  std::span<T> c() { return c_; }
  std::span<T> gates() { return gates_; }
  std::span<T> output() { return output_; }
  std::span<const T> h() const { return h_; }
  std::span<const T> output() const { return output_; }

 private:
  ModelConfig config_;
  std::vector<T> h_;
  std::vector<T> c_;
  std::vector<T> gates_;
  std::vector<T> output_;
};

template <typename T>
inline T sigmoid(T x) {
  return T{1} / (T{1} + std::exp(-x));
}

// Runs the full sequence; `input` is seq_len x input_dim, row-major. The
// result lives in scratch.output() until the next call. Allocation-free.
template <typename T>
std::span<const T> forward(const LstmParams<T>& params, std::span<const T> input,
                           InferenceScratch<T>& scratch) {
  const auto& cfg = params.config;
  if (!(scratch.config() == cfg))
    throw ShapeError("inference scratch was sized for a different model");
  if (!params.shapes_match()) throw ShapeError("parameter tensors do not match the model config");
  if (input.size() != cfg.seq_len * cfg.input_dim)
    throw ShapeError("input has " + std::to_string(input.size()) + " values, expected " +
                     std::to_string(cfg.seq_len * cfg.input_dim));

  const std::size_t in = cfg.input_dim;
  const std::size_t hd = cfg.hidden_dim;
  const std::size_t rows = cfg.gate_rows();
  auto h = scratch.h();
  auto c = scratch.c();
  auto a = scratch.gates();
  std::fill(h.begin(), h.end(), T{0});
  std::fill(c.begin(), c.end(), T{0});

  for (std::size_t t = 0; t < cfg.seq_len; ++t) {
    const T* x = input.data() + t * in;
    for (std::size_t r = 0; r < rows; ++r) {
      T acc = params.b[r];
      const T* wi = params.w_ih.data() + r * in;
      for (std::size_t j = 0; j < in; ++j) acc += wi[j] * x[j];
      const T* wh = params.w_hh.data() + r * hd;
      for (std::size_t j = 0; j < hd; ++j) acc += wh[j] * h[j];
      a[r] = acc;
    }
    for (std::size_t j = 0; j < hd; ++j) {
      const T i = sigmoid(a[j]);
      const T f = sigmoid(a[hd + j]);
      const T g = std::tanh(a[2 * hd + j]);
      const T o = sigmoid(a[3 * hd + j]);
      c[j] = f * c[j] + i * g;
      h[j] = o * std::tanh(c[j]);
    }
  }

  auto y = scratch.output();
  for (std::size_t r = 0; r < cfg.output_dim; ++r) {
    T acc = params.b_out[r];
    const T* w = params.w_out.data() + r * hd;
    for (std::size_t j = 0; j < hd; ++j) acc += w[j] * h[j];
    y[r] = acc;
  }
  return y;
}

// Mean of squared differences. Throws ShapeError on length mismatch.
double loss_mse(std::span<const double> pred, std::span<const double> target);

// Per-step activations kept for backpropagation through time.
class TrainWorkspace {
 public:
  explicit TrainWorkspace(const ModelConfig& config);

 private:
  friend double accumulate_gradient(const LstmParams<double>&, std::span<const double>,
                                    std::span<const double>, LstmParams<double>&,
                                    TrainWorkspace&);
  ModelConfig config_;
  std::vector<double> gates_;  // seq x 4h, post-activation (i, f, g, o)
  std::vector<double> c_;      // (seq + 1) x h, c_[0] = 0
  std::vector<double> h_;      // (seq + 1) x h, h_[0] = 0
  std::vector<double> y_;
  std::vector<double> dh_, dc_, da_, dh_prev_;
};

// Forward + BPTT for one pair: adds d(loss)/d(params) into `grad` and
// returns the MSE loss of this pair.
double accumulate_gradient(const LstmParams<double>& params, std::span<const double> input,
                           std::span<const double> target, LstmParams<double>& grad,
                           TrainWorkspace& ws);

struct TrainHyper {
  double lr = 0.05;
  std::size_t epochs = 50;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
};

struct TrainResult {
  LstmParams<double> params;
  LstmParams<double> initial;
  std::vector<double> loss_curve;  // mean training loss per epoch
};

// Uniform in [-1/sqrt(h), 1/sqrt(h)] from a SplitMix64 stream seeded by `seed`.
LstmParams<double> init_params(const ModelConfig& config, std::uint64_t seed);

using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

// Plain minibatch SGD on the mean per-pair MSE. Throws EmptyDatasetError,
// ShapeError or DivergenceError.
TrainResult train(const WindowedDataset& dataset, const ModelConfig& config,
                  const TrainHyper& hyper, const EpochCallback& on_epoch = {});

// Mean per-pair MSE of `params` over pairs [first, last) of the dataset.
double evaluate_mse(const LstmParams<double>& params, const WindowedDataset& dataset,
                    std::size_t first, std::size_t last);
// Same range scored against an all-zero prediction.
double zero_baseline_mse(const WindowedDataset& dataset, std::size_t first, std::size_t last);

struct EmbeddabilityReport {
  std::size_t param_count = 0;
  std::size_t flops_per_inference = 0;
  std::size_t weight_bytes = 0;
};

// Multiply-accumulate counts as 2 flops; each step adds 4h bias adds and 9h
// pointwise gate/state operations.
EmbeddabilityReport embeddability_report(const ModelConfig& config);

}  // namespace sensorpipe
