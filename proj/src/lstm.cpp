#include "sensorpipe/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sensorpipe/dataset.hpp"
#include "sensorpipe/rng.hpp"

namespace sensorpipe {

double loss_mse(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size())
    throw ShapeError("loss_mse: prediction has " + std::to_string(pred.size()) +
                     " values, target has " + std::to_string(target.size()));
  if (pred.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    sum += d * d;
  }
  return sum / static_cast<double>(pred.size());
}

TrainWorkspace::TrainWorkspace(const ModelConfig& config)
    : config_(config),
      gates_(config.seq_len * config.gate_rows()),
      c_((config.seq_len + 1) * config.hidden_dim),
      h_((config.seq_len + 1) * config.hidden_dim),
      y_(config.output_dim),
      dh_(config.hidden_dim),
      dc_(config.hidden_dim),
      da_(config.gate_rows()),
      dh_prev_(config.hidden_dim) {
  config.validate();
}

double accumulate_gradient(const LstmParams<double>& params, std::span<const double> input,
                           std::span<const double> target, LstmParams<double>& grad,
                           TrainWorkspace& ws) {
  const auto& cfg = params.config;
  if (!(ws.config_ == cfg) || !(grad.config == cfg) || !grad.shapes_match() ||
      !params.shapes_match())
    throw ShapeError("workspace, gradient and parameters disagree on the model config");
  if (input.size() != cfg.seq_len * cfg.input_dim || target.size() != cfg.output_dim)
    throw ShapeError("training pair does not match the model config");

  const std::size_t in = cfg.input_dim;
  const std::size_t hd = cfg.hidden_dim;
  const std::size_t rows = cfg.gate_rows();
  const std::size_t steps = cfg.seq_len;

  std::fill(ws.c_.begin(), ws.c_.begin() + static_cast<std::ptrdiff_t>(hd), 0.0);
  std::fill(ws.h_.begin(), ws.h_.begin() + static_cast<std::ptrdiff_t>(hd), 0.0);
  for (std::size_t t = 0; t < steps; ++t) {
    const double* x = input.data() + t * in;
    const double* h_prev = ws.h_.data() + t * hd;
    const double* c_prev = ws.c_.data() + t * hd;
    double* h = ws.h_.data() + (t + 1) * hd;
    double* c = ws.c_.data() + (t + 1) * hd;
    double* act = ws.gates_.data() + t * rows;
    for (std::size_t r = 0; r < rows; ++r) {
      double acc = params.b[r];
      const double* wi = params.w_ih.data() + r * in;
      for (std::size_t j = 0; j < in; ++j) acc += wi[j] * x[j];
      const double* wh = params.w_hh.data() + r * hd;
      for (std::size_t j = 0; j < hd; ++j) acc += wh[j] * h_prev[j];
      act[r] = acc;
    }
    for (std::size_t j = 0; j < hd; ++j) {
      const double i = sigmoid(act[j]);
      const double f = sigmoid(act[hd + j]);
      const double g = std::tanh(act[2 * hd + j]);
      const double o = sigmoid(act[3 * hd + j]);
      act[j] = i;
      act[hd + j] = f;
      act[2 * hd + j] = g;
      act[3 * hd + j] = o;
      c[j] = f * c_prev[j] + i * g;
      h[j] = o * std::tanh(c[j]);
    }
  }

  const double* h_last = ws.h_.data() + steps * hd;
  for (std::size_t r = 0; r < cfg.output_dim; ++r) {
    double acc = params.b_out[r];
    const double* w = params.w_out.data() + r * hd;
    for (std::size_t j = 0; j < hd; ++j) acc += w[j] * h_last[j];
    ws.y_[r] = acc;
  }
  const double loss = loss_mse(ws.y_, target);

  // Output head.
  const double scale = 2.0 / static_cast<double>(cfg.output_dim);
  std::fill(ws.dh_.begin(), ws.dh_.end(), 0.0);
  std::fill(ws.dc_.begin(), ws.dc_.end(), 0.0);
  for (std::size_t r = 0; r < cfg.output_dim; ++r) {
    const double dy = scale * (ws.y_[r] - target[r]);
    grad.b_out[r] += dy;
    double* gw = grad.w_out.data() + r * hd;
    const double* w = params.w_out.data() + r * hd;
    for (std::size_t j = 0; j < hd; ++j) {
      gw[j] += dy * h_last[j];
      ws.dh_[j] += dy * w[j];
    }
  }

  // Backpropagation through time.
  for (std::size_t t = steps; t-- > 0;) {
    const double* x = input.data() + t * in;
    const double* h_prev = ws.h_.data() + t * hd;
    const double* c_prev = ws.c_.data() + t * hd;
    const double* c = ws.c_.data() + (t + 1) * hd;
    const double* act = ws.gates_.data() + t * rows;
    for (std::size_t j = 0; j < hd; ++j) {
      const double i = act[j];
      const double f = act[hd + j];
      const double g = act[2 * hd + j];
      const double o = act[3 * hd + j];
      const double tc = std::tanh(c[j]);
      const double d_o = ws.dh_[j] * tc;
      const double dc = ws.dc_[j] + ws.dh_[j] * o * (1.0 - tc * tc);
      ws.da_[j] = dc * g * i * (1.0 - i);
      ws.da_[hd + j] = dc * c_prev[j] * f * (1.0 - f);
      ws.da_[2 * hd + j] = dc * i * (1.0 - g * g);
      ws.da_[3 * hd + j] = d_o * o * (1.0 - o);
      ws.dc_[j] = dc * f;
    }
    std::fill(ws.dh_prev_.begin(), ws.dh_prev_.end(), 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      const double da = ws.da_[r];
      grad.b[r] += da;
      double* gi = grad.w_ih.data() + r * in;
      for (std::size_t j = 0; j < in; ++j) gi[j] += da * x[j];
      double* gh = grad.w_hh.data() + r * hd;
      const double* wh = params.w_hh.data() + r * hd;
      for (std::size_t j = 0; j < hd; ++j) {
        gh[j] += da * h_prev[j];
        ws.dh_prev_[j] += da * wh[j];
      }
    }
    std::swap(ws.dh_, ws.dh_prev_);
  }
  return loss;
}

LstmParams<double> init_params(const ModelConfig& config, std::uint64_t seed) {
  auto p = LstmParams<double>::zeros(config);
  rng::SplitMix64 gen(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(config.hidden_dim));
  for (auto* tensor : p.tensors()) {
    for (auto& v : *tensor) v = gen.uniform(-bound, bound);
  }
  return p;
}

namespace {

void check_dataset(const WindowedDataset& ds, const ModelConfig& config) {
  if (ds.n_pairs == 0) throw EmptyDatasetError("dataset has no pairs");
  if (ds.input_len != config.seq_len || ds.n_inputs != config.input_dim ||
      ds.output_len != config.output_dim)
    throw ShapeError("dataset windows (" + std::to_string(ds.input_len) + "x" +
                     std::to_string(ds.n_inputs) + " -> " + std::to_string(ds.output_len) +
                     ") do not match the model config");
}

void widen(std::span<const float> src, std::vector<double>& dst) {
  dst.assign(src.begin(), src.end());
}

}  // namespace

TrainResult train(const WindowedDataset& dataset, const ModelConfig& config,
                  const TrainHyper& hyper, const EpochCallback& on_epoch) {
  config.validate();
  check_dataset(dataset, config);
  if (hyper.batch_size == 0) throw ConfigError("batch_size must be >= 1");

  TrainResult result;
  result.params = init_params(config, hyper.seed);
  result.initial = result.params;
  auto& params = result.params;

  // Batch order comes from a second stream so changing epochs never
  // changes the initialization.
  rng::SplitMix64 shuffle(rng::mix64(hyper.seed ^ 0x53485546464C45ULL));
  std::vector<std::size_t> order(dataset.n_pairs);
  std::iota(order.begin(), order.end(), std::size_t{0});

  auto grad = LstmParams<double>::zeros(config);
  TrainWorkspace ws(config);
  std::vector<double> x, y;

  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += hyper.batch_size) {
      const std::size_t stop = std::min(order.size(), start + hyper.batch_size);
      for (auto* t : grad.tensors()) std::fill(t->begin(), t->end(), 0.0);
      for (std::size_t n = start; n < stop; ++n) {
        widen(dataset.input(order[n]), x);
        widen(dataset.target(order[n]), y);
        epoch_loss += accumulate_gradient(params, x, y, grad, ws);
      }
      const double step = hyper.lr / static_cast<double>(stop - start);
      auto dst = params.tensors();
      auto src = grad.tensors();
      for (std::size_t k = 0; k < dst.size(); ++k) {
        auto& p = *dst[k];
        const auto& g = *src[k];
        for (std::size_t j = 0; j < p.size(); ++j) p[j] -= step * g[j];
      }
    }
    epoch_loss /= static_cast<double>(order.size());
    if (!std::isfinite(epoch_loss)) throw DivergenceError(epoch);
    result.loss_curve.push_back(epoch_loss);
    if (on_epoch) on_epoch(epoch, epoch_loss);
  }
  return result;
}

double evaluate_mse(const LstmParams<double>& params, const WindowedDataset& dataset,
                    std::size_t first, std::size_t last) {
  check_dataset(dataset, params.config);
  if (first >= last || last > dataset.n_pairs) throw IndexError("bad evaluation range");
  InferenceScratch<double> scratch(params.config);
  std::vector<double> x, y;
  double total = 0.0;
  for (std::size_t p = first; p < last; ++p) {
    widen(dataset.input(p), x);
    widen(dataset.target(p), y);
    const auto pred = forward<double>(params, x, scratch);
    total += loss_mse(pred, y);
  }
  return total / static_cast<double>(last - first);
}

double zero_baseline_mse(const WindowedDataset& dataset, std::size_t first, std::size_t last) {
  if (first >= last || last > dataset.n_pairs) throw IndexError("bad evaluation range");
  double total = 0.0;
  for (std::size_t p = first; p < last; ++p) {
    double sum = 0.0;
    for (float v : dataset.target(p)) sum += static_cast<double>(v) * v;
    total += sum / static_cast<double>(dataset.output_len);
  }
  return total / static_cast<double>(last - first);
}

EmbeddabilityReport embeddability_report(const ModelConfig& config) {
  config.validate();
  const std::size_t in = config.input_dim;
  const std::size_t h = config.hidden_dim;
  const std::size_t out = config.output_dim;
  EmbeddabilityReport r;
  r.param_count = 4 * h * (in + h + 1) + out * (h + 1);
  const std::size_t per_step = 2 * 4 * h * (in + h) + 4 * h + 9 * h;
  r.flops_per_inference = config.seq_len * per_step + 2 * out * h + out;
  r.weight_bytes = 4 * r.param_count;
  return r;
}

}  // namespace sensorpipe
