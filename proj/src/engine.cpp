#include "sensorpipe/engine.hpp"

#include <algorithm>

#include "sensorpipe/errors.hpp"

namespace sensorpipe {

LstmPredictor::LstmPredictor(ModelFile model)
    : model_(std::move(model)),
      scratch_(model_.params.config),
      normalized_(model_.params.config.seq_len * model_.params.config.input_dim) {
  if (!model_.params.shapes_match()) throw ConfigError("model tensors do not match its config");
  if (model_.input_stats.size() != model_.params.config.input_dim)
    throw ConfigError("model needs one normalization stat per input channel");
}

void LstmPredictor::predict(std::span<const float> window, std::span<float> out) {
  const std::size_t ch = channels();
  for (std::size_t i = 0; i < normalized_.size(); ++i) {
    const auto& s = model_.input_stats[i % ch];
    normalized_[i] = static_cast<float>((window[i] - s.mean) / s.std);
  }
  const auto y = forward<float>(model_.params, normalized_, scratch_);
  const auto& t = model_.target_stats;
  for (std::size_t r = 0; r < y.size(); ++r) out[r] = static_cast<float>(y[r] * t.std + t.mean);
}

Engine::Engine(const EngineConfig& config, std::unique_ptr<Predictor> predictor,
               PublishObserver observer)
    : config_(config),
      predictor_(std::move(predictor)),
      observer_(std::move(observer)),
      channels_(predictor_ ? predictor_->channels() : 0),
      ring_(predictor_ ? predictor_->window_frames() : 0, channels_),
      publish_(predictor_ ? predictor_->output_len() : 0) {
  if (!predictor_) throw ConfigError("engine needs a predictor");
  if (config.block_size < 1) throw ConfigError("block_size must be >= 1");
  if (config.buffer_blocks < 1) throw ConfigError("buffer_blocks must be >= 1");
  if (!(config.sample_rate_hz > 0.0)) throw ConfigError("sample_rate_hz must be positive");
  if (predictor_->window_frames() < 1 || channels_ < 1 || predictor_->output_len() < 1)
    throw ConfigError("predictor geometry must be non-empty");

  const std::size_t frames = predictor_->window_frames();
  history_.assign(frames * channels_, 0.0f);
  window_.assign(frames * channels_, 0.0f);
  frame_.assign(channels_, 0.0f);
  block_period_ = std::chrono::nanoseconds(static_cast<std::int64_t>(
      1e9 * static_cast<double>(config.block_size) / config.sample_rate_hz));
}

Engine::~Engine() { shutdown(); }

void Engine::render(std::span<const float> input, std::span<float> output) noexcept {
  const auto started = config_.measure_deadlines ? std::chrono::steady_clock::now()
                                                 : std::chrono::steady_clock::time_point{};
  const std::size_t block = config_.block_size;
  if (input.size() != block * channels_ || output.size() != block) {
    std::fill(output.begin(), output.end(), 0.0f);
    return;
  }

  for (std::size_t n = 0; n < block; ++n) ring_.push(input.subspan(n * channels_, channels_));

  if (publish_.acquire()) playback_cursor_ = 0;
  const auto prediction = publish_.front();
  const bool have = publish_.has_front();
  for (std::size_t n = 0; n < block; ++n) {
    if (have && playback_cursor_ < prediction.size()) {
      output[n] = prediction[playback_cursor_++];
    } else {
      output[n] = 0.0f;
    }
  }

  const std::uint64_t done = blocks_.fetch_add(1, std::memory_order_relaxed) + 1;
  if (done % config_.buffer_blocks == 0) {
    int expected = kIdle;
    if (state_.compare_exchange_strong(expected, kPending, std::memory_order_acq_rel)) {
      state_.notify_one();
    } else {
      missed_.fetch_add(1, std::memory_order_relaxed);
    }
  }

  if (config_.measure_deadlines && std::chrono::steady_clock::now() - started > block_period_)
    underruns_.fetch_add(1, std::memory_order_relaxed);
}

bool Engine::infer_once() noexcept {
  const std::size_t frames = ring_.capacity();
  // Bounded drain: at most one window's worth per trigger.
  for (std::size_t n = 0; n < frames && ring_.pop(frame_); ++n) {
    std::copy(frame_.begin(), frame_.end(), history_.begin() + history_head_ * channels_);
    history_head_ = (history_head_ + 1) % frames;
    history_fill_ = std::min(history_fill_ + 1, frames);
  }
  if (history_fill_ < frames) return false;

  // history_head_ now points at the oldest frame.
  for (std::size_t n = 0; n < frames; ++n) {
    const std::size_t src = (history_head_ + n) % frames;
    std::copy_n(history_.begin() + src * channels_, channels_, window_.begin() + n * channels_);
  }

  const auto started = std::chrono::steady_clock::now();
  auto out = publish_.back();
  predictor_->predict(window_, out);
  const auto took = std::chrono::duration_cast<std::chrono::nanoseconds>(
                        std::chrono::steady_clock::now() - started)
                        .count();
  if (observer_) observer_(out);
  publish_.publish();
  completed_.fetch_add(1, std::memory_order_release);

  std::int64_t prev = max_inference_ns_.load(std::memory_order_relaxed);
  while (took > prev &&
         !max_inference_ns_.compare_exchange_weak(prev, took, std::memory_order_relaxed)) {
  }
  return true;
}

bool Engine::run_pending() noexcept {
  int expected = kPending;
  if (!state_.compare_exchange_strong(expected, kBusy, std::memory_order_acq_rel)) return false;
  const bool published = infer_once();
  expected = kBusy;
  // Fails only when shutdown() already moved the state to kStopped.
  state_.compare_exchange_strong(expected, kIdle, std::memory_order_acq_rel);
  state_.notify_all();
  return published;
}

void Engine::worker_loop(std::stop_token stop) noexcept {
  while (!stop.stop_requested() && !stopping_.load(std::memory_order_acquire)) {
    state_.wait(kIdle, std::memory_order_acquire);
    if (stop.stop_requested() || stopping_.load(std::memory_order_acquire)) break;
    run_pending();
  }
}

void Engine::start_worker() {
  if (worker_.joinable()) return;
  stopping_.store(false, std::memory_order_release);
  worker_ = std::jthread([this](std::stop_token st) { worker_loop(st); });
}

void Engine::shutdown() {
  if (!worker_.joinable()) return;
  stopping_.store(true, std::memory_order_release);
  worker_.request_stop();
  state_.store(kStopped, std::memory_order_release);
  state_.notify_all();
  worker_.join();
}

bool Engine::worker_idle() const noexcept {
  return state_.load(std::memory_order_acquire) == kIdle;
}

EngineStats Engine::stats() const noexcept {
  EngineStats s;
  s.blocks_processed = blocks_.load(std::memory_order_relaxed);
  s.inferences_completed = completed_.load(std::memory_order_acquire);
  s.inferences_missed = missed_.load(std::memory_order_relaxed);
  s.buffer_overflows = ring_.overflows();
  s.max_inference_duration = std::chrono::nanoseconds(max_inference_ns_.load());
  s.underruns = underruns_.load(std::memory_order_relaxed);
  return s;
}

OfflineResult offline_run(const EngineConfig& config, std::unique_ptr<Predictor> predictor,
                          std::span<const float> signal, std::size_t rows, std::size_t frames) {
  if (!predictor) throw ConfigError("offline_run needs a predictor");
  if (rows != predictor->channels())
    throw ShapeError("signal has " + std::to_string(rows) + " rows, model expects " +
                     std::to_string(predictor->channels()));
  if (signal.size() != rows * frames) throw ShapeError("signal is not rows x frames");

  OfflineResult result;
  result.output_len = predictor->output_len();
  EngineConfig offline = config;
  offline.measure_deadlines = false;
  Engine engine(offline, std::move(predictor), [&](std::span<const float> window) {
    result.predictions.insert(result.predictions.end(), window.begin(), window.end());
  });

  const std::size_t block = config.block_size;
  std::vector<float> in(block * rows);
  std::vector<float> out(block);
  for (std::size_t start = 0; start + block <= frames; start += block) {
    for (std::size_t n = 0; n < block; ++n)
      for (std::size_t r = 0; r < rows; ++r) in[n * rows + r] = signal[r * frames + start + n];
    engine.render(in, out);
    engine.run_pending();
    result.rendered.insert(result.rendered.end(), out.begin(), out.end());
  }
  result.stats = engine.stats();
  return result;
}

}  // namespace sensorpipe
