#pragma once

// Real-time inference runtime.
//
// Two execution contexts share an Engine: the audio context calls render()
// once per block and must never block or allocate; one worker context runs
// worker_loop() (or the test/offline code calls run_pending()) to turn the
// accumulated input window into a prediction. Everything is allocated in
// the constructor. See docs/realtime_audit.md for the audio-path checklist.

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stop_token>
#include <thread>
#include <vector>

#include "sensorpipe/lstm.hpp"
#include "sensorpipe/ring_buffer.hpp"
#include "sensorpipe/triple_buffer.hpp"
#include "sensorpipe/weights.hpp"

namespace sensorpipe {

// Maps an input window (frames x channels, row-major) to a prediction.
// predict() runs in the worker context and must not allocate.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual std::size_t window_frames() const = 0;
  virtual std::size_t channels() const = 0;
  virtual std::size_t output_len() const = 0;
  virtual void predict(std::span<const float> window, std::span<float> out) = 0;
};

// LSTM-backed predictor: normalizes the window with the stored input stats,
// runs forward() into its own scratch and denormalizes with the target stats.
class LstmPredictor final : public Predictor {
 public:
  explicit LstmPredictor(ModelFile model);

  std::size_t window_frames() const override { return model_.params.config.seq_len; }
  std::size_t channels() const override { return model_.params.config.input_dim; }
  std::size_t output_len() const override { return model_.params.config.output_dim; }
  void predict(std::span<const float> window, std::span<float> out) override;

 private:
  ModelFile model_;
  InferenceScratch<float> scratch_;
  std::vector<float> normalized_;
};

struct EngineConfig {
  std::size_t block_size = 16;
  std::size_t buffer_blocks = 2;
  double sample_rate_hz = 1000.0;
  // Compare each render() duration against the block period.
  bool measure_deadlines = true;
};

struct EngineStats {
  std::uint64_t blocks_processed = 0;
  std::uint64_t inferences_completed = 0;
  std::uint64_t inferences_missed = 0;
  std::uint64_t buffer_overflows = 0;
  std::chrono::nanoseconds max_inference_duration{0};
  std::uint64_t underruns = 0;
};

class Engine {
 public:
  // Called in the worker context with every window about to be published.
  using PublishObserver = std::function<void(std::span<const float>)>;

  // setup(): allocates everything. Throws ConfigError on a bad config or a
  // predictor whose geometry cannot be served.
  Engine(const EngineConfig& config, std::unique_ptr<Predictor> predictor,
         PublishObserver observer = {});
  ~Engine();

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  const EngineConfig& config() const noexcept { return config_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t ring_capacity_frames() const noexcept { return ring_.capacity(); }
  std::size_t output_len() const noexcept { return publish_.window(); }

  // Audio context. `input` is block_size x channels interleaved, `output` is
  // block_size samples. Wrong-sized spans produce a silent block.
  void render(std::span<const float> input, std::span<float> output) noexcept;

  // Worker context: if a trigger is pending, drain the ring, predict and
  // publish. Returns true when a window was published.
  bool run_pending() noexcept;

  // Blocks on the trigger until `stop` is requested or shutdown() is called.
  void worker_loop(std::stop_token stop) noexcept;

  void start_worker();
  // Wakes and joins the worker; a worker waiting for a trigger exits
  // without publishing.
  void shutdown();

  // True when no trigger is pending or in flight.
  bool worker_idle() const noexcept;

  EngineStats stats() const noexcept;

 private:
  enum State : int { kIdle = 0, kPending = 1, kBusy = 2, kStopped = 3 };

  bool infer_once() noexcept;

  EngineConfig config_;
  std::unique_ptr<Predictor> predictor_;
  PublishObserver observer_;
  std::size_t channels_ = 0;
  std::chrono::nanoseconds block_period_{0};

  RingBuffer ring_;
  TripleBuffer publish_;

  // Worker-owned.
  std::vector<float> history_;  // window_frames x channels, circular
  std::vector<float> window_;   // linearized copy handed to the predictor
  std::vector<float> frame_;
  std::size_t history_head_ = 0;
  std::size_t history_fill_ = 0;

  // Audio-owned.
  std::size_t playback_cursor_ = 0;

  alignas(64) std::atomic<int> state_{kIdle};
  std::atomic<bool> stopping_{false};
  std::atomic<std::uint64_t> blocks_{0};
  std::atomic<std::uint64_t> completed_{0};
  std::atomic<std::uint64_t> missed_{0};
  std::atomic<std::uint64_t> underruns_{0};
  std::atomic<std::int64_t> max_inference_ns_{0};

  std::jthread worker_;
};

struct OfflineResult {
  std::size_t output_len = 0;
  // n_predictions x output_len, in publication order.
  std::vector<float> predictions;
  // Rendered audio-path output, one sample per consumed input frame.
  std::vector<float> rendered;
  EngineStats stats;

  std::size_t n_predictions() const {
    return output_len == 0 ? 0 : predictions.size() / output_len;
  }
};

// Single-context replay: every complete block of `signal` (channels x
// frames, row-major) is rendered and any trigger is served immediately.
// Throws ShapeError when the row count differs from the predictor's.
OfflineResult offline_run(const EngineConfig& config, std::unique_ptr<Predictor> predictor,
                          std::span<const float> signal, std::size_t rows, std::size_t frames);

}  // namespace sensorpipe
