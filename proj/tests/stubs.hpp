#pragma once

#include <atomic>
#include <span>
#include <thread>

#include "sensorpipe/engine.hpp"

namespace stub {

// Copies channel 0 of the window into the output, cycling when the output
// is longer than the window.
class Identity : public sensorpipe::Predictor {
 public:
  Identity(std::size_t frames, std::size_t channels, std::size_t out)
      : frames_(frames), channels_(channels), out_(out) {}
  std::size_t window_frames() const override { return frames_; }
  std::size_t channels() const override { return channels_; }
  std::size_t output_len() const override { return out_; }
  void predict(std::span<const float> window, std::span<float> out) override {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = window[(i % frames_) * channels_];
  }

 private:
  std::size_t frames_, channels_, out_;
};

// Fills every output with the call number (1, 2, ...).
class Counter : public sensorpipe::Predictor {
 public:
  Counter(std::size_t frames, std::size_t channels, std::size_t out)
      : frames_(frames), channels_(channels), out_(out) {}
  std::size_t window_frames() const override { return frames_; }
  std::size_t channels() const override { return channels_; }
  std::size_t output_len() const override { return out_; }
  void predict(std::span<const float>, std::span<float> out) override {
    ++calls_;
    for (auto& v : out) v = static_cast<float>(calls_);
  }

 private:
  std::size_t frames_, channels_, out_;
  std::size_t calls_ = 0;
};

// Blocks inside predict() until release() is called.
class Gate : public sensorpipe::Predictor {
 public:
  Gate(std::atomic<bool>& open, std::atomic<int>& entered) : open_(open), entered_(entered) {}
  std::size_t window_frames() const override { return 32; }
  std::size_t channels() const override { return 2; }
  std::size_t output_len() const override { return 96; }
  void predict(std::span<const float>, std::span<float> out) override {
    entered_.fetch_add(1);
    while (!open_.load()) std::this_thread::yield();
    for (auto& v : out) v = 7.0f;
  }

 private:
  std::atomic<bool>& open_;
  std::atomic<int>& entered_;
};

}  // namespace stub
