#pragma once

// Synthetic multi-device recording sessions with known ground truth.
//
// Device 0 is the TX reference clock; devices 1.. are RX boards. Every
// signal is defined on the TX ("physical") frame axis; an RX board with
// start offset `off` and clock drift `d` ppm records local frame f as the
// physical frame round(f / (1 + d*1e-6) - off). The k-th pulse is sent at
// TX frame k*P and observed by an RX at
//   round((k*P + off) * (1 + d*1e-6)) + jitter(k),  |jitter| <= J.

#include <cstdint>
#include <string>
#include <vector>

#include "sensorpipe/logfmt.hpp"

namespace sensorpipe {

struct SignalSpec {
  enum class Kind { DampedSine, ImpulseTrain, WhiteNoise };

  Kind kind = Kind::WhiteNoise;
  double freq_hz = 1.0;      // DampedSine
  double decay_per_s = 0.0;  // DampedSine
  double rate_hz = 1.0;      // ImpulseTrain
  double amplitude = 1.0;    // ImpulseTrain, WhiteNoise, DampedSine peak

  static SignalSpec damped_sine(double freq_hz, double decay_per_s, double amplitude = 1.0);
  static SignalSpec impulse_train(double rate_hz, double amplitude);
  static SignalSpec white_noise(double amplitude);

  bool operator==(const SignalSpec&) const = default;
};

// Parses "damped_sine:<freq>:<decay>[:<amp>]", "impulse_train:<rate>:<amp>" or
// "white_noise:<amp>". Throws ConfigError.
SignalSpec parse_signal_spec(const std::string& text);
std::string to_string(const SignalSpec& spec);

struct SessionConfig {
  std::size_t n_devices = 2;
  std::size_t channels_per_device = 1;
  std::size_t n_frames = 4096;
  double sample_rate_hz = 1000.0;
  std::uint64_t pulse_period_frames = 1000;
  // 0 selects the largest count that fits every device's log.
  std::size_t n_pulses = 0;
  std::vector<std::int64_t> start_offset_frames;  // one per device, [0] == 0
  std::vector<double> drift_ppm;                  // one per device, [0] == 0
  std::uint64_t pulse_jitter_frames = 0;
  // Either channels_per_device entries (shared by every device) or
  // n_devices * channels_per_device entries (device-major).
  std::vector<SignalSpec> signals;
  std::uint64_t seed = 0;
  std::uint64_t session_id = 0;

  // Throws ConfigError on the first violated invariant.
  void validate() const;
  const SignalSpec& signal_for(std::size_t device, std::size_t channel) const;
};

struct GroundTruth {
  std::uint64_t pulse_period_frames = 0;
  std::vector<std::int64_t> start_offset_frames;
  std::vector<double> drift_ppm;
  // offsets[device][k]: clean (pre-jitter) RX pulse frame minus TX pulse frame.
  std::vector<std::vector<std::int64_t>> offsets;

  std::int64_t offset(std::size_t device, std::size_t pulse_index) const {
    return offsets.at(device).at(pulse_index);
  }
  // Physical (TX) frame recorded at `local_frame` by `device`.
  std::int64_t physical_frame(std::size_t device, std::int64_t local_frame) const;
};

struct Session {
  std::vector<SensorLog> logs;
  GroundTruth truth;
};

// Value of `spec` at physical frame `frame`; `stream` decorrelates noise
// between channels.
float signal_value(const SignalSpec& spec, std::int64_t frame, double sample_rate_hz,
                   std::uint64_t seed, std::uint64_t stream);

// Stream id used for the noise of (device, channel).
constexpr std::uint64_t signal_stream(std::size_t device, std::size_t channel) {
  return (static_cast<std::uint64_t>(device) << 32) | static_cast<std::uint64_t>(channel);
}

// Uniform integer jitter in [-max_jitter, max_jitter] for (device, pulse).
std::int64_t pulse_jitter(std::uint64_t seed, std::size_t device, std::size_t pulse_index,
                          std::uint64_t max_jitter);

Session generate_session(const SessionConfig& config);

}  // namespace sensorpipe
