#include "sensorpipe/synthgen.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "sensorpipe/errors.hpp"
#include "sensorpipe/rng.hpp"

namespace sensorpipe {

namespace {

constexpr std::uint64_t kJitterStream = 0x4A49545445520000ULL;  // "JITTER"

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(text);
  while (std::getline(in, part, sep)) parts.push_back(part);
  return parts;
}

double parse_number(const std::string& s, const std::string& context) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad number '" + s + "' in signal spec '" + context + "'");
  }
}

double clock_scale(double drift_ppm) { return 1.0 + drift_ppm * 1e-6; }

}  // namespace

SignalSpec SignalSpec::damped_sine(double freq_hz, double decay_per_s, double amplitude) {
  SignalSpec s;
  s.kind = Kind::DampedSine;
  s.freq_hz = freq_hz;
  s.decay_per_s = decay_per_s;
  s.amplitude = amplitude;
  return s;
}

SignalSpec SignalSpec::impulse_train(double rate_hz, double amplitude) {
  SignalSpec s;
  s.kind = Kind::ImpulseTrain;
  s.rate_hz = rate_hz;
  s.amplitude = amplitude;
  return s;
}

SignalSpec SignalSpec::white_noise(double amplitude) {
  SignalSpec s;
  s.kind = Kind::WhiteNoise;
  s.amplitude = amplitude;
  return s;
}

SignalSpec parse_signal_spec(const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.empty()) throw ConfigError("empty signal spec");
  const auto& kind = parts[0];
  auto arg = [&](std::size_t i) { return parse_number(parts[i], text); };
  if (kind == "damped_sine" && (parts.size() == 3 || parts.size() == 4))
    return SignalSpec::damped_sine(arg(1), arg(2), parts.size() == 4 ? arg(3) : 1.0);
  if (kind == "impulse_train" && parts.size() == 3) return SignalSpec::impulse_train(arg(1), arg(2));
  if (kind == "white_noise" && parts.size() == 2) return SignalSpec::white_noise(arg(1));
  throw ConfigError("unrecognised signal spec '" + text + "'");
}

std::string to_string(const SignalSpec& spec) {
  std::ostringstream out;
  out.precision(17);
  switch (spec.kind) {
    case SignalSpec::Kind::DampedSine:
      out << "damped_sine:" << spec.freq_hz << ':' << spec.decay_per_s << ':' << spec.amplitude;
      break;
    case SignalSpec::Kind::ImpulseTrain:
      out << "impulse_train:" << spec.rate_hz << ':' << spec.amplitude;
      break;
    case SignalSpec::Kind::WhiteNoise:
      out << "white_noise:" << spec.amplitude;
      break;
  }
  return out.str();
}

void SessionConfig::validate() const {
  if (n_devices < 1) throw ConfigError("n_devices must be >= 1");
  if (n_devices > 0xFFFF) throw ConfigError("n_devices exceeds the 16-bit device id range");
  if (channels_per_device < 1) throw ConfigError("channels_per_device must be >= 1");
  if (n_frames < 1) throw ConfigError("n_frames must be >= 1");
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz))
    throw ConfigError("sample_rate_hz must be positive");
  if (pulse_period_frames < 1) throw ConfigError("pulse_period_frames must be >= 1");
  if (start_offset_frames.size() != n_devices)
    throw ConfigError("start_offset_frames needs one entry per device");
  if (drift_ppm.size() != n_devices) throw ConfigError("drift_ppm needs one entry per device");
  if (start_offset_frames[0] != 0 || drift_ppm[0] != 0.0)
    throw ConfigError("device 0 is the TX reference: its offset and drift must be 0");
  for (std::size_t d = 0; d < n_devices; ++d) {
    if (start_offset_frames[d] < 0) throw ConfigError("start offsets must be non-negative");
    if (!std::isfinite(drift_ppm[d]) || clock_scale(drift_ppm[d]) <= 0.0)
      throw ConfigError("drift_ppm out of range for device " + std::to_string(d));
  }
  if (pulse_period_frames <= 2 * pulse_jitter_frames)
    throw ConfigError("pulse_period_frames must exceed twice the pulse jitter");
  if (signals.size() != channels_per_device && signals.size() != n_devices * channels_per_device)
    throw ConfigError("signals needs channels_per_device or n_devices*channels_per_device entries");
}

const SignalSpec& SessionConfig::signal_for(std::size_t device, std::size_t channel) const {
  if (signals.size() == channels_per_device) return signals.at(channel);
  return signals.at(device * channels_per_device + channel);
}

std::int64_t GroundTruth::physical_frame(std::size_t device, std::int64_t local_frame) const {
  const double scale = clock_scale(drift_ppm.at(device));
  return std::llround(static_cast<double>(local_frame) / scale) - start_offset_frames.at(device);
}

float signal_value(const SignalSpec& spec, std::int64_t frame, double sample_rate_hz,
                   std::uint64_t seed, std::uint64_t stream) {
  switch (spec.kind) {
    case SignalSpec::Kind::DampedSine: {
      const double t = static_cast<double>(frame) / sample_rate_hz;
      const double envelope = std::exp(-spec.decay_per_s * std::max(t, 0.0));
      return static_cast<float>(spec.amplitude * envelope *
                                std::sin(2.0 * std::numbers::pi * spec.freq_hz * t));
    }
    case SignalSpec::Kind::ImpulseTrain: {
      // An impulse lands on every frame where the running count of periods ticks over.
      const double per_frame = spec.rate_hz / sample_rate_hz;
      const auto count = [&](std::int64_t n) {
        return std::floor(static_cast<double>(n) * per_frame);
      };
      return count(frame) != count(frame - 1) ? static_cast<float>(spec.amplitude) : 0.0f;
    }
    case SignalSpec::Kind::WhiteNoise: {
      const double u = rng::to_unit(rng::hash(seed, stream, static_cast<std::uint64_t>(frame)));
      return static_cast<float>(spec.amplitude * (2.0 * u - 1.0));
    }
  }
  return 0.0f;
}

std::int64_t pulse_jitter(std::uint64_t seed, std::size_t device, std::size_t pulse_index,
                          std::uint64_t max_jitter) {
  if (max_jitter == 0) return 0;
  const std::uint64_t bits = rng::hash(seed, kJitterStream + device, pulse_index);
  const std::uint64_t span = 2 * max_jitter + 1;
  return static_cast<std::int64_t>(bits % span) - static_cast<std::int64_t>(max_jitter);
}

namespace {

std::int64_t clean_pulse_frame(const SessionConfig& config, std::size_t device, std::size_t k) {
  const double tx = static_cast<double>(k * config.pulse_period_frames);
  const double off = static_cast<double>(config.start_offset_frames[device]);
  return std::llround((tx + off) * clock_scale(config.drift_ppm[device]));
}

// True when pulse k fits in every device's log even at worst-case jitter.
bool pulse_fits(const SessionConfig& config, std::size_t k) {
  const auto n = static_cast<std::int64_t>(config.n_frames);
  const auto j = static_cast<std::int64_t>(config.pulse_jitter_frames);
  for (std::size_t d = 0; d < config.n_devices; ++d) {
    const std::int64_t f = clean_pulse_frame(config, d, k);
    if (d == 0 ? f >= n : f + j >= n) return false;
  }
  return true;
}

}  // namespace

Session generate_session(const SessionConfig& config) {
  config.validate();

  std::size_t n_pulses = config.n_pulses;
  if (n_pulses == 0) {
    while (pulse_fits(config, n_pulses)) ++n_pulses;
    if (n_pulses == 0) throw ConfigError("session too short for a single sync pulse");
  }

  Session session;
  auto& truth = session.truth;
  truth.pulse_period_frames = config.pulse_period_frames;
  truth.start_offset_frames = config.start_offset_frames;
  truth.drift_ppm = config.drift_ppm;
  truth.offsets.assign(config.n_devices, std::vector<std::int64_t>(n_pulses, 0));

  const auto n_frames = static_cast<std::int64_t>(config.n_frames);
  for (std::size_t d = 0; d < config.n_devices; ++d) {
    SensorLog log;
    auto& h = log.header;
    h.device_id = static_cast<std::uint16_t>(d);
    h.role = d == 0 ? Role::TX : Role::RX;
    h.sample_rate_hz = config.sample_rate_hz;
    h.pulse_period_frames = config.pulse_period_frames;
    h.session_id = config.session_id;
    for (std::size_t c = 0; c < config.channels_per_device; ++c)
      h.channel_labels.push_back("ch" + std::to_string(c));

    for (std::size_t k = 0; k < n_pulses; ++k) {
      const std::int64_t tx_frame = static_cast<std::int64_t>(k * config.pulse_period_frames);
      const std::int64_t clean = clean_pulse_frame(config, d, k);
      truth.offsets[d][k] = clean - tx_frame;
      const std::int64_t observed =
          d == 0 ? clean : clean + pulse_jitter(config.seed, d, k, config.pulse_jitter_frames);
      if (observed >= n_frames)
        throw ConfigError("session too short: pulse " + std::to_string(k) + " of device " +
                          std::to_string(d) + " lands at frame " + std::to_string(observed));
      if (observed < 0)
        throw ConfigError("pulse " + std::to_string(k) + " of device " + std::to_string(d) +
                          " jittered before the start of its log; raise its start offset");
      log.sync_events.push_back({k, static_cast<std::uint64_t>(observed)});
    }

    log.samples.assign(config.channels_per_device, std::vector<float>(config.n_frames));
    for (std::size_t c = 0; c < config.channels_per_device; ++c) {
      const auto& spec = config.signal_for(d, c);
      const std::uint64_t stream = signal_stream(d, c);
      auto& row = log.samples[c];
      for (std::int64_t f = 0; f < n_frames; ++f) {
        const std::int64_t physical = truth.physical_frame(d, f);
        row[static_cast<std::size_t>(f)] =
            signal_value(spec, physical, config.sample_rate_hz, config.seed, stream);
      }
    }
    session.logs.push_back(std::move(log));
  }
  return session;
}

}  // namespace sensorpipe
