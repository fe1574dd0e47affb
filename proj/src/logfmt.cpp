#include "sensorpipe/logfmt.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <ostream>

#include "sensorpipe/bytes.hpp"
#include "sensorpipe/errors.hpp"

namespace sensorpipe {

bool SensorLog::bit_equal(const SensorLog& other) const {
  if (!(header == other.header) || sync_events != other.sync_events) return false;
  if (samples.size() != other.samples.size()) return false;
  for (std::size_t c = 0; c < samples.size(); ++c) {
    const auto& a = samples[c];
    const auto& b = other.samples[c];
    if (a.size() != b.size()) return false;
    if (!a.empty() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) != 0) return false;
  }
  return true;
}

void validate_log(const SensorLog& log) {
  const auto& h = log.header;
  if (h.channel_labels.empty()) throw ValidationError("log must have at least one channel");
  if (h.role != Role::TX && h.role != Role::RX) throw ValidationError("unknown device role");
  if (!(h.sample_rate_hz > 0.0) || !std::isfinite(h.sample_rate_hz))
    throw ValidationError("sample_rate_hz must be positive and finite");
  if (h.pulse_period_frames < 1) throw ValidationError("pulse_period_frames must be >= 1");
  for (const auto& label : h.channel_labels) {
    if (label.size() > std::numeric_limits<std::uint16_t>::max())
      throw ValidationError("channel label longer than 65535 bytes");
  }
  if (log.samples.size() != h.n_channels())
    throw ValidationError("sample rows (" + std::to_string(log.samples.size()) +
                          ") != n_channels (" + std::to_string(h.n_channels()) + ")");
  const std::size_t n_frames = log.n_frames();
  for (const auto& row : log.samples) {
    if (row.size() != n_frames) throw ValidationError("sample matrix is not rectangular");
  }
  for (std::size_t i = 0; i < log.sync_events.size(); ++i) {
    const auto& ev = log.sync_events[i];
    if (ev.frame_index >= n_frames)
      throw ValidationError("sync event " + std::to_string(i) + " at frame " +
                            std::to_string(ev.frame_index) + " beyond n_frames " +
                            std::to_string(n_frames));
    if (i > 0) {
      const auto& prev = log.sync_events[i - 1];
      if (ev.pulse_index <= prev.pulse_index || ev.frame_index <= prev.frame_index)
        throw ValidationError("sync events not strictly increasing at index " + std::to_string(i));
    }
  }
}

namespace {

void encode_header(const SensorLog& log, bytes::Writer& w) {
  const auto& h = log.header;
  w.put_bytes(std::string_view(kLogMagic, 4));
  w.put<std::uint8_t>(kLogVersion);
  w.put<std::uint16_t>(h.device_id);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(h.role));
  w.put<double>(h.sample_rate_hz);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(h.n_channels()));
  w.put<std::uint64_t>(h.pulse_period_frames);
  w.put<std::uint64_t>(h.session_id);
  w.put<std::uint64_t>(log.n_frames());
  w.put<std::uint64_t>(log.sync_events.size());
  for (const auto& label : h.channel_labels) {
    w.put<std::uint16_t>(static_cast<std::uint16_t>(label.size()));
    w.put_bytes(label);
  }
}

void encode_channel(const std::vector<float>& row, bytes::Writer& w) {
  for (float v : row) w.put<float>(v);
}

void encode_events(const SensorLog& log, bytes::Writer& w) {
  for (const auto& ev : log.sync_events) {
    w.put<std::uint64_t>(ev.pulse_index);
    w.put<std::uint64_t>(ev.frame_index);
  }
}

}  // namespace

std::vector<std::uint8_t> encode_log(const SensorLog& log) {
  validate_log(log);
  bytes::Writer w;
  encode_header(log, w);
  for (const auto& row : log.samples) encode_channel(row, w);
  encode_events(log, w);
  return w.take();
}

std::size_t write_log(const SensorLog& log, std::ostream& sink) {
  validate_log(log);
  std::size_t written = 0;
  auto emit = [&](const bytes::Writer& w) {
    const auto& d = w.data();
    sink.write(reinterpret_cast<const char*>(d.data()), static_cast<std::streamsize>(d.size()));
    if (!sink) throw IoError("log sink write failed", written);
    written += d.size();
  };
  {
    bytes::Writer w;
    encode_header(log, w);
    emit(w);
  }
  for (const auto& row : log.samples) {
    bytes::Writer w;
    encode_channel(row, w);
    emit(w);
  }
  {
    bytes::Writer w;
    encode_events(log, w);
    emit(w);
  }
  sink.flush();
  if (!sink) throw IoError("log sink flush failed", written);
  return written;
}

void write_log_file(const SensorLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing", 0);
  write_log(log, out);
}

SensorLog parse_log(std::span<const std::uint8_t> data) {
  bytes::Reader r(data);
  if (r.remaining() < 4 || std::memcmp(data.data(), kLogMagic, 4) != 0)
    throw FormatError("bad magic: not a .bslog file");
  r.get_string(4);
  const auto version = r.get<std::uint8_t>();
  if (version != kLogVersion)
    throw FormatError("unsupported .bslog version " + std::to_string(version));

  SensorLog log;
  auto& h = log.header;
  h.device_id = r.get<std::uint16_t>();
  const auto role = r.get<std::uint8_t>();
  if (role > 1) throw FormatError("bad role byte " + std::to_string(role));
  h.role = static_cast<Role>(role);
  h.sample_rate_hz = r.get<double>();
  const auto n_channels = r.get<std::uint32_t>();
  h.pulse_period_frames = r.get<std::uint64_t>();
  h.session_id = r.get<std::uint64_t>();
  const auto n_frames = r.get<std::uint64_t>();
  const auto n_events = r.get<std::uint64_t>();

  if (n_channels == 0) throw ValidationError("n_channels must be >= 1");
  // Each label needs at least its 2-byte length prefix.
  r.require(std::size_t{n_channels} * 2);
  h.channel_labels.reserve(n_channels);
  for (std::uint32_t c = 0; c < n_channels; ++c) {
    const auto len = r.get<std::uint16_t>();
    h.channel_labels.push_back(r.get_string(len));
  }

  // Compute the payload size in 128-bit-safe steps before allocating anything.
  const std::size_t remaining = r.remaining();
  const unsigned __int128 sample_bytes =
      static_cast<unsigned __int128>(n_channels) * n_frames * sizeof(float);
  const unsigned __int128 event_bytes = static_cast<unsigned __int128>(n_events) * 16;
  const unsigned __int128 payload = sample_bytes + event_bytes;
  if (payload > remaining) {
    const unsigned __int128 expected = payload + r.position();
    const std::size_t capped = expected > std::numeric_limits<std::size_t>::max()
                                   ? std::numeric_limits<std::size_t>::max()
                                   : static_cast<std::size_t>(expected);
    throw TruncationError(capped, data.size());
  }
  if (payload < remaining)
    throw FormatError(std::to_string(remaining - static_cast<std::size_t>(payload)) +
                      " trailing bytes after payload");

  log.samples.assign(n_channels, std::vector<float>(static_cast<std::size_t>(n_frames)));
  for (auto& row : log.samples) {
    for (auto& v : row) v = r.get<float>();
  }
  log.sync_events.resize(static_cast<std::size_t>(n_events));
  for (auto& ev : log.sync_events) {
    ev.pulse_index = r.get<std::uint64_t>();
    ev.frame_index = r.get<std::uint64_t>();
  }
  validate_log(log);
  return log;
}

SensorLog read_log_file(const std::string& path) {
  const auto data = bytes::read_file(path);
  return parse_log(data);
}

}  // namespace sensorpipe
