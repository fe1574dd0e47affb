#pragma once

// Binary sensor-log (.bslog) format written by one recording device.
//
// Layout, all integers little-endian:
//   "BSLG" | version u8 = 1
//   device_id u16 | role u8 (0 = TX, 1 = RX) | sample_rate_hz f64 |
//   n_channels u32 | pulse_period_frames u64 | session_id u64 |
//   n_frames u64 | n_sync_events u64 |
//   n_channels x (label length u16 + UTF-8 bytes)
//   n_channels x n_frames f32 samples, channel-major
//   n_sync_events x (pulse_index u64, frame_index u64)

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace sensorpipe {

enum class Role : std::uint8_t { TX = 0, RX = 1 };

struct LogHeader {
  std::uint16_t device_id = 0;
  Role role = Role::TX;
  double sample_rate_hz = 0.0;
  std::vector<std::string> channel_labels;
  std::uint64_t pulse_period_frames = 1;
  std::uint64_t session_id = 0;

  std::size_t n_channels() const { return channel_labels.size(); }

  bool operator==(const LogHeader&) const = default;
};

struct SyncEvent {
  std::uint64_t pulse_index = 0;
  std::uint64_t frame_index = 0;

  bool operator==(const SyncEvent&) const = default;
};

struct SensorLog {
  LogHeader header;
  // One row per channel, every row n_frames long.
  std::vector<std::vector<float>> samples;
  std::vector<SyncEvent> sync_events;

  std::size_t n_frames() const { return samples.empty() ? 0 : samples.front().size(); }
  std::size_t n_channels() const { return header.n_channels(); }

  // Field-for-field equality; samples compare by bit pattern so NaN payloads
  // and signed zeros round-trip exactly.
  bool bit_equal(const SensorLog& other) const;
};

inline constexpr char kLogMagic[4] = {'B', 'S', 'L', 'G'};
inline constexpr std::uint8_t kLogVersion = 1;
// Bytes preceding the label table: magic, version and the fixed header fields.
inline constexpr std::size_t kLogFixedHeaderSize = 4 + 1 + 2 + 1 + 8 + 4 + 8 + 8 + 8 + 8;

// Throws ValidationError describing the first violated invariant.
void validate_log(const SensorLog& log);

std::vector<std::uint8_t> encode_log(const SensorLog& log);

// Returns the number of bytes written. A failing sink raises IoError carrying
// the byte count accepted before the failure.
std::size_t write_log(const SensorLog& log, std::ostream& sink);
void write_log_file(const SensorLog& log, const std::string& path);

// Never returns a log that violates an invariant. Declared sizes are checked
// against the input length before anything proportional to them is allocated.
SensorLog parse_log(std::span<const std::uint8_t> data);
SensorLog read_log_file(const std::string& path);

}  // namespace sensorpipe
