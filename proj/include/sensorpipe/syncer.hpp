#pragma once

// Sample-level alignment of multi-device recordings on shared sync pulses.
//
// For an RX device with observed pulse frames rx_k and TX pulse frames tx_k
// the segment offset is o_k = rx_k - tx_k. RX local frames in
// [rx_k, rx_{k+1}) map to TX frame f - o_k; frames before the first pulse
// use o_0 and frames after the last use the final offset. When consecutive
// offsets grow, the later segment overwrites the columns both segments map
// to; when they shrink, the uncovered columns repeat the previous sample and
// are counted as gap fills.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sensorpipe/logfmt.hpp"

namespace sensorpipe {

struct SegmentOffset {
  std::uint64_t pulse_index = 0;
  std::int64_t offset_frames = 0;

  bool operator==(const SegmentOffset&) const = default;
};

struct DeviceAlignment {
  std::uint16_t device_id = 0;
  Role role = Role::TX;
  // Empty for the TX device.
  std::vector<SegmentOffset> offsets;
  // max |o_{k+1} - o_k|; 0 for TX or single-pulse logs.
  std::int64_t max_offset_step = 0;
};

struct AlignmentSolution {
  // Same order as the input logs.
  std::vector<DeviceAlignment> devices;
  // Half-open [start, end) in the TX timebase, common to every device.
  std::int64_t overlap_start = 0;
  std::int64_t overlap_end = 0;
  std::uint16_t tx_device_id = 0;

  std::size_t overlap_length() const {
    return static_cast<std::size_t>(overlap_end - overlap_start);
  }
};

struct AlignedMatrix {
  // rows x cols, row-major.
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> data;
  std::vector<std::string> row_labels;  // "<device_id>:<channel label>"
  double sample_rate_hz = 0.0;
  std::uint16_t timebase_device = 0;
  // Overlap start in TX frames; column c holds TX frame first_frame + c.
  std::int64_t first_frame = 0;
  // Per input log: columns filled by repeating the previous sample.
  std::vector<std::size_t> gap_fills;

  float at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  float& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  std::span<const float> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }
};

// Throws TopologyError, PulseMismatchError, NoOverlapError or ValidationError.
AlignmentSolution estimate_offsets(std::span<const SensorLog> logs);

struct ColumnSources {
  // Local frame feeding each overlap column.
  std::vector<std::int64_t> frames;
  // True where the column repeats the previous sample to fill a gap.
  std::vector<bool> gap_filled;
  std::size_t gap_count = 0;
};

// Which local frame of `log` lands in every output column. Throws
// InternalError when the solution was not derived from this log.
ColumnSources source_frames(const SensorLog& log, const DeviceAlignment& device,
                            const AlignmentSolution& solution);

AlignedMatrix align(std::span<const SensorLog> logs, const AlignmentSolution& solution);

}  // namespace sensorpipe
