#include "sensorpipe/syncer.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>

#include "sensorpipe/errors.hpp"

namespace sensorpipe {

namespace {

std::size_t find_tx(std::span<const SensorLog> logs) {
  std::size_t tx = logs.size();
  std::size_t count = 0;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    if (logs[i].header.role == Role::TX) {
      tx = i;
      ++count;
    }
  }
  if (count != 1)
    throw TopologyError("expected exactly one TX log, found " + std::to_string(count));
  return tx;
}

// Segment k of the RX device covering local frame f: the last pulse at or
// before f, or pulse 0 for frames preceding the first pulse.
struct SegmentCursor {
  const SensorLog& log;
  const DeviceAlignment& device;
  std::size_t k = 0;

  std::int64_t offset_for(std::uint64_t frame) {
    const auto& events = log.sync_events;
    while (k + 1 < events.size() && events[k + 1].frame_index <= frame) ++k;
    return device.offsets.empty() ? 0 : device.offsets[k].offset_frames;
  }
};

// [min, max] of mapped TX frames for one device.
std::pair<std::int64_t, std::int64_t> mapped_range(const SensorLog& log,
                                                   const DeviceAlignment& device) {
  const auto n = static_cast<std::int64_t>(log.n_frames());
  if (device.offsets.empty()) return {0, n - 1};
  std::int64_t lo = std::numeric_limits<std::int64_t>::max();
  std::int64_t hi = std::numeric_limits<std::int64_t>::min();
  // The extremes sit at segment endpoints, so checking those is enough.
  const auto& events = log.sync_events;
  auto consider = [&](std::int64_t f, std::int64_t o) {
    lo = std::min(lo, f - o);
    hi = std::max(hi, f - o);
  };
  consider(0, device.offsets.front().offset_frames);
  for (std::size_t k = 0; k < events.size(); ++k) {
    const std::int64_t o = device.offsets[k].offset_frames;
    const auto start = static_cast<std::int64_t>(events[k].frame_index);
    const std::int64_t stop =
        k + 1 < events.size() ? static_cast<std::int64_t>(events[k + 1].frame_index) - 1 : n - 1;
    consider(start, o);
    consider(stop, o);
  }
  return {lo, hi};
}

}  // namespace

AlignmentSolution estimate_offsets(std::span<const SensorLog> logs) {
  if (logs.empty()) throw TopologyError("no logs to align");
  for (const auto& log : logs) validate_log(log);
  const std::size_t tx = find_tx(logs);
  const auto& tx_log = logs[tx];

  for (const auto& log : logs) {
    if (log.header.session_id != tx_log.header.session_id)
      throw ValidationError("device " + std::to_string(log.header.device_id) +
                            " belongs to a different session");
    if (log.header.sample_rate_hz != tx_log.header.sample_rate_hz)
      throw ValidationError("device " + std::to_string(log.header.device_id) +
                            " has a different sample rate");
    if (log.n_frames() == 0)
      throw NoOverlapError("device " + std::to_string(log.header.device_id) + " has no frames");
  }

  AlignmentSolution solution;
  solution.tx_device_id = tx_log.header.device_id;
  const auto& tx_events = tx_log.sync_events;
  for (const auto& log : logs) {
    DeviceAlignment device;
    device.device_id = log.header.device_id;
    device.role = log.header.role;
    if (log.header.role == Role::RX) {
      const auto& rx_events = log.sync_events;
      if (rx_events.size() != tx_events.size())
        throw PulseMismatchError(tx_events.size(), log.header.device_id, rx_events.size());
      for (std::size_t k = 0; k < rx_events.size(); ++k) {
        if (rx_events[k].pulse_index != tx_events[k].pulse_index)
          throw PulseMismatchError(tx_events.size(), log.header.device_id, rx_events.size());
        const std::int64_t o = static_cast<std::int64_t>(rx_events[k].frame_index) -
                               static_cast<std::int64_t>(tx_events[k].frame_index);
        device.offsets.push_back({rx_events[k].pulse_index, o});
        if (k > 0) {
          const std::int64_t step = std::llabs(o - device.offsets[k - 1].offset_frames);
          device.max_offset_step = std::max(device.max_offset_step, step);
        }
      }
      if (device.offsets.empty())
        throw PulseMismatchError(tx_events.size(), log.header.device_id, 0);
    }
    solution.devices.push_back(std::move(device));
  }

  std::int64_t start = 0;
  std::int64_t end = std::numeric_limits<std::int64_t>::max();
  for (std::size_t i = 0; i < logs.size(); ++i) {
    const auto [lo, hi] = mapped_range(logs[i], solution.devices[i]);
    start = std::max(start, lo);
    end = std::min(end, hi + 1);
  }
  if (end <= start)
    throw NoOverlapError("recordings share no common TX-timebase frames");
  solution.overlap_start = start;
  solution.overlap_end = end;
  return solution;
}

ColumnSources source_frames(const SensorLog& log, const DeviceAlignment& device,
                            const AlignmentSolution& solution) {
  const auto [lo, hi] = mapped_range(log, device);
  if (lo > solution.overlap_start || hi + 1 < solution.overlap_end)
    throw InternalError("alignment solution does not match log of device " +
                        std::to_string(device.device_id));
  // Map over the device's whole span so a gap at the overlap start can still
  // repeat the sample before it.
  std::vector<std::int64_t> src(static_cast<std::size_t>(hi - lo + 1), -1);
  SegmentCursor cursor{log, device};
  const std::uint64_t n = log.n_frames();
  for (std::uint64_t f = 0; f < n; ++f) {
    const std::int64_t t = static_cast<std::int64_t>(f) - cursor.offset_for(f);
    src[static_cast<std::size_t>(t - lo)] = static_cast<std::int64_t>(f);  // later segment wins
  }

  ColumnSources out;
  out.frames.resize(solution.overlap_length());
  out.gap_filled.resize(solution.overlap_length());
  std::int64_t last = -1;
  for (std::size_t j = 0; j < src.size(); ++j) {
    const bool gap = src[j] < 0;
    if (gap) {
      if (last < 0) throw InternalError("gap before the first mapped sample");
      src[j] = last;
    }
    last = src[j];
    const std::int64_t t = static_cast<std::int64_t>(j) + lo;
    if (t >= solution.overlap_start && t < solution.overlap_end) {
      const auto col = static_cast<std::size_t>(t - solution.overlap_start);
      out.frames[col] = src[j];
      out.gap_filled[col] = gap;
      if (gap) ++out.gap_count;
    }
  }
  return out;
}

AlignedMatrix align(std::span<const SensorLog> logs, const AlignmentSolution& solution) {
  if (logs.size() != solution.devices.size())
    throw InternalError("solution covers " + std::to_string(solution.devices.size()) +
                        " devices but " + std::to_string(logs.size()) + " logs were given");
  AlignedMatrix m;
  m.cols = solution.overlap_length();
  m.timebase_device = solution.tx_device_id;
  m.first_frame = solution.overlap_start;
  for (const auto& log : logs) m.rows += log.n_channels();
  m.data.assign(m.rows * m.cols, 0.0f);
  m.gap_fills.assign(logs.size(), 0);

  std::size_t row = 0;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    const auto& log = logs[i];
    const auto& device = solution.devices[i];
    if (device.device_id != log.header.device_id)
      throw InternalError("solution device order does not match the logs");
    if (m.sample_rate_hz == 0.0) m.sample_rate_hz = log.header.sample_rate_hz;

    const auto sources = source_frames(log, device, solution);
    m.gap_fills[i] = sources.gap_count;
    for (std::size_t c = 0; c < log.n_channels(); ++c, ++row) {
      m.row_labels.push_back(std::to_string(log.header.device_id) + ":" +
                             log.header.channel_labels[c]);
      const auto& samples = log.samples[c];
      for (std::size_t col = 0; col < m.cols; ++col)
        m.at(row, col) = samples[static_cast<std::size_t>(sources.frames[col])];
    }
  }
  return m;
}

}  // namespace sensorpipe
