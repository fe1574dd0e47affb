#pragma once

// Supervised windowing of an aligned matrix: each pair is input_len frames
// of the input channels followed by output_len future frames of the target
// channel.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sensorpipe/syncer.hpp"

namespace sensorpipe {

struct NormStat {
  double mean = 0.0;
  double std = 1.0;

  bool operator==(const NormStat&) const = default;
};

inline constexpr double kStdFloor = 1e-8;

struct WindowSpec {
  std::size_t input_len = 32;
  std::size_t output_len = 96;
  // 0 means "same as input_len".
  std::size_t hop = 0;
  std::vector<std::size_t> input_channels = {0, 1};
  std::size_t target_channel = 0;

  std::size_t effective_hop() const { return hop == 0 ? input_len : hop; }
};

struct WindowedDataset {
  std::size_t n_pairs = 0;
  std::size_t input_len = 0;
  std::size_t n_inputs = 0;
  std::size_t output_len = 0;
  // n_pairs x input_len x n_inputs, normalized.
  std::vector<float> inputs;
  // n_pairs x output_len, normalized with target_stats.
  std::vector<float> targets;
  std::vector<NormStat> input_stats;
  NormStat target_stats;

  std::span<const float> input(std::size_t pair) const {
    return {inputs.data() + pair * input_len * n_inputs, input_len * n_inputs};
  }
  std::span<const float> target(std::size_t pair) const {
    return {targets.data() + pair * output_len, output_len};
  }
};

// floor((n - input_len - output_len) / hop) + 1 when non-negative, else 0.
std::size_t window_count(std::size_t n_timesteps, std::size_t input_len, std::size_t output_len,
                         std::size_t hop);

// Population mean/std of one row with the std floored at kStdFloor.
NormStat channel_stats(std::span<const float> row);

// Throws IndexError for a bad channel, EmptyDatasetError when too short.
WindowedDataset make_windows(const AlignedMatrix& matrix, const WindowSpec& spec);

inline double normalize(double v, const NormStat& s) { return (v - s.mean) / s.std; }
inline double denormalize(double v, const NormStat& s) { return v * s.std + s.mean; }

// One line per row, comma separated, shortest decimal form that parses back
// to the identical float.
std::size_t export_csv(std::span<const float> data, std::size_t rows, std::size_t cols,
                       std::ostream& sink);
std::string format_float(float v);

// Matrix as an NPY (rows, cols) array; f64 widens every value.
std::size_t export_npy(const AlignedMatrix& matrix, const std::string& path, bool f64 = false);
AlignedMatrix import_npy_matrix(const std::string& path);

}  // namespace sensorpipe
