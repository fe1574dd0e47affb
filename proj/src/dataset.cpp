#include "sensorpipe/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>

#include "sensorpipe/errors.hpp"
#include "sensorpipe/npy.hpp"

namespace sensorpipe {

std::size_t window_count(std::size_t n_timesteps, std::size_t input_len, std::size_t output_len,
                         std::size_t hop) {
  const std::size_t span = input_len + output_len;
  if (hop == 0 || n_timesteps < span) return 0;
  return (n_timesteps - span) / hop + 1;
}

NormStat channel_stats(std::span<const float> row) {
  NormStat s;
  if (row.empty()) return s;
  double sum = 0.0;
  for (float v : row) sum += v;
  s.mean = sum / static_cast<double>(row.size());
  double sq = 0.0;
  for (float v : row) sq += (v - s.mean) * (v - s.mean);
  s.std = std::max(std::sqrt(sq / static_cast<double>(row.size())), kStdFloor);
  return s;
}

WindowedDataset make_windows(const AlignedMatrix& matrix, const WindowSpec& spec) {
  if (spec.input_len < 1 || spec.output_len < 1)
    throw ConfigError("window lengths must be >= 1");
  if (spec.input_channels.empty()) throw ConfigError("at least one input channel is required");
  for (auto ch : spec.input_channels) {
    if (ch >= matrix.rows)
      throw IndexError("input channel " + std::to_string(ch) + " out of range (" +
                       std::to_string(matrix.rows) + " rows)");
  }
  if (spec.target_channel >= matrix.rows)
    throw IndexError("target channel " + std::to_string(spec.target_channel) + " out of range");

  const std::size_t hop = spec.effective_hop();
  const std::size_t n_pairs = window_count(matrix.cols, spec.input_len, spec.output_len, hop);
  if (n_pairs == 0)
    throw EmptyDatasetError("matrix has " + std::to_string(matrix.cols) + " timesteps, need " +
                            std::to_string(spec.input_len + spec.output_len));

  WindowedDataset ds;
  ds.n_pairs = n_pairs;
  ds.input_len = spec.input_len;
  ds.n_inputs = spec.input_channels.size();
  ds.output_len = spec.output_len;
  for (auto ch : spec.input_channels) ds.input_stats.push_back(channel_stats(matrix.row(ch)));
  ds.target_stats = channel_stats(matrix.row(spec.target_channel));

  ds.inputs.resize(n_pairs * ds.input_len * ds.n_inputs);
  ds.targets.resize(n_pairs * ds.output_len);
  for (std::size_t p = 0; p < n_pairs; ++p) {
    const std::size_t start = p * hop;
    float* in = ds.inputs.data() + p * ds.input_len * ds.n_inputs;
    for (std::size_t t = 0; t < ds.input_len; ++t) {
      for (std::size_t j = 0; j < ds.n_inputs; ++j) {
        const float v = matrix.at(spec.input_channels[j], start + t);
        in[t * ds.n_inputs + j] = static_cast<float>(normalize(v, ds.input_stats[j]));
      }
    }
    float* out = ds.targets.data() + p * ds.output_len;
    for (std::size_t t = 0; t < ds.output_len; ++t) {
      const float v = matrix.at(spec.target_channel, start + ds.input_len + t);
      out[t] = static_cast<float>(normalize(v, ds.target_stats));
    }
  }
  return ds;
}

std::string format_float(float v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::size_t export_csv(std::span<const float> data, std::size_t rows, std::size_t cols,
                       std::ostream& sink) {
  if (data.size() != rows * cols) throw ShapeError("csv: data is not rows x cols");
  std::size_t written = 0;
  std::string line;
  for (std::size_t r = 0; r < rows; ++r) {
    line.clear();
    for (std::size_t c = 0; c < cols; ++c) {
      if (c > 0) line += ',';
      line += format_float(data[r * cols + c]);
    }
    line += '\n';
    sink.write(line.data(), static_cast<std::streamsize>(line.size()));
    if (!sink) throw IoError("csv: write failed", written);
    written += line.size();
  }
  return written;
}

std::size_t export_npy(const AlignedMatrix& matrix, const std::string& path, bool f64) {
  const std::size_t shape[] = {matrix.rows, matrix.cols};
  if (!f64) return npy::save(path, matrix.data, shape);
  std::vector<double> wide(matrix.data.begin(), matrix.data.end());
  return npy::save(path, wide, shape);
}

AlignedMatrix import_npy_matrix(const std::string& path) {
  const auto arr = npy::load(path);
  if (arr.shape.size() != 2) throw ShapeError("expected a 2-D matrix in " + path);
  AlignedMatrix m;
  m.rows = arr.shape[0];
  m.cols = arr.shape[1];
  m.data = arr.as_f32();
  for (std::size_t r = 0; r < m.rows; ++r) m.row_labels.push_back("row" + std::to_string(r));
  return m;
}

}  // namespace sensorpipe
