#pragma once

// Native model file (.bsnn):
//   "BSNN" | version u8 = 1 | input_dim u32 | hidden_dim u32 | output_dim u32 |
//   seq_len u32 | input_dim x (mean f32, std f32) | target (mean f32, std f32) |
//   W_ih, W_hh, b, W_out, b_out as little-endian f32, row-major.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sensorpipe/dataset.hpp"
#include "sensorpipe/lstm.hpp"

namespace sensorpipe {

struct ModelFile {
  LstmParams<float> params;
  std::vector<NormStat> input_stats;  // one per input channel
  NormStat target_stats;

  bool bit_equal(const ModelFile& other) const;
};

inline constexpr char kModelMagic[4] = {'B', 'S', 'N', 'N'};
inline constexpr std::uint8_t kModelVersion = 1;

// Norm stats are narrowed to f32 on the way out.
std::vector<std::uint8_t> encode_weights(const ModelFile& model);
std::size_t save_weights(const ModelFile& model, std::ostream& sink);
std::size_t save_weights(const ModelFile& model, const std::string& path);

// Throws FormatError (magic, version, zero or inconsistent dimensions,
// non-finite values) or TruncationError.
ModelFile parse_weights(std::span<const std::uint8_t> data);
ModelFile load_weights(const std::string& path);

}  // namespace sensorpipe
