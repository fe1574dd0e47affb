#include "sensorpipe/weights.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <ostream>

#include "sensorpipe/bytes.hpp"
#include "sensorpipe/errors.hpp"

namespace sensorpipe {

namespace {

bool same_bits(const std::vector<float>& a, const std::vector<float>& b) {
  return a.size() == b.size() &&
         (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
}

bool same_stat(const NormStat& a, const NormStat& b) {
  return std::memcmp(&a.mean, &b.mean, sizeof(double)) == 0 &&
         std::memcmp(&a.std, &b.std, sizeof(double)) == 0;
}

}  // namespace

bool ModelFile::bit_equal(const ModelFile& other) const {
  if (!(params.config == other.params.config)) return false;
  const auto a = params.tensors();
  const auto b = other.params.tensors();
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!same_bits(*a[i], *b[i])) return false;
  if (input_stats.size() != other.input_stats.size()) return false;
  for (std::size_t i = 0; i < input_stats.size(); ++i)
    if (!same_stat(input_stats[i], other.input_stats[i])) return false;
  return same_stat(target_stats, other.target_stats);
}

std::vector<std::uint8_t> encode_weights(const ModelFile& model) {
  const auto& cfg = model.params.config;
  cfg.validate();
  if (!model.params.shapes_match()) throw ShapeError("parameter tensors do not match config");
  if (model.input_stats.size() != cfg.input_dim)
    throw ShapeError("need one normalization stat per input channel");
  constexpr auto u32max = std::numeric_limits<std::uint32_t>::max();
  if (cfg.input_dim > u32max || cfg.hidden_dim > u32max || cfg.output_dim > u32max ||
      cfg.seq_len > u32max)
    throw ShapeError("model dimension exceeds 32 bits");

  bytes::Writer w;
  w.put_bytes(std::string_view(kModelMagic, 4));
  w.put<std::uint8_t>(kModelVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cfg.input_dim));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cfg.hidden_dim));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cfg.output_dim));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cfg.seq_len));
  for (const auto& s : model.input_stats) {
    w.put<float>(static_cast<float>(s.mean));
    w.put<float>(static_cast<float>(s.std));
  }
  w.put<float>(static_cast<float>(model.target_stats.mean));
  w.put<float>(static_cast<float>(model.target_stats.std));
  for (const auto* tensor : model.params.tensors())
    for (float v : *tensor) w.put<float>(v);
  return w.take();
}

std::size_t save_weights(const ModelFile& model, std::ostream& sink) {
  const auto buf = encode_weights(model);
  sink.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  sink.flush();
  if (!sink) throw IoError("weight file write failed", 0);
  return buf.size();
}

std::size_t save_weights(const ModelFile& model, const std::string& path) {
  return bytes::write_file(path, encode_weights(model));
}

ModelFile parse_weights(std::span<const std::uint8_t> data) {
  if (data.size() < 4 || std::memcmp(data.data(), kModelMagic, 4) != 0)
    throw FormatError("bad magic: not a .bsnn file");
  bytes::Reader r(data);
  r.get_string(4);
  const auto version = r.get<std::uint8_t>();
  if (version != kModelVersion)
    throw FormatError("unsupported .bsnn version " + std::to_string(version));

  ModelConfig cfg;
  cfg.input_dim = r.get<std::uint32_t>();
  cfg.hidden_dim = r.get<std::uint32_t>();
  cfg.output_dim = r.get<std::uint32_t>();
  cfg.seq_len = r.get<std::uint32_t>();
  if (cfg.input_dim == 0 || cfg.hidden_dim == 0 || cfg.output_dim == 0 || cfg.seq_len == 0)
    throw FormatError("model dimensions must be positive");

  // Validate the declared size against the input before allocating tensors.
  const unsigned __int128 h = cfg.hidden_dim;
  const unsigned __int128 floats = 2 * (static_cast<unsigned __int128>(cfg.input_dim) + 1) +
                                   4 * h * (cfg.input_dim + h + 1) +
                                   static_cast<unsigned __int128>(cfg.output_dim) * (h + 1);
  const unsigned __int128 need = floats * 4;
  if (need > r.remaining()) {
    const unsigned __int128 expected = need + r.position();
    throw TruncationError(expected > std::numeric_limits<std::size_t>::max()
                              ? std::numeric_limits<std::size_t>::max()
                              : static_cast<std::size_t>(expected),
                          data.size());
  }
  if (need < r.remaining()) throw FormatError("trailing bytes after weight tensors");

  auto finite = [](float v) {
    if (!std::isfinite(v)) throw FormatError("non-finite value in weight file");
    return v;
  };
  ModelFile model;
  model.input_stats.resize(cfg.input_dim);
  for (auto& s : model.input_stats) {
    s.mean = finite(r.get<float>());
    s.std = finite(r.get<float>());
  }
  model.target_stats.mean = finite(r.get<float>());
  model.target_stats.std = finite(r.get<float>());
  for (const auto& s : model.input_stats)
    if (s.std <= 0) throw FormatError("normalization std must be positive");
  if (model.target_stats.std <= 0) throw FormatError("normalization std must be positive");
  model.params = LstmParams<float>::zeros(cfg);
  for (auto* tensor : model.params.tensors())
    for (auto& v : *tensor) v = finite(r.get<float>());
  return model;
}

ModelFile load_weights(const std::string& path) { return parse_weights(bytes::read_file(path)); }

}  // namespace sensorpipe
