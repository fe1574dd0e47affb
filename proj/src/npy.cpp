#include "sensorpipe/npy.hpp"

#include <cstring>
#include <fstream>
#include <limits>
#include <ostream>
#include <regex>

#include "sensorpipe/bytes.hpp"
#include "sensorpipe/errors.hpp"

namespace sensorpipe::npy {

namespace {

constexpr char kMagic[] = "\x93NUMPY";
constexpr std::size_t kPreamble = 10;  // magic(6) + version(2) + header_len(2)

std::size_t element_size(Dtype d) { return d == Dtype::F32 ? 4 : 8; }

std::string shape_text(std::span<const std::size_t> shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) s += ", ";
    s += std::to_string(shape[i]);
  }
  if (shape.size() == 1) s += ",";
  s += ")";
  return s;
}

std::size_t product(std::span<const std::size_t> shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

template <typename T>
std::vector<std::uint8_t> encode_impl(std::span<const T> data, std::span<const std::size_t> shape) {
  if (product(shape) != data.size())
    throw ShapeError("npy: shape holds " + std::to_string(product(shape)) + " elements but " +
                     std::to_string(data.size()) + " were given");
  auto out = encode_header(sizeof(T) == 4 ? Dtype::F32 : Dtype::F64, shape);
  bytes::Writer w;
  for (T v : data) w.put<T>(v);
  const auto& payload = w.data();
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

std::size_t write_bytes(std::ostream& sink, const std::vector<std::uint8_t>& buf) {
  sink.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  sink.flush();
  if (!sink) throw IoError("npy: write failed", 0);
  return buf.size();
}

}  // namespace

std::size_t Array::element_count() const { return product(shape); }

std::vector<float> Array::as_f32() const {
  std::vector<float> out(element_count());
  bytes::Reader r(raw);
  if (dtype == Dtype::F32) {
    for (auto& v : out) v = r.get<float>();
  } else {
    for (auto& v : out) v = static_cast<float>(r.get<double>());
  }
  return out;
}

std::vector<double> Array::as_f64() const {
  std::vector<double> out(element_count());
  bytes::Reader r(raw);
  if (dtype == Dtype::F32) {
    for (auto& v : out) v = r.get<float>();
  } else {
    for (auto& v : out) v = r.get<double>();
  }
  return out;
}

std::vector<std::uint8_t> encode_header(Dtype dtype, std::span<const std::size_t> shape) {
  std::string dict = "{'descr': '";
  dict += dtype == Dtype::F32 ? "<f4" : "<f8";
  dict += "', 'fortran_order': False, 'shape': " + shape_text(shape) + ", }";
  // Pad with spaces so preamble + dict + '\n' lands on a 64-byte boundary.
  const std::size_t unpadded = kPreamble + dict.size() + 1;
  const std::size_t padded = (unpadded + 63) / 64 * 64;
  dict.append(padded - unpadded, ' ');
  dict += '\n';
  if (dict.size() > std::numeric_limits<std::uint16_t>::max())
    throw ShapeError("npy: header too long for format version 1.0");

  bytes::Writer w;
  w.put_bytes(std::string_view(kMagic, 6));
  w.put<std::uint8_t>(1);
  w.put<std::uint8_t>(0);
  w.put<std::uint16_t>(static_cast<std::uint16_t>(dict.size()));
  w.put_bytes(dict);
  return w.take();
}

std::vector<std::uint8_t> encode(std::span<const float> data, std::span<const std::size_t> shape) {
  return encode_impl(data, shape);
}

std::vector<std::uint8_t> encode(std::span<const double> data, std::span<const std::size_t> shape) {
  return encode_impl(data, shape);
}

std::size_t write(std::ostream& sink, std::span<const float> data,
                  std::span<const std::size_t> shape) {
  return write_bytes(sink, encode(data, shape));
}

std::size_t write(std::ostream& sink, std::span<const double> data,
                  std::span<const std::size_t> shape) {
  return write_bytes(sink, encode(data, shape));
}

std::size_t save(const std::string& path, std::span<const float> data,
                 std::span<const std::size_t> shape) {
  return bytes::write_file(path, encode(data, shape));
}

std::size_t save(const std::string& path, std::span<const double> data,
                 std::span<const std::size_t> shape) {
  return bytes::write_file(path, encode(data, shape));
}

Array parse(std::span<const std::uint8_t> data) {
  if (data.size() < 6 || std::memcmp(data.data(), kMagic, 6) != 0)
    throw FormatError("npy: bad magic");
  bytes::Reader r(data);
  r.get_string(6);
  const auto major = r.get<std::uint8_t>();
  const auto minor = r.get<std::uint8_t>();
  if (major != 1 || minor != 0)
    throw FormatError("npy: unsupported version " + std::to_string(major) + "." +
                      std::to_string(minor));
  const auto header_len = r.get<std::uint16_t>();
  const std::string header = r.get_string(header_len);

  static const std::regex pattern(
      R"(^\{'descr': '(<f4|<f8)', 'fortran_order': False, 'shape': \(([0-9, ]*)\), \} *\n$)");
  std::smatch match;
  if (!std::regex_match(header, match, pattern))
    throw FormatError("npy: unsupported header '" + header + "'");

  Array a;
  a.dtype = match[1] == "<f4" ? Dtype::F32 : Dtype::F64;
  static const std::regex dim(R"([0-9]+)");
  const std::string dims = match[2];
  unsigned __int128 count = 1;
  for (auto it = std::sregex_iterator(dims.begin(), dims.end(), dim); it != std::sregex_iterator();
       ++it) {
    const auto v = std::stoull(it->str());
    a.shape.push_back(static_cast<std::size_t>(v));
    count *= v;
    if (count > std::numeric_limits<std::size_t>::max()) throw FormatError("npy: shape overflow");
  }
  const unsigned __int128 need = count * element_size(a.dtype);
  if (need > r.remaining())
    throw TruncationError(r.position() + static_cast<std::size_t>(std::min<unsigned __int128>(
                                             need, std::numeric_limits<std::size_t>::max() / 2)),
                          data.size());
  if (need < r.remaining()) throw FormatError("npy: trailing bytes after payload");
  a.raw.assign(data.begin() + static_cast<std::ptrdiff_t>(r.position()), data.end());
  return a;
}

Array load(const std::string& path) { return parse(bytes::read_file(path)); }

}  // namespace sensorpipe::npy
