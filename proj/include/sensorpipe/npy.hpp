#pragma once

// NPY v1.0 reader/writer for little-endian float arrays in C order.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace sensorpipe::npy {

enum class Dtype { F32, F64 };

struct Array {
  std::vector<std::size_t> shape;
  Dtype dtype = Dtype::F32;
  // Payload as stored in the file (little-endian, C order).
  std::vector<std::uint8_t> raw;

  std::size_t element_count() const;
  std::vector<float> as_f32() const;
  std::vector<double> as_f64() const;
};

// Header bytes (magic through the terminating newline) for the given array;
// the total length is a multiple of 64.
std::vector<std::uint8_t> encode_header(Dtype dtype, std::span<const std::size_t> shape);

std::vector<std::uint8_t> encode(std::span<const float> data, std::span<const std::size_t> shape);
std::vector<std::uint8_t> encode(std::span<const double> data, std::span<const std::size_t> shape);

// Writes to `sink`; returns bytes written, IoError on failure.
std::size_t write(std::ostream& sink, std::span<const float> data,
                  std::span<const std::size_t> shape);
std::size_t write(std::ostream& sink, std::span<const double> data,
                  std::span<const std::size_t> shape);
std::size_t save(const std::string& path, std::span<const float> data,
                 std::span<const std::size_t> shape);
std::size_t save(const std::string& path, std::span<const double> data,
                 std::span<const std::size_t> shape);

// Accepts only what `encode` produces: '<f4' / '<f8', fortran_order False.
// Throws FormatError or TruncationError.
Array parse(std::span<const std::uint8_t> bytes);
Array load(const std::string& path);

}  // namespace sensorpipe::npy
