#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace sensorpipe {

// Root of every data/validation failure raised by the library. The CLI maps
// anything derived from this to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class TruncationError : public Error {
 public:
  TruncationError(std::size_t expected, std::size_t actual)
      : Error("truncated input: expected " + std::to_string(expected) +
              " bytes, got " + std::to_string(actual)),
        expected_(expected),
        actual_(actual) {}

  std::size_t expected() const noexcept { return expected_; }
  std::size_t actual() const noexcept { return actual_; }

 private:
  std::size_t expected_;
  std::size_t actual_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  IoError(const std::string& what, std::size_t bytes_written)
      : Error(what), bytes_written_(bytes_written) {}

  std::size_t bytes_written() const noexcept { return bytes_written_; }

 private:
  std::size_t bytes_written_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class TopologyError : public Error {
 public:
  using Error::Error;
};

class PulseMismatchError : public Error {
 public:
  PulseMismatchError(std::size_t tx_count, std::uint16_t device_id, std::size_t rx_count)
      : Error("pulse count mismatch: TX has " + std::to_string(tx_count) + ", device " +
              std::to_string(device_id) + " has " + std::to_string(rx_count)),
        tx_count_(tx_count),
        rx_count_(rx_count) {}

  std::size_t tx_count() const noexcept { return tx_count_; }
  std::size_t rx_count() const noexcept { return rx_count_; }

 private:
  std::size_t tx_count_;
  std::size_t rx_count_;
};

class NoOverlapError : public Error {
 public:
  using Error::Error;
};

class InternalError : public Error {
 public:
  using Error::Error;
};

class EmptyDatasetError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  explicit DivergenceError(std::size_t epoch)
      : Error("training diverged (non-finite loss) at epoch " + std::to_string(epoch)),
        epoch_(epoch) {}

  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

}  // namespace sensorpipe
