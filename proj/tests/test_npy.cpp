#include <cstring>
#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "sensorpipe/dataset.hpp"
#include "sensorpipe/errors.hpp"
#include "sensorpipe/npy.hpp"
#include "sensorpipe/rng.hpp"

using namespace sensorpipe;

TEST_CASE("2x3 zeros: magic, version and shape") {
  const std::vector<float> zeros(6, 0.0f);
  const std::size_t shape[] = {2, 3};
  const auto bytes = npy::encode(zeros, shape);
  const std::uint8_t prefix[] = {0x93, 'N', 'U', 'M', 'P', 'Y', 0x01, 0x00};
  CHECK(std::memcmp(bytes.data(), prefix, 8) == 0);
  // 10-byte preamble + 60-byte dict + newline rounds up to 128.
  REQUIRE(bytes.size() == 128 + 24);
  CHECK(bytes[8] == 118);
  CHECK(bytes[9] == 0);
  const std::string header(bytes.begin() + 10, bytes.begin() + 128);
  CHECK(header.rfind("{'descr': '<f4', 'fortran_order': False, 'shape': (2, 3), }", 0) == 0);
  CHECK(header.back() == '\n');
}

TEST_CASE("headers are 64-byte aligned for any rank") {
  for (std::size_t rank = 1; rank <= 4; ++rank) {
    std::vector<std::size_t> shape(rank, 123456789);
    const auto h = npy::encode_header(npy::Dtype::F64, shape);
    CHECK(h.size() % 64 == 0);
    CHECK(h.back() == '\n');
  }
  const std::size_t one[] = {5};
  const auto h = npy::encode_header(npy::Dtype::F32, one);
  CHECK(std::string(h.begin() + 10, h.end()).find("'shape': (5,)") != std::string::npos);
}

TEST_CASE("reference reader sees exactly what was written") {
  rng::SplitMix64 gen(17);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t r = 1 + gen.below(7), c = 1 + gen.below(9);
    std::vector<float> f32(r * c);
    std::vector<double> f64(r * c);
    for (std::size_t i = 0; i < f32.size(); ++i) {
      f64[i] = gen.uniform(-1e6, 1e6);
      f32[i] = static_cast<float>(f64[i]);
    }
    const std::size_t shape[] = {r, c};
    const auto a = oracle::read_npy(npy::encode(f32, shape));
    CHECK(a.descr == "<f4");
    CHECK(a.shape == std::vector<std::size_t>{r, c});
    for (std::size_t i = 0; i < f32.size(); ++i) CHECK(a.values[i] == f32[i]);
    const auto b = oracle::read_npy(npy::encode(f64, shape));
    CHECK(b.descr == "<f8");
    for (std::size_t i = 0; i < f64.size(); ++i) CHECK(b.values[i] == f64[i]);

    const auto back = npy::parse(npy::encode(f64, shape));
    CHECK(back.as_f64() == f64);
  }
}

TEST_CASE("parse rejects malformed files") {
  const std::vector<float> v(4, 1.0f);
  const std::size_t shape[] = {2, 2};
  auto bytes = npy::encode(v, shape);
  SUBCASE("magic") {
    bytes[1] = 'X';
    CHECK_THROWS_AS(npy::parse(bytes), FormatError);
  }
  SUBCASE("truncated") {
    bytes.pop_back();
    CHECK_THROWS_AS(npy::parse(bytes), TruncationError);
  }
  SUBCASE("fortran order") {
    const std::string h(bytes.begin(), bytes.end());
    auto pos = h.find("False");
    std::memcpy(bytes.data() + pos, "True ", 5);
    CHECK_THROWS_AS(npy::parse(bytes), FormatError);
  }
  SUBCASE("shape mismatch on write") {
    const std::size_t wrong[] = {3, 2};
    CHECK_THROWS_AS(npy::encode(v, wrong), ShapeError);
  }
}

TEST_CASE("matrix export and import") {
  AlignedMatrix m;
  m.rows = 2;
  m.cols = 3;
  m.data = {1, 2, 3, 4, 5, 6};
  const auto path = (std::filesystem::temp_directory_path() / "sensorpipe_matrix.npy").string();
  CHECK(export_npy(m, path) == 128 + 24);
  const auto back = import_npy_matrix(path);
  CHECK(back.rows == 2);
  CHECK(back.cols == 3);
  CHECK(back.data == m.data);
  CHECK(export_npy(m, path, true) == 128 + 48);
  CHECK(import_npy_matrix(path).data == m.data);
  std::filesystem::remove(path);
}
