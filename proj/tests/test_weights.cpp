#include <cmath>
#include <cstring>
#include <filesystem>

#include "doctest.h"
#include "sensorpipe/errors.hpp"
#include "sensorpipe/weights.hpp"

using namespace sensorpipe;

namespace {

ModelFile sample_model() {
  ModelFile m;
  m.params = init_params(ModelConfig{}, 77).cast<float>();
  m.input_stats = {{0.5, 2.0}, {-1.25, 0.125}};
  m.target_stats = {3.0, 4.5};
  return m;
}

}  // namespace

TEST_CASE("weights round-trip bit-exactly") {
  const auto m = sample_model();
  const auto bytes = encode_weights(m);
  CHECK(bytes.size() == 4 + 1 + 16 + 8 * 3 + 4 * 2848);
  const auto back = parse_weights(bytes);
  CHECK(back.bit_equal(m));
  CHECK(back.params.config == m.params.config);

  const auto path = (std::filesystem::temp_directory_path() / "sensorpipe_w.bsnn").string();
  CHECK(save_weights(m, path) == bytes.size());
  CHECK(load_weights(path).bit_equal(m));
  std::filesystem::remove(path);
}

TEST_CASE("weight file errors") {
  auto bytes = encode_weights(sample_model());
  SUBCASE("magic") {
    bytes[0] = 'X';
    CHECK_THROWS_AS(parse_weights(bytes), FormatError);
  }
  SUBCASE("version") {
    bytes[4] = 2;
    CHECK_THROWS_AS(parse_weights(bytes), FormatError);
  }
  SUBCASE("zero hidden dim") {
    std::memset(bytes.data() + 9, 0, 4);
    CHECK_THROWS_AS(parse_weights(bytes), FormatError);
  }
  SUBCASE("huge hidden dim") {
    std::memset(bytes.data() + 9, 0xff, 4);
    CHECK_THROWS_AS(parse_weights(bytes), TruncationError);
  }
  SUBCASE("truncated") {
    bytes.resize(bytes.size() - 3);
    CHECK_THROWS_AS(parse_weights(bytes), TruncationError);
  }
  SUBCASE("trailing") {
    bytes.push_back(0);
    CHECK_THROWS_AS(parse_weights(bytes), FormatError);
  }
  SUBCASE("nan weight") {
    const float nan = std::nanf("");
    std::memcpy(bytes.data() + bytes.size() - 4, &nan, 4);
    CHECK_THROWS_AS(parse_weights(bytes), FormatError);
  }
  SUBCASE("non-positive std") {
    const float zero = 0.0f;
    std::memcpy(bytes.data() + 21 + 4, &zero, 4);
    CHECK_THROWS_AS(parse_weights(bytes), FormatError);
  }
}
