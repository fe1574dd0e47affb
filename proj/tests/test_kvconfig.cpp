#include "doctest.h"
#include "sensorpipe/errors.hpp"
#include "sensorpipe/kvconfig.hpp"

using namespace sensorpipe;

TEST_CASE("kv config parsing and overrides") {
  auto c = KvConfig::parse("# comment\nseed = 7\nname=pendulum  # trailing\nrates = 1.5, 2\n"
                           "flag = true\noffsets = 0,-50\n\n");
  CHECK(c.get_int("seed", 0) == 7);
  CHECK(c.get_string("name", "") == "pendulum");
  CHECK(c.get_double_list("rates", {}) == std::vector<double>{1.5, 2.0});
  CHECK(c.get_int_list("offsets", {}) == std::vector<std::int64_t>{0, -50});
  CHECK(c.get_bool("flag", false));
  CHECK(c.get_uint("missing", 9) == 9);
  c.set("seed", "8");
  CHECK(c.get_int("seed", 0) == 8);
  CHECK_THROWS_AS(c.get_int("name", 0), ConfigError);
  CHECK_THROWS_AS(c.get_uint("offsets", 0), ConfigError);
  CHECK_THROWS_AS(KvConfig::parse("no equals sign"), ConfigError);
  CHECK(KvConfig::parse(c.serialize()).values() == c.values());
}
