#include <algorithm>

#include "doctest.h"
#include "oracles.hpp"
#include "sensorpipe/errors.hpp"
#include "sensorpipe/rng.hpp"
#include "sensorpipe/syncer.hpp"
#include "sensorpipe/synthgen.hpp"

using namespace sensorpipe;

namespace {

SensorLog make_log(std::uint16_t id, Role role, std::size_t frames,
                   std::vector<std::uint64_t> pulses, float base = 0.0f) {
  SensorLog log;
  log.header.device_id = id;
  log.header.role = role;
  log.header.sample_rate_hz = 1000.0;
  log.header.channel_labels = {"s"};
  log.header.pulse_period_frames = 1000;
  log.header.session_id = 42;
  std::vector<float> row(frames);
  for (std::size_t f = 0; f < frames; ++f) row[f] = base + static_cast<float>(f);
  log.samples = {row};
  for (std::size_t k = 0; k < pulses.size(); ++k) log.sync_events.push_back({k, pulses[k]});
  return log;
}

SessionConfig noise_session(std::uint64_t seed, std::size_t devices, std::uint64_t jitter) {
  rng::SplitMix64 gen(seed);
  SessionConfig c;
  c.n_devices = devices;
  c.channels_per_device = 1;
  c.n_frames = 6000;
  c.pulse_period_frames = 500;
  c.pulse_jitter_frames = jitter;
  c.signals = {SignalSpec::white_noise(1.0)};
  c.seed = seed;
  c.start_offset_frames = {0};
  c.drift_ppm = {0.0};
  for (std::size_t d = 1; d < devices; ++d) {
    c.start_offset_frames.push_back(static_cast<std::int64_t>(jitter + gen.below(1001 - jitter)));
    c.drift_ppm.push_back(0.0);
  }
  return c;
}

}  // namespace

TEST_CASE("single TX log converts as-is") {
  const std::vector<SensorLog> logs = {make_log(0, Role::TX, 100, {0, 50})};
  const auto sol = estimate_offsets(logs);
  CHECK(sol.devices.size() == 1);
  CHECK(sol.devices[0].offsets.empty());
  CHECK(sol.overlap_start == 0);
  CHECK(sol.overlap_end == 100);
  const auto m = align(logs, sol);
  CHECK(m.rows == 1);
  CHECK(m.cols == 100);
  CHECK(std::equal(m.data.begin(), m.data.end(), logs[0].samples[0].begin()));
  CHECK(m.row_labels == std::vector<std::string>{"0:s"});
}

TEST_CASE("constant offset: per-pulse subtraction") {
  const std::vector<SensorLog> logs = {make_log(0, Role::TX, 3000, {0, 1000, 2000}),
                                       make_log(1, Role::RX, 3000, {50, 1050, 2050})};
  const auto sol = estimate_offsets(logs);
  const std::vector<SegmentOffset> expect = {{0, 50}, {1, 50}, {2, 50}};
  CHECK(sol.devices[1].offsets == expect);
  CHECK(sol.devices[1].max_offset_step == 0);
  // RX frame 50 is TX frame 0; RX ends at TX frame 2949.
  CHECK(sol.overlap_start == 0);
  CHECK(sol.overlap_end == 2950);
  const auto m = align(logs, sol);
  for (std::size_t c = 0; c < m.cols; ++c) {
    CHECK(m.at(0, c) == static_cast<float>(c));
    CHECK(m.at(1, c) == static_cast<float>(c + 50));
  }
}

TEST_CASE("RX starting before TX frame 0 is trimmed") {
  // RX pulse at frame 10 while TX pulse is at 30: RX frames 0..9 map before
  // TX frame 20 and RX frame 0 maps to TX frame 20.
  const std::vector<SensorLog> logs = {make_log(0, Role::TX, 200, {30}),
                                       make_log(1, Role::RX, 200, {10}, 1000.0f)};
  const auto sol = estimate_offsets(logs);
  CHECK(sol.devices[1].offsets.front().offset_frames == -20);
  CHECK(sol.overlap_start == 20);
  CHECK(sol.overlap_end == 200);
  const auto m = align(logs, sol);
  CHECK(m.first_frame == 20);
  CHECK(m.at(0, 0) == 20.0f);
  CHECK(m.at(1, 0) == 1000.0f);
}

TEST_CASE("error contract") {
  SUBCASE("pulse mismatch") {
    const std::vector<SensorLog> logs = {make_log(0, Role::TX, 3000, {0, 1000}),
                                         make_log(1, Role::RX, 3000, {50})};
    try {
      estimate_offsets(logs);
      FAIL("expected PulseMismatchError");
    } catch (const PulseMismatchError& e) {
      CHECK(e.tx_count() == 2);
      CHECK(e.rx_count() == 1);
    }
  }
  SUBCASE("no TX") {
    const std::vector<SensorLog> logs = {make_log(0, Role::RX, 10, {0})};
    CHECK_THROWS_AS(estimate_offsets(logs), TopologyError);
  }
  SUBCASE("two TX") {
    const std::vector<SensorLog> logs = {make_log(0, Role::TX, 10, {0}),
                                         make_log(1, Role::TX, 10, {0})};
    CHECK_THROWS_AS(estimate_offsets(logs), TopologyError);
  }
  SUBCASE("no overlap") {
    // A shared pulse instant always overlaps, so only an empty log can fail.
    const std::vector<SensorLog> logs = {make_log(0, Role::TX, 100, {}),
                                         make_log(1, Role::RX, 0, {})};
    CHECK_THROWS_AS(estimate_offsets(logs), NoOverlapError);
  }
  SUBCASE("mixed sessions") {
    auto rx = make_log(1, Role::RX, 100, {0});
    rx.header.session_id = 7;
    const std::vector<SensorLog> logs = {make_log(0, Role::TX, 100, {0}), rx};
    CHECK_THROWS_AS(estimate_offsets(logs), ValidationError);
  }
  SUBCASE("solution from other logs") {
    const std::vector<SensorLog> a = {make_log(0, Role::TX, 3000, {0, 1000}),
                                      make_log(1, Role::RX, 3000, {500, 1500})};
    const std::vector<SensorLog> b = {make_log(0, Role::TX, 3000, {0, 1000}),
                                      make_log(1, Role::RX, 600, {0, 100})};
    CHECK_THROWS_AS(align(b, estimate_offsets(a)), InternalError);
  }
}

TEST_CASE("changing offsets: later segment wins, gaps repeat and are counted") {
  SUBCASE("growing offset duplicates columns; later segment overwrites") {
    // o_0 = 10, o_1 = 12: segment 0 maps RX 1010,1011 to TX 1000,1001, which
    // segment 1 (RX 1012,1013) overwrites.
    const std::vector<SensorLog> logs = {make_log(0, Role::TX, 2000, {0, 1000}),
                                         make_log(1, Role::RX, 2000, {10, 1012})};
    const auto sol = estimate_offsets(logs);
    CHECK(sol.devices[1].max_offset_step == 2);
    const auto src = source_frames(logs[1], sol.devices[1], sol);
    CHECK(src.gap_count == 0);
    CHECK(src.frames[998] == 1008);
    CHECK(src.frames[999] == 1009);
    CHECK(src.frames[1000] == 1012);
    CHECK(src.frames[1001] == 1013);
  }
  SUBCASE("shrinking offset leaves a gap filled by the previous sample") {
    // o_0 = 12, o_1 = 10: TX frames 998,999 receive no RX sample.
    const std::vector<SensorLog> logs = {make_log(0, Role::TX, 2000, {0, 1000}),
                                         make_log(1, Role::RX, 2000, {12, 1010})};
    const auto sol = estimate_offsets(logs);
    const auto m = align(logs, sol);
    CHECK(m.gap_fills[0] == 0);
    CHECK(m.gap_fills[1] == 2);
    const auto c = static_cast<std::size_t>(997 - m.first_frame);
    CHECK(m.at(1, c) == 1009.0f);
    CHECK(m.at(1, c + 1) == 1009.0f);
    CHECK(m.at(1, c + 2) == 1009.0f);
    CHECK(m.at(1, c + 3) == 1010.0f);
  }
}

TEST_CASE("zero jitter, constant offsets: exact ground-truth alignment") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto cfg = noise_session(seed, 2 + seed % 3, 0);
    const auto session = generate_session(cfg);
    const auto m = align(session.logs, estimate_offsets(session.logs));
    CHECK(oracle::max_alignment_error(cfg, session, m) == 0);
  }
}

TEST_CASE("alignment error is bounded by the jitter") {
  for (std::uint64_t seed = 100; seed < 130; ++seed) {
    const std::uint64_t jitter = 1 + seed % 2;
    const auto cfg = noise_session(seed, 2 + seed % 3, jitter);
    const auto session = generate_session(cfg);
    const auto m = align(session.logs, estimate_offsets(session.logs));
    CHECK(oracle::max_alignment_error(cfg, session, m) <= static_cast<std::int64_t>(jitter));
  }
}

TEST_CASE("100 ppm drift over 10 segments stays within one sample") {
  SessionConfig c;
  c.n_devices = 2;
  c.channels_per_device = 1;
  c.n_frames = 10500;
  c.pulse_period_frames = 1000;
  c.n_pulses = 10;
  c.start_offset_frames = {0, 300};
  c.drift_ppm = {0.0, 100.0};
  c.signals = {SignalSpec::white_noise(1.0)};
  c.seed = 11;
  const auto session = generate_session(c);
  const auto sol = estimate_offsets(session.logs);
  CHECK(sol.devices[1].offsets.size() == 10);
  const auto m = align(session.logs, sol);
  CHECK(oracle::max_alignment_error(c, session, m) <= 1);
}

TEST_CASE("zero-offset identity on the overlap") {
  const std::vector<SensorLog> logs = {make_log(0, Role::TX, 500, {0, 100, 200}),
                                       make_log(1, Role::RX, 500, {0, 100, 200}, 7.0f)};
  const auto m = align(logs, estimate_offsets(logs));
  CHECK(m.cols == 500);
  for (std::size_t c = 0; c < m.cols; ++c) CHECK(m.at(1, c) == logs[1].samples[0][c]);
}

TEST_CASE("device order only permutes rows") {
  auto cfg = noise_session(5, 3, 1);
  cfg.drift_ppm = {0.0, 50.0, -80.0};
  const auto session = generate_session(cfg);
  const auto forward = align(session.logs, estimate_offsets(session.logs));
  const std::vector<SensorLog> shuffled = {session.logs[2], session.logs[0], session.logs[1]};
  const auto permuted = align(shuffled, estimate_offsets(shuffled));
  REQUIRE(permuted.cols == forward.cols);
  const std::size_t map[] = {2, 0, 1};
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(permuted.row_labels[r] == forward.row_labels[map[r]]);
    const auto a = permuted.row(r);
    const auto b = forward.row(map[r]);
    CHECK(std::equal(a.begin(), a.end(), b.begin()));
  }
}

TEST_CASE("sources never move backwards in local time") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    auto cfg = noise_session(seed, 3, 2);
    cfg.drift_ppm = {0.0, 300.0 * static_cast<double>(seed % 3), -200.0};
    const auto session = generate_session(cfg);
    const auto sol = estimate_offsets(session.logs);
    for (std::size_t d = 0; d < session.logs.size(); ++d) {
      const auto src = source_frames(session.logs[d], sol.devices[d], sol);
      for (std::size_t c = 1; c < src.frames.size(); ++c) {
        if (src.gap_filled[c]) {
          CHECK(src.frames[c] == src.frames[c - 1]);
        } else {
          CHECK(src.frames[c] > src.frames[c - 1]);
        }
      }
    }
  }
}
