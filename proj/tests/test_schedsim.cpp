#include <algorithm>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "sensorpipe/errors.hpp"
#include "sensorpipe/rng.hpp"
#include "sensorpipe/schedsim.hpp"

using namespace sensorpipe;

namespace {

using Ticks = std::vector<std::size_t>;

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SimConfig random_config(rng::SplitMix64& gen) {
  SimConfig c;
  c.ticks_per_block = 1 + gen.below(8);
  c.n_blocks = 1 + gen.below(30);
  c.callback_cost_ticks = 1 + gen.below(c.ticks_per_block);
  c.inference_cost_ticks = gen.below(20);
  c.trigger_every_blocks = 1 + gen.below(4);
  c.inference_on_audio_thread = gen.below(2) == 1;
  return c;
}

}  // namespace

TEST_CASE("default trace reproduces the two-thread chart") {
  const auto t = simulate(SimConfig{});
  CHECK(t.ticks.size() == 32);
  CHECK(t.ticks_where(Occupant::Audio) == Ticks{1, 5, 9, 13, 17, 21, 25, 29});
  CHECK(t.ticks_where(Occupant::Aux) ==
        Ticks{10, 11, 12, 14, 15, 18, 19, 20, 22, 23, 26, 27, 28, 30, 31});
  CHECK(t.sleeping_ticks() == Ticks{13, 21, 29});
  CHECK(t.count(SimEventKind::Underrun) == 0);
  CHECK(t.count(SimEventKind::MissedTrigger) == 0);
  CHECK(t.event_ticks(SimEventKind::Trigger) == Ticks{8, 16, 24, 32});
  CHECK(t.event_ticks(SimEventKind::InferenceDone) == Ticks{15, 23, 31});
}

TEST_CASE("inference on the audio thread underruns every triggered block") {
  SimConfig c;
  c.inference_on_audio_thread = true;
  const auto t = simulate(c);
  CHECK(t.underrun_blocks() == Ticks{2, 4, 6, 8});
  CHECK(t.ticks_where(Occupant::Aux).empty());
}

TEST_CASE("zero inference cost completes at the trigger tick") {
  SimConfig c;
  c.inference_cost_ticks = 0;
  const auto t = simulate(c);
  CHECK(t.sleeping_ticks().empty());
  CHECK(t.ticks_where(Occupant::Aux).empty());
  CHECK(t.event_ticks(SimEventKind::InferenceDone) == t.event_ticks(SimEventKind::Trigger));
}

TEST_CASE("slow inference misses triggers") {
  SimConfig c;
  c.inference_cost_ticks = 9;
  c.n_blocks = 16;
  const auto t = simulate(c);
  CHECK(t.count(SimEventKind::MissedTrigger) > 0);
  CHECK(t.count(SimEventKind::Underrun) == 0);
}

TEST_CASE("gantt output") {
  SimConfig idle;
  idle.n_blocks = 1;
  const auto chart = render_gantt(simulate(idle));
  CHECK(chart.find("aux thread    ....\n") != std::string::npos);
  idle.callback_cost_ticks = 0;
  CHECK_THROWS_AS(idle.validate(), ConfigError);

  const auto golden = read_text(std::string(FIXTURE_DIR) + "/default_gantt.txt");
  REQUIRE_FALSE(golden.empty());
  CHECK(render_gantt(simulate(SimConfig{})) == golden);
}

TEST_CASE("csv round-trip") {
  rng::SplitMix64 gen(5);
  for (int i = 0; i < 200; ++i) {
    const auto t = simulate(random_config(gen));
    CHECK(parse_csv(render_csv(t)) == t);
  }
  CHECK_THROWS_AS(parse_csv("nonsense"), FormatError);
}

TEST_CASE("scheduler properties over random configurations") {
  rng::SplitMix64 gen(77);
  for (int i = 0; i < 2000; ++i) {
    const auto c = random_config(gen);
    const auto t = simulate(c);
    REQUIRE(t.ticks.size() == c.n_blocks * c.ticks_per_block);
    CHECK(simulate(c) == t);

    // Work conservation.
    const std::size_t aux = t.ticks_where(Occupant::Aux).size();
    const std::size_t done = c.inference_on_audio_thread ? 0 : t.count(SimEventKind::InferenceDone);
    CHECK(aux == done * c.inference_cost_ticks + t.unfinished_aux_ticks);

    // Sleeping only while audio holds the CPU.
    for (std::size_t k : t.sleeping_ticks()) CHECK(t.ticks[k - 1].cpu == Occupant::Audio);

    // Audio runs in the first callback_cost ticks of each block off-thread.
    if (!c.inference_on_audio_thread) {
      CHECK(t.count(SimEventKind::Underrun) == 0);
      for (std::size_t b = 0; b < c.n_blocks; ++b)
        for (std::size_t k = 0; k < c.callback_cost_ticks; ++k)
          CHECK(t.ticks[b * c.ticks_per_block + k].cpu == Occupant::Audio);
    } else {
      // Underrun iff the triggered block's demand exceeds the block.
      const bool over = c.callback_cost_ticks + c.inference_cost_ticks > c.ticks_per_block;
      if (!over) CHECK(t.count(SimEventKind::Underrun) == 0);
      const auto under = t.underrun_blocks();
      for (std::size_t b = c.trigger_every_blocks; over && b <= c.n_blocks; b += c.trigger_every_blocks)
        CHECK(std::find(under.begin(), under.end(), b) != under.end());
    }
  }
}

TEST_CASE("sweep") {
  SweepSpec spec;
  spec.inference_cost = SweepRange{1, 4};
  const auto rows = sweep(SimConfig{}, spec);
  REQUIRE(rows.size() == 4);
  for (const auto& r : rows) {
    CHECK(r.underruns == 0);
    CHECK(r.inherent_latency_blocks == 2);
  }

  SweepSpec on;
  on.inference_cost = SweepRange{0, 6};
  on.on_audio_thread = {true};
  for (const auto& r : sweep(SimConfig{}, on)) {
    const bool over = r.config.callback_cost_ticks + r.config.inference_cost_ticks > 4;
    CHECK((r.underruns > 0) == over);
  }

  SweepSpec single;
  single.inference_cost = SweepRange{5, 5};
  const auto one = sweep(SimConfig{}, single);
  REQUIRE(one.size() == 1);
  const auto t = simulate(SimConfig{});
  CHECK(one[0].underruns == t.count(SimEventKind::Underrun));
  CHECK(one[0].max_completion_latency == t.max_completion_latency());

  SweepSpec empty;
  empty.callback_cost = SweepRange{3, 2};
  CHECK_THROWS_AS(sweep(SimConfig{}, empty), ConfigError);
  CHECK(parse_range("2..5").lo == 2);
  CHECK(parse_range("7").hi == 7);
  CHECK_THROWS_AS(parse_range("x"), ConfigError);
  CHECK(render_sweep_csv(rows).find("inherent_latency_blocks") != std::string::npos);
}
