// Linked with alloc_hook.cpp: every operator new in the process is counted.

#include <thread>

#include "alloc_hook.hpp"
#include "doctest.h"
#include "sensorpipe/engine.hpp"
#include "sensorpipe/lstm.hpp"

using namespace sensorpipe;

namespace {

std::unique_ptr<Predictor> lstm_predictor() {
  ModelFile m;
  m.params = init_params(ModelConfig{}, 1).cast<float>();
  m.input_stats = {{0.1, 2.0}, {-0.3, 0.5}};
  m.target_stats = {0.2, 1.5};
  return std::make_unique<LstmPredictor>(std::move(m));
}

}  // namespace

TEST_CASE("counter sees ordinary allocations") {
  const auto before = alloc_hook::count();
  auto p = std::make_unique<int>(3);
  CHECK(alloc_hook::count() == before + 1);
}

TEST_CASE("render and inference allocate nothing after setup") {
  Engine engine(EngineConfig{}, lstm_predictor());
  std::vector<float> in(32), out(16);
  const auto before = alloc_hook::count();
  for (int b = 0; b < 10000; ++b) {
    for (std::size_t i = 0; i < in.size(); ++i) in[i] = static_cast<float>((b + i) % 7) * 0.1f;
    engine.render(in, out);
    engine.run_pending();
  }
  const auto after = alloc_hook::count();
  CHECK(after - before == 0);
  CHECK(engine.stats().inferences_completed == 5000);
}

TEST_CASE("render allocates nothing with a live worker") {
  Engine engine(EngineConfig{}, lstm_predictor());
  engine.start_worker();
  std::vector<float> in(32, 0.25f), out(16);
  std::this_thread::sleep_for(std::chrono::milliseconds(10));
  const auto before = alloc_hook::count();
  for (int b = 0; b < 10000; ++b) engine.render(in, out);
  while (!engine.worker_idle()) std::this_thread::yield();
  const auto after = alloc_hook::count();
  engine.shutdown();
  CHECK(after - before == 0);
  CHECK(engine.stats().inferences_completed > 0);
}
