#pragma once

// Maps a key = value config onto the per-stage parameter structs. Missing
// keys keep the struct defaults. Every key is listed in kKnownKeys so typos
// can be reported.

#include <string>
#include <vector>

#include "sensorpipe/dataset.hpp"
#include "sensorpipe/engine.hpp"
#include "sensorpipe/kvconfig.hpp"
#include "sensorpipe/lstm.hpp"
#include "sensorpipe/schedsim.hpp"
#include "sensorpipe/synthgen.hpp"

namespace sensorpipe {

SessionConfig session_config(const KvConfig& kv);
WindowSpec window_spec(const KvConfig& kv);
ModelConfig model_config(const KvConfig& kv, const WindowSpec& window);
TrainHyper train_hyper(const KvConfig& kv);
// Fraction of pairs (chronological prefix) used for training.
double train_fraction(const KvConfig& kv);
EngineConfig engine_config(const KvConfig& kv, double sample_rate_hz);
SimConfig sim_config(const KvConfig& kv);

const std::vector<std::string>& known_keys();
// Throws ConfigError naming the first unknown key.
void check_known_keys(const KvConfig& kv);

// First `n` pairs of `ds` and the rest, as two datasets.
std::pair<WindowedDataset, WindowedDataset> split_pairs(const WindowedDataset& ds, std::size_t n);

}  // namespace sensorpipe
