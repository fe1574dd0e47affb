#include "sensorpipe/stage_config.hpp"

#include <algorithm>

#include "sensorpipe/errors.hpp"

namespace sensorpipe {

namespace {

std::vector<std::size_t> to_indices(const std::vector<std::int64_t>& v, const char* key) {
  std::vector<std::size_t> out;
  for (auto x : v) {
    if (x < 0) throw ConfigError(std::string(key) + " entries must be non-negative");
    out.push_back(static_cast<std::size_t>(x));
  }
  return out;
}

}  // namespace

SessionConfig session_config(const KvConfig& kv) {
  SessionConfig c;
  c.n_devices = kv.get_uint("devices", c.n_devices);
  c.channels_per_device = kv.get_uint("channels_per_device", c.channels_per_device);
  c.n_frames = kv.get_uint("frames", c.n_frames);
  c.sample_rate_hz = kv.get_double("sample_rate_hz", c.sample_rate_hz);
  c.pulse_period_frames = kv.get_uint("pulse_period", c.pulse_period_frames);
  c.n_pulses = kv.get_uint("pulses", c.n_pulses);
  c.start_offset_frames = kv.get_int_list("offsets", std::vector<std::int64_t>(c.n_devices, 0));
  c.drift_ppm = kv.get_double_list("drift_ppm", std::vector<double>(c.n_devices, 0.0));
  c.pulse_jitter_frames = kv.get_uint("jitter", c.pulse_jitter_frames);
  const auto specs = kv.get_string_list(
      "signals", std::vector<std::string>(c.channels_per_device, "damped_sine:5:0.5"));
  for (const auto& s : specs) c.signals.push_back(parse_signal_spec(s));
  c.seed = kv.get_uint("seed", c.seed);
  c.session_id = kv.get_uint("session_id", c.session_id);
  c.validate();
  return c;
}

WindowSpec window_spec(const KvConfig& kv) {
  WindowSpec w;
  w.input_len = kv.get_uint("input_len", w.input_len);
  w.output_len = kv.get_uint("output_len", w.output_len);
  w.hop = kv.get_uint("hop", w.hop);
  w.input_channels = to_indices(kv.get_int_list("input_channels", {0, 1}), "input_channels");
  w.target_channel = kv.get_uint("target_channel", w.target_channel);
  if (w.input_len == 0 || w.output_len == 0) throw ConfigError("window lengths must be positive");
  if (w.input_channels.empty()) throw ConfigError("input_channels must not be empty");
  return w;
}

ModelConfig model_config(const KvConfig& kv, const WindowSpec& window) {
  ModelConfig m;
  m.input_dim = window.input_channels.size();
  m.hidden_dim = kv.get_uint("hidden_dim", m.hidden_dim);
  m.output_dim = window.output_len;
  m.seq_len = window.input_len;
  m.validate();
  return m;
}

TrainHyper train_hyper(const KvConfig& kv) {
  TrainHyper h;
  h.lr = kv.get_double("lr", h.lr);
  h.epochs = kv.get_uint("epochs", h.epochs);
  h.batch_size = kv.get_uint("batch_size", h.batch_size);
  h.seed = kv.get_uint("seed", h.seed);
  if (h.lr < 0) throw ConfigError("lr must be non-negative");
  if (h.batch_size == 0) throw ConfigError("batch_size must be >= 1");
  return h;
}

double train_fraction(const KvConfig& kv) {
  const double f = kv.get_double("train_fraction", 0.8);
  if (!(f > 0.0 && f <= 1.0)) throw ConfigError("train_fraction must be in (0, 1]");
  return f;
}

EngineConfig engine_config(const KvConfig& kv, double sample_rate_hz) {
  EngineConfig e;
  e.block_size = kv.get_uint("block_size", e.block_size);
  e.buffer_blocks = kv.get_uint("buffer_blocks", e.buffer_blocks);
  e.sample_rate_hz = sample_rate_hz;
  e.measure_deadlines = false;
  return e;
}

SimConfig sim_config(const KvConfig& kv) {
  SimConfig s;
  s.ticks_per_block = kv.get_uint("ticks_per_block", s.ticks_per_block);
  s.n_blocks = kv.get_uint("sim_blocks", s.n_blocks);
  s.callback_cost_ticks = kv.get_uint("callback_cost", s.callback_cost_ticks);
  s.inference_cost_ticks = kv.get_uint("inference_cost", s.inference_cost_ticks);
  s.trigger_every_blocks = kv.get_uint("trigger_every", s.trigger_every_blocks);
  s.inference_on_audio_thread = kv.get_bool("on_audio_thread", s.inference_on_audio_thread);
  s.validate();
  return s;
}

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "devices", "channels_per_device", "frames", "sample_rate_hz", "pulse_period", "pulses",
      "offsets", "drift_ppm", "jitter", "signals", "seed", "session_id", "input_len",
      "output_len", "hop", "input_channels", "target_channel", "hidden_dim", "lr", "epochs",
      "batch_size", "train_fraction", "block_size", "buffer_blocks", "ticks_per_block",
      "sim_blocks", "callback_cost", "inference_cost", "trigger_every", "on_audio_thread"};
  return keys;
}

void check_known_keys(const KvConfig& kv) {
  const auto& keys = known_keys();
  for (const auto& [k, v] : kv.values())
    if (std::find(keys.begin(), keys.end(), k) == keys.end())
      throw ConfigError("unknown config key '" + k + "'");
}

std::pair<WindowedDataset, WindowedDataset> split_pairs(const WindowedDataset& ds, std::size_t n) {
  if (n > ds.n_pairs) throw IndexError("split point beyond the dataset");
  WindowedDataset a = ds, b = ds;
  const std::size_t in = ds.input_len * ds.n_inputs;
  a.n_pairs = n;
  a.inputs.assign(ds.inputs.begin(), ds.inputs.begin() + n * in);
  a.targets.assign(ds.targets.begin(), ds.targets.begin() + n * ds.output_len);
  b.n_pairs = ds.n_pairs - n;
  b.inputs.assign(ds.inputs.begin() + n * in, ds.inputs.end());
  b.targets.assign(ds.targets.begin() + n * ds.output_len, ds.targets.end());
  return {a, b};
}

}  // namespace sensorpipe
