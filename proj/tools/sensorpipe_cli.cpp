// sensorpipe: command-line front end for the sensor-to-model pipeline.
//
// Exit codes: 0 success, 1 usage error, 2 data or validation error.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "sensorpipe/dataset.hpp"
#include "sensorpipe/digest.hpp"
#include "sensorpipe/engine.hpp"
#include "sensorpipe/errors.hpp"
#include "sensorpipe/kvconfig.hpp"
#include "sensorpipe/logfmt.hpp"
#include "sensorpipe/lstm.hpp"
#include "sensorpipe/npy.hpp"
#include "sensorpipe/schedsim.hpp"
#include "sensorpipe/stage_config.hpp"
#include "sensorpipe/syncer.hpp"
#include "sensorpipe/synthgen.hpp"
#include "sensorpipe/weights.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace sensorpipe;

namespace {

bool g_verbose = false;

void note(const std::string& msg) {
  if (g_verbose) std::cerr << "[sensorpipe] " << msg << '\n';
}

struct Artifact {
  std::string path;
  std::string role;
};

struct StageRecord {
  std::string name;
  json params;
  std::vector<Artifact> artifacts;
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  out.flush();
  if (!out) throw IoError("cannot write " + path, 0);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path, 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const std::string& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

json config_json(const KvConfig& kv, std::initializer_list<const char*> keys) {
  json j = json::object();
  for (const char* k : keys)
    if (auto v = kv.raw(k)) j[k] = *v;
  return j;
}

// ---- stages -------------------------------------------------------------

StageRecord stage_generate(const KvConfig& kv, const fs::path& out_dir) {
  const auto cfg = session_config(kv);
  fs::create_directories(out_dir);
  const auto session = generate_session(cfg);
  StageRecord rec{"generate",
                  config_json(kv, {"devices", "channels_per_device", "frames", "sample_rate_hz",
                                   "pulse_period", "pulses", "offsets", "drift_ppm", "jitter",
                                   "signals", "seed", "session_id"}),
                  {}};
  for (const auto& log : session.logs) {
    const auto path = out_dir / ("dev" + std::to_string(log.header.device_id) + ".bslog");
    write_log_file(log, path.string());
    rec.artifacts.push_back({path.string(), "log"});
  }
  json truth;
  truth["pulse_period_frames"] = session.truth.pulse_period_frames;
  truth["start_offset_frames"] = session.truth.start_offset_frames;
  truth["drift_ppm"] = session.truth.drift_ppm;
  truth["offsets"] = session.truth.offsets;
  const auto truth_path = out_dir / "truth.json";
  write_text(truth_path.string(), truth.dump(2) + "\n");
  rec.artifacts.push_back({truth_path.string(), "ground_truth"});
  note("generated " + std::to_string(session.logs.size()) + " logs of " +
       std::to_string(cfg.n_frames) + " frames");
  return rec;
}

StageRecord stage_sync(const std::vector<std::string>& log_paths, const fs::path& out_npy) {
  std::vector<SensorLog> logs;
  for (const auto& p : log_paths) logs.push_back(read_log_file(p));
  const auto solution = estimate_offsets(logs);
  const auto matrix = align(logs, solution);
  if (out_npy.has_parent_path()) fs::create_directories(out_npy.parent_path());
  export_npy(matrix, out_npy.string());

  json meta;
  meta["rows"] = matrix.rows;
  meta["cols"] = matrix.cols;
  meta["row_labels"] = matrix.row_labels;
  meta["sample_rate_hz"] = matrix.sample_rate_hz;
  meta["timebase_device"] = matrix.timebase_device;
  meta["overlap_start"] = solution.overlap_start;
  meta["overlap_end"] = solution.overlap_end;
  meta["gap_fills"] = matrix.gap_fills;
  json devices = json::array();
  for (const auto& d : solution.devices) {
    json dj;
    dj["device_id"] = d.device_id;
    dj["role"] = d.role == Role::TX ? "TX" : "RX";
    json offs = json::array();
    for (const auto& o : d.offsets) offs.push_back({o.pulse_index, o.offset_frames});
    dj["offsets"] = offs;
    dj["max_offset_step"] = d.max_offset_step;
    devices.push_back(dj);
  }
  meta["devices"] = devices;
  auto meta_path = out_npy;
  meta_path.replace_extension(".json");
  write_text(meta_path.string(), meta.dump(2) + "\n");
  note("aligned " + std::to_string(matrix.rows) + " rows x " + std::to_string(matrix.cols) +
       " frames");
  return {"sync", json{{"logs", log_paths.size()}},
          {{out_npy.string(), "aligned_matrix"}, {meta_path.string(), "alignment"}}};
}

json stats_json(const NormStat& s) { return {{"mean", s.mean}, {"std", s.std}}; }
NormStat stats_from(const json& j) { return {j.at("mean").get<double>(), j.at("std").get<double>()}; }

StageRecord stage_window(const KvConfig& kv, const fs::path& aligned, const fs::path& out_dir) {
  const auto spec = window_spec(kv);
  const auto matrix = import_npy_matrix(aligned.string());
  const auto ds = make_windows(matrix, spec);
  fs::create_directories(out_dir);
  const auto in_path = out_dir / "inputs.npy";
  const auto tg_path = out_dir / "targets.npy";
  const std::size_t in_shape[] = {ds.n_pairs, ds.input_len, ds.n_inputs};
  const std::size_t tg_shape[] = {ds.n_pairs, ds.output_len};
  npy::save(in_path.string(), ds.inputs, in_shape);
  npy::save(tg_path.string(), ds.targets, tg_shape);
  json norm;
  norm["input_channels"] = spec.input_channels;
  norm["target_channel"] = spec.target_channel;
  norm["hop"] = spec.effective_hop();
  json in_stats = json::array();
  for (const auto& s : ds.input_stats) in_stats.push_back(stats_json(s));
  norm["input_stats"] = in_stats;
  norm["target_stats"] = stats_json(ds.target_stats);
  const auto norm_path = out_dir / "norm.json";
  write_text(norm_path.string(), norm.dump(2) + "\n");
  note("windowed " + std::to_string(ds.n_pairs) + " pairs");
  return {"window",
          config_json(kv, {"input_len", "output_len", "hop", "input_channels", "target_channel"}),
          {{in_path.string(), "inputs"}, {tg_path.string(), "targets"}, {norm_path.string(), "norm"}}};
}

WindowedDataset load_dataset(const fs::path& dir) {
  const auto in = npy::load((dir / "inputs.npy").string());
  const auto tg = npy::load((dir / "targets.npy").string());
  if (in.shape.size() != 3 || tg.shape.size() != 2 || in.shape[0] != tg.shape[0])
    throw ShapeError("dataset arrays must be (pairs, len, channels) and (pairs, len)");
  const auto norm = read_json((dir / "norm.json").string());
  WindowedDataset ds;
  ds.n_pairs = in.shape[0];
  ds.input_len = in.shape[1];
  ds.n_inputs = in.shape[2];
  ds.output_len = tg.shape[1];
  ds.inputs = in.as_f32();
  ds.targets = tg.as_f32();
  try {
    for (const auto& s : norm.at("input_stats")) ds.input_stats.push_back(stats_from(s));
    ds.target_stats = stats_from(norm.at("target_stats"));
  } catch (const json::exception& e) {
    throw FormatError("norm.json: " + std::string(e.what()));
  }
  if (ds.input_stats.size() != ds.n_inputs)
    throw ShapeError("norm.json has the wrong number of input stats");
  return ds;
}

StageRecord stage_train(const KvConfig& kv, const fs::path& dataset_dir, const fs::path& model_path,
                        const fs::path& loss_csv) {
  const auto ds = load_dataset(dataset_dir);
  const auto window = window_spec(kv);
  auto mcfg = model_config(kv, window);
  mcfg.input_dim = ds.n_inputs;
  mcfg.seq_len = ds.input_len;
  mcfg.output_dim = ds.output_len;
  const auto hyper = train_hyper(kv);
  const double frac = train_fraction(kv);
  std::size_t n_train = static_cast<std::size_t>(static_cast<double>(ds.n_pairs) * frac);
  n_train = std::clamp<std::size_t>(n_train, 1, ds.n_pairs);
  const auto [train_set, test_set] = split_pairs(ds, n_train);

  const auto result = train(train_set, mcfg, hyper, [](std::size_t epoch, double loss) {
    note("epoch " + std::to_string(epoch + 1) + " loss " + format_float(static_cast<float>(loss)));
  });

  ModelFile model;
  model.params = result.params.cast<float>();
  model.input_stats = ds.input_stats;
  model.target_stats = ds.target_stats;
  if (model_path.has_parent_path()) fs::create_directories(model_path.parent_path());
  save_weights(model, model_path.string());

  std::ostringstream csv;
  csv << "epoch,loss\n";
  for (std::size_t e = 0; e < result.loss_curve.size(); ++e)
    csv << e + 1 << ',' << result.loss_curve[e] << '\n';
  write_text(loss_csv.string(), csv.str());

  json report;
  report["train_pairs"] = train_set.n_pairs;
  report["test_pairs"] = test_set.n_pairs;
  if (test_set.n_pairs > 0) {
    report["test_mse"] = evaluate_mse(result.params, test_set, 0, test_set.n_pairs);
    report["zero_baseline_mse"] = zero_baseline_mse(test_set, 0, test_set.n_pairs);
  }
  const auto emb = embeddability_report(mcfg);
  report["param_count"] = emb.param_count;
  report["flops_per_inference"] = emb.flops_per_inference;
  report["weight_bytes"] = emb.weight_bytes;
  auto report_path = model_path;
  report_path.replace_extension(".json");
  write_text(report_path.string(), report.dump(2) + "\n");
  std::cout << "params " << emb.param_count << ", flops/inference " << emb.flops_per_inference
            << ", weights " << emb.weight_bytes << " bytes\n";
  if (test_set.n_pairs > 0)
    std::cout << "test mse " << report["test_mse"].get<double>() << " (zero baseline "
              << report["zero_baseline_mse"].get<double>() << ")\n";
  return {"train",
          config_json(kv, {"hidden_dim", "lr", "epochs", "batch_size", "train_fraction", "seed"}),
          {{model_path.string(), "weights"}, {loss_csv.string(), "loss_curve"},
           {report_path.string(), "train_report"}}};
}

// Signal rows for inference: the configured input channels of an aligned
// matrix (.npy) or of a single log (.bslog).
std::pair<std::vector<float>, std::size_t> load_signal(const fs::path& path,
                                                       const std::vector<std::size_t>& channels) {
  AlignedMatrix m;
  if (path.extension() == ".bslog") {
    const auto log = read_log_file(path.string());
    m.rows = log.n_channels();
    m.cols = log.n_frames();
    for (const auto& row : log.samples) m.data.insert(m.data.end(), row.begin(), row.end());
  } else {
    m = import_npy_matrix(path.string());
  }
  std::vector<float> out;
  for (std::size_t ch : channels) {
    if (ch >= m.rows)
      throw IndexError("input channel " + std::to_string(ch) + " not in a " +
                       std::to_string(m.rows) + "-row signal");
    out.insert(out.end(), m.data.begin() + ch * m.cols, m.data.begin() + (ch + 1) * m.cols);
  }
  return {out, m.cols};
}

StageRecord stage_infer(const KvConfig& kv, const fs::path& model_path, const fs::path& signal_path,
                        const fs::path& out_dir) {
  auto model = load_weights(model_path.string());
  const auto window = window_spec(kv);
  if (window.input_channels.size() != model.params.config.input_dim)
    throw ShapeError("input_channels has " + std::to_string(window.input_channels.size()) +
                     " entries, model expects " + std::to_string(model.params.config.input_dim));
  const auto [signal, frames] = load_signal(signal_path, window.input_channels);
  const auto ecfg = engine_config(kv, kv.get_double("sample_rate_hz", 1000.0));
  const std::size_t rows = window.input_channels.size();
  const auto result =
      offline_run(ecfg, std::make_unique<LstmPredictor>(std::move(model)), signal, rows, frames);

  fs::create_directories(out_dir);
  const auto pred_path = out_dir / "predictions.npy";
  const std::size_t shape[] = {result.n_predictions(), result.output_len};
  npy::save(pred_path.string(), result.predictions, shape);
  const auto& s = result.stats;
  std::ostringstream stats;
  stats << "blocks_processed " << s.blocks_processed << '\n'
        << "inferences_completed " << s.inferences_completed << '\n'
        << "inferences_missed " << s.inferences_missed << '\n'
        << "buffer_overflows " << s.buffer_overflows << '\n'
        << "underruns " << s.underruns << '\n';
  const auto stats_path = out_dir / "infer_stats.txt";
  write_text(stats_path.string(), stats.str());
  std::cout << stats.str();
  note("max inference time " + std::to_string(s.max_inference_duration.count()) + " ns");
  return {"infer", config_json(kv, {"block_size", "buffer_blocks", "input_channels"}),
          {{pred_path.string(), "predictions"}, {stats_path.string(), "engine_stats"}}};
}

StageRecord stage_simulate(const SimConfig& cfg, const std::string& gantt_path,
                           const std::string& csv_path) {
  const auto trace = simulate(cfg);
  const auto chart = render_gantt(trace);
  StageRecord rec{"simulate",
                  json{{"ticks_per_block", cfg.ticks_per_block},
                       {"blocks", cfg.n_blocks},
                       {"callback_cost", cfg.callback_cost_ticks},
                       {"inference_cost", cfg.inference_cost_ticks},
                       {"trigger_every", cfg.trigger_every_blocks},
                       {"on_audio_thread", cfg.inference_on_audio_thread}},
                  {}};
  if (gantt_path.empty() || gantt_path == "-") {
    std::cout << chart;
  } else {
    write_text(gantt_path, chart);
    rec.artifacts.push_back({gantt_path, "gantt"});
  }
  if (!csv_path.empty()) {
    write_text(csv_path, render_csv(trace));
    rec.artifacts.push_back({csv_path, "trace_csv"});
  }
  std::cout << "underruns " << trace.count(SimEventKind::Underrun) << ", missed triggers "
            << trace.count(SimEventKind::MissedTrigger) << '\n';
  return rec;
}

json manifest_json(const std::vector<StageRecord>& stages, const KvConfig& kv,
                   const fs::path& root) {
  json m;
  m["config"] = kv.values();
  json list = json::array();
  for (const auto& st : stages) {
    json sj;
    sj["name"] = st.name;
    sj["params"] = st.params;
    json arts = json::array();
    for (const auto& a : st.artifacts) {
      if (!fs::exists(a.path)) throw InternalError("manifest artifact missing: " + a.path);
      arts.push_back({{"role", a.role},
                      {"path", fs::relative(a.path, root).generic_string()},
                      {"bytes", fs::file_size(a.path)},
                      {"sha256", sha256_file(a.path)}});
    }
    sj["artifacts"] = arts;
    list.push_back(sj);
  }
  m["stages"] = list;
  return m;
}

// Named flags that map straight onto config keys.
struct Override {
  const char* flag;
  const char* key;
  const char* help;
};

void add_overrides(CLI::App* cmd, std::map<std::string, std::string>& into,
                   std::initializer_list<Override> list) {
  for (const auto& o : list) cmd->add_option(o.flag, into[o.key], o.help);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sensorpipe: sensor logs to embedded-model pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "key = value config file");
  app.add_option("--set", sets, "override a config key (key=value), repeatable");
  app.add_option("--seed", seed, "random seed (overrides the config)");
  app.add_flag("-v,--verbose", g_verbose, "progress on stderr");

  std::map<std::string, std::string> flag_values;

  auto* gen = app.add_subcommand("generate", "synthesize a recording session");
  std::string gen_out = "session";
  gen->add_option("--out-dir", gen_out, "output directory")->capture_default_str();
  add_overrides(gen, flag_values,
                {{"--devices", "devices", "number of devices"},
                 {"--frames", "frames", "frames per device"},
                 {"--jitter", "jitter", "max pulse jitter in frames"}});

  auto* sync = app.add_subcommand("sync", "align logs into one matrix");
  std::vector<std::string> sync_logs;
  std::string sync_out = "aligned.npy";
  sync->add_option("logs", sync_logs, ".bslog files")->required();
  sync->add_option("--out", sync_out, "aligned matrix (.npy)")->capture_default_str();

  auto* win = app.add_subcommand("window", "cut an aligned matrix into training pairs");
  std::string win_in, win_out = "dataset";
  win->add_option("--in", win_in, "aligned matrix (.npy)")->required();
  win->add_option("--out-dir", win_out, "dataset directory")->capture_default_str();
  add_overrides(win, flag_values, {{"--hop", "hop", "frames between window starts"}});

  auto* tr = app.add_subcommand("train", "train the LSTM forecaster");
  std::string tr_data = "dataset", tr_model = "model.bsnn", tr_loss = "loss.csv";
  tr->add_option("--dataset", tr_data, "dataset directory")->capture_default_str();
  tr->add_option("--out", tr_model, "weights (.bsnn)")->capture_default_str();
  tr->add_option("--loss-csv", tr_loss, "per-epoch loss")->capture_default_str();
  add_overrides(tr, flag_values,
                {{"--epochs", "epochs", "training epochs"},
                 {"--lr", "lr", "learning rate"},
                 {"--batch-size", "batch_size", "minibatch size"},
                 {"--hidden", "hidden_dim", "LSTM hidden units"}});

  auto* inf = app.add_subcommand("infer", "replay a signal through the real-time engine");
  std::string inf_model, inf_signal, inf_out = ".";
  inf->add_option("--model", inf_model, "weights (.bsnn)")->required();
  inf->add_option("--signal", inf_signal, "aligned matrix (.npy) or log (.bslog)")->required();
  inf->add_option("--out-dir", inf_out, "output directory")->capture_default_str();
  add_overrides(inf, flag_values,
                {{"--block-size", "block_size", "frames per audio block"},
                 {"--buffer-blocks", "buffer_blocks", "blocks per inference trigger"}});

  auto* sim = app.add_subcommand("simulate", "tick-level scheduling simulation");
  std::string sim_gantt, sim_csv;
  bool on_audio = false;
  add_overrides(sim, flag_values,
                {{"--ticks-per-block", "ticks_per_block", "ticks per audio block"},
                 {"--blocks", "sim_blocks", "blocks to simulate"},
                 {"--callback-cost", "callback_cost", "audio callback cost in ticks"},
                 {"--inference-cost", "inference_cost", "inference cost in ticks"},
                 {"--trigger-every", "trigger_every", "blocks per inference trigger"}});
  sim->add_flag("--on-audio-thread", on_audio, "run inference inside the audio callback");
  sim->add_option("--gantt", sim_gantt, "write the chart here instead of stdout");
  sim->add_option("--csv", sim_csv, "write the per-tick trace as CSV");

  auto* sw = app.add_subcommand("sweep", "simulate a grid of scheduling parameters");
  std::string sw_tpb, sw_cb, sw_inf, sw_trig, sw_out;
  std::string sw_thread = "base";
  sw->add_option("--ticks-per-block", sw_tpb, "range lo..hi");
  sw->add_option("--callback-cost", sw_cb, "range lo..hi");
  sw->add_option("--inference-cost", sw_inf, "range lo..hi");
  sw->add_option("--trigger-every", sw_trig, "range lo..hi");
  sw->add_option("--thread", sw_thread, "base, off, on or both")
      ->check(CLI::IsMember({"base", "off", "on", "both"}));
  sw->add_option("--out", sw_out, "CSV path (stdout when omitted)");

  auto* pipe = app.add_subcommand("pipeline", "run every stage and write a manifest");
  std::string pipe_out = "pipeline_out";
  pipe->add_option("--out-dir", pipe_out, "output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    KvConfig kv = config_path.empty() ? KvConfig{} : KvConfig::load(config_path);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0) {
        std::cerr << "error: --set expects key=value, got '" << s << "'\n";
        return 1;
      }
      kv.set(s.substr(0, eq), s.substr(eq + 1));
    }
    for (const auto& [key, value] : flag_values)
      if (!value.empty()) kv.set(key, value);
    if (seed) kv.set("seed", std::to_string(*seed));
    if (on_audio) kv.set("on_audio_thread", "true");
    check_known_keys(kv);

    if (gen->parsed()) {
      stage_generate(kv, gen_out);
    } else if (sync->parsed()) {
      stage_sync(sync_logs, sync_out);
    } else if (win->parsed()) {
      stage_window(kv, win_in, win_out);
    } else if (tr->parsed()) {
      stage_train(kv, tr_data, tr_model, tr_loss);
    } else if (inf->parsed()) {
      stage_infer(kv, inf_model, inf_signal, inf_out);
    } else if (sim->parsed()) {
      stage_simulate(sim_config(kv), sim_gantt, sim_csv);
    } else if (sw->parsed()) {
      SweepSpec spec;
      if (!sw_tpb.empty()) spec.ticks_per_block = parse_range(sw_tpb);
      if (!sw_cb.empty()) spec.callback_cost = parse_range(sw_cb);
      if (!sw_inf.empty()) spec.inference_cost = parse_range(sw_inf);
      if (!sw_trig.empty()) spec.trigger_every = parse_range(sw_trig);
      if (sw_thread == "off") spec.on_audio_thread = {false};
      if (sw_thread == "on") spec.on_audio_thread = {true};
      if (sw_thread == "both") spec.on_audio_thread = {false, true};
      const auto csv = render_sweep_csv(sweep(sim_config(kv), spec));
      if (sw_out.empty()) {
        std::cout << csv;
      } else {
        write_text(sw_out, csv);
      }
    } else if (pipe->parsed()) {
      const fs::path root = pipe_out;
      fs::create_directories(root);
      std::vector<StageRecord> stages;
      stages.push_back(stage_generate(kv, root / "logs"));
      std::vector<std::string> logs;
      for (const auto& a : stages.back().artifacts)
        if (a.role == "log") logs.push_back(a.path);
      stages.push_back(stage_sync(logs, root / "aligned.npy"));
      stages.push_back(stage_window(kv, root / "aligned.npy", root / "dataset"));
      stages.push_back(stage_train(kv, root / "dataset", root / "model.bsnn", root / "loss.csv"));
      stages.push_back(stage_infer(kv, root / "model.bsnn", root / "aligned.npy", root));
      stages.push_back(stage_simulate(sim_config(kv), (root / "schedule_gantt.txt").string(),
                                      (root / "schedule.csv").string()));
      const auto manifest = manifest_json(stages, kv, root);
      write_text((root / "manifest.json").string(), manifest.dump(2) + "\n");
      std::cout << "manifest " << (root / "manifest.json").string() << " (" << stages.size()
                << " stages)\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
