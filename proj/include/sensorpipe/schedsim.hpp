#pragma once

// Tick-level simulation of one CPU shared by a high-priority audio thread
// and a lower-priority auxiliary (inference) thread under fixed-priority
// preemptive scheduling.
//
// Ticks are numbered from 1; block b (also from 1) spans ticks
// (b-1)*ticks_per_block + 1 .. b*ticks_per_block. At each block start the
// audio thread receives callback_cost_ticks of work (plus the inference
// cost on triggered blocks when inference runs on the audio thread). A
// trigger fires at the last tick of every trigger_every_blocks-th block;
// off-thread it hands inference_cost_ticks of work to the aux thread, or is
// dropped as a MissedTrigger when aux work is still pending. A block whose
// audio work is unfinished at its last tick records an Underrun.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace sensorpipe {

struct SimConfig {
  std::size_t ticks_per_block = 4;
  std::size_t n_blocks = 8;
  std::size_t callback_cost_ticks = 1;
  std::size_t inference_cost_ticks = 5;
  std::size_t trigger_every_blocks = 2;
  bool inference_on_audio_thread = false;

  // Throws ConfigError. inference_cost_ticks may be 0.
  void validate() const;

  bool operator==(const SimConfig&) const = default;
};

enum class Occupant { Idle, Audio, Aux };
enum class SimEventKind { Trigger, InferenceStart, InferenceDone, Underrun, MissedTrigger };

struct SimEvent {
  std::size_t tick = 0;
  SimEventKind kind = SimEventKind::Trigger;

  bool operator==(const SimEvent&) const = default;
};

struct TickState {
  Occupant cpu = Occupant::Idle;
  // Inference in flight but preempted by the audio thread this tick.
  bool aux_sleeping = false;

  bool operator==(const TickState&) const = default;
};

struct SimTrace {
  SimConfig config;
  std::vector<TickState> ticks;  // ticks[t - 1] is tick t
  std::vector<SimEvent> events;  // ordered by tick, then emission order
  // Aux ticks spent on an inference still unfinished at the end of the run.
  std::size_t unfinished_aux_ticks = 0;

  std::vector<std::size_t> ticks_where(Occupant who) const;
  std::vector<std::size_t> sleeping_ticks() const;
  std::size_t count(SimEventKind kind) const;
  std::vector<std::size_t> event_ticks(SimEventKind kind) const;
  // Blocks (from 1) with an Underrun.
  std::vector<std::size_t> underrun_blocks() const;
  // Largest Trigger -> InferenceDone distance in ticks, if any inference completed.
  std::optional<std::size_t> max_completion_latency() const;

  bool operator==(const SimTrace&) const = default;
};

SimTrace simulate(const SimConfig& config);

const char* to_string(Occupant who);
const char* to_string(SimEventKind kind);

// Fixed-width chart: one row per thread, one column per tick.
//   audio row: '#' running, '.' otherwise
//   aux row:   '=' running, '-' preempted (sleeping), '.' otherwise
std::string render_gantt(const SimTrace& trace);

// "# key=value,..." config line, a header row, then tick,cpu,aux,events per
// tick (aux is run/sleep/-, events ';'-separated).
std::string render_csv(const SimTrace& trace);
// Inverse of render_csv. Throws FormatError.
SimTrace parse_csv(const std::string& text);

struct SweepRange {
  std::size_t lo = 0;
  std::size_t hi = 0;  // inclusive
};

struct SweepSpec {
  std::optional<SweepRange> ticks_per_block;
  std::optional<SweepRange> callback_cost;
  std::optional<SweepRange> inference_cost;
  std::optional<SweepRange> trigger_every;
  std::vector<bool> on_audio_thread;  // empty: base value only
};

struct SweepRow {
  SimConfig config;
  std::size_t underruns = 0;
  std::size_t missed_triggers = 0;
  std::optional<std::size_t> max_completion_latency;
  std::size_t inherent_latency_blocks = 0;
};

// Cartesian product over the given ranges. Throws ConfigError for an empty
// range or an invalid point.
std::vector<SweepRow> sweep(const SimConfig& base, const SweepSpec& spec);
std::string render_sweep_csv(const std::vector<SweepRow>& rows);

// "lo..hi" or a single number.
SweepRange parse_range(const std::string& text);

}  // namespace sensorpipe
