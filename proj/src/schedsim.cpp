#include "sensorpipe/schedsim.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <sstream>

#include "sensorpipe/errors.hpp"

namespace sensorpipe {

void SimConfig::validate() const {
  if (ticks_per_block < 1) throw ConfigError("ticks_per_block must be >= 1");
  if (n_blocks < 1) throw ConfigError("n_blocks must be >= 1");
  if (callback_cost_ticks < 1) throw ConfigError("callback_cost_ticks must be >= 1");
  if (trigger_every_blocks < 1) throw ConfigError("trigger_every_blocks must be >= 1");
}

SimTrace simulate(const SimConfig& config) {
  config.validate();
  SimTrace trace;
  trace.config = config;
  trace.ticks.resize(config.n_blocks * config.ticks_per_block);

  struct AudioJob {
    std::size_t block;
    std::size_t remaining;
  };
  std::deque<AudioJob> audio;
  std::size_t aux_remaining = 0;
  bool aux_started = false;

  auto emit = [&](std::size_t tick, SimEventKind kind) { trace.events.push_back({tick, kind}); };

  for (std::size_t block = 1; block <= config.n_blocks; ++block) {
    const bool triggered = block % config.trigger_every_blocks == 0;
    std::size_t demand = config.callback_cost_ticks;
    if (config.inference_on_audio_thread && triggered) demand += config.inference_cost_ticks;
    audio.push_back({block, demand});

    const std::size_t first = (block - 1) * config.ticks_per_block + 1;
    const std::size_t last = block * config.ticks_per_block;
    for (std::size_t tick = first; tick <= last; ++tick) {
      auto& state = trace.ticks[tick - 1];
      if (!audio.empty()) {
        state.cpu = Occupant::Audio;
        state.aux_sleeping = aux_started && aux_remaining > 0;
        if (--audio.front().remaining == 0) audio.pop_front();
      } else if (aux_remaining > 0) {
        state.cpu = Occupant::Aux;
        if (!aux_started) {
          emit(tick, SimEventKind::InferenceStart);
          aux_started = true;
        }
        if (--aux_remaining == 0) {
          emit(tick, SimEventKind::InferenceDone);
          aux_started = false;
        }
      }
    }

    if (!audio.empty() && audio.front().block <= block) emit(last, SimEventKind::Underrun);

    if (triggered) {
      emit(last, SimEventKind::Trigger);
      if (!config.inference_on_audio_thread) {
        if (aux_remaining > 0) {
          emit(last, SimEventKind::MissedTrigger);
        } else if (config.inference_cost_ticks == 0) {
          emit(last, SimEventKind::InferenceStart);
          emit(last, SimEventKind::InferenceDone);
        } else {
          aux_remaining = config.inference_cost_ticks;
          aux_started = false;
        }
      }
    }
  }
  if (aux_remaining > 0 && aux_started)
    trace.unfinished_aux_ticks = config.inference_cost_ticks - aux_remaining;
  return trace;
}

std::vector<std::size_t> SimTrace::ticks_where(Occupant who) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < ticks.size(); ++i)
    if (ticks[i].cpu == who) out.push_back(i + 1);
  return out;
}

std::vector<std::size_t> SimTrace::sleeping_ticks() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < ticks.size(); ++i)
    if (ticks[i].aux_sleeping) out.push_back(i + 1);
  return out;
}

std::size_t SimTrace::count(SimEventKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(events.begin(), events.end(), [&](const SimEvent& e) { return e.kind == kind; }));
}

std::vector<std::size_t> SimTrace::event_ticks(SimEventKind kind) const {
  std::vector<std::size_t> out;
  for (const auto& e : events)
    if (e.kind == kind) out.push_back(e.tick);
  return out;
}

std::vector<std::size_t> SimTrace::underrun_blocks() const {
  std::vector<std::size_t> out;
  for (auto t : event_ticks(SimEventKind::Underrun))
    out.push_back((t - 1) / config.ticks_per_block + 1);
  return out;
}

std::optional<std::size_t> SimTrace::max_completion_latency() const {
  // A trigger that finds aux work in flight is dropped, so the in-flight
  // inference always answers the first trigger seen since the last completion.
  std::optional<std::size_t> best;
  bool in_flight = false;
  std::size_t since = 0;
  for (const auto& e : events) {
    if (e.kind == SimEventKind::Trigger && !in_flight) {
      in_flight = true;
      since = e.tick;
    } else if (e.kind == SimEventKind::InferenceDone && in_flight) {
      const std::size_t latency = e.tick - since;
      best = best ? std::max(*best, latency) : latency;
      in_flight = false;
    }
  }
  return best;
}

const char* to_string(Occupant who) {
  switch (who) {
    case Occupant::Idle:
      return "Idle";
    case Occupant::Audio:
      return "Audio";
    case Occupant::Aux:
      return "Aux";
  }
  return "?";
}

const char* to_string(SimEventKind kind) {
  switch (kind) {
    case SimEventKind::Trigger:
      return "Trigger";
    case SimEventKind::InferenceStart:
      return "InferenceStart";
    case SimEventKind::InferenceDone:
      return "InferenceDone";
    case SimEventKind::Underrun:
      return "Underrun";
    case SimEventKind::MissedTrigger:
      return "MissedTrigger";
  }
  return "?";
}

std::string render_gantt(const SimTrace& trace) {
  const auto& cfg = trace.config;
  const std::size_t n = trace.ticks.size();
  constexpr std::size_t kLabel = 14;
  auto label = [&](const std::string& s) { return s + std::string(kLabel - s.size(), ' '); };

  std::string blocks = label("block");
  for (std::size_t t = 0; t < n; ++t) {
    if (t % cfg.ticks_per_block == 0) {
      const std::string num = std::to_string(t / cfg.ticks_per_block + 1);
      const std::size_t room = std::min(cfg.ticks_per_block, n - t);
      std::string cell = "|" + num;
      if (cell.size() > room) cell = "|";
      cell.resize(room, ' ');
      blocks += cell;
    }
  }
  std::string audio = label("audio thread");
  std::string aux = label("aux thread");
  for (const auto& s : trace.ticks) {
    audio += s.cpu == Occupant::Audio ? '#' : '.';
    aux += s.cpu == Occupant::Aux ? '=' : (s.aux_sleeping ? '-' : '.');
  }
  std::string events = label("events");
  for (std::size_t t = 1; t <= n; ++t) {
    char mark = ' ';
    for (const auto& e : trace.events) {
      if (e.tick != t) continue;
      if (e.kind == SimEventKind::Underrun) mark = 'U';
      else if (e.kind == SimEventKind::MissedTrigger && mark != 'U') mark = 'M';
      else if (e.kind == SimEventKind::Trigger && mark == ' ') mark = 'T';
    }
    events += mark;
  }
  while (!events.empty() && events.back() == ' ') events.pop_back();

  std::ostringstream out;
  out << blocks << '\n' << audio << '\n' << aux << '\n' << events << '\n';
  out << "legend: # audio callback, = inference running, - inference preempted, . idle;"
         " T trigger, M missed trigger, U underrun\n";
  return out.str();
}

namespace {

std::string config_line(const SimConfig& c) {
  std::ostringstream out;
  out << "# ticks_per_block=" << c.ticks_per_block << ",n_blocks=" << c.n_blocks
      << ",callback_cost_ticks=" << c.callback_cost_ticks
      << ",inference_cost_ticks=" << c.inference_cost_ticks
      << ",trigger_every_blocks=" << c.trigger_every_blocks
      << ",inference_on_audio_thread=" << (c.inference_on_audio_thread ? 1 : 0);
  return out.str();
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  parts.push_back(cur);
  return parts;
}

std::size_t to_size(const std::string& s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw FormatError("expected a non-negative integer, got '" + s + "'");
  return std::stoull(s);
}

}  // namespace

std::string render_csv(const SimTrace& trace) {
  std::ostringstream out;
  out << config_line(trace.config) << ",unfinished_aux_ticks=" << trace.unfinished_aux_ticks
      << '\n';
  out << "tick,cpu,aux,events\n";
  std::size_t next = 0;
  for (std::size_t i = 0; i < trace.ticks.size(); ++i) {
    const auto& s = trace.ticks[i];
    const std::size_t tick = i + 1;
    out << tick << ',' << to_string(s.cpu) << ','
        << (s.cpu == Occupant::Aux ? "run" : (s.aux_sleeping ? "sleep" : "-")) << ',';
    bool first = true;
    while (next < trace.events.size() && trace.events[next].tick == tick) {
      if (!first) out << ';';
      out << to_string(trace.events[next].kind);
      first = false;
      ++next;
    }
    out << '\n';
  }
  return out.str();
}

SimTrace parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
    throw FormatError("schedule csv: missing config line");
  std::map<std::string, std::size_t> kv;
  for (const auto& item : split(line.substr(2), ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw FormatError("schedule csv: bad config item '" + item + "'");
    kv[item.substr(0, eq)] = to_size(item.substr(eq + 1));
  }
  auto get = [&](const char* key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw FormatError(std::string("schedule csv: missing ") + key);
    return it->second;
  };
  SimTrace trace;
  trace.config.ticks_per_block = get("ticks_per_block");
  trace.config.n_blocks = get("n_blocks");
  trace.config.callback_cost_ticks = get("callback_cost_ticks");
  trace.config.inference_cost_ticks = get("inference_cost_ticks");
  trace.config.trigger_every_blocks = get("trigger_every_blocks");
  trace.config.inference_on_audio_thread = get("inference_on_audio_thread") != 0;
  trace.unfinished_aux_ticks = get("unfinished_aux_ticks");

  if (!std::getline(in, line) || line != "tick,cpu,aux,events")
    throw FormatError("schedule csv: missing header row");
  static const std::map<std::string, Occupant> occupants = {
      {"Idle", Occupant::Idle}, {"Audio", Occupant::Audio}, {"Aux", Occupant::Aux}};
  static const std::map<std::string, SimEventKind> kinds = {
      {"Trigger", SimEventKind::Trigger},
      {"InferenceStart", SimEventKind::InferenceStart},
      {"InferenceDone", SimEventKind::InferenceDone},
      {"Underrun", SimEventKind::Underrun},
      {"MissedTrigger", SimEventKind::MissedTrigger}};
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cols = split(line, ',');
    if (cols.size() != 4) throw FormatError("schedule csv: bad row '" + line + "'");
    const std::size_t tick = to_size(cols[0]);
    if (tick != trace.ticks.size() + 1) throw FormatError("schedule csv: ticks out of order");
    const auto occ = occupants.find(cols[1]);
    if (occ == occupants.end()) throw FormatError("schedule csv: bad occupant '" + cols[1] + "'");
    TickState s;
    s.cpu = occ->second;
    if (cols[2] == "sleep") s.aux_sleeping = true;
    else if (cols[2] != "run" && cols[2] != "-")
      throw FormatError("schedule csv: bad aux state '" + cols[2] + "'");
    trace.ticks.push_back(s);
    if (!cols[3].empty()) {
      for (const auto& name : split(cols[3], ';')) {
        const auto k = kinds.find(name);
        if (k == kinds.end()) throw FormatError("schedule csv: bad event '" + name + "'");
        trace.events.push_back({tick, k->second});
      }
    }
  }
  if (trace.ticks.size() != trace.config.n_blocks * trace.config.ticks_per_block)
    throw FormatError("schedule csv: tick count does not match config");
  return trace;
}

SweepRange parse_range(const std::string& text) {
  try {
    const auto dots = text.find("..");
    if (dots == std::string::npos) {
      const auto v = to_size(text);
      return {v, v};
    }
    return {to_size(text.substr(0, dots)), to_size(text.substr(dots + 2))};
  } catch (const FormatError& e) {
    throw ConfigError(std::string("sweep range: ") + e.what());
  }
}

std::vector<SweepRow> sweep(const SimConfig& base, const SweepSpec& spec) {
  auto values = [](const std::optional<SweepRange>& r, std::size_t fallback,
                   const char* name) -> std::vector<std::size_t> {
    if (!r) return {fallback};
    if (r->lo > r->hi) throw ConfigError(std::string("empty sweep range for ") + name);
    std::vector<std::size_t> v;
    for (std::size_t x = r->lo; x <= r->hi; ++x) v.push_back(x);
    return v;
  };
  const auto tpb = values(spec.ticks_per_block, base.ticks_per_block, "ticks_per_block");
  const auto cb = values(spec.callback_cost, base.callback_cost_ticks, "callback_cost");
  const auto inf = values(spec.inference_cost, base.inference_cost_ticks, "inference_cost");
  const auto trig = values(spec.trigger_every, base.trigger_every_blocks, "trigger_every");
  const std::vector<bool> on =
      spec.on_audio_thread.empty() ? std::vector<bool>{base.inference_on_audio_thread}
                                   : spec.on_audio_thread;

  std::vector<SweepRow> rows;
  for (bool o : on)
    for (auto t : tpb)
      for (auto c : cb)
        for (auto i : inf)
          for (auto g : trig) {
            SimConfig cfg = base;
            cfg.ticks_per_block = t;
            cfg.callback_cost_ticks = c;
            cfg.inference_cost_ticks = i;
            cfg.trigger_every_blocks = g;
            cfg.inference_on_audio_thread = o;
            const auto trace = simulate(cfg);
            SweepRow row;
            row.config = cfg;
            row.underruns = trace.count(SimEventKind::Underrun);
            row.missed_triggers = trace.count(SimEventKind::MissedTrigger);
            row.max_completion_latency = trace.max_completion_latency();
            row.inherent_latency_blocks = g;
            rows.push_back(row);
          }
  return rows;
}

std::string render_sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "ticks_per_block,n_blocks,callback_cost_ticks,inference_cost_ticks,"
         "trigger_every_blocks,inference_on_audio_thread,underruns,missed_triggers,"
         "max_completion_latency_ticks,inherent_latency_blocks\n";
  for (const auto& r : rows) {
    const auto& c = r.config;
    out << c.ticks_per_block << ',' << c.n_blocks << ',' << c.callback_cost_ticks << ','
        << c.inference_cost_ticks << ',' << c.trigger_every_blocks << ','
        << (c.inference_on_audio_thread ? 1 : 0) << ',' << r.underruns << ','
        << r.missed_triggers << ',';
    if (r.max_completion_latency) out << *r.max_completion_latency;
    out << ',' << r.inherent_latency_blocks << '\n';
  }
  return out.str();
}

}  // namespace sensorpipe
