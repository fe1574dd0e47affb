#pragma once

// Independent reference implementations used only by tests. None of these
// call into the code paths they check.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "sensorpipe/lstm.hpp"
#include "sensorpipe/syncer.hpp"
#include "sensorpipe/synthgen.hpp"

namespace oracle {

// Step-by-step scalar LSTM in long double. Each gate is evaluated as its
// own dot product with explicit indexing rather than the fused row loop.
inline std::vector<long double> lstm_forward(const sensorpipe::LstmParams<double>& p,
                                             const std::vector<double>& input) {
  const auto& c = p.config;
  const std::size_t H = c.hidden_dim, I = c.input_dim;
  auto W_ih = [&](std::size_t gate, std::size_t unit, std::size_t j) -> long double {
    return p.w_ih[(gate * H + unit) * I + j];
  };
  auto W_hh = [&](std::size_t gate, std::size_t unit, std::size_t j) -> long double {
    return p.w_hh[(gate * H + unit) * H + j];
  };
  auto bias = [&](std::size_t gate, std::size_t unit) -> long double { return p.b[gate * H + unit]; };
  auto sig = [](long double x) { return 1.0L / (1.0L + std::exp(-x)); };

  std::vector<long double> h(H, 0.0L), cell(H, 0.0L);
  for (std::size_t t = 0; t < c.seq_len; ++t) {
    std::vector<long double> h_next(H), c_next(H);
    for (std::size_t u = 0; u < H; ++u) {
      long double pre[4];
      for (std::size_t g = 0; g < 4; ++g) {
        long double s = bias(g, u);
        for (std::size_t j = 0; j < I; ++j) s += W_ih(g, u, j) * input[t * I + j];
        for (std::size_t j = 0; j < H; ++j) s += W_hh(g, u, j) * h[j];
        pre[g] = s;
      }
      const long double ig = sig(pre[0]);
      const long double fg = sig(pre[1]);
      const long double gg = std::tanh(pre[2]);
      const long double og = sig(pre[3]);
      c_next[u] = fg * cell[u] + ig * gg;
      h_next[u] = og * std::tanh(c_next[u]);
    }
    h = h_next;
    cell = c_next;
  }
  std::vector<long double> y(c.output_dim);
  for (std::size_t r = 0; r < c.output_dim; ++r) {
    long double s = p.b_out[r];
    for (std::size_t j = 0; j < H; ++j) s += static_cast<long double>(p.w_out[r * H + j]) * h[j];
    y[r] = s;
  }
  return y;
}

inline long double mse(const std::vector<long double>& a, const std::vector<double>& b) {
  long double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<long double>(a.size());
}

// Max relative error between analytic gradients and central differences of
// the scalar-oracle loss, over every parameter. rel = |a - n| / max(|a|, |n|, 1e-6).
inline double max_gradient_rel_error(const sensorpipe::LstmParams<double>& params,
                                     const sensorpipe::LstmParams<double>& analytic,
                                     const std::vector<double>& input,
                                     const std::vector<double>& target, double eps = 1e-4) {
  double worst = 0.0;
  auto probe = params;
  auto probe_tensors = probe.tensors();
  const auto grad_tensors = analytic.tensors();
  for (std::size_t k = 0; k < probe_tensors.size(); ++k) {
    auto& tensor = *probe_tensors[k];
    for (std::size_t i = 0; i < tensor.size(); ++i) {
      const double saved = tensor[i];
      tensor[i] = saved + eps;
      const long double up = mse(lstm_forward(probe, input), target);
      tensor[i] = saved - eps;
      const long double down = mse(lstm_forward(probe, input), target);
      tensor[i] = saved;
      const double numeric = static_cast<double>((up - down) / (2.0L * eps));
      const double a = (*grad_tensors[k])[i];
      const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-6});
      worst = std::max(worst, std::fabs(a - numeric) / denom);
    }
  }
  return worst;
}

// Start positions of every window pair, by brute-force scan.
inline std::vector<std::size_t> window_starts(std::size_t n, std::size_t in, std::size_t out,
                                              std::size_t hop) {
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s < n; s += hop) {
    bool fits = true;
    for (std::size_t k = 0; k < in + out; ++k)
      if (s + k >= n) fits = false;
    if (fits) starts.push_back(s);
  }
  return starts;
}

// Minimal NPY v1.0 reader: '<f4' / '<f8' C-order only, written from the
// format description with plain string scanning.
struct RefNpy {
  std::string descr;
  std::vector<std::size_t> shape;
  std::vector<double> values;
};

inline RefNpy read_npy(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 10 || bytes[0] != 0x93 || std::memcmp(&bytes[1], "NUMPY", 5) != 0)
    throw std::runtime_error("ref npy: magic");
  if (bytes[6] != 1 || bytes[7] != 0) throw std::runtime_error("ref npy: version");
  const std::size_t hlen = bytes[8] | (bytes[9] << 8);
  if ((10 + hlen) % 64 != 0) throw std::runtime_error("ref npy: alignment");
  const std::string header(bytes.begin() + 10, bytes.begin() + 10 + static_cast<long>(hlen));
  if (header.back() != '\n') throw std::runtime_error("ref npy: header newline");
  RefNpy out;
  const auto d = header.find("'descr': '");
  out.descr = header.substr(d + 10, 3);
  if (header.find("'fortran_order': False") == std::string::npos)
    throw std::runtime_error("ref npy: fortran order");
  const auto s = header.find("'shape': (");
  const auto e = header.find(')', s);
  std::string dims = header.substr(s + 10, e - s - 10);
  std::size_t count = 1;
  std::size_t pos = 0;
  while (pos < dims.size()) {
    while (pos < dims.size() && (dims[pos] == ',' || dims[pos] == ' ')) ++pos;
    if (pos >= dims.size()) break;
    std::size_t v = 0;
    while (pos < dims.size() && dims[pos] >= '0' && dims[pos] <= '9') v = v * 10 + (dims[pos++] - '0');
    out.shape.push_back(v);
    count *= v;
  }
  const std::size_t width = out.descr == "<f4" ? 4 : 8;
  if (bytes.size() != 10 + hlen + count * width) throw std::runtime_error("ref npy: payload size");
  const std::uint8_t* p = bytes.data() + 10 + hlen;
  for (std::size_t i = 0; i < count; ++i, p += width) {
    std::uint64_t bits = 0;
    for (std::size_t b = 0; b < width; ++b) bits |= static_cast<std::uint64_t>(p[b]) << (8 * b);
    if (width == 4) {
      float f;
      const auto b32 = static_cast<std::uint32_t>(bits);
      std::memcpy(&f, &b32, 4);
      out.values.push_back(f);
    } else {
      double f;
      std::memcpy(&f, &bits, 8);
      out.values.push_back(f);
    }
  }
  return out;
}

// For each device/channel carrying white noise, map every value back to the
// physical frame that produced it. Returns the worst |true frame - column
// frame| over every aligned sample of every such row.
inline std::int64_t max_alignment_error(const sensorpipe::SessionConfig& cfg,
                                        const sensorpipe::Session& session,
                                        const sensorpipe::AlignedMatrix& m) {
  std::int64_t worst = 0;
  std::size_t row = 0;
  for (std::size_t d = 0; d < cfg.n_devices; ++d) {
    for (std::size_t ch = 0; ch < cfg.channels_per_device; ++ch, ++row) {
      const auto& spec = cfg.signal_for(d, ch);
      if (spec.kind != sensorpipe::SignalSpec::Kind::WhiteNoise) continue;
      // Physical frames any local frame of this device can map to.
      const auto lo = session.truth.physical_frame(d, 0) - 4;
      const auto hi = session.truth.physical_frame(d, static_cast<std::int64_t>(cfg.n_frames)) + 4;
      std::map<float, std::int64_t> lookup;
      for (std::int64_t t = lo; t <= hi; ++t) {
        const float v = sensorpipe::signal_value(spec, t, cfg.sample_rate_hz, cfg.seed,
                                                 sensorpipe::signal_stream(d, ch));
        if (!lookup.emplace(v, t).second) lookup[v] = INT64_MIN;  // ambiguous value
      }
      for (std::size_t col = 0; col < m.cols; ++col) {
        const auto it = lookup.find(m.at(row, col));
        if (it == lookup.end()) return INT64_MAX;
        if (it->second == INT64_MIN) continue;
        const std::int64_t at = m.first_frame + static_cast<std::int64_t>(col);
        worst = std::max<std::int64_t>(worst, std::llabs(it->second - at));
      }
    }
  }
  return worst;
}

}  // namespace oracle
