#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spectemp/error.hpp"

namespace spectemp {

/// Raw (t, u) displacement record. t in seconds, strictly increasing.
struct TimeSeries {
  std::vector<double> t;
  std::vector<double> u;
  std::optional<int> label;
  std::string source_id;

  std::size_t size() const { return u.size(); }
  double span() const { return t.empty() ? 0.0 : t.back() - t.front(); }

  void validate() const {
    require(t.size() == u.size(), ErrorKind::LengthMismatch,
            "time and displacement columns differ in length");
    require(t.size() >= 2, ErrorKind::EmptySignal, "signal '" + source_id + "' has fewer than 2 samples");
    for (std::size_t j = 1; j < t.size(); ++j)
      require(t[j] > t[j - 1], ErrorKind::InvalidArgument,
              "time stamps of '" + source_id + "' are not strictly increasing");
  }
};

/// Uniformly sampled record; sample j sits at t0 + j*dt.
struct UniformSeries {
  std::vector<double> u;
  double dt = 1.0;
  double t0 = 0.0;
  std::optional<int> label;
  std::string source_id;

  std::size_t size() const { return u.size(); }
  double time_at(std::size_t j) const { return t0 + static_cast<double>(j) * dt; }
  double duration() const { return u.empty() ? 0.0 : static_cast<double>(u.size() - 1) * dt; }

  bool operator==(const UniformSeries&) const = default;
};

/// Fixed-length windows cut from a UniformSeries. Window m covers
/// source samples [m*hop, m*hop + L).
struct WindowSet {
  std::vector<std::vector<double>> windows;
  std::size_t L = 0;
  std::size_t hop = 0;
  double dt = 1.0;

  std::size_t count() const { return windows.size(); }
};

/// Wraps an already uniform record (e.g. 4 kHz acquisition) without resampling.
inline UniformSeries as_uniform(const TimeSeries& s) {
  s.validate();
  UniformSeries out;
  out.dt = (s.t.back() - s.t.front()) / static_cast<double>(s.t.size() - 1);
  out.t0 = s.t.front();
  out.u = s.u;
  out.label = s.label;
  out.source_id = s.source_id;
  return out;
}

/// Linear interpolation onto the grid t_min + j*dt, j = 0.. while t <= t_max.
inline UniformSeries resample(const TimeSeries& s, double dt) {
  require(s.t.size() >= 2 && s.u.size() >= 2, ErrorKind::EmptySignal, "resample needs at least 2 samples");
  s.validate();
  const double span = s.span();
  require(dt > 0.0 && std::isfinite(dt), ErrorKind::InvalidStep, "dt must be positive");
  require(dt <= span, ErrorKind::InvalidStep, "dt exceeds the signal span");

  // Tolerate round-off so that span/dt landing on an integer keeps the endpoint.
  const auto n = static_cast<std::size_t>(std::floor(span / dt * (1.0 + 1e-12) + 1e-9)) + 1;
  UniformSeries out;
  out.dt = dt;
  out.t0 = s.t.front();
  out.label = s.label;
  out.source_id = s.source_id;
  out.u.resize(n);

  std::size_t k = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double tj = std::min(s.t.front() + static_cast<double>(j) * dt, s.t.back());
    while (k + 2 < s.t.size() && s.t[k + 1] <= tj) ++k;
    const double t0 = s.t[k], t1 = s.t[k + 1];
    const double w = std::clamp((tj - t0) / (t1 - t0), 0.0, 1.0);
    out.u[j] = s.u[k] + w * (s.u[k + 1] - s.u[k]);
  }
  return out;
}

inline UniformSeries resample(const UniformSeries& s, double dt) {
  TimeSeries ts;
  ts.t.resize(s.size());
  for (std::size_t j = 0; j < s.size(); ++j) ts.t[j] = s.time_at(j);
  ts.u = s.u;
  ts.label = s.label;
  ts.source_id = s.source_id;
  return resample(ts, dt);
}

/// Drops floor(alpha*N) samples from both ends.
inline UniformSeries trim(const UniformSeries& s, double alpha) {
  require(alpha >= 0.0 && alpha < 0.5, ErrorKind::InvalidArgument, "trim fraction must lie in [0, 0.5)");
  const std::size_t n = s.size();
  const auto cut = static_cast<std::size_t>(std::floor(alpha * static_cast<double>(n)));
  require(n >= 2 * cut + 2, ErrorKind::TooShort, "fewer than 2 samples remain after trimming");
  UniformSeries out = s;
  out.u.assign(s.u.begin() + static_cast<std::ptrdiff_t>(cut), s.u.end() - static_cast<std::ptrdiff_t>(cut));
  out.t0 = s.t0 + static_cast<double>(cut) * s.dt;
  return out;
}

/// M = floor((N - L)/hop) + 1 windows; the trailing remainder is discarded.
inline WindowSet windowize(const UniformSeries& s, std::size_t L, std::size_t hop) {
  require(L >= 2, ErrorKind::InvalidArgument, "window length must be at least 2");
  require(hop >= 1 && hop <= L, ErrorKind::InvalidArgument, "hop must lie in [1, L]");
  require(s.size() >= L, ErrorKind::TooShort, "signal shorter than one window");
  WindowSet ws;
  ws.L = L;
  ws.hop = hop;
  ws.dt = s.dt;
  const std::size_t m = (s.size() - L) / hop + 1;
  ws.windows.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto first = s.u.begin() + static_cast<std::ptrdiff_t>(i * hop);
    ws.windows.emplace_back(first, first + static_cast<std::ptrdiff_t>(L));
  }
  return ws;
}

/// Window length from the window-duration ratio: max(8, round(ratio * N)).
inline std::size_t window_length_from_ratio(double win_dur_ratio, std::size_t n_resampled) {
  require(win_dur_ratio > 0.0 && win_dur_ratio <= 1.0, ErrorKind::InvalidArgument,
          "win_dur_ratio must lie in (0, 1]");
  const auto l = static_cast<std::size_t>(std::llround(win_dur_ratio * static_cast<double>(n_resampled)));
  return std::max<std::size_t>(8, l);
}

}  // namespace spectemp
