#pragma once

// The three classifier inputs:
//   Base  raw fixed-length sequences taken straight from the acquisition,
//   STA   resampled, trimmed, fixed-length windows (one M x L matrix per record),
//   HSTF  STA windows with their spectral features appended (M x (L + 6)).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spectemp/core_signal.hpp"
#include "spectemp/error.hpp"
#include "spectemp/parallel.hpp"
#include "spectemp/rng.hpp"
#include "spectemp/spectral.hpp"

namespace spectemp::fusion {

inline constexpr std::size_t kFeatureCount = 6;

/// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  bool operator==(const Matrix&) const = default;
};

enum class Kind { Base, STA, HSTF };

inline const char* to_string(Kind k) {
  switch (k) {
    case Kind::Base: return "base";
    case Kind::STA: return "sta";
    case Kind::HSTF: return "hstf";
  }
  return "?";
}

struct Sample {
  Matrix x;
  int label = 0;
  std::string source_id;
};

struct Representation {
  Kind kind = Kind::Base;
  double tau = 0.0;          // resampling interval (STA/HSTF), raw step for Base
  std::size_t L = 0;         // samples per window / sequence
  std::size_t hop = 0;
  std::vector<Sample> samples;
  std::size_t z6_fallbacks = 0;  // HSTF windows whose z6 fell back to 0

  std::size_t rows() const { return samples.empty() ? 0 : samples.front().x.rows; }
  std::size_t cols() const { return samples.empty() ? 0 : samples.front().x.cols; }
};

inline int label_of(const TimeSeries& s) {
  require(s.label.has_value(), ErrorKind::InvalidArgument, "signal '" + s.source_id + "' has no label");
  require(*s.label >= 0 && *s.label <= 4, ErrorKind::InvalidArgument, "labels must lie in 0..4");
  return *s.label;
}

struct BaseParams {
  std::size_t timesteps = 24;
  std::size_t start_row = 4000;
  double sampling_ratio = 0.3;
};

/// Non-overlapping raw sequences from start_row on, thinned to a uniformly
/// spaced `sampling_ratio` fraction. Each sequence is one 1 x timesteps sample.
inline Representation build_base(const std::vector<TimeSeries>& signals, const BaseParams& p) {
  require(p.timesteps >= 2, ErrorKind::InvalidArgument, "timesteps must be >= 2");
  require(p.sampling_ratio > 0.0 && p.sampling_ratio <= 1.0, ErrorKind::InvalidArgument,
          "sampling_ratio must lie in (0, 1]");
  Representation rep;
  rep.kind = Kind::Base;
  rep.L = p.timesteps;
  rep.hop = p.timesteps;
  for (const auto& s : signals) {
    const int label = label_of(s);
    require(s.size() > p.start_row, ErrorKind::TooShort, "start row lies beyond '" + s.source_id + "'");
    const std::size_t n_seq = (s.size() - p.start_row) / p.timesteps;
    require(n_seq >= 1, ErrorKind::TooShort, "no full sequence after start row in '" + s.source_id + "'");
    if (rep.tau == 0.0 && s.size() >= 2) rep.tau = s.span() / static_cast<double>(s.size() - 1);
    const auto keep = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(static_cast<double>(n_seq) * p.sampling_ratio + 1e-9)));
    for (std::size_t k = 0; k < keep; ++k) {
      const std::size_t seq = k * n_seq / keep;
      Sample smp;
      smp.label = label;
      smp.source_id = s.source_id;
      smp.x = Matrix(1, p.timesteps);
      const std::size_t first = p.start_row + seq * p.timesteps;
      std::copy_n(s.u.begin() + static_cast<std::ptrdiff_t>(first), p.timesteps, smp.x.data.begin());
      rep.samples.push_back(std::move(smp));
    }
  }
  return rep;
}

struct WindowParams {
  double tau = 0.02;
  double alpha = 0.02;
  double win_dur_ratio = 0.04;
  std::size_t L = 0;    // 0: derive from win_dur_ratio
  std::size_t hop = 0;  // 0: hop = L
};

/// max(8, round(ratio * N)) with N the shortest resampled record.
inline std::size_t resolve_window_length(const std::vector<TimeSeries>& signals, const WindowParams& p) {
  if (p.L > 0) return p.L;
  require(!signals.empty(), ErrorKind::EmptySignal, "no signals");
  std::size_t n_min = SIZE_MAX;
  for (const auto& s : signals) {
    const double span = s.span();
    n_min = std::min(n_min, static_cast<std::size_t>(std::floor(span / p.tau * (1.0 + 1e-12) + 1e-9)) + 1);
  }
  return window_length_from_ratio(p.win_dur_ratio, n_min);
}

/// resample -> trim -> windowize for every record, cut to the common window count.
inline std::vector<WindowSet> aligned_windows(const std::vector<TimeSeries>& signals, const WindowParams& p,
                                              std::size_t L, std::size_t hop) {
  std::vector<WindowSet> out;
  out.reserve(signals.size());
  std::size_t m_min = SIZE_MAX;
  for (const auto& s : signals) {
    label_of(s);
    out.push_back(windowize(trim(resample(s, p.tau), p.alpha), L, hop));
    m_min = std::min(m_min, out.back().count());
  }
  for (auto& ws : out) ws.windows.resize(m_min);
  return out;
}

inline Representation build_sta(const std::vector<TimeSeries>& signals, const WindowParams& p) {
  Representation rep;
  rep.kind = Kind::STA;
  rep.tau = p.tau;
  rep.L = resolve_window_length(signals, p);
  rep.hop = p.hop > 0 ? p.hop : rep.L;
  const auto sets = aligned_windows(signals, p, rep.L, rep.hop);
  for (std::size_t i = 0; i < signals.size(); ++i) {
    Sample smp;
    smp.label = *signals[i].label;
    smp.source_id = signals[i].source_id;
    smp.x = Matrix(sets[i].count(), rep.L);
    for (std::size_t m = 0; m < sets[i].count(); ++m)
      std::copy(sets[i].windows[m].begin(), sets[i].windows[m].end(), smp.x.row(m).begin());
    rep.samples.push_back(std::move(smp));
  }
  return rep;
}

/// Seed for window m of record i, derived from the root seed.
inline std::uint64_t window_seed(std::uint64_t root, std::size_t record, std::size_t window) {
  return derive_seed(derive_seed(root, record), window);
}

/// Rows are [x^(m) | z1..z6]; the first L columns equal build_sta's rows.
/// z-columns are left unstandardized here; see ZStandardizer.
inline Representation build_hstf(const std::vector<TimeSeries>& signals, const WindowParams& p,
                                 const spectral::FeatureConfig& fc, std::uint64_t seed,
                                 std::size_t threads = 1) {
  Representation rep;
  rep.kind = Kind::HSTF;
  rep.tau = p.tau;
  rep.L = resolve_window_length(signals, p);
  rep.hop = p.hop > 0 ? p.hop : rep.L;
  const auto sets = aligned_windows(signals, p, rep.L, rep.hop);
  rep.samples.resize(signals.size());
  std::vector<std::size_t> fallbacks(signals.size(), 0);
  parallel_for(signals.size(), threads, [&](std::size_t i) {
    Sample& smp = rep.samples[i];
    smp.label = *signals[i].label;
    smp.source_id = signals[i].source_id;
    smp.x = Matrix(sets[i].count(), rep.L + kFeatureCount);
    for (std::size_t m = 0; m < sets[i].count(); ++m) {
      const auto& w = sets[i].windows[m];
      auto row = smp.x.row(m);
      std::copy(w.begin(), w.end(), row.begin());
      const auto z = spectral::window_features(w, sets[i].dt, fc, window_seed(seed, i, m));
      if (!z.z6_valid) ++fallbacks[i];
      const auto za = z.to_array();
      std::copy(za.begin(), za.end(), row.begin() + static_cast<std::ptrdiff_t>(rep.L));
    }
  });
  for (auto f : fallbacks) rep.z6_fallbacks += f;
  return rep;
}

/// Per-column standardization of the trailing feature columns of HSTF rows,
/// fitted on training samples only.
struct ZStandardizer {
  std::size_t first_col = 0;
  std::vector<double> mean;
  std::vector<double> scale;

  static ZStandardizer fit(const Representation& rep, std::span<const std::size_t> train) {
    ZStandardizer z;
    require(rep.kind == Kind::HSTF, ErrorKind::InvalidArgument, "feature standardization applies to HSTF only");
    z.first_col = rep.L;
    const std::size_t k = rep.cols() - rep.L;
    z.mean.assign(k, 0.0);
    z.scale.assign(k, 0.0);
    std::size_t n = 0;
    for (std::size_t idx : train) {
      const auto& x = rep.samples[idx].x;
      for (std::size_t r = 0; r < x.rows; ++r, ++n)
        for (std::size_t c = 0; c < k; ++c) z.mean[c] += x(r, z.first_col + c);
    }
    require(n > 0, ErrorKind::EmptyTrain, "no training rows");
    for (double& m : z.mean) m /= static_cast<double>(n);
    for (std::size_t idx : train) {
      const auto& x = rep.samples[idx].x;
      for (std::size_t r = 0; r < x.rows; ++r)
        for (std::size_t c = 0; c < k; ++c) {
          const double d = x(r, z.first_col + c) - z.mean[c];
          z.scale[c] += d * d;
        }
    }
    for (double& s : z.scale) {
      s = std::sqrt(s / static_cast<double>(n));
      if (!(s > 1e-12)) s = 1.0;
    }
    return z;
  }

  Matrix apply(const Matrix& x) const {
    Matrix out = x;
    for (std::size_t r = 0; r < out.rows; ++r)
      for (std::size_t c = 0; c < mean.size(); ++c)
        out(r, first_col + c) = (out(r, first_col + c) - mean[c]) / scale[c];
    return out;
  }
};

}  // namespace spectemp::fusion
