#pragma once

// Seeded five-class cantilever-beam surrogate. Each trial is broadband
// Gaussian base excitation through three second-order modal resonators,
// plus a static tip offset and white measurement noise.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "spectemp/core_signal.hpp"
#include "spectemp/error.hpp"
#include "spectemp/parallel.hpp"
#include "spectemp/rng.hpp"

namespace spectemp::synthgen {

inline constexpr std::size_t kModes = 3;
inline constexpr std::size_t kClassCount = 5;

inline const std::array<const char*, kClassCount> kClassNames = {"no_mass", "mass_pos1", "mass_pos2", "mass_pos3",
                                                                  "mass_pos4"};

struct BeamConfig {
  double fs = 4000.0;
  double duration = 10.0;
  std::array<double, kModes> modal_freqs = {12.0, 33.0, 68.0};  // no_mass, Hz
  std::array<double, kClassCount> freq_factors = {1.00, 0.99, 0.97, 0.93, 0.90};
  std::array<double, kModes> damping = {0.03, 0.02, 0.015};
  std::array<double, kModes> mode_gains = {1.0, 0.6, 0.4};  // modal RMS, mm
  std::array<double, kClassCount> gain_factors = {1.00, 1.30, 0.75, 1.60, 1.15};
  std::array<double, kClassCount> static_offsets = {0.0, 0.5, 1.5, 3.0, 4.0};  // mm
  double offset_jitter = 0.3;  // per-trial std of the static offset, mm
  double noise_snr_db = 30.0;
  double burn_in = 2.0;  // discarded resonator start-up, s
  std::size_t n_trials = 40;
  std::size_t n_splits = 5;
  std::uint64_t seed = 42;

  /// Modal frequencies of class c.
  std::array<double, kModes> class_freqs(std::size_t c) const {
    std::array<double, kModes> f{};
    for (std::size_t k = 0; k < kModes; ++k) f[k] = modal_freqs[k] * freq_factors[c];
    return f;
  }

  void validate() const {
    auto check = [](bool ok, const std::string& msg) { require(ok, ErrorKind::InvalidConfig, msg); };
    check(fs > 0.0 && std::isfinite(fs), "fs must be positive");
    check(duration > 0.0 && std::isfinite(duration), "duration must be positive");
    check(burn_in >= 0.0, "burn_in must be >= 0");
    check(std::isfinite(noise_snr_db), "noise_snr_db must be finite");
    check(offset_jitter >= 0.0, "offset_jitter must be >= 0");
    check(n_trials >= 1, "n_trials must be >= 1");
    check(n_trials >= n_splits, "n_trials must be >= n_splits");
    check(static_cast<std::size_t>(duration * fs) >= 2, "trial shorter than 2 samples");
    for (std::size_t k = 0; k < kModes; ++k) {
      check(damping[k] > 0.0 && damping[k] < 1.0, "damping ratios must lie in (0, 1)");
      check(mode_gains[k] >= 0.0, "mode gains must be >= 0");
    }
    for (std::size_t c = 0; c < kClassCount; ++c) {
      check(freq_factors[c] > 0.0 && gain_factors[c] >= 0.0, "class factors must be positive");
      for (double f : class_freqs(c)) {
        check(f > 0.0, "modal frequencies must be positive");
        check(fs > 2.0 * f, "fs must exceed twice every modal frequency");
      }
    }
  }
};

/// Stable two-pole resonator with the impulse-invariant poles of a mode at f
/// Hz with damping ratio zeta, driven by x.
inline std::vector<double> resonate(const std::vector<double>& x, double f, double zeta, double fs) {
  constexpr double two_pi = 6.283185307179586476925286766559;
  const double w = two_pi * f;
  const double r = std::exp(-zeta * w / fs);
  const double a1 = 2.0 * r * std::cos(w * std::sqrt(1.0 - zeta * zeta) / fs);
  const double a2 = -r * r;
  std::vector<double> y(x.size(), 0.0);
  double y1 = 0.0, y2 = 0.0;
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double v = x[n] + a1 * y1 + a2 * y2;
    y[n] = v;
    y2 = y1;
    y1 = v;
  }
  return y;
}

inline double rms(const std::vector<double>& x, std::size_t from = 0) {
  double acc = 0.0;
  for (std::size_t i = from; i < x.size(); ++i) acc += x[i] * x[i];
  return x.size() > from ? std::sqrt(acc / static_cast<double>(x.size() - from)) : 0.0;
}

/// One trial of class c. Each modal response is scaled to its target RMS over
/// the kept span, as a closed-loop vibration controller holds the level.
inline TimeSeries generate_trial(const BeamConfig& cfg, std::size_t c, std::size_t trial) {
  Rng rng(derive_seed(cfg.seed, c * cfg.n_trials + trial));
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto n = static_cast<std::size_t>(std::llround(cfg.duration * cfg.fs));
  const auto burn = static_cast<std::size_t>(std::llround(cfg.burn_in * cfg.fs));

  std::vector<double> drive(burn + n);
  for (double& v : drive) v = normal(rng);
  const double offset = cfg.static_offsets[c] + cfg.offset_jitter * normal(rng);

  std::vector<double> vib(n, 0.0);
  const auto freqs = cfg.class_freqs(c);
  for (std::size_t k = 0; k < kModes; ++k) {
    const auto y = resonate(drive, freqs[k], cfg.damping[k], cfg.fs);
    const double level = rms(y, burn);
    if (level <= 0.0) continue;
    const double g = cfg.mode_gains[k] * cfg.gain_factors[c] / level;
    for (std::size_t i = 0; i < n; ++i) vib[i] += g * y[burn + i];
  }
  const double noise_sd = rms(vib) * std::pow(10.0, -cfg.noise_snr_db / 20.0);

  TimeSeries s;
  s.t.resize(n);
  s.u.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.t[i] = static_cast<double>(i) / cfg.fs;
    s.u[i] = offset + vib[i] + noise_sd * normal(rng);
  }
  s.label = static_cast<int>(c);
  char id[64];
  std::snprintf(id, sizeof id, "%s_%03zu", kClassNames[c], trial);
  s.source_id = id;
  return s;
}

/// All trials, class-major: n_trials of class 0, then class 1, ...
inline std::vector<TimeSeries> generate(const BeamConfig& cfg, std::size_t threads = 1) {
  cfg.validate();
  std::vector<TimeSeries> out(kClassCount * cfg.n_trials);
  parallel_for(out.size(), threads,
               [&](std::size_t i) { out[i] = generate_trial(cfg, i / cfg.n_trials, i % cfg.n_trials); });
  return out;
}

}  // namespace spectemp::synthgen
