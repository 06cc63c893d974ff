#pragma once

// Short-time spectra and the six per-window spectral features:
//   z1 dominant amplitude, z2 sideband symmetry, z3 second-peak offset,
//   z4 second-harmonic ratio, z5 Morlet CWT peak modulus, z6 CEEMDAN energy ratio.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "spectemp/core_signal.hpp"
#include "spectemp/emd.hpp"
#include "spectemp/error.hpp"
#include "spectemp/fft.hpp"

namespace spectemp::spectral {

inline constexpr double kPi = 3.14159265358979323846264338327950288;

struct Spectrogram {
  std::vector<std::vector<double>> frames;  // frames[m][k] = |X(m, w_k)|
  std::vector<double> freqs;
  std::vector<double> frame_times;  // window centres, seconds
  std::size_t window_len = 0;
  std::size_t hop = 0;
};

/// |DFT| of one frame, bins 0..n/2. Hann-tapered unless `hann` is false.
inline std::vector<double> magnitude_spectrum(std::span<const double> frame, bool hann = true) {
  std::vector<double> x(frame.begin(), frame.end());
  if (hann) {
    const auto w = fft::hann(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] *= w[i];
  }
  const auto spec = fft::rfft(x);
  std::vector<double> mag(spec.size());
  for (std::size_t k = 0; k < spec.size(); ++k) mag[k] = std::abs(spec[k]);
  return mag;
}

inline Spectrogram stft(const UniformSeries& s, std::size_t window_len, std::size_t hop) {
  require(window_len >= 2, ErrorKind::InvalidArgument, "window length must be >= 2");
  require(hop >= 1, ErrorKind::InvalidArgument, "hop must be >= 1");
  require(s.size() >= window_len, ErrorKind::TooShort, "signal shorter than one STFT frame");
  Spectrogram out;
  out.window_len = window_len;
  out.hop = hop;
  const std::size_t k = window_len / 2 + 1;
  const double df = 1.0 / (static_cast<double>(window_len) * s.dt);
  out.freqs.resize(k);
  for (std::size_t i = 0; i < k; ++i) out.freqs[i] = static_cast<double>(i) * df;
  const std::size_t frames = (s.size() - window_len) / hop + 1;
  for (std::size_t m = 0; m < frames; ++m) {
    const std::span<const double> frame(s.u.data() + m * hop, window_len);
    out.frames.push_back(magnitude_spectrum(frame));
    out.frame_times.push_back(s.time_at(m * hop) + 0.5 * static_cast<double>(window_len) * s.dt);
  }
  return out;
}

struct Peak {
  double amplitude = 0.0;
  std::size_t bin = 0;
};

/// Largest magnitude with the DC bin excluded (z1 = A1, k1 = bin).
inline Peak dominant_amplitude(std::span<const double> frame) {
  Peak p;
  if (frame.size() < 2) return p;
  p.bin = 1;
  p.amplitude = frame[1];
  for (std::size_t k = 2; k < frame.size(); ++k)
    if (frame[k] > p.amplitude) {
      p.amplitude = frame[k];
      p.bin = k;
    }
  return p;
}

/// |E_L - E_R| / (E_L + E_R) over `delta` bins either side of k1, clipped to the frame.
inline double sideband_symmetry(std::span<const double> frame, std::size_t k1, std::size_t delta = 5) {
  require(k1 < frame.size(), ErrorKind::InvalidArgument, "k1 outside the frame");
  double el = 0.0, er = 0.0;
  for (std::size_t k = k1 >= delta ? k1 - delta : 0; k < k1; ++k) el += frame[k] * frame[k];
  for (std::size_t k = k1 + 1; k <= std::min(frame.size() - 1, k1 + delta); ++k) er += frame[k] * frame[k];
  const double total = el + er;
  if (total <= 0.0) return 0.0;
  return std::clamp(std::abs(el - er) / total, 0.0, 1.0);
}

/// |f_k2 - f_k1| where k2 is the loudest non-DC bin outside k1 +/- guard.
inline double second_peak_offset(std::span<const double> frame, std::size_t k1, double df, std::size_t guard = 1) {
  double best = 0.0;
  std::size_t k2 = k1;
  for (std::size_t k = 1; k < frame.size(); ++k) {
    const std::size_t gap = k > k1 ? k - k1 : k1 - k;
    if (gap <= guard) continue;
    if (frame[k] > best) {
      best = frame[k];
      k2 = k;
    }
  }
  if (best <= 0.0) return 0.0;
  const std::size_t gap = k2 > k1 ? k2 - k1 : k1 - k2;
  return static_cast<double>(gap) * df;
}

/// X[k_2f] / A1 with k_2f the bin nearest 2*f1; 0 when 2*f1 lies past the last bin.
inline double harmonic_ratio(std::span<const double> frame, const Peak& dominant, double df) {
  if (dominant.amplitude <= 0.0 || frame.empty()) return 0.0;
  const double f1 = static_cast<double>(dominant.bin) * df;
  const double f_max = static_cast<double>(frame.size() - 1) * df;
  if (2.0 * f1 > f_max + 0.5 * df) return 0.0;
  const auto k2f = std::min(frame.size() - 1, static_cast<std::size_t>(std::llround(2.0 * f1 / df)));
  return frame[k2f] / dominant.amplitude;
}

/// n log-spaced scales (seconds) over [2*dt, window span / 4].
inline std::vector<double> default_scales(std::size_t n_samples, double dt, std::size_t count = 32) {
  require(count >= 1, ErrorKind::InvalidArgument, "need at least one scale");
  const double lo = 2.0 * dt;
  const double hi = std::max(lo, static_cast<double>(n_samples) * dt / 4.0);
  std::vector<double> s(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double f = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    s[i] = lo * std::pow(hi / lo, f);
  }
  return s;
}

/// Fourier transform of the analytic Morlet wavelet, pi^(-1/4) sqrt(2 pi) exp(-(w - w0)^2 / 2), w > 0.
inline double morlet_hat(double omega, double omega0) {
  if (omega <= 0.0) return 0.0;
  const double d = omega - omega0;
  return std::pow(kPi, -0.25) * std::sqrt(2.0 * kPi) * std::exp(-0.5 * d * d);
}

struct CwtPeak {
  double modulus = 0.0;
  std::size_t scale_index = 0;
  std::size_t shift = 0;
};

/// max_{a,b} |W(a,b)| with W(a,b) = a^(-1/2) int x(t) psi*((t-b)/a) dt, evaluated
/// per scale as IFFT(X(w) sqrt(a) psi_hat(a w)) on a zero-padded copy of the window.
inline CwtPeak cwt_peak(std::span<const double> x, double dt, std::span<const double> scales,
                        double omega0 = 6.0) {
  require(x.size() >= 16, ErrorKind::TooShort, "CWT needs at least 16 samples");
  require(!scales.empty(), ErrorKind::InvalidArgument, "no scales");
  const std::size_t n = x.size();
  std::size_t padded = 1;
  while (padded < 2 * n) padded <<= 1;
  std::vector<fft::cplx> in(padded, 0.0);
  for (std::size_t i = 0; i < n; ++i) in[i] = x[i];
  const auto spec = fft::dft(in);

  CwtPeak best;
  std::vector<fft::cplx> prod(padded);
  for (std::size_t si = 0; si < scales.size(); ++si) {
    const double a = scales[si];
    for (std::size_t k = 0; k < padded; ++k) {
      const double omega = 2.0 * kPi * static_cast<double>(k) / (static_cast<double>(padded) * dt);
      // Only non-negative frequencies below Nyquist feed the analytic wavelet.
      const double w = k <= padded / 2 ? std::sqrt(a) * morlet_hat(a * omega, omega0) : 0.0;
      prod[k] = spec[k] * w;
    }
    const auto coef = fft::dft(prod, /*inverse=*/true);
    for (std::size_t b = 0; b < n; ++b) {
      const double mod = std::abs(coef[b]) / static_cast<double>(padded);
      if (mod > best.modulus) best = {mod, si, b};
    }
  }
  return best;
}

inline double cwt_max(std::span<const double> x, double dt, std::span<const double> scales, double omega0 = 6.0) {
  return cwt_peak(x, dt, scales, omega0).modulus;
}

struct FeatureConfig {
  std::size_t sideband_delta = 5;
  std::size_t peak_guard = 1;
  std::size_t cwt_scales = 32;
  double omega0 = 6.0;
  std::size_t min_ceemdan_len = 64;
  bool remove_mean = true;  // subtract the window mean before analysis
  emd::CeemdanParams ceemdan;
};

struct SpectralFeatures {
  double z1 = 0.0;
  double z2 = 0.0;
  double z3 = 0.0;
  double z4 = 0.0;
  double z5 = 0.0;
  double z6 = 0.0;
  bool z6_valid = false;  // false when the window is too short or silent

  std::array<double, 6> to_array() const { return {z1, z2, z3, z4, z5, z6}; }
};

/// Treats the whole window as one Hann-tapered frame and assembles z1..z6.
/// With remove_mean set, a static offset cannot leak through the taper into
/// the low bins.
inline SpectralFeatures window_features(std::span<const double> raw, double dt, const FeatureConfig& cfg,
                                        std::uint64_t seed) {
  require(raw.size() >= 16, ErrorKind::TooShort, "feature window needs at least 16 samples");
  std::vector<double> centred(raw.begin(), raw.end());
  if (cfg.remove_mean) {
    double m = 0.0;
    for (double v : centred) m += v;
    m /= static_cast<double>(centred.size());
    for (double& v : centred) v -= m;
  }
  const std::span<const double> window(centred);
  const double df = 1.0 / (static_cast<double>(window.size()) * dt);
  const auto frame = magnitude_spectrum(window);
  const auto peak = dominant_amplitude(frame);

  SpectralFeatures z;
  z.z1 = peak.amplitude;
  z.z2 = sideband_symmetry(frame, peak.bin, cfg.sideband_delta);
  z.z3 = second_peak_offset(frame, peak.bin, df, cfg.peak_guard);
  z.z4 = harmonic_ratio(frame, peak, df);
  const auto scales = default_scales(window.size(), dt, cfg.cwt_scales);
  z.z5 = cwt_max(window, dt, scales, cfg.omega0);

  double energy = 0.0;
  for (double v : window) energy += v * v;
  if (window.size() >= cfg.min_ceemdan_len && energy > 0.0) {
    const auto d = emd::ceemdan(window, cfg.ceemdan, seed);
    z.z6 = emd::energy_ratio(window, d);
    z.z6_valid = true;
  }
  return z;
}

}  // namespace spectemp::spectral
