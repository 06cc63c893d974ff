#pragma once

// Empirical mode decomposition and its complete-ensemble variant with
// adaptive noise (CEEMDAN). Envelopes are natural cubic splines through the
// local extrema, extended at both ends by mirroring the two nearest extrema.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "spectemp/error.hpp"
#include "spectemp/rng.hpp"
#include "spectemp/stats.hpp"

namespace spectemp::emd {

struct ImfSet {
  std::vector<std::vector<double>> imfs;
  std::vector<double> residue;
  bool converged = true;  // false if any sift hit the iteration cap

  std::vector<double> reconstruct() const {
    std::vector<double> out = residue;
    for (const auto& imf : imfs)
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += imf[i];
    return out;
  }
};

struct SiftParams {
  double sd_threshold = 0.2;
  int max_iterations = 50;
};

struct CeemdanParams {
  int ensemble_size = 50;
  double noise_std_fraction = 0.2;
  int max_imfs = 10;
  SiftParams sift;
};

namespace detail {

struct Extrema {
  std::vector<std::size_t> maxima;
  std::vector<std::size_t> minima;
};

inline Extrema find_extrema(std::span<const double> x) {
  Extrema e;
  const std::size_t n = x.size();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    // Plateaus count once, at their first sample.
    if (x[i] > x[i - 1] && x[i] >= x[i + 1]) {
      std::size_t j = i;
      while (j + 1 < n && x[j + 1] == x[i]) ++j;
      if (j + 1 < n && x[j + 1] < x[i]) e.maxima.push_back(i);
    } else if (x[i] < x[i - 1] && x[i] <= x[i + 1]) {
      std::size_t j = i;
      while (j + 1 < n && x[j + 1] == x[i]) ++j;
      if (j + 1 < n && x[j + 1] > x[i]) e.minima.push_back(i);
    }
  }
  return e;
}

/// Natural cubic spline through (xs, ys), evaluated at 0, 1, ..., n-1.
inline std::vector<double> spline_on_grid(const std::vector<double>& xs, const std::vector<double>& ys,
                                          std::size_t n) {
  const std::size_t k = xs.size();
  std::vector<double> out(n);
  if (k == 1) {
    std::fill(out.begin(), out.end(), ys[0]);
    return out;
  }
  std::vector<double> h(k - 1);
  for (std::size_t i = 0; i + 1 < k; ++i) h[i] = xs[i + 1] - xs[i];

  // Second derivatives with natural boundary conditions (Thomas algorithm).
  std::vector<double> m(k, 0.0);
  if (k > 2) {
    const std::size_t inner = k - 2;
    std::vector<double> diag(inner), upper(inner), rhs(inner);
    for (std::size_t i = 0; i < inner; ++i) {
      diag[i] = 2.0 * (h[i] + h[i + 1]);
      upper[i] = h[i + 1];
      rhs[i] = 6.0 * ((ys[i + 2] - ys[i + 1]) / h[i + 1] - (ys[i + 1] - ys[i]) / h[i]);
    }
    for (std::size_t i = 1; i < inner; ++i) {
      const double w = h[i] / diag[i - 1];
      diag[i] -= w * upper[i - 1];
      rhs[i] -= w * rhs[i - 1];
    }
    m[inner] = rhs[inner - 1] / diag[inner - 1];
    for (std::size_t i = inner - 1; i-- > 0;) m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
  }

  std::size_t seg = 0;
  for (std::size_t p = 0; p < n; ++p) {
    const double x = static_cast<double>(p);
    while (seg + 2 < k && x > xs[seg + 1]) ++seg;
    const double a = xs[seg + 1] - x, b = x - xs[seg], hs = h[seg];
    out[p] = (m[seg] * a * a * a + m[seg + 1] * b * b * b) / (6.0 * hs) +
             (ys[seg] / hs - m[seg] * hs / 6.0) * a + (ys[seg + 1] / hs - m[seg + 1] * hs / 6.0) * b;
  }
  return out;
}

/// Envelope through x[idx], mirrored about both end samples.
inline std::vector<double> envelope(std::span<const double> x, const std::vector<std::size_t>& idx) {
  const std::size_t n = x.size();
  const double last = static_cast<double>(n - 1);
  std::vector<double> kx, ky;
  const std::size_t mirror = std::min<std::size_t>(2, idx.size());
  for (std::size_t i = mirror; i-- > 0;) {
    if (idx[i] == 0) continue;
    kx.push_back(-static_cast<double>(idx[i]));
    ky.push_back(x[idx[i]]);
  }
  for (std::size_t i : idx) {
    kx.push_back(static_cast<double>(i));
    ky.push_back(x[i]);
  }
  for (std::size_t i = 0; i < mirror; ++i) {
    const std::size_t src = idx[idx.size() - 1 - i];
    if (src == n - 1) continue;
    kx.push_back(2.0 * last - static_cast<double>(src));
    ky.push_back(x[src]);
  }
  return spline_on_grid(kx, ky, n);
}

inline std::size_t extrema_count(std::span<const double> x) {
  const auto e = find_extrema(x);
  return e.maxima.size() + e.minima.size();
}

}  // namespace detail

/// Sifts x until the Cauchy SD criterion holds; returns the IMF.
/// `converged` is cleared when the iteration cap is hit first.
inline std::vector<double> sift(std::span<const double> x, const SiftParams& p, bool* converged = nullptr) {
  std::vector<double> h(x.begin(), x.end());
  if (converged) *converged = true;
  for (int it = 0; it < p.max_iterations; ++it) {
    const auto e = detail::find_extrema(h);
    if (e.maxima.empty() || e.minima.empty() || e.maxima.size() + e.minima.size() < 3) return h;
    const auto upper = detail::envelope(h, e.maxima);
    const auto lower = detail::envelope(h, e.minima);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
      const double mean = 0.5 * (upper[i] + lower[i]);
      num += mean * mean;
      den += h[i] * h[i];
      h[i] -= mean;
    }
    if (den <= 0.0 || num / den < p.sd_threshold) return h;
  }
  if (converged) *converged = false;
  return h;
}

/// Classical EMD: up to max_imfs modes, stopping once the residue has fewer than 3 extrema.
inline ImfSet emd(std::span<const double> x, int max_imfs = 10, const SiftParams& p = {}) {
  ImfSet out;
  out.residue.assign(x.begin(), x.end());
  for (int k = 0; k < max_imfs; ++k) {
    if (detail::extrema_count(out.residue) < 3) break;
    bool ok = true;
    auto imf = sift(out.residue, p, &ok);
    out.converged = out.converged && ok;
    for (std::size_t i = 0; i < imf.size(); ++i) out.residue[i] -= imf[i];
    out.imfs.push_back(std::move(imf));
  }
  return out;
}

/// CEEMDAN. Stage k adds beta_k * E_k(w_i) / std(E_k(w_i)) to the current
/// residue, where E_k(w_i) is the k-th EMD mode of the i-th white-noise
/// realization and beta_k = noise_std_fraction * std(residue); the stage IMF is
/// the ensemble mean of the first sifted mode, and the residue is updated by
/// subtraction, so the IMFs and residue sum back to the input.
inline ImfSet ceemdan(std::span<const double> u, const CeemdanParams& p, std::uint64_t seed) {
  require(u.size() >= 64, ErrorKind::TooShort, "CEEMDAN needs at least 64 samples");
  require(p.ensemble_size >= 1, ErrorKind::InvalidArgument, "ensemble size must be >= 1");
  const std::size_t n = u.size();
  const auto ens = static_cast<std::size_t>(p.ensemble_size);

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> noise(ens, std::vector<double>(n));
  for (auto& w : noise)
    for (double& v : w) v = normal(rng);

  // Noise modes: stage 0 uses the raw noise, stage k >= 1 its k-th EMD mode.
  std::vector<std::vector<std::vector<double>>> noise_modes(ens);
  for (std::size_t i = 0; i < ens; ++i) {
    auto d = emd(noise[i], p.max_imfs, p.sift);
    noise_modes[i].push_back(noise[i]);
    for (auto& imf : d.imfs) noise_modes[i].push_back(std::move(imf));
    for (auto& mode : noise_modes[i]) {
      const double sd = stats::stddev(mode);
      if (sd > 0.0)
        for (double& v : mode) v /= sd;
    }
  }

  ImfSet out;
  out.residue.assign(u.begin(), u.end());
  std::vector<double> noisy(n);
  for (int k = 0; k < p.max_imfs; ++k) {
    if (detail::extrema_count(out.residue) < 3) break;
    const double beta = p.noise_std_fraction * stats::stddev(out.residue);
    std::vector<double> imf(n, 0.0);
    for (std::size_t i = 0; i < ens; ++i) {
      const auto stage = static_cast<std::size_t>(k);
      const bool has_mode = stage < noise_modes[i].size();
      for (std::size_t t = 0; t < n; ++t)
        noisy[t] = out.residue[t] + (has_mode ? beta * noise_modes[i][stage][t] : 0.0);
      bool ok = true;
      const auto mode = sift(noisy, p.sift, &ok);
      out.converged = out.converged && ok;
      for (std::size_t t = 0; t < n; ++t) imf[t] += mode[t];
    }
    for (double& v : imf) v /= static_cast<double>(ens);
    for (std::size_t t = 0; t < n; ++t) out.residue[t] -= imf[t];
    out.imfs.push_back(std::move(imf));
  }
  return out;
}

/// sum ||IMF_i||^2 / ||x||^2, residue excluded.
inline double energy_ratio(std::span<const double> x, const ImfSet& d) {
  double ex = 0.0;
  for (double v : x) ex += v * v;
  require(ex > 0.0, ErrorKind::SilentSignal, "signal has zero energy");
  double e = 0.0;
  for (const auto& imf : d.imfs)
    for (double v : imf) e += v * v;
  return e / ex;
}

}  // namespace spectemp::emd
