#pragma once

// Data-driven selection of the resampling interval.
//
// For every candidate interval the raw records are read on the grid
// {j * dtau : j * dtau <= T}. Each grid point contributes an ANOVA F-score
// (class separability), the grid as a whole a distance-weighted correlation
// penalty (redundancy), and the grid size a cardinality cost. The combined
// score is squashed to [0, 1] with a logistic map.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "spectemp/core_signal.hpp"
#include "spectemp/error.hpp"
#include "spectemp/fft.hpp"
#include "spectemp/stats.hpp"

namespace spectemp::tau {

struct PsdEstimate {
  std::vector<double> freqs;  // Hz, ascending
  std::vector<double> power;  // one-sided density
  double total_power = 0.0;   // plain sum of power
  double df = 0.0;
};

/// Welch estimate: Hann segments of nperseg samples, 50% overlap, mean removed
/// per segment, one-sided density scaling (white noise of variance s^2 gives s^2/(fs/2)).
inline PsdEstimate estimate_psd(const UniformSeries& s, std::size_t nperseg) {
  require(nperseg >= 16, ErrorKind::InvalidArgument, "nperseg must be >= 16");
  require(s.size() >= nperseg, ErrorKind::TooShort, "signal shorter than one Welch segment");
  const double fs = 1.0 / s.dt;
  const auto win = fft::hann(nperseg);
  double win_power = 0.0;
  for (double w : win) win_power += w * w;

  const std::size_t step = std::max<std::size_t>(1, nperseg / 2);
  const std::size_t n_bins = nperseg / 2 + 1;
  std::vector<double> acc(n_bins, 0.0);
  std::vector<double> seg(nperseg);
  std::size_t n_seg = 0;
  for (std::size_t start = 0; start + nperseg <= s.size(); start += step, ++n_seg) {
    const std::span<const double> raw(s.u.data() + start, nperseg);
    const double m = stats::mean(raw);
    for (std::size_t i = 0; i < nperseg; ++i) seg[i] = (raw[i] - m) * win[i];
    const auto spec = fft::rfft(seg);
    for (std::size_t k = 0; k < n_bins; ++k) acc[k] += std::norm(spec[k]);
  }

  PsdEstimate out;
  out.df = fs / static_cast<double>(nperseg);
  out.freqs.resize(n_bins);
  out.power.resize(n_bins);
  const bool even = nperseg % 2 == 0;
  for (std::size_t k = 0; k < n_bins; ++k) {
    double p = acc[k] / (static_cast<double>(n_seg) * fs * win_power);
    const bool edge = k == 0 || (even && k == n_bins - 1);
    if (!edge) p *= 2.0;
    out.freqs[k] = static_cast<double>(k) * out.df;
    out.power[k] = p;
    out.total_power += p;
  }
  return out;
}

/// Bin-wise mean of PSDs sharing one frequency axis.
inline PsdEstimate average_psd(std::span<const PsdEstimate> psds) {
  require(!psds.empty(), ErrorKind::InvalidArgument, "no spectra to average");
  PsdEstimate out = psds.front();
  for (std::size_t i = 1; i < psds.size(); ++i) {
    require(psds[i].power.size() == out.power.size(), ErrorKind::LengthMismatch, "spectra differ in length");
    for (std::size_t k = 0; k < out.power.size(); ++k) out.power[k] += psds[i].power[k];
  }
  out.total_power = 0.0;
  for (double& p : out.power) {
    p /= static_cast<double>(psds.size());
    out.total_power += p;
  }
  return out;
}

/// Smallest frequency whose cumulative power reaches `fraction` of the total,
/// interpolated linearly between neighbouring bins.
inline double critical_frequency(const PsdEstimate& p, double fraction = 0.95) {
  require(fraction > 0.0 && fraction <= 1.0, ErrorKind::InvalidArgument, "fraction must lie in (0, 1]");
  const double total = std::accumulate(p.power.begin(), p.power.end(), 0.0);
  require(total > 0.0, ErrorKind::SilentSignal, "spectrum carries no power");
  const double target = fraction * total;
  double cum = 0.0;
  for (std::size_t k = 0; k < p.power.size(); ++k) {
    const double prev = cum;
    cum += p.power[k];
    if (cum >= target * (1.0 - 1e-12)) {
      if (k == 0 || p.power[k] <= 0.0) return p.freqs[k];
      const double w = std::clamp((target - prev) / p.power[k], 0.0, 1.0);
      return p.freqs[k - 1] + w * (p.freqs[k] - p.freqs[k - 1]);
    }
  }
  return p.freqs.back();
}

struct NyquistBand {
  double nyquist_dt = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

inline NyquistBand nyquist_band(double f_star, double beta = 0.5, double gamma = 3.0) {
  require(f_star > 0.0, ErrorKind::InvalidArgument, "critical frequency must be positive");
  require(beta > 0.0 && gamma >= beta, ErrorKind::InvalidArgument, "band factors need 0 < beta <= gamma");
  const double dt = 1.0 / (2.0 * f_star);
  return {dt, beta * dt, gamma * dt};
}

/// Between-class sum of squares over within-class sum of squares plus eps,
/// without degrees-of-freedom normalization. Capped at 1/eps.
inline double anova_f_score(std::span<const std::vector<double>> groups, double eps = 1e-12) {
  require(groups.size() >= 2, ErrorKind::DegenerateClasses, "F-score needs at least 2 classes");
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& g : groups) {
    require(g.size() >= 2, ErrorKind::DegenerateClasses, "every class needs at least 2 samples");
    total += std::accumulate(g.begin(), g.end(), 0.0);
    n += g.size();
  }
  const double grand = total / static_cast<double>(n);
  double between = 0.0, within = 0.0;
  for (const auto& g : groups) {
    const double mc = stats::mean(g);
    between += static_cast<double>(g.size()) * (mc - grand) * (mc - grand);
    for (double v : g) within += (v - mc) * (v - mc);
  }
  return std::min(between / (within + eps), 1.0 / eps);
}

/// R = 2/(M(M-1)) * sum_{i<j} |r(tau_i, tau_j)| exp(-|tau_i - tau_j| / ell).
/// values[j] holds the samples observed at grid point tau[j]; a grid point
/// with zero variance contributes r = 0.
inline double redundancy_penalty(std::span<const std::vector<double>> values, std::span<const double> taus,
                                 double ell) {
  const std::size_t m = values.size();
  require(m >= 2, ErrorKind::DegenerateGrid, "redundancy needs at least 2 grid points");
  require(taus.size() == m, ErrorKind::LengthMismatch, "grid times and values differ in length");
  require(ell > 0.0, ErrorKind::InvalidArgument, "decay length must be positive");
  double acc = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      acc += std::abs(stats::pearson(values[i], values[j])) * std::exp(-std::abs(taus[i] - taus[j]) / ell);
  return 2.0 * acc / (static_cast<double>(m) * static_cast<double>(m - 1));
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// S = logistic(mean_F - lambda_r * R - lambda_m * M / T).
inline double combined_score(double mean_f, double r, std::size_t m, double duration, double lambda_r,
                             double lambda_m) {
  require(m >= 1, ErrorKind::InvalidArgument, "grid must hold at least one point");
  require(duration > 0.0, ErrorKind::InvalidArgument, "duration must be positive");
  return logistic(mean_f - lambda_r * r - lambda_m * static_cast<double>(m) / duration);
}

/// Index of the point farthest from the chord joining the curve's endpoints,
/// both axes rescaled to [0, 1]. Ties resolve to the lowest index.
inline std::size_t knee_index(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && !x.empty(), ErrorKind::LengthMismatch, "knee needs matching nonempty axes");
  const std::size_t n = x.size();
  if (n < 3) return 0;
  const auto [ymin_it, ymax_it] = std::minmax_element(y.begin(), y.end());
  const double xr = x.back() - x.front();
  const double yr = *ymax_it - *ymin_it;
  if (xr == 0.0 || yr == 0.0) return 0;
  auto nx = [&](std::size_t i) { return (x[i] - x.front()) / xr; };
  auto ny = [&](std::size_t i) { return (y[i] - *ymin_it) / yr; };
  const double x0 = nx(0), y0 = ny(0), x1 = nx(n - 1), y1 = ny(n - 1);
  const double len = std::hypot(x1 - x0, y1 - y0);
  std::size_t best = 0;
  double best_d = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = std::abs((x1 - x0) * (y0 - ny(i)) - (x0 - nx(i)) * (y1 - y0)) / len;
    if (d > best_d + 1e-15) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

struct ScorePoint {
  double tau = 0.0;
  double score = 0.0;
  double mean_f = 0.0;
  double redundancy = 0.0;
  std::size_t grid_size = 0;
};

struct TauScoreCurve {
  int class_label = 0;
  double f_star_class = 0.0;  // this class's 95%-energy frequency
  double nyquist_dt = 0.0;    // shared reference interval 1/(2 max_c f*_c)
  std::vector<ScorePoint> candidates;
  double best_tau = 0.0;
  double knee_tau = 0.0;
  double s_star = 0.0;
};

struct CommonTau {
  double tau_best_common = 0.0;
  double tau_knee_common = 0.0;
  double constraint_floor = 0.0;
};

/// S*-weighted means of the per-class best and knee intervals, floored at the
/// largest per-class Nyquist interval.
inline CommonTau common_tau(std::span<const double> best, std::span<const double> knee,
                            std::span<const double> s_star, std::span<const double> nyquist_dt) {
  require(!best.empty(), ErrorKind::InvalidArgument, "no curves");
  require(best.size() == knee.size() && best.size() == s_star.size() && best.size() == nyquist_dt.size(),
          ErrorKind::LengthMismatch, "per-class columns differ in length");
  double wsum = 0.0, b = 0.0, k = 0.0;
  for (std::size_t c = 0; c < best.size(); ++c) {
    require(s_star[c] > 0.0, ErrorKind::InvalidArgument, "S* weights must be positive");
    wsum += s_star[c];
    b += s_star[c] * best[c];
    k += s_star[c] * knee[c];
  }
  CommonTau out;
  out.constraint_floor = *std::max_element(nyquist_dt.begin(), nyquist_dt.end());
  out.tau_best_common = std::max(b / wsum, out.constraint_floor);
  out.tau_knee_common = std::max(k / wsum, out.constraint_floor);
  return out;
}

inline CommonTau common_tau(std::span<const TauScoreCurve> curves) {
  std::vector<double> best, knee, s, nyq;
  for (const auto& c : curves) {
    best.push_back(c.best_tau);
    knee.push_back(c.knee_tau);
    s.push_back(c.s_star);
    nyq.push_back(c.nyquist_dt);
  }
  return common_tau(best, knee, s, nyq);
}

/// Fills in best/knee/S* from the candidate list.
inline void annotate_curve(TauScoreCurve& curve) {
  require(!curve.candidates.empty(), ErrorKind::InvalidArgument, "curve has no candidates");
  std::vector<double> x, y;
  for (const auto& p : curve.candidates) {
    x.push_back(p.tau);
    y.push_back(p.score);
  }
  const auto best = static_cast<std::size_t>(std::distance(y.begin(), std::max_element(y.begin(), y.end())));
  curve.best_tau = x[best];
  curve.s_star = y[best];
  curve.knee_tau = x[knee_index(x, y)];
}

struct SweepParams {
  std::size_t n_candidates = 32;
  double lambda_r = 0.5;
  double lambda_m_coef = 0.01;  // lambda_m = coef * T / M_ref
  double eps = 1e-12;
  double ell = 0.0;             // decay length; <= 0 means the Nyquist interval
};

/// n log-spaced values covering [lo, hi] inclusive.
inline std::vector<double> log_spaced(double lo, double hi, std::size_t n) {
  require(lo > 0.0 && hi >= lo, ErrorKind::InvalidArgument, "log spacing needs 0 < lo <= hi");
  require(n >= 1, ErrorKind::InvalidArgument, "need at least one candidate");
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = lo;
    return v;
  }
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i) v[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  v.front() = lo;
  v.back() = hi;
  return v;
}

namespace detail {

inline std::size_t grid_size(double duration, double dtau) {
  return static_cast<std::size_t>(std::floor(duration / dtau * (1.0 + 1e-12) + 1e-9)) + 1;
}

// Same quantity as redundancy_penalty, restricted to pairs whose decay weight
// exceeds 1e-16; the dropped mass is below M^2 * 1e-16 before normalization.
inline double banded_redundancy(const std::vector<std::vector<double>>& centered, double dtau, double ell) {
  const std::size_t m = centered.size();
  const auto band = static_cast<std::size_t>(std::ceil(36.85 * ell / dtau));
  double acc = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& a = centered[i];
    for (std::size_t j = i + 1; j < std::min(m, i + band + 1); ++j) {
      const auto& b = centered[j];
      double r = 0.0;
      for (std::size_t n = 0; n < a.size(); ++n) r += a[n] * b[n];
      acc += std::abs(r) * std::exp(-static_cast<double>(j - i) * dtau / ell);
    }
  }
  return 2.0 * acc / (static_cast<double>(m) * static_cast<double>(m - 1));
}

// Zero-mean, unit-norm copy so that a dot product yields Pearson's r;
// zero-variance rows become all-zero (r = 0).
inline std::vector<double> center_unit(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  const double m = stats::mean(v);
  double norm = 0.0;
  for (double& x : out) {
    x -= m;
    norm += x * x;
  }
  if (norm <= 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    return out;
  }
  norm = std::sqrt(norm);
  for (double& x : out) x /= norm;
  return out;
}

}  // namespace detail

/// Scores every candidate interval for every class present in `signals`.
/// Class c is scored one-vs-rest: F separates class c from the remaining
/// classes, and the redundancy term uses class c's records only.
inline std::vector<TauScoreCurve> sweep_all_classes(const std::vector<TimeSeries>& signals,
                                                    const NyquistBand& band, const SweepParams& p) {
  require(!signals.empty(), ErrorKind::EmptySignal, "no signals");
  std::vector<int> labels;
  double duration = INFINITY;
  for (const auto& s : signals) {
    require(s.label.has_value(), ErrorKind::InvalidArgument, "signal '" + s.source_id + "' has no label");
    labels.push_back(*s.label);
    duration = std::min(duration, s.span());
  }
  std::vector<int> classes = labels;
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  require(classes.size() >= 2, ErrorKind::DegenerateClasses, "tau sweep needs at least 2 classes");
  require(band.hi <= duration, ErrorKind::InvalidStep, "search band exceeds the record duration");

  const double ell = p.ell > 0.0 ? p.ell : band.nyquist_dt;
  const std::size_t m_ref = detail::grid_size(duration, band.nyquist_dt);
  const double lambda_m = p.lambda_m_coef * duration / static_cast<double>(m_ref);
  const auto taus = log_spaced(band.lo, band.hi, p.n_candidates);

  std::vector<TauScoreCurve> curves(classes.size());
  for (std::size_t ci = 0; ci < classes.size(); ++ci) {
    curves[ci].class_label = classes[ci];
    curves[ci].nyquist_dt = band.nyquist_dt;
  }

  for (double dtau : taus) {
    const std::size_t m = detail::grid_size(duration, dtau);
    require(m >= 2, ErrorKind::DegenerateGrid, "candidate grid holds fewer than 2 points");
    // grid[j][n]: record n read at t0_n + j * dtau
    std::vector<std::vector<double>> grid(m, std::vector<double>(signals.size()));
    for (std::size_t n = 0; n < signals.size(); ++n) {
      const auto r = resample(signals[n], dtau);
      for (std::size_t j = 0; j < m; ++j) grid[j][n] = r.u[std::min(j, r.size() - 1)];
    }

    for (std::size_t ci = 0; ci < classes.size(); ++ci) {
      const int c = classes[ci];
      double f_sum = 0.0;
      std::vector<std::vector<double>> groups(2);
      std::vector<std::vector<double>> own(m);
      for (std::size_t j = 0; j < m; ++j) {
        groups[0].clear();
        groups[1].clear();
        for (std::size_t n = 0; n < signals.size(); ++n) groups[labels[n] == c ? 0 : 1].push_back(grid[j][n]);
        f_sum += anova_f_score(groups, p.eps);
        own[j] = detail::center_unit(groups[0]);
      }
      const double mean_f = f_sum / static_cast<double>(m);
      const double r = detail::banded_redundancy(own, dtau, ell);
      ScorePoint pt;
      pt.tau = dtau;
      pt.mean_f = mean_f;
      pt.redundancy = r;
      pt.grid_size = m;
      pt.score = combined_score(mean_f, r, m, duration, p.lambda_r, lambda_m);
      curves[ci].candidates.push_back(pt);
    }
  }
  for (auto& c : curves) annotate_curve(c);
  return curves;
}

/// Single-class view of sweep_all_classes.
inline TauScoreCurve sweep_tau(const std::vector<TimeSeries>& signals, int class_label, const NyquistBand& band,
                               const SweepParams& p) {
  for (auto& c : sweep_all_classes(signals, band, p))
    if (c.class_label == class_label) return c;
  throw Error(ErrorKind::MissingClass, "class " + std::to_string(class_label) + " not present");
}

struct TauSelectParams {
  std::size_t psd_nperseg = 4096;
  double energy_fraction = 0.95;
  double beta = 0.5;
  double gamma = 3.0;
  SweepParams sweep;
};

struct TauSelection {
  double f_star = 0.0;
  NyquistBand band;
  std::vector<TauScoreCurve> curves;
  CommonTau common;
};

/// Per-class Welch PSDs -> f*_c -> shared band from max_c f*_c -> sweeps -> common interval.
inline TauSelection select_tau(const std::vector<TimeSeries>& signals, const TauSelectParams& p) {
  require(!signals.empty(), ErrorKind::EmptySignal, "no signals");
  std::map<int, std::vector<PsdEstimate>> psd_by_class;
  for (const auto& s : signals) {
    require(s.label.has_value(), ErrorKind::InvalidArgument, "signal '" + s.source_id + "' has no label");
    const auto u = as_uniform(s);
    psd_by_class[*s.label].push_back(estimate_psd(u, std::min(p.psd_nperseg, u.size())));
  }
  std::map<int, double> f_class;
  TauSelection out;
  for (auto& [c, list] : psd_by_class) {
    const auto avg = average_psd(list);
    f_class[c] = critical_frequency(avg, p.energy_fraction);
    out.f_star = std::max(out.f_star, f_class[c]);
  }
  out.band = nyquist_band(out.f_star, p.beta, p.gamma);
  out.curves = sweep_all_classes(signals, out.band, p.sweep);
  for (auto& c : out.curves) c.f_star_class = f_class[c.class_label];
  out.common = common_tau(out.curves);
  return out;
}

}  // namespace spectemp::tau
