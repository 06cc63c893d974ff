#pragma once

// Seven-dimensional per-signal descriptor vector, min-max normalization,
// class centroids and a Monte-Carlo class-overlap index.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "spectemp/core_signal.hpp"
#include "spectemp/error.hpp"
#include "spectemp/fft.hpp"
#include "spectemp/rng.hpp"
#include "spectemp/stats.hpp"

namespace spectemp::descriptors {

inline constexpr std::size_t kDims = 7;
inline constexpr double kSampEnCap = 20.0;

struct DescriptorVector {
  double sampen = 0.0;
  double permen = 0.0;
  double hfd = 0.0;
  double sflat = 0.0;
  double scent = 0.0;
  double rms = 0.0;
  double p_abs = 0.0;

  std::array<double, kDims> to_array() const { return {sampen, permen, hfd, sflat, scent, rms, p_abs}; }

  static DescriptorVector from_array(const std::array<double, kDims>& a) {
    return {a[0], a[1], a[2], a[3], a[4], a[5], a[6]};
  }
};

inline constexpr std::array<const char*, kDims> kFieldNames = {"sampen", "permen", "hfd", "sflat",
                                                               "scent",  "rms",    "p95"};

struct DescriptorParams {
  int sampen_m = 2;
  double sampen_r = 0.2;  // fraction of std(u)
  int permen_order = 3;
  int permen_delay = 1;
  int hfd_kmax = 10;
};

/// SampEn = -ln(A/B): B counts template pairs of length m within r*std(u)
/// (Chebyshev), A the same pairs extended to m+1. Self-matches excluded.
/// Returns kSampEnCap when no (m+1)-matches exist.
inline double sample_entropy(std::span<const double> u, int m = 2, double r = 0.2) {
  require(m >= 1, ErrorKind::InvalidArgument, "embedding dimension must be >= 1");
  const std::size_t n = u.size();
  const auto mm = static_cast<std::size_t>(m);
  require(n >= mm + 2, ErrorKind::TooShort, "sample entropy needs at least m + 2 samples");
  const double tol = r * stats::stddev(u);

  // Both counts use the same N - m templates so A and B are comparable.
  // Templates are visited in order of their first sample, so the inner scan
  // stops as soon as the first coordinate leaves the tolerance band.
  const std::size_t templates = n - mm;
  std::vector<std::size_t> order(templates);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return u[x] < u[y]; });
  std::uint64_t a = 0, b = 0;
  for (std::size_t p = 0; p < templates; ++p) {
    const std::size_t i = order[p];
    for (std::size_t q = p + 1; q < templates; ++q) {
      const std::size_t j = order[q];
      if (u[j] - u[i] > tol) break;
      std::size_t k = 1;
      for (; k < mm; ++k)
        if (std::abs(u[i + k] - u[j + k]) > tol) break;
      if (k < mm) continue;
      ++b;
      if (std::abs(u[i + mm] - u[j + mm]) <= tol) ++a;
    }
  }
  if (a == 0) return kSampEnCap;  // also covers b == 0
  return std::min(kSampEnCap, -std::log(static_cast<double>(a) / static_cast<double>(b)));
}

/// Normalized permutation entropy in [0, 1]. Equal values are ranked
/// earlier-index-first.
inline double permutation_entropy(std::span<const double> u, int order = 3, int delay = 1) {
  require(order >= 2 && order <= 7, ErrorKind::InvalidArgument, "order must lie in [2, 7]");
  require(delay >= 1, ErrorKind::InvalidArgument, "delay must be >= 1");
  const auto ord = static_cast<std::size_t>(order);
  const auto dly = static_cast<std::size_t>(delay);
  const std::size_t span = (ord - 1) * dly + 1;
  require(u.size() >= span, ErrorKind::TooShort, "sequence shorter than one ordinal pattern");

  std::map<std::uint64_t, std::size_t> hist;
  std::vector<std::size_t> idx(ord);
  const std::size_t windows = u.size() - span + 1;
  for (std::size_t s = 0; s < windows; ++s) {
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t x, std::size_t y) { return u[s + x * dly] < u[s + y * dly]; });
    std::uint64_t code = 0;
    for (std::size_t v : idx) code = code * ord + v;
    ++hist[code];
  }
  double h = 0.0;
  for (const auto& [code, count] : hist) {
    const double p = static_cast<double>(count) / static_cast<double>(windows);
    h -= p * std::log(p);
  }
  double log_fact = 0.0;
  for (std::size_t k = 2; k <= ord; ++k) log_fact += std::log(static_cast<double>(k));
  return h / log_fact;
}

/// Higuchi fractal dimension: slope of ln L(k) against ln(1/k), k = 1..kmax.
inline double higuchi_fd(std::span<const double> u, int kmax = 10) {
  require(kmax >= 2, ErrorKind::InvalidArgument, "kmax must be >= 2");
  const std::size_t n = u.size();
  require(n >= 2 * static_cast<std::size_t>(kmax), ErrorKind::TooShort, "Higuchi FD needs N >= 2*kmax");

  std::vector<double> xs, ys;
  for (int k = 1; k <= kmax; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    double lk = 0.0;
    int used = 0;
    for (std::size_t m = 0; m < kk; ++m) {
      const std::size_t steps = (n - 1 - m) / kk;
      if (steps == 0) continue;
      double len = 0.0;
      for (std::size_t i = 1; i <= steps; ++i) len += std::abs(u[m + i * kk] - u[m + (i - 1) * kk]);
      len *= static_cast<double>(n - 1) / (static_cast<double>(steps) * static_cast<double>(k));
      lk += len / static_cast<double>(k);
      ++used;
    }
    if (used == 0) continue;
    lk /= used;
    if (lk <= 0.0) continue;  // flat curve at this scale
    xs.push_back(std::log(1.0 / k));
    ys.push_back(std::log(lk));
  }
  if (xs.size() < 2) return 1.0;
  const double mx = stats::mean(xs), my = stats::mean(ys);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxy / sxx;
}

/// |rfft|^2 over bins 0..N/2 (rectangular window).
inline std::vector<double> power_spectrum(std::span<const double> u) {
  auto spec = fft::rfft(u);
  std::vector<double> p(spec.size());
  for (std::size_t k = 0; k < spec.size(); ++k) p[k] = std::norm(spec[k]);
  return p;
}

/// Geometric over arithmetic mean of the one-sided power spectrum, DC excluded.
inline double spectral_flatness(std::span<const double> u, double dt) {
  require(u.size() >= 16, ErrorKind::TooShort, "spectral flatness needs at least 16 samples");
  require(dt > 0.0, ErrorKind::InvalidStep, "dt must be positive");
  const auto p = power_spectrum(u);
  double log_sum = 0.0, sum = 0.0;
  for (std::size_t k = 1; k < p.size(); ++k) {
    const double v = std::max(p[k], 1e-20);
    log_sum += std::log(v);
    sum += v;
  }
  const double n = static_cast<double>(p.size() - 1);
  return std::clamp(std::exp(log_sum / n) / (sum / n), 0.0, 1.0);
}

/// Power-weighted mean frequency (Hz) of the one-sided spectrum.
inline double spectral_centroid(std::span<const double> u, double dt) {
  require(u.size() >= 16, ErrorKind::TooShort, "spectral centroid needs at least 16 samples");
  require(dt > 0.0, ErrorKind::InvalidStep, "dt must be positive");
  const auto p = power_spectrum(u);
  const double df = 1.0 / (static_cast<double>(u.size()) * dt);
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    num += static_cast<double>(k) * df * p[k];
    den += p[k];
  }
  require(den > 0.0, ErrorKind::SilentSignal, "signal has zero power");
  return num / den;
}

inline double rms(std::span<const double> u) {
  require(!u.empty(), ErrorKind::EmptySignal, "rms of an empty sequence");
  double acc = 0.0;
  for (double v : u) acc += v * v;
  return std::sqrt(acc / static_cast<double>(u.size()));
}

inline double p95_abs(std::span<const double> u) {
  require(!u.empty(), ErrorKind::EmptySignal, "percentile of an empty sequence");
  std::vector<double> a(u.size());
  std::transform(u.begin(), u.end(), a.begin(), [](double v) { return std::abs(v); });
  return stats::quantile(std::move(a), 0.95);
}

inline DescriptorVector descriptor_vector(const UniformSeries& s, const DescriptorParams& p = {}) {
  const std::span<const double> u(s.u);
  DescriptorVector d;
  d.sampen = sample_entropy(u, p.sampen_m, p.sampen_r);
  d.permen = permutation_entropy(u, p.permen_order, p.permen_delay);
  d.hfd = higuchi_fd(u, p.hfd_kmax);
  d.sflat = spectral_flatness(u, s.dt);
  d.scent = spectral_centroid(u, s.dt);
  d.rms = rms(u);
  d.p_abs = p95_abs(u);
  return d;
}

// ---------------------------------------------------------------------------
// Dataset-level analysis. Points are generic fixed-dimension vectors so the
// same code serves the 7-D descriptors and lower-dimensional checks.

using Point = std::vector<double>;

struct NormalizationStats {
  Point x_min;
  Point x_max;
};

struct Normalized {
  std::vector<Point> points;
  NormalizationStats stats;
};

/// (x - x_min) / (x_max - x_min) per component; constant components map to 0.
inline Normalized minmax_normalize(const std::vector<Point>& points) {
  require(points.size() >= 2, ErrorKind::InvalidArgument, "normalization needs at least 2 vectors");
  const std::size_t d = points.front().size();
  Normalized out;
  out.stats.x_min.assign(d, INFINITY);
  out.stats.x_max.assign(d, -INFINITY);
  for (const auto& p : points) {
    require(p.size() == d, ErrorKind::LengthMismatch, "vectors differ in dimension");
    for (std::size_t k = 0; k < d; ++k) {
      out.stats.x_min[k] = std::min(out.stats.x_min[k], p[k]);
      out.stats.x_max[k] = std::max(out.stats.x_max[k], p[k]);
    }
  }
  out.points.reserve(points.size());
  for (const auto& p : points) {
    Point q(d);
    for (std::size_t k = 0; k < d; ++k) {
      const double range = out.stats.x_max[k] - out.stats.x_min[k];
      q[k] = range > 0.0 ? std::clamp((p[k] - out.stats.x_min[k]) / range, 0.0, 1.0) : 0.0;
    }
    out.points.push_back(std::move(q));
  }
  return out;
}

struct ClassStats {
  int label = 0;
  Point centroid;
  std::size_t count = 0;
};

struct Separability {
  std::vector<ClassStats> classes;           // ordered by label
  std::vector<std::vector<double>> distance;  // Euclidean distance between centroids
};

/// Centroid per class 0..n_classes-1 and the pairwise centroid distances.
inline Separability class_centroids_and_distances(const std::vector<Point>& points, std::span<const int> labels,
                                                  int n_classes) {
  require(points.size() == labels.size(), ErrorKind::LengthMismatch, "points and labels differ in length");
  require(!points.empty(), ErrorKind::MissingClass, "no points");
  const std::size_t d = points.front().size();
  Separability out;
  out.classes.resize(static_cast<std::size_t>(n_classes));
  for (int c = 0; c < n_classes; ++c) {
    out.classes[c].label = c;
    out.classes[c].centroid.assign(d, 0.0);
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    const int c = labels[i];
    require(c >= 0 && c < n_classes, ErrorKind::InvalidArgument, "label out of range");
    auto& cs = out.classes[static_cast<std::size_t>(c)];
    for (std::size_t k = 0; k < d; ++k) cs.centroid[k] += points[i][k];
    ++cs.count;
  }
  for (auto& cs : out.classes) {
    require(cs.count > 0, ErrorKind::MissingClass, "class " + std::to_string(cs.label) + " has no vectors");
    for (double& v : cs.centroid) v /= static_cast<double>(cs.count);
  }
  const auto k = static_cast<std::size_t>(n_classes);
  out.distance.assign(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) {
      double acc = 0.0;
      for (std::size_t q = 0; q < d; ++q) {
        const double diff = out.classes[i].centroid[q] - out.classes[j].centroid[q];
        acc += diff * diff;
      }
      out.distance[i][j] = out.distance[j][i] = std::sqrt(acc);
    }
  return out;
}

struct DiagonalGaussian {
  Point mean;
  Point var;

  double log_pdf(std::span<const double> x) const {
    constexpr double log_two_pi = 1.8378770664093454835606594728112;
    double acc = 0.0;
    for (std::size_t k = 0; k < mean.size(); ++k) {
      const double z = x[k] - mean[k];
      acc += z * z / var[k] + std::log(var[k]) + log_two_pi;
    }
    return -0.5 * acc;
  }
};

inline constexpr double kVarianceFloor = 1e-9;

inline DiagonalGaussian fit_diagonal_gaussian(const std::vector<Point>& pts) {
  require(pts.size() >= 2, ErrorKind::DegenerateClass, "a class needs at least 2 vectors for a density fit");
  const std::size_t d = pts.front().size();
  DiagonalGaussian g{Point(d, 0.0), Point(d, 0.0)};
  for (const auto& p : pts)
    for (std::size_t k = 0; k < d; ++k) g.mean[k] += p[k];
  for (double& m : g.mean) m /= static_cast<double>(pts.size());
  for (const auto& p : pts)
    for (std::size_t k = 0; k < d; ++k) g.var[k] += (p[k] - g.mean[k]) * (p[k] - g.mean[k]);
  bool any_spread = false;
  for (double& v : g.var) {
    v /= static_cast<double>(pts.size());
    any_spread = any_spread || v > 0.0;
    v = std::max(v, kVarianceFloor);
  }
  require(any_spread, ErrorKind::DegenerateClass, "class has zero variance in every feature");
  return g;
}

/// Monte-Carlo estimate of the integral of min(p_a, p_b), sampling from the
/// mixture (p_a + p_b)/2. The weight min/q = 2/(1 + exp|log p_a - log p_b|) is bounded.
inline double pairwise_overlap(const DiagonalGaussian& a, const DiagonalGaussian& b, std::size_t n_mc,
                               Rng& rng) {
  require(n_mc > 0, ErrorKind::InvalidArgument, "n_mc must be positive");
  const std::size_t d = a.mean.size();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  Point x(d);
  double acc = 0.0;
  for (std::size_t s = 0; s < n_mc; ++s) {
    const DiagonalGaussian& g = coin(rng) ? a : b;
    for (std::size_t k = 0; k < d; ++k) x[k] = g.mean[k] + std::sqrt(g.var[k]) * normal(rng);
    const double gap = std::abs(a.log_pdf(x) - b.log_pdf(x));
    acc += 2.0 / (1.0 + std::exp(gap));
  }
  return std::clamp(acc / static_cast<double>(n_mc), 0.0, 1.0);
}

struct OverlapResult {
  std::vector<std::vector<double>> omega;  // symmetric, unit diagonal
  double aggregate = 0.0;                  // sum over ordered pairs i != j
};

inline OverlapResult overlap_omega(const std::vector<Point>& points, std::span<const int> labels, int n_classes,
                                   std::size_t n_mc, std::uint64_t seed) {
  require(points.size() == labels.size(), ErrorKind::LengthMismatch, "points and labels differ in length");
  const auto k = static_cast<std::size_t>(n_classes);
  std::vector<std::vector<Point>> by_class(k);
  for (std::size_t i = 0; i < points.size(); ++i) {
    require(labels[i] >= 0 && labels[i] < n_classes, ErrorKind::InvalidArgument, "label out of range");
    by_class[static_cast<std::size_t>(labels[i])].push_back(points[i]);
  }
  std::vector<DiagonalGaussian> fits;
  fits.reserve(k);
  for (std::size_t c = 0; c < k; ++c) {
    require(!by_class[c].empty(), ErrorKind::MissingClass, "class " + std::to_string(c) + " has no vectors");
    fits.push_back(fit_diagonal_gaussian(by_class[c]));
  }

  OverlapResult out;
  out.omega.assign(k, std::vector<double>(k, 1.0));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) {
      Rng rng(derive_seed(seed, i * k + j));
      const double w = pairwise_overlap(fits[i], fits[j], n_mc, rng);
      out.omega[i][j] = out.omega[j][i] = w;
      out.aggregate += 2.0 * w;
    }
  return out;
}

}  // namespace spectemp::descriptors
