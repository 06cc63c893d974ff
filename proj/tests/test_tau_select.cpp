#include <gtest/gtest.h>

#include <chrono>
#include <cmath>

#include "oracles.hpp"
#include "spectemp/synthgen.hpp"
#include "spectemp/tau_select.hpp"

using namespace spectemp;
using namespace spectemp::tau;

namespace {

UniformSeries uniform(std::vector<double> u, double dt) {
  UniformSeries s;
  s.u = std::move(u);
  s.dt = dt;
  return s;
}

PsdEstimate lines(std::vector<std::pair<double, double>> peaks, double df, std::size_t bins) {
  PsdEstimate p;
  p.df = df;
  for (std::size_t k = 0; k < bins; ++k) {
    p.freqs.push_back(k * df);
    p.power.push_back(0.0);
  }
  for (auto [f, w] : peaks) p.power[static_cast<std::size_t>(std::llround(f / df))] = w;
  for (double v : p.power) p.total_power += v;
  return p;
}

}  // namespace

TEST(Psd, BinAlignedSinePeaksAtItsBin) {
  const double dt = 1.0 / 1024;
  const auto p = estimate_psd(uniform(oracle::tone(8192, 64.0, dt), dt), 256);
  const auto k = std::max_element(p.power.begin(), p.power.end()) - p.power.begin();
  EXPECT_DOUBLE_EQ(p.freqs[k], 64.0);
}

TEST(Psd, WhiteNoiseIsFlatAndIntegratesToVariance) {
  const double dt = 1.0 / 4000;
  const auto u = oracle::white_noise(1 << 15, 21, 1.7);
  const auto p = estimate_psd(uniform(u, dt), 256);
  double mean = 0;
  for (std::size_t k = 1; k + 1 < p.power.size(); ++k) mean += p.power[k];
  mean /= p.power.size() - 2;
  for (std::size_t k = 1; k + 1 < p.power.size(); ++k) {
    EXPECT_GT(p.power[k], 0.5 * mean);
    EXPECT_LT(p.power[k], 1.5 * mean);
  }
  double integral = 0;
  for (double v : p.power) integral += v * p.df;
  const double var = oracle::pop_std(u) * oracle::pop_std(u);
  EXPECT_NEAR(integral / var, 1.0, 0.05);
}

TEST(Psd, ShortInputThrows) {
  EXPECT_THROW(estimate_psd(uniform(std::vector<double>(100, 1.0), 0.01), 256), Error);
}

TEST(CriticalFrequency, HandCumulatives) {
  EXPECT_NEAR(critical_frequency(lines({{50, 1.0}}, 1.0, 200)), 50.0, 1.0);
  EXPECT_NEAR(critical_frequency(lines({{10, 1.0}, {100, 1.0}}, 1.0, 200)), 100.0, 1.0);
  PsdEstimate flat;
  for (int k = 0; k <= 2000; ++k) {
    flat.freqs.push_back(k);
    flat.power.push_back(1.0);
  }
  EXPECT_NEAR(critical_frequency(flat), 1900.0, 2.0);
  EXPECT_THROW(critical_frequency(lines({}, 1.0, 10)), Error);
}

TEST(CriticalFrequency, MonotoneInFraction) {
  const auto p = estimate_psd(uniform(oracle::white_noise(20000, 2), 0.00025), 1024);
  EXPECT_LE(critical_frequency(p, 0.90), critical_frequency(p, 0.95));
  EXPECT_LE(critical_frequency(p, 0.95), critical_frequency(p, 0.99));
}

TEST(NyquistBand, Arithmetic) {
  const auto b = nyquist_band(250.0);
  EXPECT_DOUBLE_EQ(b.nyquist_dt, 0.002);
  EXPECT_DOUBLE_EQ(b.lo, 0.001);
  EXPECT_DOUBLE_EQ(b.hi, 0.006);
  EXPECT_NEAR(nyquist_band(71.4).nyquist_dt, 0.007, 1e-4);
  const auto one = nyquist_band(100.0, 1.0, 1.0);
  EXPECT_EQ(one.lo, one.hi);
}

TEST(AnovaF, MatchesTwoPassOracle) {
  const std::vector<std::vector<double>> g = {{1, 2, 3}, {4, 5, 6}};
  EXPECT_NEAR(anova_f_score(g), oracle::anova_ratio(g), 1e-12);
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> sizes(2, 9);
  std::normal_distribution<double> n(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::vector<double>> groups(2 + trial % 4);
    for (std::size_t c = 0; c < groups.size(); ++c) {
      groups[c].resize(sizes(rng));
      for (double& v : groups[c]) v = n(rng) + 0.3 * c;
    }
    const double f = anova_f_score(groups), o = oracle::anova_ratio(groups);
    EXPECT_NEAR(f, o, 1e-10 * std::max(1.0, o));
  }
}

TEST(AnovaF, EdgeCases) {
  EXPECT_NEAR(anova_f_score(std::vector<std::vector<double>>{{0, 2}, {0, 2}}), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(anova_f_score(std::vector<std::vector<double>>{{0, 0}, {1, 1}}), 1e12);
  EXPECT_THROW(anova_f_score(std::vector<std::vector<double>>{{0, 1}}), Error);
  EXPECT_THROW(anova_f_score(std::vector<std::vector<double>>{{0, 1}, {1}}), Error);
}

TEST(Redundancy, SinglePairAndCeiling) {
  const std::vector<std::vector<double>> two = {{1, 2, 3}, {2, 4, 6}};
  EXPECT_NEAR(redundancy_penalty(two, std::vector<double>{0.0, 0.01}, 0.01), std::exp(-1.0), 1e-15);
  const std::vector<std::vector<double>> same = {{1, 2, 3}, {1, 2, 3}, {1, 2, 3}};
  const std::vector<double> taus = {0.0, 1.0, 3.0};
  const double expected = (std::exp(-1.0) + std::exp(-3.0) + std::exp(-2.0)) / 3.0;
  EXPECT_NEAR(redundancy_penalty(same, taus, 1.0), expected, 1e-15);
}

TEST(Redundancy, IndependentPointsNearZeroAndFlatPointIgnored) {
  std::vector<std::vector<double>> values;
  std::vector<double> taus;
  for (unsigned j = 0; j < 10; ++j) {
    values.push_back(oracle::white_noise(4000, 100 + j));
    taus.push_back(0.0);
  }
  EXPECT_LT(redundancy_penalty(values, taus, 1.0), 4.0 / std::sqrt(4000.0));
  const std::vector<std::vector<double>> flat = {{1, 1, 1}, {1, 2, 3}};
  EXPECT_EQ(redundancy_penalty(flat, std::vector<double>{0, 1}, 1.0), 0.0);
}

TEST(CombinedScore, Squashing) {
  EXPECT_DOUBLE_EQ(combined_score(0.7, 0.3, 10, 1.0, 0.0, 0.0), 1 / (1 + std::exp(-0.7)));
  EXPECT_DOUBLE_EQ(combined_score(0.0, 1.0, 1, 1.0, 1.0, 0.0), 1 / (1 + std::exp(1.0)));
}

TEST(Knee, GeometryOnSimpleCurves) {
  const std::vector<double> x = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<double> y;
  for (double v : x) y.push_back(1 - std::exp(-v));
  EXPECT_EQ(knee_index(x, y), 2u);  // oracle: argmax of (nx - ny) distance on normalized axes
  std::vector<double> d;
  const double ymax = y.back(), ymin = y.front();
  for (std::size_t i = 0; i < x.size(); ++i)
    d.push_back(std::abs((y[i] - ymin) / (ymax - ymin) - x[i] / 9.0));
  EXPECT_EQ(knee_index(x, y), static_cast<std::size_t>(std::max_element(d.begin(), d.end()) - d.begin()));
}

TEST(CommonTau, PublishedPerClassValues) {
  const std::vector<double> best = {0.021, 0.020, 0.020, 0.018, 0.019};
  const std::vector<double> knee = {0.007, 0.010, 0.007, 0.008, 0.008};
  const std::vector<double> s = {0.507, 0.491, 0.523, 0.563, 0.581};
  const std::vector<double> nyq(5, 0.007);
  const auto c = common_tau(best, knee, s, nyq);
  EXPECT_NEAR(c.tau_best_common, 0.0196, 1e-4);
  EXPECT_NEAR(c.tau_knee_common, 0.00798, 1e-4);
  EXPECT_DOUBLE_EQ(c.constraint_floor, 0.007);
  std::vector<double> s3(s);
  for (double& v : s3) v *= 3.0;
  const auto c3 = common_tau(best, knee, s3, nyq);
  EXPECT_NEAR(c3.tau_best_common, c.tau_best_common, 1e-15);
  EXPECT_NEAR(c3.tau_knee_common, c.tau_knee_common, 1e-15);
}

TEST(CommonTau, SingleClassAndFloor) {
  const std::vector<double> b = {0.02}, k = {0.01}, s = {0.5}, n = {0.008};
  const auto c = common_tau(b, k, s, n);
  EXPECT_EQ(c.tau_best_common, 0.02);
  EXPECT_EQ(c.tau_knee_common, 0.01);
  const std::vector<double> high = {0.015};
  EXPECT_EQ(common_tau(b, k, s, high).tau_knee_common, 0.015);
}

TEST(Sweep, SynthgenCurvesHaveKneeBeforeBest) {
  synthgen::BeamConfig cfg;
  const auto signals = synthgen::generate(cfg);
  const auto sel = select_tau(signals, TauSelectParams{});
  ASSERT_EQ(sel.curves.size(), 5u);
  int earlier = 0;
  for (const auto& c : sel.curves) {
    EXPECT_GE(c.s_star, 0.45);
    EXPECT_LE(c.s_star, 0.65);
    for (const auto& p : c.candidates) {
      EXPECT_GE(c.s_star, p.score);
      EXPECT_GE(p.tau, sel.band.lo * (1 - 1e-12));
      EXPECT_LE(p.tau, sel.band.hi * (1 + 1e-12));
    }
    if (c.knee_tau < c.best_tau) ++earlier;
  }
  EXPECT_GE(earlier, 4);
  EXPECT_GE(sel.common.tau_knee_common, sel.common.constraint_floor);
  EXPECT_GE(sel.common.tau_best_common, sel.common.constraint_floor);
}
