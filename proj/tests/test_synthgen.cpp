#include <gtest/gtest.h>

#include "spectemp/pipeline.hpp"

using namespace spectemp;

TEST(Synthgen, SameSeedSameBytes) {
  synthgen::BeamConfig c;
  c.n_trials = 5;
  c.duration = 2.0;
  const auto a = synthgen::generate(c, 1);
  const auto b = synthgen::generate(c, 3);
  ASSERT_EQ(a.size(), 25u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(io::signal_csv(a[i]), io::signal_csv(b[i]));
    EXPECT_EQ(a[i].label, static_cast<int>(i / 5));
  }
  c.seed = 43;
  EXPECT_NE(synthgen::generate(c)[0].u, a[0].u);
}

TEST(Synthgen, PsdPeaksSitAtModalFrequencies) {
  synthgen::BeamConfig c;
  c.n_trials = 5;
  for (std::size_t cls : {0u, 4u}) {
    const auto s = synthgen::generate_trial(c, cls, 0);
    const auto p = tau::estimate_psd(as_uniform(s), 8192);
    for (double f : c.class_freqs(cls)) {
      std::size_t best = 0;
      for (std::size_t k = 0; k < p.freqs.size(); ++k)
        if (std::abs(p.freqs[k] - f) <= 6.0 && (best == 0 || p.power[k] > p.power[best])) best = k;
      EXPECT_NEAR(p.freqs[best], f, 2.0) << "class " << cls << " mode " << f;
    }
  }
}

TEST(Synthgen, DefaultOffsetsAndValidation) {
  synthgen::BeamConfig c;
  const auto f0 = c.class_freqs(0);
  const double expected[] = {1.0, 0.99, 0.97, 0.93, 0.90};
  for (std::size_t cls = 0; cls < 5; ++cls)
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(c.class_freqs(cls)[k], f0[k] * expected[cls], 1e-12);
  auto bad = c;
  bad.fs = 100.0;
  EXPECT_THROW(bad.validate(), Error);
  bad = c;
  bad.n_trials = 3;
  try {
    bad.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidConfig);
  }
}

TEST(Synthgen, DescriptorCentroidsKeepPos1ClosestToNoMass) {
  // default beam; shorter records let pos3/pos4 drift closer than no_mass/pos1
  pipeline::Config c;
  c.omega_mc = 2000;
  const auto r = pipeline::analyze_descriptors(pipeline::generate(c), c);
  const auto& d = r.separability.distance;
  double smallest = 1e300;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = i + 1; j < 5; ++j) smallest = std::min(smallest, d[i][j]);
  EXPECT_EQ(d[0][1], smallest);
  EXPECT_LT(d[0][1], d[0][3]);
}

TEST(Synthgen, CeemdanReconstructsSynthgenWindows) {
  synthgen::BeamConfig c;
  c.n_trials = 5;
  c.duration = 1.0;
  const auto signals = synthgen::generate(c);
  for (std::size_t i = 0; i < signals.size(); i += 6) {
    const std::vector<double> w(signals[i].u.begin(), signals[i].u.begin() + 256);
    const auto d = emd::ceemdan(w, {}, i);
    const auto r = d.reconstruct();
    double err = 0, scale = 0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      err = std::max(err, std::abs(w[k] - r[k]));
      scale = std::max(scale, std::abs(w[k]));
    }
    EXPECT_LT(err / scale, 1e-6);
  }
}
