// End-to-end run on a small synthetic dataset: generate, pick the sampling
// interval, then compare Base, STA and HSTF with softmax regression.

#include <cstdio>

#include "spectemp/spectemp.hpp"

int main() {
  using namespace spectemp;
  pipeline::Config cfg;
  cfg.beam.n_trials = 10;
  cfg.beam.duration = 10.0;
  cfg.models = {"softmax"};
  const std::size_t threads = default_threads();

  const auto signals = pipeline::generate(cfg, threads);
  std::printf("generated %zu signals\n", signals.size());

  const auto sel = pipeline::select_tau(signals, cfg);
  std::printf("f* %.2f Hz, common tau best %.5f s, knee %.5f s\n", sel.f_star, sel.common.tau_best_common,
              sel.common.tau_knee_common);

  const double tau = sel.common.tau_knee_common;
  const std::vector<pipeline::MethodSpec> methods = {
      {fusion::Kind::Base, 0.0}, {fusion::Kind::STA, tau}, {fusion::Kind::HSTF, tau}};
  const auto results = pipeline::evaluate(signals, cfg, methods, threads);
  for (const auto& m : pipeline::fold_summary(results))
    std::printf("%-8s %-16s accuracy %.3f +/- %.3f\n", m.model.c_str(), m.method.c_str(), m.folds[0].mean,
                m.folds[0].std);
  std::printf("%s\n", pipeline::ranking_line(pipeline::stability(results)).c_str());
}
