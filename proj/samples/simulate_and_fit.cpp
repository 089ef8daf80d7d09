// Simulates one panel with MA(1) feedback, fits it with q = 1 and q = 0 and
// compares support recovery against the truth.

#include "glarma/experiment.hpp"

#include <cstdio>
#include <cstdlib>

using namespace glarma;

int main(int argc, char** argv) {
  SimScenario sc = table1_row(1);  // T = 50, J = 10, I = 3, gamma* = 0.5
  const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 1;
  const auto eta_star = gen_eta_star(sc, seed);
  const auto sim = simulate_panel(sc, eta_star, seed);
  std::printf("panel: I=%d J=%d T=%d, %zu clamped steps\n", sc.I, sc.J, sc.T, sim.clamp_events);

  for (int q : {1, 0}) {
    FitConfig cfg;
    cfg.q = q;
    cfg.n_subsamples = 200;
    cfg.seed = seed;
    const auto res = fit(sim.data, cfg);
    const auto m = support_metrics(res.eta_hat, eta_star, cfg.thresholds, res.frequencies);
    std::printf("q=%d: ", q);
    if (q > 0) {
      std::printf("gamma per iteration:");
      for (const auto& st : res.outer_trace) std::printf(" %.3f", st.gamma[0]);
      std::printf(", ");
    }
    std::printf("support %zu, max(TPR-FPR) %.3f\n", res.support(cfg.primary_threshold).size(), m.max_diff.value_or(0.0));
  }
  return 0;
}
