#include "glarma/pipeline.hpp"
#include "glarma/simulate.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace glarma;

namespace {

PanelData small_panel(std::uint64_t seed) {
  SimScenario sc;
  sc.T = 20;
  sc.J = 8;
  sc.I = 2;
  sc.n_nonnull = 4;
  sc.gamma_star = {0.4};
  return simulate_panel(sc, gen_eta_star(sc, seed), seed).data;
}

FitConfig quick_config() {
  FitConfig cfg;
  cfg.n_subsamples = 40;
  cfg.seed = 3;
  return cfg;
}

}  // namespace

TEST(InitEta, LogReplicateMeans) {
  const auto data = testing_util::make_panel({3, 2}, 2, {3, 0, 3, 0, 3, 0, 1, 2, 1, 2});
  const auto eta = init_eta(data);
  EXPECT_DOUBLE_EQ(eta(0, 0), std::log(3.0));
  EXPECT_DOUBLE_EQ(eta(0, 1), std::log(1.0 / 6.0));
  EXPECT_DOUBLE_EQ(eta(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(eta(1, 1), std::log(2.0));
}

TEST(Fit, NoFeedbackIsOneIterationWithoutNewton) {
  auto cfg = quick_config();
  cfg.q = 0;
  const auto res = fit(small_panel(1), cfg);
  EXPECT_EQ(res.outer_trace.size(), 1u);
  EXPECT_FALSE(res.newton_called);
  EXPECT_EQ(res.gamma_hat.size(), 0);
  EXPECT_TRUE(res.converged);
}

TEST(Fit, OracleSingleIterationEqualsSelectionAtInitialEta) {
  const auto data = small_panel(2);
  auto cfg = quick_config();
  cfg.oracle_gamma = Eigen::VectorXd::Constant(1, 0.4);
  cfg.max_outer_iter = 1;
  cfg.min_outer_iter = 1;
  const auto res = fit(data, cfg);
  EXPECT_FALSE(res.newton_called);
  const auto sel = select_at(init_eta(data), *cfg.oracle_gamma, data, cfg);
  EXPECT_EQ(res.frequencies, unflatten_eta(sel.frequencies, 2, 20));
  EXPECT_EQ(res.eta_hat, unflatten_eta(sel.eta_hat, 2, 20));
  EXPECT_EQ(res.gamma_hat[0], 0.4);
}

TEST(Fit, ProfilePolicyRunsTwoIterations) {
  auto cfg = quick_config();
  const auto res = fit(small_panel(3), cfg);
  ASSERT_EQ(res.outer_trace.size(), 2u);
  EXPECT_EQ(res.outer_trace[0].expansion, "initial");
  EXPECT_EQ(res.outer_trace[1].expansion, "profile");
  EXPECT_TRUE(res.newton_called);
  EXPECT_TRUE(std::isfinite(res.gamma_hat[0]));
  EXPECT_EQ(res.frequencies.rows(), 2);
  EXPECT_EQ(res.frequencies.cols(), 20);
  // eta_hat is exactly zero outside the primary support.
  for (Eigen::Index i = 0; i < 2; ++i)
    for (Eigen::Index t = 0; t < 20; ++t)
      if (res.frequencies(i, t) <= cfg.primary_threshold) {
        EXPECT_EQ(res.eta_hat(i, t), 0.0);
      }
}

TEST(Fit, SparseRefitPolicyRespectsIterationBounds) {
  auto cfg = quick_config();
  cfg.expansion = ExpansionPolicy::sparse_refit;
  cfg.max_outer_iter = 3;
  const auto res = fit(small_panel(4), cfg);
  EXPECT_GE(res.outer_trace.size(), 2u);
  EXPECT_LE(res.outer_trace.size(), 3u);
  for (std::size_t k = 1; k < res.outer_trace.size(); ++k) EXPECT_EQ(res.outer_trace[k].expansion, "sparse_refit");
}

TEST(Fit, IndependentOfWorkerCount) {
  const auto data = small_panel(5);
  auto cfg = quick_config();
  const auto a = fit(data, cfg);
  cfg.workers = 3;
  const auto b = fit(data, cfg);
  EXPECT_EQ(a.frequencies, b.frequencies);
  EXPECT_EQ(a.eta_hat, b.eta_hat);
  EXPECT_EQ(a.gamma_hat, b.gamma_hat);
}

TEST(Fit, ConfigValidation) {
  const auto data = small_panel(6);
  auto cfg = quick_config();
  cfg.oracle_gamma = Eigen::VectorXd::Zero(2);
  EXPECT_THROW(fit(data, cfg), Error);
  cfg = quick_config();
  cfg.min_outer_iter = 9;
  EXPECT_THROW(fit(data, cfg), Error);
  cfg = quick_config();
  cfg.q = -1;
  EXPECT_THROW(fit(data, cfg), Error);
  EXPECT_THROW(parse_expansion_policy("dense"), Error);
}
