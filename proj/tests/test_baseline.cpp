#include "glarma/poisson_lasso.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace glarma;

namespace {

// Indicator design: the problem separates by column and each coordinate has a closed form.
double indicator_solution(double S, double n, double N, double lambda) {
  if (S - N * lambda > n) return std::log((S - N * lambda) / n);
  if (S + N * lambda < n) return std::log((S + N * lambda) / n);
  return 0.0;
}

}  // namespace

TEST(PoissonLasso, IndicatorDesignClosedForm) {
  const int reps[] = {3, 4, 2};
  const std::vector<double> y = {10, 12, 9, 0, 1, 0, 1, 1, 1};
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(9, 3);
  for (int i = 0, r = 0; i < 3; ++i)
    for (int j = 0; j < reps[i]; ++j, ++r) X(r, i) = 1.0;
  const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), 9);
  const double S[] = {31, 2, 2};
  for (double lambda : {0.0, 0.05, 0.3, 1.0}) {
    const auto fit = poisson_lasso(X, yv, lambda);
    ASSERT_TRUE(fit.converged) << lambda;
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(fit.coef[i], indicator_solution(S[i], reps[i], 9, lambda), 1e-7) << lambda;
  }
  const auto zero = poisson_lasso(X, yv, poisson_lambda_max(X, yv) * 1.0001);
  EXPECT_EQ(zero.coef.lpNorm<Eigen::Infinity>(), 0.0);
}

TEST(PoissonLasso, ObjectiveNotAboveNearbyPoints) {
  auto rng = make_rng(2, "pl");
  std::normal_distribution<double> nd;
  std::poisson_distribution<int> pois(3.0);
  Eigen::MatrixXd X(30, 3);
  Eigen::VectorXd y(30);
  for (int r = 0; r < 30; ++r) {
    for (int c = 0; c < 3; ++c) X(r, c) = 0.5 * nd(rng);
    y[r] = pois(rng);
  }
  const double lambda = 0.1 * poisson_lambda_max(X, y);
  const auto fit = poisson_lasso(X, y, lambda);
  ASSERT_TRUE(fit.converged);
  const double best = poisson_lasso_objective(X, y, fit.coef, lambda);
  for (int c = 0; c < 3; ++c)
    for (double d : {-1e-3, 1e-3}) {
      Eigen::VectorXd b = fit.coef;
      b[c] += d;
      EXPECT_GE(poisson_lasso_objective(X, y, b, lambda), best - 1e-12);
    }
}

TEST(Baseline, StrongConditionSelectedNullConditionNot) {
  // Condition 0 has large counts at every position, condition 1 has counts of exactly 1 (log mean 0).
  PanelData data({6, 6}, 4);
  for (int j = 0; j < 6; ++j)
    for (int t = 0; t < 4; ++t) {
      data.set(0, j, t, 40 + j);
      data.set(1, j, t, 1);
    }
  BaselineOptions opts;
  opts.n_subsamples = 30;
  const auto res = poisson_lasso_baseline(data, opts);
  for (int t = 0; t < 4; ++t) {
    EXPECT_EQ(res.frequencies(0, t), 1.0);
    EXPECT_EQ(res.frequencies(1, t), 0.0);
    EXPECT_GT(res.eta_hat(0, t), 3.0);
    EXPECT_EQ(res.eta_hat(1, t), 0.0);
  }
  EXPECT_EQ(res.nonconverged_fits, 0);
}

TEST(Baseline, IndependentOfWorkerCount) {
  auto rng = make_rng(3, "pl");
  const auto data = testing_util::random_panel({4, 4, 4}, 6, 2.0, rng);
  BaselineOptions opts;
  opts.n_subsamples = 25;
  const auto a = poisson_lasso_baseline(data, opts);
  opts.workers = 3;
  const auto b = poisson_lasso_baseline(data, opts);
  EXPECT_EQ(a.frequencies, b.frequencies);
  EXPECT_EQ(a.eta_hat, b.eta_hat);
  for (Eigen::Index k = 0; k < a.frequencies.size(); ++k) {
    EXPECT_GE(a.frequencies.data()[k], 0.0);
    EXPECT_LE(a.frequencies.data()[k], 1.0);
  }
}
