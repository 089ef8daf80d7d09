#include "glarma/stability.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace glarma;

namespace {

QuadraticProblem signal_problem(std::uint64_t seed, int n = 40) {
  auto rng = make_rng(seed, "stab");
  std::normal_distribution<double> nd;
  Eigen::MatrixXd X(n, 5);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < 5; ++b) X(a, b) = nd(rng);
  X.col(4).setZero();
  Eigen::VectorXd y = 50.0 * X.col(0);
  for (int a = 0; a < n; ++a) y[a] += 0.1 * nd(rng);
  return QuadraticProblem::from_dense(X, y);
}

}  // namespace

TEST(Stability, FrequenciesAreMultiplesOfOneOverB) {
  const auto prob = signal_problem(1);
  StabilityOptions opts;
  opts.n_subsamples = 37;
  const auto res = stability_selection(prob, selection_lambda(prob, opts.penalty), opts);
  for (Eigen::Index c = 0; c < res.frequencies.size(); ++c) {
    const double f = res.frequencies[c];
    EXPECT_GE(f, 0.0);
    EXPECT_LE(f, 1.0);
    EXPECT_NEAR(f * 37.0, std::round(f * 37.0), 1e-12);
  }
  EXPECT_EQ(res.n_subsamples, 37);
}

TEST(Stability, StrongColumnAlwaysZeroColumnNever) {
  const auto prob = signal_problem(2);
  for (auto scale : {PenaltyScale::glmnet, PenaltyScale::raw}) {
    StabilityOptions opts;
    opts.n_subsamples = 50;
    opts.penalty.scale = scale;
    // A penalty at half of the full-problem maximum keeps only the dominant column.
    const auto sp = scale_problem(prob.design, prob.response, opts.penalty);
    const double lambda = scale == PenaltyScale::glmnet ? 0.5 * sp.xty.cwiseAbs().maxCoeff()
                                                        : 0.25 * (prob.design.transpose() * prob.response).cwiseAbs().maxCoeff();
    const auto res = stability_selection(prob, lambda, opts);
    EXPECT_EQ(res.frequencies[0], 1.0);
    EXPECT_EQ(res.frequencies[4], 0.0);
    EXPECT_EQ(res.support(0.6), std::vector<int>{0});
  }
}

TEST(Stability, RefitIsLeastSquaresOnSupportAndZeroElsewhere) {
  const auto prob = signal_problem(3);
  StabilityOptions opts;
  opts.n_subsamples = 40;
  const auto res = stability_selection(prob, selection_lambda(prob, opts.penalty), opts);
  const auto sup = res.support(opts.primary_threshold);
  ASSERT_FALSE(sup.empty());
  Eigen::MatrixXd Xs(prob.rows(), static_cast<Eigen::Index>(sup.size()));
  for (std::size_t c = 0; c < sup.size(); ++c) Xs.col(static_cast<Eigen::Index>(c)) = prob.design.col(sup[c]);
  const Eigen::VectorXd ls = (Xs.transpose() * Xs).ldlt().solve(Xs.transpose() * prob.response);
  for (Eigen::Index c = 0; c < prob.cols(); ++c) {
    const auto it = std::find(sup.begin(), sup.end(), static_cast<int>(c));
    if (it == sup.end()) {
      EXPECT_EQ(res.eta_hat[c], 0.0);
    } else {
      EXPECT_NEAR(res.eta_hat[c], ls[it - sup.begin()], 1e-9);
    }
  }
}

TEST(Stability, IndependentOfWorkerCount) {
  const auto inst = testing_util::random_instance(5);
  const auto prob = build_quadratic_problem(inst.eta, inst.gamma, inst.data);
  StabilityOptions opts;
  opts.n_subsamples = 64;
  opts.seed = 99;
  const double lambda = selection_lambda(prob, opts.penalty);
  const auto a = stability_selection(prob, lambda, opts);
  opts.workers = 4;
  const auto b = stability_selection(prob, lambda, opts);
  EXPECT_EQ(a.frequencies, b.frequencies);
  EXPECT_EQ(a.eta_hat, b.eta_hat);
  opts.seed = 100;
  const auto c = stability_selection(prob, lambda, opts);
  EXPECT_EQ(c.n_subsamples, 64);
}

TEST(Stability, BlocksWithoutSignalAreNotSelected) {
  // Two blocks; only the first carries signal.
  auto rng = make_rng(6, "stab");
  std::normal_distribution<double> nd;
  QuadraticProblem p;
  p.design = Eigen::MatrixXd::Zero(40, 4);
  p.response = Eigen::VectorXd::Zero(40);
  p.block_columns = {{0, 1}, {2, 3}};
  for (int r = 0; r < 40; ++r) {
    const int b = r % 2;
    p.row_block.push_back(b);
    p.design(r, 2 * b) = nd(rng);
    p.design(r, 2 * b + 1) = nd(rng);
    if (b == 0) p.response[r] = 10.0 * p.design(r, 0);
  }
  StabilityOptions opts;
  opts.n_subsamples = 30;
  const auto res = stability_selection(p, selection_lambda(p, opts.penalty), opts);
  EXPECT_EQ(res.frequencies[0], 1.0);
  EXPECT_EQ(res.frequencies[2], 0.0);
  EXPECT_EQ(res.frequencies[3], 0.0);
}

TEST(Stability, DrawSubsampleIsSortedAndDistinct) {
  Rng rng = make_rng(1, "draw");
  for (int rep = 0; rep < 20; ++rep) {
    const auto idx = draw_subsample(15, 7, rng);
    ASSERT_EQ(idx.size(), 7u);
    for (std::size_t k = 1; k < idx.size(); ++k) EXPECT_LT(idx[k - 1], idx[k]);
    EXPECT_GE(idx.front(), 0);
    EXPECT_LT(idx.back(), 15);
  }
}

TEST(Stability, RejectsBadOptions) {
  const auto prob = signal_problem(7);
  StabilityOptions opts;
  opts.n_subsamples = 0;
  EXPECT_THROW(stability_selection(prob, 1.0, opts), Error);
  opts = {};
  opts.thresholds = {1.5};
  EXPECT_THROW(stability_selection(prob, 1.0, opts), Error);
  EXPECT_THROW(stability_selection(QuadraticProblem::from_dense(Eigen::MatrixXd::Ones(1, 2), Eigen::VectorXd::Ones(1)), 1.0),
               Error);
}
