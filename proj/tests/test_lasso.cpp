#include "glarma/penalty.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace glarma;

namespace {

// Proximal gradient with Nesterov momentum, run far past convergence.
Eigen::VectorXd fista(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda, int iters = 200000) {
  const double L = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(X.transpose() * X).eigenvalues().maxCoeff();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(X.cols()), z = b;
  double t = 1.0;
  for (int k = 0; k < iters; ++k) {
    Eigen::VectorXd g = z + X.transpose() * (y - X * z) / L;
    Eigen::VectorXd next = g.unaryExpr([&](double v) { return std::copysign(std::max(std::abs(v) - lambda / L, 0.0), v); });
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    z = next + ((t - 1.0) / tn) * (next - b);
    b = next;
    t = tn;
  }
  return b;
}

struct Problem {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
};

Problem random_problem(std::uint64_t seed, int n, int p) {
  auto rng = make_rng(seed, "lasso");
  std::normal_distribution<double> nd;
  Problem pr{Eigen::MatrixXd(n, p), Eigen::VectorXd(n)};
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < p; ++b) pr.X(a, b) = nd(rng);
    pr.y[a] = nd(rng);
  }
  pr.y += 2.0 * pr.X.col(0) - 1.5 * pr.X.col(p - 1);
  return pr;
}

}  // namespace

TEST(LambdaGrid, IdentityExample) {
  const Eigen::MatrixXd X = Eigen::MatrixXd::Identity(2, 2);
  const Eigen::Vector2d y(1.0, -2.0);
  const auto grid = lambda_grid(X, y);
  ASSERT_EQ(grid.size(), 100u);
  EXPECT_DOUBLE_EQ(grid.front(), 1.0);
  EXPECT_DOUBLE_EQ(grid.back(), 1e-4);
  for (std::size_t k = 1; k < grid.size(); ++k) EXPECT_LT(grid[k], grid[k - 1]);
  EXPECT_EQ(lambda_grid(X, y, {.n_lambda = 5, .ratio = 1.0}), std::vector<double>{1.0});
  const auto two = lambda_grid(X, y, {.n_lambda = 2, .ratio = 0.01});
  ASSERT_EQ(two.size(), 2u);
  EXPECT_DOUBLE_EQ(two[0], 1.0);
  EXPECT_DOUBLE_EQ(two[1], 0.01);
  EXPECT_EQ(lambda_grid(X, Eigen::Vector2d::Zero()), std::vector<double>{0.0});
  EXPECT_THROW(lambda_grid(X, y, {.n_lambda = 0}), Error);
  EXPECT_THROW(lambda_grid(X, y, {.n_lambda = 10, .ratio = 0.0}), Error);
}

TEST(Lasso, SoftThreshold) {
  EXPECT_EQ(soft_threshold(3.0, 1.0), 2.0);
  EXPECT_EQ(soft_threshold(-3.0, 1.0), -2.0);
  EXPECT_EQ(soft_threshold(0.5, 1.0), 0.0);
  EXPECT_EQ(soft_threshold(-1.0, 1.0), 0.0);
}

TEST(Lasso, ZeroPenaltyGivesLeastSquares) {
  const auto pr = random_problem(1, 12, 5);
  const auto fit = lasso_cd(pr.X, pr.y, 0.0, {.tol = 1e-12});
  ASSERT_TRUE(fit.converged);
  const Eigen::VectorXd ls = (pr.X.transpose() * pr.X).ldlt().solve(pr.X.transpose() * pr.y);
  EXPECT_LT((fit.coef - ls).norm(), 1e-9);
}

TEST(Lasso, LargePenaltyGivesZero) {
  const auto pr = random_problem(2, 10, 4);
  const double top = (pr.X.transpose() * pr.y).cwiseAbs().maxCoeff();
  const auto fit = lasso_cd(pr.X, pr.y, top * 1.0001);
  EXPECT_TRUE(fit.converged);
  EXPECT_EQ(fit.coef.lpNorm<Eigen::Infinity>(), 0.0);
}

TEST(Lasso, OrthonormalDesignIsSoftThresholding) {
  const Eigen::MatrixXd X = Eigen::MatrixXd::Identity(4, 4);
  const Eigen::Vector4d y(3.0, -0.5, 1.2, -2.0);
  const auto fit = lasso_cd(X, y, 1.0);
  EXPECT_DOUBLE_EQ(fit.coef[0], 2.0);
  EXPECT_DOUBLE_EQ(fit.coef[1], 0.0);
  EXPECT_NEAR(fit.coef[2], 0.2, 1e-15);
  EXPECT_DOUBLE_EQ(fit.coef[3], -1.0);
}

TEST(Lasso, MatchesProximalGradientOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const int p = seed % 2 ? 8 : 6;
    const auto pr = random_problem(100 + seed, p, p);
    const double top = (pr.X.transpose() * pr.y).cwiseAbs().maxCoeff();
    for (double frac : {0.5, 0.1, 0.01}) {
      const double lambda = frac * top;
      const auto fit = lasso_cd(pr.X, pr.y, lambda, {.tol = 1e-12});
      ASSERT_TRUE(fit.converged);
      const Eigen::VectorXd ref = fista(pr.X, pr.y, lambda);
      EXPECT_LE(lasso_objective(pr.X, pr.y, fit.coef, lambda),
                lasso_objective(pr.X, pr.y, ref, lambda) + 1e-9 * std::max(1.0, top));
      EXPECT_LT((fit.coef - ref).lpNorm<Eigen::Infinity>(), 1e-5) << seed << " " << frac;
      EXPECT_LT(kkt_violation(pr.X, pr.y, fit.coef, lambda), 1e-9 * std::max(1.0, top));
    }
  }
}

TEST(Lasso, WarmPathMatchesColdSolve) {
  const auto pr = random_problem(7, 30, 10);
  const auto grid = lambda_grid(pr.X, pr.y, {.n_lambda = 20, .ratio = 1e-3});
  const Eigen::MatrixXd gram = pr.X.transpose() * pr.X;
  const Eigen::VectorXd xty = pr.X.transpose() * pr.y;
  LassoPath path(gram, xty);
  const LassoOptions opts{.tol = 1e-12};
  for (double l : grid) {
    // The grid is on the per-row scale; the solver uses the unnormalized one.
    const double lambda = l * pr.X.rows();
    const Eigen::VectorXd warm = path.solve(lambda, opts).coef;
    const Eigen::VectorXd cold = lasso_gram(gram, xty, lambda, opts).coef;
    EXPECT_LT((warm - cold).lpNorm<Eigen::Infinity>(), 1e-9);
  }
  const auto stepped = lasso_gram(gram, xty, grid.back(), {.tol = 1e-12, .path_steps = 10});
  EXPECT_LT((stepped.coef - lasso_gram(gram, xty, grid.back(), opts).coef).lpNorm<Eigen::Infinity>(), 1e-9);
}

TEST(Lasso, ZeroColumnStaysZero) {
  auto pr = random_problem(4, 10, 4);
  pr.X.col(2).setZero();
  const auto fit = lasso_cd(pr.X, pr.y, 0.1, {.tol = 1e-12});
  EXPECT_TRUE(fit.converged);
  EXPECT_EQ(fit.coef[2], 0.0);
}

TEST(Penalty, ScaledSolutionSatisfiesOriginalOptimality) {
  // (1/2n)||y - b0 - X b||^2 + lambda sum_j s_j |b_j|, checked on the original columns.
  for (bool intercept : {false, true}) {
    auto pr = random_problem(11, 25, 6);
    pr.X.col(1) *= 40.0;
    pr.X.col(3).array() += 5.0;
    PenaltyOptions opts;
    opts.intercept = intercept;
    const auto sp = scale_problem(pr.X, pr.y, opts);
    const double lambda = 0.05 * sp.xty.cwiseAbs().maxCoeff();
    const auto fit = lasso_gram(sp.gram, sp.xty, lambda, {.tol = 1e-13});
    ASSERT_TRUE(fit.converged);
    const Eigen::VectorXd b = fit.coef.cwiseQuotient(sp.scale);

    const double n = pr.X.rows();
    Eigen::VectorXd s(6);
    Eigen::MatrixXd Xc = pr.X;
    if (intercept) Xc.rowwise() -= pr.X.colwise().mean();
    for (int j = 0; j < 6; ++j) s[j] = std::sqrt(Xc.col(j).squaredNorm() / n);
    EXPECT_LT((s - sp.scale).norm(), 1e-12);

    const double b0 = intercept ? pr.y.mean() - pr.X.colwise().mean().dot(b) : 0.0;
    const Eigen::VectorXd resid = (pr.y - pr.X * b).array() - b0;
    if (intercept) {
      EXPECT_NEAR(resid.sum(), 0.0, 1e-10);
    }
    const Eigen::VectorXd grad = pr.X.transpose() * resid / n;
    for (int j = 0; j < 6; ++j) {
      if (b[j] == 0.0) {
        EXPECT_LE(std::abs(grad[j]), lambda * s[j] + 1e-9);
      } else {
        EXPECT_NEAR(grad[j], lambda * s[j] * (b[j] > 0 ? 1.0 : -1.0), 1e-9);
      }
    }
  }
}

TEST(Penalty, SelectionLambdaGrid) {
  const auto pr = random_problem(12, 40, 10);
  PenaltyOptions opts;
  const auto sp = scale_problem(pr.X, pr.y, opts);
  const double lmax = sp.xty.cwiseAbs().maxCoeff();
  EXPECT_NEAR(selection_lambda(pr.X, pr.y, opts), 1e-4 * lmax, 1e-15 * lmax);

  // Fewer rows than columns switches to the larger ratio.
  const auto wide = random_problem(13, 6, 10);
  const auto sw = scale_problem(wide.X, wide.y, opts);
  EXPECT_NEAR(selection_lambda(wide.X, wide.y, opts), 1e-2 * sw.xty.cwiseAbs().maxCoeff(), 1e-14);

  opts.scale = PenaltyScale::raw;
  EXPECT_DOUBLE_EQ(selection_lambda(pr.X, pr.y, opts), lambda_grid(pr.X, pr.y).back());

  // A truncated path stops no later than the full grid.
  opts.scale = PenaltyScale::glmnet;
  opts.truncate_path = true;
  EXPECT_GE(selection_lambda(pr.X, pr.y, opts), 1e-4 * lmax);
  EXPECT_THROW(parse_penalty_scale("other"), Error);
  EXPECT_EQ(parse_penalty_scale(to_string(PenaltyScale::raw)), PenaltyScale::raw);
}
