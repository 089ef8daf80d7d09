#pragma once

#include "glarma/lasso.hpp"
#include "glarma/parallel.hpp"
#include "glarma/rng.hpp"
#include "glarma/stability.hpp"

#include <cmath>
#include <vector>

namespace glarma {

struct PoissonLassoOptions {
  double tol = 1e-8;  // sup-norm change of the coefficients between IRLS passes
  int max_irls = 100;
  LassoOptions inner{1e-10, 10000};
};

struct PoissonLassoFit {
  Eigen::VectorXd coef;
  int irls_iterations = 0;
  bool converged = false;
};

/// -(1/N) sum (y x'b - exp(x'b)) + lambda ||b||_1, no intercept.
inline double poisson_lasso_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& b,
                                      double lambda) {
  const Eigen::VectorXd eta = X * b;
  double ll = 0.0;
  for (Eigen::Index n = 0; n < y.size(); ++n) ll += y[n] * eta[n] - std::exp(eta[n]);
  return -ll / static_cast<double>(y.size()) + lambda * b.lpNorm<1>();
}

/// Largest lambda with a non-zero solution: the gradient at b = 0.
inline double poisson_lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  return (X.transpose() * (y - Eigen::VectorXd::Ones(y.size()))).cwiseAbs().maxCoeff() /
         static_cast<double>(y.size());
}

/// l1-penalized Poisson regression by iteratively reweighted least squares;
/// each weighted lasso subproblem is solved by coordinate descent. A step that
/// increases the objective is halved.
inline PoissonLassoFit poisson_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                                     const PoissonLassoOptions& opts = {}) {
  const double N = static_cast<double>(y.size());
  PoissonLassoFit fit;
  fit.coef = Eigen::VectorXd::Zero(X.cols());
  double obj = poisson_lasso_objective(X, y, fit.coef, lambda);
  for (int it = 0; it < opts.max_irls; ++it) {
    fit.irls_iterations = it + 1;
    const Eigen::VectorXd eta = X * fit.coef;
    const Eigen::VectorXd mu = eta.array().exp();
    const Eigen::VectorXd z = eta + (y - mu).cwiseQuotient(mu);
    const Eigen::MatrixXd gram = X.transpose() * mu.asDiagonal() * X / N;
    const Eigen::VectorXd xtz = X.transpose() * mu.cwiseProduct(z) / N;
    const auto inner = lasso_gram(gram, xtz, lambda, opts.inner);

    Eigen::VectorXd step = inner.coef - fit.coef;
    double next_obj = poisson_lasso_objective(X, y, fit.coef + step, lambda);
    for (int h = 0; h < 30 && !(next_obj <= obj); ++h) {
      step *= 0.5;
      next_obj = poisson_lasso_objective(X, y, fit.coef + step, lambda);
    }
    if (!(next_obj <= obj)) {
      fit.converged = step.lpNorm<Eigen::Infinity>() < opts.tol;
      break;
    }
    fit.coef += step;
    obj = next_obj;
    if (step.lpNorm<Eigen::Infinity>() < opts.tol) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

struct BaselineOptions {
  int n_subsamples = 1000;
  std::uint64_t seed = 0;
  double primary_threshold = 0.6;
  int workers = 1;
  LambdaGridOptions grid;
  PoissonLassoOptions solver;
};

struct BaselineResult {
  /// conditions x length
  Eigen::MatrixXd frequencies;
  /// Full-data fit at the chosen lambda, zeroed off the primary support.
  Eigen::MatrixXd eta_hat;
  std::vector<double> lambda_used;
  int nonconverged_fits = 0;
};

/// Classical per-position Poisson lasso: for each t, the counts of all
/// replicates are regressed on condition indicators (no intercept). Lambda is
/// the smallest value of the log grid below poisson_lambda_max, and the same
/// half-subsample stability protocol produces per-(i, t) frequencies.
inline BaselineResult poisson_lasso_baseline(const PanelData& data, const BaselineOptions& opts = {}) {
  const int I = data.conditions();
  const int T = data.length();
  int N = 0;
  for (int i = 0; i < I; ++i) N += data.replicates(i);
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(N, I);
  for (int i = 0, row = 0; i < I; ++i)
    for (int j = 0; j < data.replicates(i); ++j, ++row) X(row, i) = 1.0;

  BaselineResult res;
  res.frequencies = Eigen::MatrixXd::Zero(I, T);
  res.eta_hat = Eigen::MatrixXd::Zero(I, T);
  res.lambda_used.assign(T, 0.0);
  std::vector<int> failures(T, 0);
  const int half = N / 2;

  parallel_for(T, opts.workers, [&](int t) {
    Eigen::VectorXd y(N);
    for (int i = 0, row = 0; i < I; ++i)
      for (int j = 0; j < data.replicates(i); ++j, ++row) y[row] = data(i, j, t);

    const double lmax = poisson_lambda_max(X, y);
    double lambda = 0.0;
    if (lmax > 0.0) {
      const double ratio = opts.grid.n_lambda == 1 ? 1.0 : opts.grid.ratio;
      lambda = lmax * ratio;
    }
    res.lambda_used[t] = lambda;

    std::vector<int> counts(I, 0);
    for (int s = 0; s < opts.n_subsamples; ++s) {
      Rng rng = make_rng(opts.seed, "baseline", static_cast<std::uint64_t>(t) * opts.n_subsamples + s);
      const auto rows = draw_subsample(N, half, rng);
      Eigen::MatrixXd Xs(half, I);
      Eigen::VectorXd ys(half);
      for (int a = 0; a < half; ++a) {
        Xs.row(a) = X.row(rows[a]);
        ys[a] = y[rows[a]];
      }
      const auto f = poisson_lasso(Xs, ys, lambda, opts.solver);
      if (!f.converged) ++failures[t];
      for (int i = 0; i < I; ++i) counts[i] += f.coef[i] != 0.0;
    }
    const auto full = poisson_lasso(X, y, lambda, opts.solver);
    if (!full.converged) ++failures[t];
    for (int i = 0; i < I; ++i) {
      res.frequencies(i, t) = static_cast<double>(counts[i]) / opts.n_subsamples;
      res.eta_hat(i, t) = res.frequencies(i, t) > opts.primary_threshold ? full.coef[i] : 0.0;
    }
  });
  for (int f : failures) res.nonconverged_fits += f;
  return res;
}

}  // namespace glarma
