#pragma once

#include "glarma/lasso.hpp"
#include "glarma/parallel.hpp"
#include "glarma/penalty.hpp"
#include "glarma/rng.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace glarma {

inline std::vector<double> default_thresholds() { return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}; }

struct StabilityOptions {
  int n_subsamples = 1000;
  std::uint64_t seed = 0;
  std::vector<double> thresholds = default_thresholds();
  double primary_threshold = 0.6;
  int workers = 1;
  LassoOptions lasso;
  /// Scaling of each subsample problem; lambda is interpreted on this scale.
  PenaltyOptions penalty;

  void validate() const {
    penalty.validate();
    if (n_subsamples < 1) throw Error("stability: n_subsamples must be >= 1");
    for (double t : thresholds)
      if (!(t > 0.0 && t < 1.0)) throw Error("stability: thresholds must lie in (0, 1)");
    if (!(primary_threshold > 0.0 && primary_threshold < 1.0))
      throw Error("stability: primary threshold must lie in (0, 1)");
    if (workers < 1) throw Error("stability: workers must be >= 1");
  }
};

struct StabilityResult {
  Eigen::VectorXd frequencies;
  double lambda_used = 0.0;
  int n_subsamples = 0;
  double primary_threshold = 0.6;
  std::vector<double> thresholds;
  /// Refit on the primary-threshold support, exactly zero elsewhere.
  Eigen::VectorXd eta_hat;
  bool empty_support = false;
  int nonconverged_fits = 0;

  std::vector<int> support(double threshold) const {
    std::vector<int> out;
    for (Eigen::Index c = 0; c < frequencies.size(); ++c)
      if (frequencies[c] > threshold) out.push_back(static_cast<int>(c));
    return out;
  }
};

/// Draws k of n indices uniformly without replacement (partial Fisher-Yates), sorted.
inline std::vector<int> draw_subsample(int n, int k, Rng& rng) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (int a = 0; a < k; ++a) {
    std::uniform_int_distribution<int> pick(a, n - 1);
    std::swap(idx[a], idx[pick(rng)]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

/// Unpenalized least squares on the given columns (minimum-norm when rank
/// deficient); zeros elsewhere.
inline Eigen::VectorXd refit_on_support(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                        const std::vector<int>& support) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(X.cols());
  if (support.empty()) return beta;
  Eigen::MatrixXd Xs(X.rows(), static_cast<Eigen::Index>(support.size()));
  for (std::size_t c = 0; c < support.size(); ++c) Xs.col(static_cast<Eigen::Index>(c)) = X.col(support[c]);
  const Eigen::VectorXd bs = Xs.completeOrthogonalDecomposition().solve(y);
  for (std::size_t c = 0; c < support.size(); ++c) beta[support[c]] = bs[static_cast<Eigen::Index>(c)];
  return beta;
}

namespace detail {

inline void gather_rows(const QuadraticProblem& problem, const std::vector<int>& rows, const std::vector<int>& cols,
                        Eigen::MatrixXd& X, Eigen::VectorXd& y) {
  X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t a = 0; a < rows.size(); ++a) {
    y[static_cast<Eigen::Index>(a)] = problem.response[rows[a]];
    for (std::size_t c = 0; c < cols.size(); ++c)
      X(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c)) = problem.design(rows[a], cols[c]);
  }
}

}  // namespace detail

/// Penalty for stability selection on the full problem, on the scale set by opts.
inline double selection_lambda(const QuadraticProblem& problem, const PenaltyOptions& opts,
                               const LassoOptions& lasso = {}) {
  return selection_lambda(problem.design, problem.response, opts, lasso);
}

/// Stability selection: n_subsamples half-size row subsets of the problem,
/// one lasso fit per subset at `lambda`, frequency of nonzero coefficients.
/// Subsample s draws from its own stream derive_seed(seed, "subsample", s),
/// so the result does not depend on the worker count.
///
/// Without an intercept, rows only touch their own block's columns, so each
/// subsample splits into independent per-block lasso problems (on the glmnet
/// scale they share the subsample size n and column scales use all n rows).
inline StabilityResult stability_selection(const QuadraticProblem& problem, double lambda,
                                           const StabilityOptions& opts = {}) {
  opts.validate();
  const int r = static_cast<int>(problem.rows());
  if (r < 2) throw Error("stability: problem needs at least 2 rows");
  const int half = r / 2;
  const int nblocks = static_cast<int>(problem.block_columns.size());
  const bool scaled = opts.penalty.scale == PenaltyScale::glmnet;
  const bool joint = scaled && opts.penalty.intercept;

  std::vector<std::vector<std::uint8_t>> picked(opts.n_subsamples);
  std::vector<std::uint8_t> converged(opts.n_subsamples, 1);

  parallel_for(opts.n_subsamples, opts.workers, [&](int s) {
    Rng rng = make_rng(opts.seed, "subsample", static_cast<std::uint64_t>(s));
    const auto rows = draw_subsample(r, half, rng);
    auto& mark = picked[s];
    mark.assign(problem.cols(), 0);
    Eigen::MatrixXd Xb;
    Eigen::VectorXd yb;

    if (joint) {
      std::vector<int> all(problem.cols());
      std::iota(all.begin(), all.end(), 0);
      detail::gather_rows(problem, rows, all, Xb, yb);
      const auto sp = scale_problem(Xb, yb, opts.penalty);
      const auto fit = lasso_gram(sp.gram, sp.xty, lambda, opts.lasso);
      if (!fit.converged) converged[s] = 0;
      for (Eigen::Index c = 0; c < problem.cols(); ++c)
        if (fit.coef[c] != 0.0) mark[c] = 1;
      return;
    }

    std::vector<std::vector<int>> by_block(nblocks);
    for (int row : rows) by_block[problem.row_block[row]].push_back(row);
    const double inv_n = 1.0 / static_cast<double>(half);
    for (int b = 0; b < nblocks; ++b) {
      const auto& br = by_block[b];
      if (br.empty()) continue;
      const auto& cols = problem.block_columns[b];
      detail::gather_rows(problem, br, cols, Xb, yb);
      Eigen::MatrixXd gram = Xb.transpose() * Xb;
      Eigen::VectorXd xty = Xb.transpose() * yb;
      if (scaled) {
        gram *= inv_n;
        xty *= inv_n;
        if (opts.penalty.standardize) {
          Eigen::VectorXd sd = gram.diagonal().cwiseSqrt();
          for (Eigen::Index c = 0; c < sd.size(); ++c)
            if (!(sd[c] > 0.0)) sd[c] = 1.0;
          const Eigen::VectorXd inv = sd.cwiseInverse();
          gram = inv.asDiagonal() * gram * inv.asDiagonal();
          xty = inv.asDiagonal() * xty;
        }
      }
      const auto fit = lasso_gram(gram, xty, lambda, opts.lasso);
      if (!fit.converged) converged[s] = 0;
      for (std::size_t c = 0; c < cols.size(); ++c)
        if (fit.coef[static_cast<Eigen::Index>(c)] != 0.0) mark[cols[c]] = 1;
    }
  });

  StabilityResult res;
  res.lambda_used = lambda;
  res.n_subsamples = opts.n_subsamples;
  res.primary_threshold = opts.primary_threshold;
  res.thresholds = opts.thresholds;
  std::vector<std::int64_t> counts(problem.cols(), 0);
  for (int s = 0; s < opts.n_subsamples; ++s) {
    for (Eigen::Index c = 0; c < problem.cols(); ++c) counts[c] += picked[s][c];
    res.nonconverged_fits += converged[s] ? 0 : 1;
  }
  res.frequencies.resize(problem.cols());
  for (Eigen::Index c = 0; c < problem.cols(); ++c)
    res.frequencies[c] = static_cast<double>(counts[c]) / opts.n_subsamples;

  const auto sup = res.support(opts.primary_threshold);
  res.empty_support = sup.empty();
  res.eta_hat = refit_on_support(problem.design, problem.response, sup);
  return res;
}

}  // namespace glarma
