#pragma once

#include "glarma/quadratic.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <vector>

namespace glarma {

struct LambdaGridOptions {
  int n_lambda = 100;
  double ratio = 1e-4;
};

/// Log-spaced descending grid from lambda_max = max_col |X_col' y| / r down to
/// ratio * lambda_max. A zero response gives the single value 0.
inline std::vector<double> lambda_grid(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                       const LambdaGridOptions& opts = {}) {
  if (X.rows() == 0 || X.cols() == 0) throw Error("lambda_grid: empty problem");
  if (opts.n_lambda < 1) throw Error("lambda_grid: n_lambda must be >= 1");
  if (!(opts.ratio > 0.0) || opts.ratio > 1.0) throw Error("lambda_grid: ratio must lie in (0, 1]");
  const double lmax = (X.transpose() * y).cwiseAbs().maxCoeff() / static_cast<double>(X.rows());
  if (lmax == 0.0) return {0.0};
  if (opts.n_lambda == 1 || opts.ratio == 1.0) return {lmax};
  std::vector<double> grid(opts.n_lambda);
  const double step = std::log(opts.ratio) / (opts.n_lambda - 1);
  for (int k = 0; k < opts.n_lambda; ++k) grid[k] = lmax * std::exp(step * k);
  grid.back() = lmax * opts.ratio;
  return grid;
}

inline std::vector<double> lambda_grid(const QuadraticProblem& p, const LambdaGridOptions& opts = {}) {
  return lambda_grid(p.design, p.response, opts);
}

struct LassoOptions {
  /// Stop once the largest KKT violation is below tol * max(1, ||X'y||_inf).
  double tol = 1e-8;
  int max_sweeps = 10000;
  /// When positive, solve along a log-spaced path of this many penalties from
  /// ||X'y||_inf down to the target, warm-starting each from the previous one.
  int path_steps = 0;
};

struct LassoFit {
  Eigen::VectorXd coef;
  int sweeps = 0;
  bool converged = false;
};

inline double soft_threshold(double z, double gamma) noexcept {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

/// Largest violation of the lasso optimality conditions given the gradient
/// term grad = X'(y - X beta).
inline double kkt_violation(const Eigen::VectorXd& grad, const Eigen::VectorXd& beta, double lambda) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    const double v = beta[j] == 0.0 ? std::max(0.0, std::abs(grad[j]) - lambda)
                                    : std::abs(grad[j] - lambda * (beta[j] > 0.0 ? 1.0 : -1.0));
    worst = std::max(worst, v);
  }
  return worst;
}

/// Coordinate descent in covariance form (gram = X'X, xty = X'y) for
/// 1/2 ||y - X beta||^2 + lambda ||beta||_1, keeping its iterate between calls
/// so that a decreasing sequence of penalties is solved with warm starts.
/// Columns with zero norm stay at 0.
class LassoPath {
 public:
  LassoPath(const Eigen::MatrixXd& gram, const Eigen::VectorXd& xty)
      : gram_(gram), xty_(xty), gb_(Eigen::VectorXd::Zero(xty.size())), active_(xty.size(), 0) {
    if (gram.rows() != gram.cols() || gram.rows() != xty.size()) throw Error("lasso: gram/xty shape mismatch");
    fit_.coef = Eigen::VectorXd::Zero(xty.size());
    scale_ = std::max(1.0, xty.size() > 0 ? xty.lpNorm<Eigen::Infinity>() : 0.0);
  }

  /// Solves at `lambda` from the current iterate. Converged means the KKT
  /// conditions hold to tol * max(1, ||xty||_inf); sweeps count this call only.
  const LassoFit& solve(double lambda, const LassoOptions& opts) {
    if (lambda < 0.0) throw Error("lasso: lambda must be non-negative");
    fit_.sweeps = 0;
    fit_.converged = false;
    const Eigen::Index p = xty_.size();
    const double target = opts.tol * scale_;
    while (fit_.sweeps < opts.max_sweeps) {
      ++fit_.sweeps;
      for (Eigen::Index j = 0; j < p; ++j) update(j, lambda);
      if (kkt_violation(xty_ - gb_, fit_.coef, lambda) <= target) {
        fit_.converged = true;
        break;
      }
      // Iterate on the active set until it settles, then go back to a full sweep.
      for (Eigen::Index j = 0; j < p; ++j) active_[j] = fit_.coef[j] != 0.0;
      while (fit_.sweeps < opts.max_sweeps) {
        double biggest = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
          if (!active_[j]) continue;
          const double before = fit_.coef[j];
          update(j, lambda);
          biggest = std::max(biggest, std::abs(fit_.coef[j] - before) * gram_(j, j));
        }
        ++fit_.sweeps;
        if (biggest <= 0.1 * target) break;
        if (fit_.sweeps % 50 == 0) {
          if (polish(lambda, target)) {
            fit_.converged = true;
            return fit_;
          }
          break;
        }
      }
    }
    return fit_;
  }

  const LassoFit& current() const noexcept { return fit_; }
  /// gram * coef at the current iterate.
  const Eigen::VectorXd& fitted_gram() const noexcept { return gb_; }

 private:
  void update(Eigen::Index j, double lambda) {
    const double d = gram_(j, j);
    if (d <= 0.0) return;
    const double old = fit_.coef[j];
    const double nb = soft_threshold(xty_[j] - gb_[j] + d * old, lambda) / d;
    if (nb != old) {
      gb_.noalias() += (nb - old) * gram_.col(j);
      fit_.coef[j] = nb;
    }
  }

  // Active-set finish for ill-conditioned problems where cyclic updates crawl.
  // With the current signs held fixed the criterion is a smooth quadratic;
  // move towards its minimizer, stopping where a coordinate first reaches zero
  // (that coordinate leaves the active set) and repeat. Every move lowers the
  // criterion. Returns true when the result satisfies the KKT conditions.
  bool polish(double lambda, double target) {
    Eigen::VectorXd x = fit_.coef;
    bool moved = false;
    for (Eigen::Index round = 0; round <= x.size(); ++round) {
      std::vector<Eigen::Index> A;
      for (Eigen::Index j = 0; j < x.size(); ++j)
        if (x[j] != 0.0) A.push_back(j);
      if (A.empty()) break;
      const Eigen::Index m = static_cast<Eigen::Index>(A.size());
      Eigen::MatrixXd G(m, m);
      Eigen::MatrixXd target_a(m, 1);
      for (Eigen::Index a = 0; a < m; ++a) {
        target_a(a, 0) = xty_[A[a]] - lambda * (x[A[a]] > 0.0 ? 1.0 : -1.0);
        for (Eigen::Index b = 0; b < m; ++b) G(a, b) = gram_(A[a], A[b]);
      }
      const Eigen::LDLT<Eigen::MatrixXd> llt(G);
      if (llt.info() != Eigen::Success || !llt.isPositive()) break;
      llt.solveInPlace(target_a);
      if (!target_a.allFinite()) break;
      double step = 1.0;
      Eigen::Index hit = -1;
      for (Eigen::Index a = 0; a < m; ++a) {
        const double cur = x[A[a]];
        if (target_a(a, 0) * cur <= 0.0) {
          const double t = cur / (cur - target_a(a, 0));
          if (t < step) {
            step = t;
            hit = a;
          }
        }
      }
      for (Eigen::Index a = 0; a < m; ++a) x[A[a]] += step * (target_a(a, 0) - x[A[a]]);
      moved = true;
      if (hit < 0) break;
      x[A[hit]] = 0.0;
    }
    if (!moved) return false;
    Eigen::VectorXd gb = Eigen::VectorXd::Zero(x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j)
      if (x[j] != 0.0) gb.noalias() += x[j] * gram_.col(j);
    auto criterion = [&](const Eigen::VectorXd& b, const Eigen::VectorXd& g) {
      return 0.5 * b.dot(g) - b.dot(xty_) + lambda * b.lpNorm<1>();
    };
    if (!(criterion(x, gb) <= criterion(fit_.coef, gb_))) return false;
    fit_.coef = std::move(x);
    gb_ = std::move(gb);
    return kkt_violation(xty_ - gb_, fit_.coef, lambda) <= target;
  }

  const Eigen::MatrixXd& gram_;
  const Eigen::VectorXd& xty_;
  Eigen::VectorXd gb_;
  std::vector<char> active_;
  LassoFit fit_;
  double scale_ = 1.0;
};

/// Cyclic coordinate descent for 1/2 ||y - X beta||^2 + lambda ||beta||_1 in
/// covariance form. With opts.path_steps > 0 the target is approached along a
/// log-spaced path from ||xty||_inf; sweeps then count the whole path.
inline LassoFit lasso_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& xty, double lambda,
                           const LassoOptions& opts = {}) {
  if (lambda < 0.0) throw Error("lasso: lambda must be non-negative");
  LassoPath path(gram, xty);
  const double top = xty.size() > 0 ? xty.lpNorm<Eigen::Infinity>() : 0.0;
  int total = 0;
  if (opts.path_steps > 0 && lambda < top) {
    const double step = std::log((lambda > 0.0 ? lambda : 1e-12 * top) / top) / opts.path_steps;
    for (int k = 1; k < opts.path_steps; ++k) total += path.solve(top * std::exp(step * k), opts).sweeps;
  }
  LassoFit fit = path.solve(lambda, opts);
  fit.sweeps += total;
  return fit;
}

inline LassoFit lasso_cd(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                         const LassoOptions& opts = {}) {
  const Eigen::MatrixXd gram = X.transpose() * X;
  const Eigen::VectorXd xty = X.transpose() * y;
  return lasso_gram(gram, xty, lambda, opts);
}

inline LassoFit lasso_cd(const QuadraticProblem& p, double lambda, const LassoOptions& opts = {}) {
  return lasso_cd(p.design, p.response, lambda, opts);
}

inline double lasso_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                              double lambda) {
  return 0.5 * (y - X * beta).squaredNorm() + lambda * beta.lpNorm<1>();
}

/// Fresh KKT check from the residual.
inline double kkt_violation(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                            double lambda) {
  return kkt_violation(X.transpose() * (y - X * beta), beta, lambda);
}

}  // namespace glarma
