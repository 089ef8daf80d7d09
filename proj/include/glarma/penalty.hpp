#pragma once

#include "glarma/lasso.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace glarma {

/// How the l1 problem on a (sub)sample is scaled and where lambda comes from.
///   raw:    1/2 ||y - X b||^2 + lambda ||b||_1, lambda = smallest value of lambda_grid.
///   glmnet: (1/2n) ||y - X b||^2 + lambda sum_j s_j |b_j| with s_j the column
///           root mean square (1 when standardize is off), optional unpenalized
///           intercept, and lambda = last value of a log grid from lambda_max.
///           With truncate_path the grid stops early once the explained
///           fraction of the sum of squares exceeds dev_max or grows by less
///           than dev_change (relative) between steps.
enum class PenaltyScale { raw, glmnet };

inline std::string to_string(PenaltyScale s) { return s == PenaltyScale::raw ? "raw" : "glmnet"; }

inline PenaltyScale parse_penalty_scale(const std::string& s) {
  if (s == "raw") return PenaltyScale::raw;
  if (s == "glmnet") return PenaltyScale::glmnet;
  throw Error("unknown penalty scale '" + s + "' (valid: raw, glmnet)");
}

struct PenaltyOptions {
  PenaltyScale scale = PenaltyScale::glmnet;
  bool standardize = true;
  bool intercept = false;
  bool truncate_path = false;
  /// Grid ratio when rows < columns (glmnet scale only); grid.ratio applies otherwise.
  double small_n_ratio = 1e-2;
  double dev_max = 0.999;
  double dev_change = 1e-5;
  /// Grid points solved before the stopping rule is consulted.
  int min_path_points = 5;
  LambdaGridOptions grid;

  void validate() const {
    if (grid.n_lambda < 1) throw Error("grid.n_lambda must be >= 1");
    if (!(grid.ratio > 0.0 && grid.ratio <= 1.0)) throw Error("grid.ratio must lie in (0, 1]");
    if (!(small_n_ratio > 0.0 && small_n_ratio <= 1.0)) throw Error("grid.small_n_ratio must lie in (0, 1]");
    if (!(dev_max > 0.0 && dev_max <= 1.0)) throw Error("penalty.dev_max must lie in (0, 1]");
    if (!(dev_change >= 0.0)) throw Error("penalty.dev_change must be >= 0");
  }
};

/// Covariance-form problem after the glmnet-style transformation:
/// gram = Z'Z / n, xty = Z'y_c / n, with Z the (centered) columns divided by
/// their scale and y_c the (centered) response.
struct ScaledProblem {
  Eigen::MatrixXd gram;
  Eigen::VectorXd xty;
  double yy = 0.0;  // y_c'y_c / n
  Eigen::VectorXd scale;
  Eigen::Index n = 0;
};

inline ScaledProblem scale_problem(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const PenaltyOptions& opts) {
  const Eigen::Index n = X.rows();
  if (n == 0 || X.cols() == 0) throw Error("penalty: empty problem");
  ScaledProblem sp;
  sp.n = n;
  Eigen::MatrixXd Z = X;
  Eigen::VectorXd yc = y;
  if (opts.intercept) {
    Z.rowwise() -= X.colwise().mean();
    yc.array() -= y.mean();
  }
  sp.scale = Eigen::VectorXd::Ones(X.cols());
  if (opts.standardize) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      const double s = std::sqrt(Z.col(j).squaredNorm() / static_cast<double>(n));
      if (s > 0.0) {
        sp.scale[j] = s;
        Z.col(j) /= s;
      }
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  sp.gram.noalias() = Z.transpose() * Z * inv_n;
  sp.xty.noalias() = Z.transpose() * yc * inv_n;
  sp.yy = yc.squaredNorm() * inv_n;
  return sp;
}

/// Descending grid for a scaled problem; the ratio depends on n versus p.
inline std::vector<double> scaled_grid(const ScaledProblem& sp, const PenaltyOptions& opts) {
  const double lmax = sp.xty.cwiseAbs().maxCoeff();
  if (lmax == 0.0) return {0.0};
  const double ratio = sp.n >= sp.xty.size() ? opts.grid.ratio : opts.small_n_ratio;
  const int m = opts.grid.n_lambda;
  if (m == 1 || ratio == 1.0) return {lmax};
  std::vector<double> grid(m);
  for (int k = 0; k < m; ++k) grid[k] = lmax * std::exp(std::log(ratio) * k / (m - 1));
  grid.back() = lmax * ratio;
  return grid;
}

/// Penalty used for stability selection on the problem (X, y).
inline double selection_lambda(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const PenaltyOptions& opts,
                               const LassoOptions& lasso = {}) {
  opts.validate();
  if (opts.scale == PenaltyScale::raw) return lambda_grid(X, y, opts.grid).back();
  const auto sp = scale_problem(X, y, opts);
  const auto grid = scaled_grid(sp, opts);
  if (!opts.truncate_path || grid.size() == 1 || sp.yy == 0.0) return grid.back();

  LassoPath path(sp.gram, sp.xty);
  double prev = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto& fit = path.solve(grid[k], lasso);
    // Explained fraction 1 - RSS / (y'y) from covariance quantities.
    const double rss = sp.yy - 2.0 * fit.coef.dot(sp.xty) + fit.coef.dot(path.fitted_gram());
    const double dev = 1.0 - rss / sp.yy;
    if (static_cast<int>(k) + 1 >= opts.min_path_points && (dev > opts.dev_max || dev - prev < opts.dev_change * dev))
      return grid[k];
    prev = dev;
  }
  return grid.back();
}

}  // namespace glarma
