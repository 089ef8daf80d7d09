#pragma once

#include "glarma/likelihood.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <utility>
#include <vector>

namespace glarma {

class DegenerateCurvature : public Error {
 public:
  using Error::Error;
};

/// Least-squares form of the second-order expansion of L in eta:
///   -L_Q(eta) = 1/2 || response - design * eta ||^2
/// with design = Lambda^{1/2} U' and
///   response = Lambda^{1/2} U' eta0 + Lambda^{-1/2} U' dL/deta,
/// where U Lambda U' is the eigendecomposition of -d2L/deta deta' restricted to
/// eigenvalues above the floor.
///
/// Rows never mix conditions: row r only touches the columns listed in
/// block_columns[row_block[r]].
struct QuadraticProblem {
  Eigen::MatrixXd design;
  Eigen::VectorXd response;
  Eigen::VectorXd kept_eigen;
  int dropped = 0;
  double floor = 0.0;
  std::vector<int> row_block;
  std::vector<std::vector<int>> block_columns;
  /// column -> (condition, position)
  std::vector<std::pair<int, int>> column_index_map;

  Eigen::Index rows() const noexcept { return design.rows(); }
  Eigen::Index cols() const noexcept { return design.cols(); }

  /// Wraps an arbitrary dense least-squares pair as a single-block problem.
  static QuadraticProblem from_dense(Eigen::MatrixXd X, Eigen::VectorXd y) {
    QuadraticProblem p;
    p.design = std::move(X);
    p.response = std::move(y);
    p.row_block.assign(p.design.rows(), 0);
    p.block_columns.resize(1);
    for (int c = 0; c < p.design.cols(); ++c) {
      p.block_columns[0].push_back(c);
      p.column_index_map.emplace_back(0, c);
    }
    return p;
  }
};

struct QuadraticOptions {
  /// Eigenvalues below floor_ratio * (largest eigenvalue) are dropped.
  double floor_ratio = 1e-8;
  /// Take the largest eigenvalue per condition block instead of over the
  /// whole matrix, so one badly scaled condition cannot wipe out the others.
  bool per_block = true;
};

inline QuadraticProblem build_quadratic_problem(const EtaHessian& hessian, const Eigen::VectorXd& score,
                                                const Eigen::MatrixXd& eta0, const QuadraticOptions& opts = {}) {
  const int I = hessian.conditions();
  const int T = hessian.length();
  std::vector<Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>> eig;
  eig.reserve(I);
  double lmax = -std::numeric_limits<double>::infinity();
  for (const auto& b : hessian.blocks) {
    eig.emplace_back(-b);
    lmax = std::max(lmax, eig.back().eigenvalues().maxCoeff());
  }
  if (!(lmax > 0.0)) throw DegenerateCurvature("degenerate curvature: negated eta-Hessian has no positive eigenvalue");

  QuadraticProblem p;
  p.floor = std::numeric_limits<double>::infinity();
  std::vector<std::pair<int, int>> kept;  // (block, eigen index)
  for (int i = 0; i < I; ++i) {
    const auto& ev = eig[i].eigenvalues();
    const double floor = opts.floor_ratio * (opts.per_block ? std::max(ev.maxCoeff(), 0.0) : lmax);
    if (ev.maxCoeff() > 0.0) p.floor = std::min(p.floor, floor);
    for (int k = T - 1; k >= 0; --k) {
      if (ev[k] >= floor && ev[k] > 0.0) kept.emplace_back(i, k);
      else ++p.dropped;
    }
  }

  const Eigen::Index r = static_cast<Eigen::Index>(kept.size());
  const Eigen::Index n = static_cast<Eigen::Index>(I) * T;
  p.design = Eigen::MatrixXd::Zero(r, n);
  p.response.resize(r);
  p.kept_eigen.resize(r);
  p.row_block.resize(r);
  p.block_columns.resize(I);
  for (int i = 0; i < I; ++i)
    for (int t = 0; t < T; ++t) {
      p.block_columns[i].push_back(eta_index(i, t, T));
      p.column_index_map.emplace_back(i, t);
    }

  for (Eigen::Index row = 0; row < r; ++row) {
    const auto [i, k] = kept[row];
    const double lam = eig[i].eigenvalues()[k];
    const auto u = eig[i].eigenvectors().col(k);
    const double root = std::sqrt(lam);
    p.design.block(row, static_cast<Eigen::Index>(i) * T, 1, T) = root * u.transpose();
    p.response[row] = root * u.dot(eta0.row(i).transpose()) + u.dot(score.segment(i * T, T)) / root;
    p.kept_eigen[row] = lam;
    p.row_block[row] = i;
  }
  return p;
}

/// Builds the problem at (eta0, gamma_hat) directly from the panel.
inline QuadraticProblem build_quadratic_problem(const Eigen::MatrixXd& eta0, const Eigen::VectorXd& gamma_hat,
                                                const PanelData& data, const QuadraticOptions& opts = {}) {
  const GlarmaParams params{eta0, gamma_hat};
  const auto ws = forward_recursion(params, data, {.eta_first = true});
  return build_quadratic_problem(hessian_eta(data, params, ws), score_eta(data, ws), eta0, opts);
}

}  // namespace glarma
