#pragma once

#include "glarma/recursion.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <vector>

namespace glarma {

/// Conditional log-likelihood kernel sum (Y W - exp(W)) over all cells, read
/// from an already filled workspace.
inline double log_likelihood(const PanelData& data, const RecursionWorkspace& ws) {
  double total = 0.0;
  for (int s = 0; s < data.series_count(); ++s) {
    const auto y = data.series(s);
    const auto w = ws.W(s);
    for (int t = 0; t < data.length(); ++t) total += y[t] * w[t] - std::exp(w[t]);
  }
  return total;
}

inline double log_likelihood(const GlarmaParams& params, const PanelData& data) {
  return log_likelihood(data, forward_recursion(params, data));
}

/// dL/dgamma. Needs a workspace built with gamma_first.
inline Eigen::VectorXd score_gamma(const PanelData& data, const RecursionWorkspace& ws) {
  const int q = ws.q();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(q);
  if (q == 0) return g;
  for (int s = 0; s < data.series_count(); ++s) {
    const auto y = data.series(s);
    for (int t = 0; t < data.length(); ++t) {
      const double r = y[t] - std::exp(ws.W(s, t));
      for (int k = 0; k < q; ++k) g[k] += r * ws.dW_dgamma(s, t, k);
    }
  }
  return g;
}

/// d2L/dgamma dgamma' including the (Y - exp W) d2W term. Needs gamma_second.
inline Eigen::MatrixXd hessian_gamma(const PanelData& data, const RecursionWorkspace& ws) {
  const int q = ws.q();
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(q, q);
  if (q == 0) return H;
  for (int s = 0; s < data.series_count(); ++s) {
    const auto y = data.series(s);
    for (int t = 0; t < data.length(); ++t) {
      const double mu = std::exp(ws.W(s, t));
      const double r = y[t] - mu;
      for (int a = 0; a < q; ++a)
        for (int b = 0; b < q; ++b)
          H(a, b) += r * ws.d2W_dgamma2(s, t, a, b) - mu * ws.dW_dgamma(s, t, a) * ws.dW_dgamma(s, t, b);
    }
  }
  return 0.5 * (H + H.transpose());
}

/// dL/deta in eta_index order. Entry (i0, t0) only collects series of
/// condition i0 and positions t >= t0. Needs eta_first.
inline Eigen::VectorXd score_eta(const PanelData& data, const RecursionWorkspace& ws) {
  const int T = data.length();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(data.conditions()) * T);
  for (int i = 0; i < data.conditions(); ++i) {
    for (int j = 0; j < data.replicates(i); ++j) {
      const int s = data.series_index(i, j);
      const auto y = data.series(s);
      for (int t = 0; t < T; ++t) {
        const double r = y[t] - std::exp(ws.W(s, t));
        const auto row = ws.dW_deta_row(s, t);
        for (int t0 = 0; t0 <= t; ++t0) g[eta_index(i, t0, T)] += r * row[t0];
      }
    }
  }
  return g;
}

struct CurvatureReport {
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  bool indefinite = false;
};

/// d2L/deta deta', block diagonal by condition. Only the T x T blocks are kept.
struct EtaHessian {
  std::vector<Eigen::MatrixXd> blocks;

  int conditions() const noexcept { return static_cast<int>(blocks.size()); }
  int length() const noexcept { return blocks.empty() ? 0 : static_cast<int>(blocks.front().rows()); }

  Eigen::MatrixXd dense() const {
    const int T = length();
    const Eigen::Index n = static_cast<Eigen::Index>(conditions()) * T;
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < conditions(); ++i) H.block(i * T, i * T, T, T) = blocks[i];
    return H;
  }

  /// Spectrum of the negated Hessian. Flags indefiniteness when an eigenvalue
  /// falls below -tol * (largest eigenvalue).
  CurvatureReport negated_curvature(double tol = 1e-8) const {
    CurvatureReport rep;
    bool first = true;
    for (const auto& b : blocks) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(-b, Eigen::EigenvaluesOnly);
      const auto& ev = es.eigenvalues();
      if (first || ev.minCoeff() < rep.min_eigenvalue) rep.min_eigenvalue = ev.minCoeff();
      if (first || ev.maxCoeff() > rep.max_eigenvalue) rep.max_eigenvalue = ev.maxCoeff();
      first = false;
    }
    rep.indefinite = rep.min_eigenvalue < -tol * std::max(rep.max_eigenvalue, 0.0);
    return rep;
  }
};

/// d2L/deta deta' without materializing the d2W/deta2 tensor.
///
/// The second-derivative recursion D2_t = sum_k a_{t,k} (G_{t-k} - D2_{t-k}),
/// with a_{t,k} = gamma_k (1 + E_{t-k}) and G_s = dW_s dW_s', is linear in D2,
/// so sum_t r_t D2_t (r_t = Y_t - exp W_t) collapses to sum_s c_s G_s where
///   lambda_t = r_t - c_t,   c_s = sum_k a_{s+k,k} lambda_{s+k},
/// is swept backwards in t. Each block is then sum_s (c_s - exp W_s) G_s.
inline EtaHessian hessian_eta(const PanelData& data, const GlarmaParams& params, const RecursionWorkspace& ws) {
  const int T = data.length();
  const int q = params.q();
  EtaHessian out;
  out.blocks.assign(data.conditions(), Eigen::MatrixXd::Zero(T, T));

  std::vector<double> lam(T), c(T);
  for (int i = 0; i < data.conditions(); ++i) {
    const int J = data.replicates(i);
    // Rows s of each series' dW/deta stacked, scaled by sqrt|weight| with the sign kept apart.
    Eigen::MatrixXd pos = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(J) * T, T);
    Eigen::MatrixXd neg = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(J) * T, T);
    for (int j = 0; j < J; ++j) {
      const int s = data.series_index(i, j);
      const auto y = data.series(s);
      for (int t = T - 1; t >= 0; --t) {
        double acc = 0.0;
        for (int k = 1; k <= q && t + k < T; ++k)
          acc += params.gamma[k - 1] * (1.0 + ws.E(s, t)) * lam[t + k];
        c[t] = acc;
        lam[t] = (y[t] - std::exp(ws.W(s, t))) - acc;
      }
      for (int t = 0; t < T; ++t) {
        const double weight = c[t] - std::exp(ws.W(s, t));
        const double root = std::sqrt(std::abs(weight));
        auto& target = weight >= 0.0 ? pos : neg;
        const auto row = ws.dW_deta_row(s, t);
        for (int t0 = 0; t0 <= t; ++t0) target(static_cast<Eigen::Index>(j) * T + t, t0) = root * row[t0];
      }
    }
    auto& H = out.blocks[i];
    H.noalias() = pos.transpose() * pos;
    H.noalias() -= neg.transpose() * neg;
  }
  return out;
}

/// Reference route: contracts the explicit d2W/deta2 tensors. O(T^3) memory per
/// series; used to cross-check hessian_eta on small panels.
inline EtaHessian hessian_eta_explicit(const PanelData& data, const GlarmaParams& params) {
  const int T = data.length();
  const auto ws = forward_recursion(params, data, {.eta_first = true});
  EtaHessian out;
  out.blocks.assign(data.conditions(), Eigen::MatrixXd::Zero(T, T));
  for (int i = 0; i < data.conditions(); ++i) {
    for (int j = 0; j < data.replicates(i); ++j) {
      const int s = data.series_index(i, j);
      const auto d2 = eta_second_derivatives(params, data, i, j);
      const auto y = data.series(s);
      for (int t = 0; t < T; ++t) {
        const double mu = std::exp(ws.W(s, t));
        Eigen::VectorXd d = Eigen::VectorXd::Zero(T);
        for (int t0 = 0; t0 <= t; ++t0) d[t0] = ws.dW_deta(s, t, t0);
        out.blocks[i] += (y[t] - mu) * d2[t] - mu * d * d.transpose();
      }
    }
  }
  return out;
}

}  // namespace glarma
