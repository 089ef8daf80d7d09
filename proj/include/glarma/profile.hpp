#pragma once

#include "glarma/newton.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>
#include <vector>

namespace glarma {

struct EtaMleOptions {
  double tol = 1e-6;  // sup-norm of the eta step
  int max_iter = 100;
  int step_halving_max = 40;

  void validate() const {
    if (!(tol > 0.0)) throw Error("eta_mle.tol must be positive");
    if (max_iter < 1) throw Error("eta_mle.max_iter must be >= 1");
    if (step_halving_max < 1) throw Error("eta_mle.step_halving_max must be >= 1");
  }
};

struct EtaMleResult {
  Eigen::MatrixXd eta;
  double loglik = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Cells held at their start value because all their counts are zero.
  int fixed_cells = 0;
};

/// Cells (i, t) with at least one positive count. An all-zero cell has no
/// finite maximizer: L keeps increasing as eta_{i,t} goes to -inf.
inline std::vector<char> identifiable_cells(const PanelData& data) {
  const int T = data.length();
  std::vector<char> free(static_cast<std::size_t>(data.conditions()) * T, 0);
  for (int i = 0; i < data.conditions(); ++i)
    for (int j = 0; j < data.replicates(i); ++j)
      for (int t = 0; t < T; ++t)
        if (data(i, j, t) > 0.0) free[eta_index(i, t, T)] = 1;
  return free;
}

/// Part of L contributed by the series of condition i.
inline double condition_loglik(const PanelData& data, const RecursionWorkspace& ws, int i) {
  double total = 0.0;
  for (int j = 0; j < data.replicates(i); ++j) {
    const int s = data.series_index(i, j);
    const auto y = data.series(s);
    const auto w = ws.W(s);
    for (int t = 0; t < data.length(); ++t) total += y[t] * w[t] - std::exp(w[t]);
  }
  return total;
}

/// Unpenalized maximizer of L(., gamma) over eta. L separates by condition, so
/// each condition block takes its own damped Newton step (floored
/// pseudo-inverse when the block Hessian is not negative definite, step halving
/// until L_i does not decrease). All-zero cells keep their start value.
inline EtaMleResult maximize_eta(const PanelData& data, const Eigen::VectorXd& gamma, const Eigen::MatrixXd& start,
                                 const EtaMleOptions& opts = {}) {
  opts.validate();
  const int I = data.conditions();
  const int T = data.length();
  GlarmaParams{start, gamma}.check_against(data);
  const auto free = identifiable_cells(data);

  std::vector<std::vector<int>> cols(I);
  EtaMleResult res;
  for (int i = 0; i < I; ++i)
    for (int t = 0; t < T; ++t) {
      if (free[eta_index(i, t, T)]) cols[i].push_back(t);
      else ++res.fixed_cells;
    }

  res.eta = start;
  auto ws = forward_recursion(GlarmaParams{res.eta, gamma}, data, {.eta_first = true});
  std::vector<double> block_ll(I);
  for (int i = 0; i < I; ++i) block_ll[i] = condition_loglik(data, ws, i);

  std::vector<Eigen::VectorXd> dir(I);
  std::vector<double> step(I);
  std::vector<char> active(I);
  for (int it = 0; it < opts.max_iter; ++it) {
    res.iterations = it + 1;
    const GlarmaParams cur{res.eta, gamma};
    const Eigen::VectorXd g = score_eta(data, ws);
    const auto H = hessian_eta(data, cur, ws);
    for (int i = 0; i < I; ++i) {
      const auto& c = cols[i];
      const Eigen::Index n = static_cast<Eigen::Index>(c.size());
      Eigen::MatrixXd Hb(n, n);
      Eigen::VectorXd gb(n);
      for (Eigen::Index a = 0; a < n; ++a) {
        gb[a] = g[eta_index(i, c[a], T)];
        for (Eigen::Index b = 0; b < n; ++b) Hb(a, b) = H.blocks[i](c[a], c[b]);
      }
      bool pinv = false;
      dir[i] = n > 0 ? detail::newton_direction(Hb, gb, pinv) : Eigen::VectorXd();
      step[i] = 1.0;
      active[i] = n > 0 && dir[i].lpNorm<Eigen::Infinity>() > 0.0;
    }

    // Shared trial evaluations; each block accepts or halves on its own.
    double moved = 0.0;
    Eigen::MatrixXd trial = res.eta;
    for (int h = 0; h <= opts.step_halving_max; ++h) {
      bool any = false;
      for (int i = 0; i < I; ++i) {
        if (!active[i]) continue;
        any = true;
        for (std::size_t a = 0; a < cols[i].size(); ++a)
          trial(i, cols[i][a]) = res.eta(i, cols[i][a]) + step[i] * dir[i][static_cast<Eigen::Index>(a)];
      }
      if (!any) break;
      RecursionWorkspace tw;
      bool finite = true;
      try {
        tw = forward_recursion(GlarmaParams{trial, gamma}, data);
      } catch (const OverflowError&) {
        finite = false;
      }
      for (int i = 0; i < I; ++i) {
        if (!active[i]) continue;
        const double ll = finite ? condition_loglik(data, tw, i) : -std::numeric_limits<double>::infinity();
        if (std::isfinite(ll) && ll >= block_ll[i]) {
          block_ll[i] = ll;
          moved = std::max(moved, step[i] * dir[i].lpNorm<Eigen::Infinity>());
          for (int t : cols[i]) res.eta(i, t) = trial(i, t);
          active[i] = 0;
        } else {
          step[i] *= 0.5;
          for (int t : cols[i]) trial(i, t) = res.eta(i, t);
        }
      }
    }

    ws = forward_recursion(GlarmaParams{res.eta, gamma}, data, {.eta_first = true});
    if (moved < opts.tol) {
      res.converged = true;
      break;
    }
  }
  res.loglik = log_likelihood(data, ws);
  return res;
}

struct ProfileOptions {
  NewtonConfig newton;
  EtaMleOptions eta;
  /// Central-difference step for the cross derivative d2L/deta dgamma.
  double fd_step = 1e-5;
};

struct ProfileResult {
  Eigen::VectorXd gamma;
  /// Maximizer of L(., gamma) at the returned gamma.
  Eigen::MatrixXd eta;
  /// loglik_path holds profile values max_eta L(eta, gamma).
  NewtonTrace trace;
};

/// Newton-Raphson on the profile log-likelihood l(gamma) = max_eta L(eta, gamma).
/// Gradient: dL/dgamma at the inner maximizer. Curvature: the Schur complement
///   H_gg - H_ge H_ee^{-1} H_eg,
/// with H_eg from central differences of dL/deta in gamma. Steps are halved
/// until l does not decrease; the inner maximizer is warm-started each time.
inline ProfileResult profile_gamma(const PanelData& data, const Eigen::VectorXd& gamma0, const Eigen::MatrixXd& eta_start,
                                   const ProfileOptions& opts = {}) {
  opts.newton.validate();
  const int T = data.length();
  const int I = data.conditions();
  const int q = static_cast<int>(gamma0.size());
  ProfileResult res;
  res.gamma = gamma0;
  auto inner = maximize_eta(data, gamma0, eta_start, opts.eta);
  res.eta = inner.eta;
  double cur_ll = inner.loglik;
  auto& tr = res.trace;
  tr.gamma_path.push_back(res.gamma);
  tr.loglik_path.push_back(cur_ll);
  if (q == 0) {
    tr.converged = true;
    return res;
  }
  const auto free = identifiable_cells(data);

  for (int it = 0; it < opts.newton.max_iter; ++it) {
    const GlarmaParams p{res.eta, res.gamma};
    const auto ws = forward_recursion(p, data, {.gamma_first = true, .gamma_second = true, .eta_first = true});
    tr.clamp_events += ws.clamp_events();
    const Eigen::VectorXd score = score_gamma(data, ws);
    Eigen::MatrixXd Hp = hessian_gamma(data, ws);
    const auto Hee = hessian_eta(data, p, ws);

    Eigen::MatrixXd cross(static_cast<Eigen::Index>(I) * T, q);
    for (int a = 0; a < q; ++a) {
      const double h = opts.fd_step * std::max(1.0, std::abs(res.gamma[a]));
      Eigen::VectorXd gp = res.gamma, gm = res.gamma;
      gp[a] += h;
      gm[a] -= h;
      const auto wp = forward_recursion(GlarmaParams{res.eta, gp}, data, {.eta_first = true});
      const auto wm = forward_recursion(GlarmaParams{res.eta, gm}, data, {.eta_first = true});
      cross.col(a) = (score_eta(data, wp) - score_eta(data, wm)) / (2.0 * h);
    }
    for (int i = 0; i < I; ++i) {
      std::vector<int> c;
      for (int t = 0; t < T; ++t)
        if (free[eta_index(i, t, T)]) c.push_back(t);
      if (c.empty()) continue;
      const Eigen::Index n = static_cast<Eigen::Index>(c.size());
      Eigen::MatrixXd neg(n, n), C(n, q);
      for (Eigen::Index a = 0; a < n; ++a) {
        C.row(a) = cross.row(eta_index(i, c[a], T));
        for (Eigen::Index b = 0; b < n; ++b) neg(a, b) = -Hee.blocks[i](c[a], c[b]);
      }
      // -H_ee is positive definite at an interior maximizer; fall back to a floored pseudo-inverse.
      Eigen::LLT<Eigen::MatrixXd> llt(neg);
      if (llt.info() == Eigen::Success) {
        Hp.noalias() += C.transpose() * llt.solve(C);
      } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(neg);
        const auto& ev = es.eigenvalues();
        const double floor = 1e-10 * ev.cwiseAbs().maxCoeff();
        Eigen::VectorXd inv = Eigen::VectorXd::Zero(n);
        for (Eigen::Index k = 0; k < n; ++k)
          if (ev[k] > floor) inv[k] = 1.0 / ev[k];
        const Eigen::MatrixXd UC = es.eigenvectors().transpose() * C;
        Hp.noalias() += UC.transpose() * inv.asDiagonal() * UC;
        tr.pseudo_inverse_used = true;
      }
    }
    Hp = 0.5 * (Hp + Hp.transpose());

    const Eigen::VectorXd dir = detail::newton_direction(Hp, score, tr.pseudo_inverse_used);
    bool accepted = false;
    Eigen::VectorXd next = res.gamma;
    EtaMleResult next_inner;
    auto try_direction = [&](const Eigen::VectorXd& d, double step) {
      for (int h = 0; h <= opts.newton.step_halving_max && !accepted; ++h, step *= 0.5) {
        const Eigen::VectorXd trial = res.gamma + step * d;
        EtaMleResult r;
        try {
          r = maximize_eta(data, trial, res.eta, opts.eta);
        } catch (const OverflowError&) {
          continue;
        }
        if (std::isfinite(r.loglik) && r.loglik >= cur_ll) {
          next = trial;
          next_inner = std::move(r);
          accepted = true;
        }
      }
    };
    if (dir.lpNorm<Eigen::Infinity>() > 0.0) try_direction(dir, 1.0);
    const double gnorm = score.lpNorm<Eigen::Infinity>();
    if (!accepted && gnorm > 0.0) {
      ++tr.gradient_fallbacks;
      try_direction(score, 0.1 / gnorm);
    }

    tr.iterations = it + 1;
    if (!accepted) {
      tr.stalled = true;
      tr.converged = gnorm < 1e-8;
      return res;
    }
    const double move = (next - res.gamma).lpNorm<Eigen::Infinity>();
    res.gamma = next;
    res.eta = next_inner.eta;
    cur_ll = next_inner.loglik;
    tr.gamma_path.push_back(res.gamma);
    tr.loglik_path.push_back(cur_ll);
    if (move < opts.newton.tol) {
      tr.converged = true;
      return res;
    }
  }
  return res;
}

}  // namespace glarma
