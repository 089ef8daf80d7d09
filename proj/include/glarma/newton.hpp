#pragma once

#include "glarma/likelihood.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <vector>

namespace glarma {

struct NewtonConfig {
  double tol = 1e-6;  // sup-norm on successive gamma iterates
  int max_iter = 100;
  int step_halving_max = 20;

  void validate() const {
    if (!(tol > 0.0)) throw Error("newton.tol must be positive");
    if (max_iter < 1) throw Error("newton.max_iter must be >= 1");
    if (step_halving_max < 1) throw Error("newton.step_halving_max must be >= 1");
  }
};

struct NewtonTrace {
  std::vector<Eigen::VectorXd> gamma_path;
  std::vector<double> loglik_path;
  bool converged = false;
  int iterations = 0;
  bool pseudo_inverse_used = false;
  int gradient_fallbacks = 0;
  bool stalled = false;
  std::size_t clamp_events = 0;
};

struct NewtonResult {
  Eigen::VectorXd gamma;
  NewtonTrace trace;
};

namespace detail {

struct GammaEval {
  double loglik;
  Eigen::VectorXd score;
  Eigen::MatrixXd hessian;
  std::size_t clamps;
};

inline GammaEval eval_gamma(const Eigen::MatrixXd& eta, const Eigen::VectorXd& gamma, const PanelData& data) {
  const GlarmaParams p{eta, gamma};
  const auto ws = forward_recursion(p, data, {.gamma_first = true, .gamma_second = true});
  return {log_likelihood(data, ws), score_gamma(data, ws), hessian_gamma(data, ws), ws.clamp_events()};
}

/// L at a trial point; a recursion that overflows counts as -inf.
inline double loglik_at(const Eigen::MatrixXd& eta, const Eigen::VectorXd& gamma, const PanelData& data) {
  try {
    return log_likelihood(GlarmaParams{eta, gamma}, data);
  } catch (const OverflowError&) {
    return -std::numeric_limits<double>::infinity();
  }
}

/// Ascent direction (-H)^{-1} g. Falls back to an eigenvalue-floored
/// pseudo-inverse of -H (absolute eigenvalues, directions below
/// 1e-10 * spectral radius dropped) when -H is not safely positive definite.
inline Eigen::VectorXd newton_direction(const Eigen::MatrixXd& hessian, const Eigen::VectorXd& score,
                                        bool& pseudo_inverse) {
  const Eigen::MatrixXd neg = -hessian;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(neg);
  const auto& ev = es.eigenvalues();
  const double radius = ev.cwiseAbs().maxCoeff();
  const double floor = 1e-10 * radius;
  if (radius > 0.0 && ev.minCoeff() > floor) return es.eigenvectors() * (es.eigenvectors().transpose() * score).cwiseQuotient(ev);

  pseudo_inverse = true;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
  for (Eigen::Index k = 0; k < ev.size(); ++k)
    if (radius > 0.0 && std::abs(ev[k]) > floor) inv[k] = 1.0 / std::abs(ev[k]);
  return es.eigenvectors() * inv.asDiagonal() * (es.eigenvectors().transpose() * score);
}

}  // namespace detail

/// Newton-Raphson for gamma with eta held fixed.
///
/// Every accepted step keeps L from decreasing: the Newton step is halved up
/// to step_halving_max times, then a gradient step (scaled to sup-norm 0.1)
/// is tried with the same halving. Stops at the first iterate whose move is
/// below tol in sup-norm; otherwise returns the best iterate after max_iter.
inline NewtonResult estimate_gamma(const Eigen::MatrixXd& eta0, const Eigen::VectorXd& gamma0,
                                   const PanelData& data, const NewtonConfig& cfg = {}) {
  cfg.validate();
  NewtonResult res;
  res.gamma = gamma0;
  auto& tr = res.trace;
  if (gamma0.size() == 0) {
    tr.converged = true;
    return res;
  }

  auto cur = detail::eval_gamma(eta0, res.gamma, data);
  tr.clamp_events += cur.clamps;
  tr.gamma_path.push_back(res.gamma);
  tr.loglik_path.push_back(cur.loglik);

  for (int it = 0; it < cfg.max_iter; ++it) {
    const Eigen::VectorXd dir = detail::newton_direction(cur.hessian, cur.score, tr.pseudo_inverse_used);

    Eigen::VectorXd next = res.gamma;
    double next_ll = cur.loglik;
    bool accepted = false;
    if (dir.lpNorm<Eigen::Infinity>() == 0.0) {
      accepted = true;
    } else {
      double step = 1.0;
      for (int h = 0; h <= cfg.step_halving_max && !accepted; ++h, step *= 0.5) {
        const Eigen::VectorXd trial = res.gamma + step * dir;
        const double ll = detail::loglik_at(eta0, trial, data);
        if (std::isfinite(ll) && ll >= cur.loglik) {
          next = trial;
          next_ll = ll;
          accepted = true;
        }
      }
      const double gnorm = cur.score.lpNorm<Eigen::Infinity>();
      if (!accepted && gnorm > 0.0) {
        ++tr.gradient_fallbacks;
        double step = 0.1 / gnorm;
        for (int h = 0; h <= cfg.step_halving_max && !accepted; ++h, step *= 0.5) {
          const Eigen::VectorXd trial = res.gamma + step * cur.score;
          const double ll = detail::loglik_at(eta0, trial, data);
          if (std::isfinite(ll) && ll >= cur.loglik) {
            next = trial;
            next_ll = ll;
            accepted = true;
          }
        }
      }
    }

    tr.iterations = it + 1;
    if (!accepted) {
      // No ascent available at this resolution: treat as a numerical fixed point.
      tr.stalled = true;
      tr.converged = cur.score.lpNorm<Eigen::Infinity>() < 1e-8;
      return res;
    }

    const double move = (next - res.gamma).lpNorm<Eigen::Infinity>();
    res.gamma = next;
    tr.gamma_path.push_back(res.gamma);
    tr.loglik_path.push_back(next_ll);
    if (move < cfg.tol) {
      tr.converged = true;
      return res;
    }
    cur = detail::eval_gamma(eta0, res.gamma, data);
    tr.clamp_events += cur.clamps;
  }
  return res;
}

}  // namespace glarma
