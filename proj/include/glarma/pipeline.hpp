#pragma once

#include "glarma/newton.hpp"
#include "glarma/profile.hpp"
#include "glarma/stability.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace glarma {

/// Where the quadratic expansion sits in outer iterations after the first.
///   profile:      gamma maximizes the profile likelihood max_eta L(eta, gamma),
///                 expansion at the dense maximizer eta(gamma).
///   sparse_refit: gamma by Newton at the previous sparse refit, expansion there.
/// The first iteration always expands at init_eta with gamma from Newton there.
enum class ExpansionPolicy { profile, sparse_refit };

inline std::string to_string(ExpansionPolicy e) { return e == ExpansionPolicy::profile ? "profile" : "sparse_refit"; }

inline ExpansionPolicy parse_expansion_policy(const std::string& s) {
  if (s == "profile") return ExpansionPolicy::profile;
  if (s == "sparse_refit") return ExpansionPolicy::sparse_refit;
  throw Error("unknown expansion policy '" + s + "' (valid: profile, sparse_refit)");
}

struct FitConfig {
  int q = 1;
  std::vector<double> thresholds = default_thresholds();
  double primary_threshold = 0.6;
  int max_outer_iter = 5;
  /// Outer iterations always run at least this many times.
  int min_outer_iter = 2;
  double gamma_stab_tol = 1e-3;
  std::optional<Eigen::VectorXd> oracle_gamma;
  NewtonConfig newton;
  ExpansionPolicy expansion = ExpansionPolicy::profile;
  EtaMleOptions eta_mle;
  int n_subsamples = 1000;
  std::uint64_t seed = 0;
  int workers = 1;
  PenaltyOptions penalty;
  LassoOptions lasso;
  QuadraticOptions quadratic;

  void validate() const {
    if (q < 0) throw Error("fit: q must be >= 0");
    if (max_outer_iter < 1) throw Error("fit: max_outer_iter must be >= 1");
    if (min_outer_iter < 1 || min_outer_iter > max_outer_iter)
      throw Error("fit: min_outer_iter must lie in [1, max_outer_iter]");
    if (!(gamma_stab_tol > 0.0)) throw Error("fit: gamma_stab_tol must be positive");
    if (oracle_gamma && oracle_gamma->size() != q)
      throw Error("fit: oracle gamma has length " + std::to_string(oracle_gamma->size()) + ", q is " +
                  std::to_string(q));
    newton.validate();
    eta_mle.validate();
    stability_options().validate();
  }

  StabilityOptions stability_options() const {
    StabilityOptions s;
    s.n_subsamples = n_subsamples;
    s.seed = seed;
    s.thresholds = thresholds;
    s.primary_threshold = primary_threshold;
    s.workers = workers;
    s.lasso = lasso;
    s.penalty = penalty;
    return s;
  }
};

struct OuterStep {
  Eigen::VectorXd gamma;
  int support_size = 0;
  double loglik = 0.0;
  double lambda = 0.0;
  int newton_iterations = 0;
  bool newton_converged = true;
  int dropped_directions = 0;
  /// "initial", "profile" or "sparse_refit".
  std::string expansion = "initial";
};

struct FitResult {
  Eigen::MatrixXd eta_hat;
  Eigen::VectorXd gamma_hat;
  /// Selection frequencies, conditions x length.
  Eigen::MatrixXd frequencies;
  std::vector<double> thresholds;
  double primary_threshold = 0.6;
  std::vector<OuterStep> outer_trace;
  bool converged = false;
  bool newton_called = false;
  bool empty_support = false;
  std::size_t clamp_events = 0;

  /// (condition, position) pairs with frequency above threshold.
  std::vector<std::pair<int, int>> support(double threshold) const {
    std::vector<std::pair<int, int>> out;
    for (Eigen::Index i = 0; i < frequencies.rows(); ++i)
      for (Eigen::Index t = 0; t < frequencies.cols(); ++t)
        if (frequencies(i, t) > threshold) out.emplace_back(static_cast<int>(i), static_cast<int>(t));
    return out;
  }
};

/// Saturated Poisson GLM fit ignoring the ARMA part: log of the replicate
/// mean; all-zero cells get log(1 / (2 n_i)).
inline Eigen::MatrixXd init_eta(const PanelData& data) {
  Eigen::MatrixXd eta(data.conditions(), data.length());
  for (int i = 0; i < data.conditions(); ++i) {
    const int n = data.replicates(i);
    for (int t = 0; t < data.length(); ++t) {
      double sum = 0.0;
      for (int j = 0; j < n; ++j) sum += data(i, j, t);
      eta(i, t) = sum > 0.0 ? std::log(sum / n) : std::log(1.0 / (2.0 * n));
    }
  }
  return eta;
}

/// Selection at a fixed gamma: quadratic problem at (eta_in, gamma), penalty
/// from the full problem, stability selection.
inline StabilityResult select_at(const Eigen::MatrixXd& eta_in, const Eigen::VectorXd& gamma, const PanelData& data,
                                 const FitConfig& cfg, int* dropped = nullptr) {
  const auto problem = build_quadratic_problem(eta_in, gamma, data, cfg.quadratic);
  if (dropped) *dropped = problem.dropped;
  const double lambda = selection_lambda(problem, cfg.penalty, cfg.lasso);
  return stability_selection(problem, lambda, cfg.stability_options());
}

/// Two-stage procedure iterated until gamma stabilizes.
///   Iteration 1: gamma_1 by Newton-Raphson at eta_0 = init_eta, quadratic
///   expansion at (eta_0, gamma_1), stability selection, refit.
///   Later iterations (policy profile): gamma_k maximizes the profile
///   likelihood, warm-started from gamma_{k-1}; expansion at the dense eta
///   maximizing L(., gamma_k). The result no longer depends on the previous
///   selection, so the loop ends after iteration 2.
///   Later iterations (policy sparse_refit): Newton at the previous refit
///   eta_{k-1}, expansion there; stop when gamma moves less than gamma_stab_tol.
/// oracle_gamma fixes gamma throughout; with q = 0 the procedure is one
/// iteration since the dense maximizer equals eta_0.
inline FitResult fit(const PanelData& data, const FitConfig& cfg) {
  cfg.validate();
  const int I = data.conditions();
  const int T = data.length();

  FitResult res;
  res.thresholds = cfg.thresholds;
  res.primary_threshold = cfg.primary_threshold;

  const Eigen::MatrixXd eta0 = init_eta(data);
  Eigen::MatrixXd eta_in = eta0;
  Eigen::VectorXd gamma_prev = cfg.oracle_gamma ? *cfg.oracle_gamma : Eigen::VectorXd::Zero(cfg.q);
  const bool profile = cfg.expansion == ExpansionPolicy::profile;
  const int last = cfg.q == 0 ? 1 : (profile ? std::min(2, cfg.max_outer_iter) : cfg.max_outer_iter);

  for (int k = 1; k <= last; ++k) {
    const std::string context = "outer iteration " + std::to_string(k);
    OuterStep step;
    Eigen::VectorXd gamma_k;
    try {
      if (cfg.q == 0) {
        gamma_k = Eigen::VectorXd::Zero(0);
      } else if (k >= 2 && profile) {
        step.expansion = "profile";
        if (cfg.oracle_gamma) {
          gamma_k = *cfg.oracle_gamma;
          eta_in = maximize_eta(data, gamma_k, eta0, cfg.eta_mle).eta;
        } else {
          res.newton_called = true;
          const auto pr = profile_gamma(data, gamma_prev, eta0, {cfg.newton, cfg.eta_mle});
          gamma_k = pr.gamma;
          eta_in = pr.eta;
          step.newton_iterations = pr.trace.iterations;
          step.newton_converged = pr.trace.converged;
          res.clamp_events += pr.trace.clamp_events;
        }
      } else {
        if (k >= 2) step.expansion = "sparse_refit";
        if (cfg.oracle_gamma) {
          gamma_k = *cfg.oracle_gamma;
        } else {
          res.newton_called = true;
          const auto nr = estimate_gamma(eta_in, gamma_prev, data, cfg.newton);
          gamma_k = nr.gamma;
          step.newton_iterations = nr.trace.iterations;
          step.newton_converged = nr.trace.converged;
          res.clamp_events += nr.trace.clamp_events;
        }
      }
    } catch (const OverflowError& e) {
      throw Error(context + ": " + e.what());
    }

    StabilityResult sel;
    try {
      sel = select_at(eta_in, gamma_k, data, cfg, &step.dropped_directions);
    } catch (const DegenerateCurvature& e) {
      throw DegenerateCurvature(context + ": " + e.what());
    }

    res.eta_hat = unflatten_eta(sel.eta_hat, I, T);
    res.frequencies = unflatten_eta(sel.frequencies, I, T);
    res.gamma_hat = gamma_k;
    res.empty_support = sel.empty_support;

    step.gamma = gamma_k;
    step.support_size = static_cast<int>(sel.support(cfg.primary_threshold).size());
    step.lambda = sel.lambda_used;
    const auto ws = forward_recursion(GlarmaParams{res.eta_hat, gamma_k}, data);
    res.clamp_events += ws.clamp_events();
    step.loglik = log_likelihood(data, ws);
    res.outer_trace.push_back(step);

    const double change = cfg.q == 0 ? 0.0 : (gamma_k - gamma_prev).lpNorm<Eigen::Infinity>();
    gamma_prev = gamma_k;
    if (!profile) eta_in = res.eta_hat;
    if (k == last || (!profile && change < cfg.gamma_stab_tol && k >= cfg.min_outer_iter)) {
      res.converged = profile && cfg.q > 0 ? step.newton_converged : change < cfg.gamma_stab_tol;
      break;
    }
  }
  return res;
}

}  // namespace glarma
