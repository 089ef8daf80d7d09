#pragma once

#include "glarma/metrics.hpp"
#include "glarma/pipeline.hpp"
#include "glarma/poisson_lasso.hpp"
#include "glarma/simulate.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace glarma {

enum class Method { q0, q1, q2, oracle, classical };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::q0: return "q0";
    case Method::q1: return "q1";
    case Method::q2: return "q2";
    case Method::oracle: return "oracle";
    case Method::classical: return "classical";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  if (s == "q0") return Method::q0;
  if (s == "q1") return Method::q1;
  if (s == "q2") return Method::q2;
  if (s == "oracle") return Method::oracle;
  if (s == "classical") return Method::classical;
  throw Error("unknown method '" + s + "' (valid: q0, q1, q2, oracle, classical)");
}

inline std::vector<Method> parse_methods(const std::string& list) {
  std::vector<Method> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse_method(item));
  }
  if (out.empty()) throw Error("method list is empty");
  return out;
}

struct ExperimentOptions {
  std::vector<Method> methods{Method::q0, Method::q1, Method::classical};
  /// Template for every pipeline method; q, oracle gamma and seed are set per method/replicate.
  FitConfig fit;
  /// Parallel replicates. Inner stability selection stays single-threaded.
  int workers = 1;
  bool record_timing = false;
};

struct ReplicateOutcome {
  int replicate = 0;
  Method method = Method::q1;
  SupportMetrics metrics;
  /// Final gamma estimate, and one entry per outer iteration.
  Eigen::VectorXd gamma_hat;
  std::vector<Eigen::VectorXd> gamma_trajectory;
  double seconds = 0.0;
  std::optional<std::string> failure;
};

struct MethodSummary {
  Method method;
  int replicates = 0;
  double mean_max_diff = 0.0;
  double se_max_diff = 0.0;
  double mean_sign_tpr = 0.0;
  double se_sign_tpr = 0.0;
  /// threshold -> (mean, se) of TPR and FPR
  std::vector<double> thresholds;
  std::vector<double> mean_tpr, se_tpr, mean_fpr, se_fpr;
};

struct ExperimentResult {
  SimScenario scenario;
  std::vector<ReplicateOutcome> outcomes;  // replicate-major, then method order
  std::vector<Eigen::MatrixXd> eta_star;   // per replicate

  std::vector<MethodSummary> summarize(const std::vector<Method>& methods,
                                       const std::vector<double>& thresholds) const;
};

namespace detail {
inline std::pair<double, double> mean_se(const std::vector<double>& v) {
  if (v.empty()) return {std::nan(""), std::nan("")};
  double m = 0.0;
  for (double x : v) m += x;
  m /= v.size();
  if (v.size() < 2) return {m, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / (v.size() - 1) / v.size())};
}
}  // namespace detail

inline std::vector<MethodSummary> ExperimentResult::summarize(const std::vector<Method>& methods,
                                                              const std::vector<double>& thresholds) const {
  std::vector<MethodSummary> out;
  for (Method m : methods) {
    MethodSummary s;
    s.method = m;
    s.thresholds = thresholds;
    std::vector<double> md, st;
    std::vector<std::vector<double>> tp(thresholds.size()), fp(thresholds.size());
    for (const auto& o : outcomes) {
      if (o.method != m || o.failure) continue;
      ++s.replicates;
      if (o.metrics.max_diff) md.push_back(*o.metrics.max_diff);
      st.push_back(o.metrics.sign_tpr);
      for (std::size_t k = 0; k < thresholds.size() && k < o.metrics.per_threshold.size(); ++k) {
        if (o.metrics.per_threshold[k].tpr) tp[k].push_back(*o.metrics.per_threshold[k].tpr);
        if (o.metrics.per_threshold[k].fpr) fp[k].push_back(*o.metrics.per_threshold[k].fpr);
      }
    }
    std::tie(s.mean_max_diff, s.se_max_diff) = detail::mean_se(md);
    std::tie(s.mean_sign_tpr, s.se_sign_tpr) = detail::mean_se(st);
    for (std::size_t k = 0; k < thresholds.size(); ++k) {
      auto [a, b] = detail::mean_se(tp[k]);
      auto [c, d] = detail::mean_se(fp[k]);
      s.mean_tpr.push_back(a);
      s.se_tpr.push_back(b);
      s.mean_fpr.push_back(c);
      s.se_fpr.push_back(d);
    }
    out.push_back(std::move(s));
  }
  return out;
}

/// Seed of replicate `rep`; everything in the replicate derives from it.
inline std::uint64_t replicate_seed(const SimScenario& sc, int rep) {
  return derive_seed(sc.seed, "replicate", static_cast<std::uint64_t>(rep));
}

/// Runs one method on one simulated panel.
inline ReplicateOutcome run_method(Method m, const PanelData& data, const Eigen::MatrixXd& eta_star,
                                   const SimScenario& sc, std::uint64_t rep_seed, const ExperimentOptions& opts) {
  ReplicateOutcome o;
  o.method = m;
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t sel_seed = derive_seed(rep_seed, "selection");
  try {
    if (m == Method::classical) {
      BaselineOptions b;
      b.n_subsamples = opts.fit.n_subsamples;
      b.seed = sel_seed;
      b.primary_threshold = opts.fit.primary_threshold;
      b.grid = opts.fit.penalty.grid;
      const auto res = poisson_lasso_baseline(data, b);
      o.metrics = support_metrics(res.eta_hat, eta_star, opts.fit.thresholds, res.frequencies);
    } else {
      FitConfig cfg = opts.fit;
      cfg.seed = sel_seed;
      cfg.workers = 1;
      switch (m) {
        case Method::q0: cfg.q = 0; break;
        case Method::q1: cfg.q = 1; break;
        case Method::q2: cfg.q = 2; break;
        case Method::oracle:
          cfg.q = sc.q_star;
          cfg.oracle_gamma = sc.gamma();
          break;
        default: break;
      }
      const auto res = fit(data, cfg);
      o.metrics = support_metrics(res.eta_hat, eta_star, cfg.thresholds, res.frequencies);
      o.gamma_hat = res.gamma_hat;
      for (const auto& st : res.outer_trace) o.gamma_trajectory.push_back(st.gamma);
    }
  } catch (const std::exception& e) {
    o.failure = e.what();
  }
  o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return o;
}

/// n_reps independent replicates: fresh eta* and panel per replicate, every
/// method sees the same panel. Failures are recorded per outcome.
inline ExperimentResult run_experiment(const SimScenario& sc, const ExperimentOptions& opts) {
  sc.validate();
  opts.fit.validate();
  const int nm = static_cast<int>(opts.methods.size());
  ExperimentResult res;
  res.scenario = sc;
  res.outcomes.resize(static_cast<std::size_t>(sc.n_reps) * nm);
  res.eta_star.resize(sc.n_reps);

  parallel_for(sc.n_reps, opts.workers, [&](int rep) {
    const std::uint64_t rs = replicate_seed(sc, rep);
    res.eta_star[rep] = gen_eta_star(sc, rs);
    std::optional<PanelData> panel;
    std::string failure;
    try {
      panel = simulate_panel(sc, res.eta_star[rep], rs).data;
    } catch (const std::exception& e) {
      failure = e.what();
    }
    for (int k = 0; k < nm; ++k) {
      auto& slot = res.outcomes[static_cast<std::size_t>(rep) * nm + k];
      if (panel) {
        slot = run_method(opts.methods[k], *panel, res.eta_star[rep], sc, rs, opts);
      } else {
        slot.method = opts.methods[k];
        slot.failure = "simulation failed: " + failure;
      }
      slot.replicate = rep;
    }
  });
  return res;
}

}  // namespace glarma
