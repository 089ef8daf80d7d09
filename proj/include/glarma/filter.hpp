#pragma once

#include "glarma/panel.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <Eigen/Cholesky>

#include <cmath>
#include <string>
#include <vector>

namespace glarma {

enum class FilterTest { likelihood_ratio, wald };
enum class FilterRule { one_over_T, fixed_alpha };

struct FilterOptions {
  FilterTest test = FilterTest::likelihood_ratio;
  FilterRule rule = FilterRule::one_over_T;
  /// Used by fixed_alpha only.
  double alpha = 0.05;
};

struct FilterResult {
  std::vector<double> statistic;
  std::vector<double> p_value;
  std::vector<int> kept;  // positions with p below the cutoff, ascending
  double cutoff = 0.0;
  int df = 0;
};

/// Upper tail of the chi-square distribution.
inline double chi_square_sf(double x, int df) {
  if (!(x > 0.0)) return 1.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

/// Poisson one-way ANOVA per position t with condition as the factor.
/// Likelihood ratio: 2 sum_i S_i log(mean_i / mean), chi-square with I-1 df.
/// Wald: joint test of the I-1 log-ratios against condition 1, with 0.5 added
/// to any zero condition total. An all-zero position has statistic 0, p = 1.
inline FilterResult anova_filter(const PanelData& data, const FilterOptions& opts = {}) {
  const int I = data.conditions();
  const int T = data.length();
  if (I < 2) throw InputError("filter: at least 2 conditions are required");
  if (opts.rule == FilterRule::fixed_alpha && !(opts.alpha > 0.0 && opts.alpha < 1.0))
    throw InputError("filter: alpha must lie in (0, 1)");

  FilterResult res;
  res.df = I - 1;
  res.cutoff = opts.rule == FilterRule::one_over_T ? 1.0 / T : opts.alpha;
  res.statistic.assign(T, 0.0);
  res.p_value.assign(T, 1.0);

  std::vector<double> S(I);
  for (int t = 0; t < T; ++t) {
    double total = 0.0;
    double n_total = 0.0;
    for (int i = 0; i < I; ++i) {
      S[i] = 0.0;
      for (int j = 0; j < data.replicates(i); ++j) S[i] += data(i, j, t);
      total += S[i];
      n_total += data.replicates(i);
    }
    if (total == 0.0) continue;

    double stat = 0.0;
    if (opts.test == FilterTest::likelihood_ratio) {
      const double pooled = total / n_total;
      for (int i = 0; i < I; ++i)
        if (S[i] > 0.0) stat += 2.0 * S[i] * std::log(S[i] / data.replicates(i) / pooled);
      stat = std::max(stat, 0.0);
    } else {
      std::vector<double> s(S);
      for (double& v : s)
        if (v == 0.0) v = 0.5;
      const int d = I - 1;
      Eigen::VectorXd beta(d);
      Eigen::MatrixXd cov = Eigen::MatrixXd::Constant(d, d, 1.0 / s[0]);
      for (int i = 1; i < I; ++i) {
        beta[i - 1] = std::log(s[i] / data.replicates(i)) - std::log(s[0] / data.replicates(0));
        cov(i - 1, i - 1) += 1.0 / s[i];
      }
      stat = beta.dot(cov.llt().solve(beta));
    }
    res.statistic[t] = stat;
    res.p_value[t] = chi_square_sf(stat, res.df);
  }
  for (int t = 0; t < T; ++t)
    if (res.p_value[t] < res.cutoff) res.kept.push_back(t);
  return res;
}

inline FilterTest parse_filter_test(const std::string& s) {
  if (s == "lrt") return FilterTest::likelihood_ratio;
  if (s == "wald") return FilterTest::wald;
  throw InputError("unknown filter test '" + s + "' (valid: lrt, wald)");
}

/// Keeps the listed positions of a panel, in order.
inline PanelData select_positions(const PanelData& data, const std::vector<int>& keep) {
  PanelData out(data.replicate_counts(), static_cast<int>(keep.size()));
  for (int i = 0; i < data.conditions(); ++i)
    for (int j = 0; j < data.replicates(i); ++j)
      for (std::size_t k = 0; k < keep.size(); ++k)
        out.set(i, j, static_cast<int>(k), static_cast<std::int64_t>(data(i, j, keep[k])));
  return out;
}

}  // namespace glarma
