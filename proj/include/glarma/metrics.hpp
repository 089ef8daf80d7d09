#pragma once

#include "glarma/panel.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

namespace glarma {

struct ThresholdMetrics {
  double threshold = 0.0;
  std::optional<double> tpr;  // missing when eta* has no non-null entry
  std::optional<double> fpr;  // missing when eta* has no null entry
  std::optional<double> diff;
};

struct SupportMetrics {
  std::vector<ThresholdMetrics> per_threshold;
  std::optional<double> max_diff;
  /// Fraction of all coefficients whose sign class {-, 0, +} matches eta*,
  /// using eta_hat at the primary threshold.
  double sign_tpr = 0.0;
};

inline int sign_class(double v) noexcept { return (v > 0.0) - (v < 0.0); }

/// Support recovery against eta*. Per threshold the support is
/// {frequency > threshold}; TPR = |est & true| / |true|, FPR = |est \ true| / |null|.
inline SupportMetrics support_metrics(const Eigen::MatrixXd& eta_hat, const Eigen::MatrixXd& eta_star,
                                      const std::vector<double>& thresholds, const Eigen::MatrixXd& frequencies) {
  if (eta_hat.rows() != eta_star.rows() || eta_hat.cols() != eta_star.cols() ||
      frequencies.rows() != eta_star.rows() || frequencies.cols() != eta_star.cols())
    throw Error("support_metrics: shape mismatch");
  const Eigen::Index n = eta_star.size();
  Eigen::Index n_true = 0;
  for (Eigen::Index k = 0; k < n; ++k) n_true += eta_star.data()[k] != 0.0;
  const Eigen::Index n_null = n - n_true;

  SupportMetrics m;
  for (double th : thresholds) {
    Eigen::Index tp = 0, fp = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (!(frequencies.data()[k] > th)) continue;
      if (eta_star.data()[k] != 0.0) ++tp;
      else ++fp;
    }
    ThresholdMetrics row;
    row.threshold = th;
    if (n_true > 0) row.tpr = static_cast<double>(tp) / n_true;
    if (n_null > 0) row.fpr = static_cast<double>(fp) / n_null;
    if (row.tpr || row.fpr) row.diff = row.tpr.value_or(0.0) - row.fpr.value_or(0.0);
    if (row.tpr && row.diff) m.max_diff = m.max_diff ? std::max(*m.max_diff, *row.diff) : *row.diff;
    m.per_threshold.push_back(row);
  }

  Eigen::Index match = 0;
  for (Eigen::Index k = 0; k < n; ++k) match += sign_class(eta_hat.data()[k]) == sign_class(eta_star.data()[k]);
  m.sign_tpr = static_cast<double>(match) / static_cast<double>(n);
  return m;
}

}  // namespace glarma
