#pragma once

#include "glarma/panel.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace glarma {

/// W is clamped to [-kClampBound, kClampBound] before exponentiation.
inline constexpr double kClampBound = 50.0;

struct RecursionOptions {
  bool gamma_first = false;
  bool gamma_second = false;
  bool eta_first = false;
};

/// Per-series sequences produced by the W/E recursion and its derivative
/// recursions. Series s is the flat (i, j) index of PanelData.
///
/// dW/deta is kept only where it can be nonzero: within the series' own
/// condition and for t0 <= t. Entry (t, t0) lives at tri(t) + t0.
class RecursionWorkspace {
 public:
  RecursionWorkspace() = default;
  RecursionWorkspace(int series, int length, int q, RecursionOptions opts)
      : series_(series), length_(length), q_(q), opts_(opts) {
    const std::size_t n = static_cast<std::size_t>(series) * length;
    W_.assign(n, 0.0);
    E_.assign(n, 0.0);
    if (opts.gamma_first || opts.gamma_second) dg_.assign(n * q, 0.0);
    if (opts.gamma_second) dgg_.assign(n * q * q, 0.0);
    if (opts.eta_first) de_.assign(static_cast<std::size_t>(series) * tri_size(), 0.0);
  }

  int series() const noexcept { return series_; }
  int length() const noexcept { return length_; }
  int q() const noexcept { return q_; }
  const RecursionOptions& options() const noexcept { return opts_; }

  double W(int s, int t) const noexcept { return W_[idx(s, t)]; }
  double E(int s, int t) const noexcept { return E_[idx(s, t)]; }
  std::span<const double> W(int s) const noexcept { return {W_.data() + idx(s, 0), std::size_t(length_)}; }
  std::span<const double> E(int s) const noexcept { return {E_.data() + idx(s, 0), std::size_t(length_)}; }

  /// dW_{s,t} / d gamma_k
  double dW_dgamma(int s, int t, int k) const noexcept { return dg_[idx(s, t) * q_ + k]; }
  /// d2W_{s,t} / d gamma_k d gamma_l
  double d2W_dgamma2(int s, int t, int k, int l) const noexcept {
    return dgg_[(idx(s, t) * q_ + k) * q_ + l];
  }
  /// dW_{s,t} / d eta_{i(s), t0}; zero for t0 > t.
  double dW_deta(int s, int t, int t0) const noexcept {
    if (t0 > t) return 0.0;
    return de_[static_cast<std::size_t>(s) * tri_size() + tri(t) + t0];
  }
  /// Row t of the lower-triangular dW/deta table: entries t0 = 0..t.
  std::span<const double> dW_deta_row(int s, int t) const noexcept {
    return {de_.data() + static_cast<std::size_t>(s) * tri_size() + tri(t), std::size_t(t + 1)};
  }

  std::size_t clamp_events() const noexcept { return clamps_; }

  static constexpr std::size_t tri(int t) noexcept { return static_cast<std::size_t>(t) * (t + 1) / 2; }
  std::size_t tri_size() const noexcept { return tri(length_); }

 private:
  friend RecursionWorkspace forward_recursion(const GlarmaParams&, const PanelData&, RecursionOptions);

  std::size_t idx(int s, int t) const noexcept { return static_cast<std::size_t>(s) * length_ + t; }

  int series_ = 0;
  int length_ = 0;
  int q_ = 0;
  RecursionOptions opts_;
  std::vector<double> W_, E_, dg_, dgg_, de_;
  std::size_t clamps_ = 0;
};

/// Runs the coupled recursion
///   W_t = eta_{i,t} + sum_{k=1}^{q} gamma_k E_{t-k},   E_t = Y_t exp(-W_t) - 1,
/// with E = 0 at non-positive lags, together with whichever derivative
/// recursions `opts` asks for. One pass over t per series.
inline RecursionWorkspace forward_recursion(const GlarmaParams& params, const PanelData& data,
                                            RecursionOptions opts = {}) {
  params.check_against(data);
  const int T = data.length();
  const int q = params.q();
  const double* gamma = params.gamma.data();
  RecursionWorkspace ws(data.series_count(), T, q, opts);
  const bool want_dg = opts.gamma_first || opts.gamma_second;
  const std::size_t tri_size = ws.tri_size();

  for (int i = 0; i < data.conditions(); ++i) {
    for (int j = 0; j < data.replicates(i); ++j) {
      const int s = data.series_index(i, j);
      const auto y = data.series(s);
      double* W = ws.W_.data() + ws.idx(s, 0);
      double* E = ws.E_.data() + ws.idx(s, 0);
      double* dg = want_dg ? ws.dg_.data() + ws.idx(s, 0) * q : nullptr;
      double* dgg = opts.gamma_second ? ws.dgg_.data() + ws.idx(s, 0) * q * q : nullptr;
      double* de = opts.eta_first ? ws.de_.data() + static_cast<std::size_t>(s) * tri_size : nullptr;

      for (int t = 0; t < T; ++t) {
        const int lags = std::min(q, t);
        double w = params.eta(i, t);
        for (int k = 1; k <= lags; ++k) w += gamma[k - 1] * E[t - k];
        if (!std::isfinite(w)) throw OverflowError(i, j, t);
        if (w > kClampBound || w < -kClampBound) {
          w = std::clamp(w, -kClampBound, kClampBound);
          ++ws.clamps_;
        }
        W[t] = w;
        E[t] = y[t] * std::exp(-w) - 1.0;

        if (want_dg) {
          double* row = dg + static_cast<std::size_t>(t) * q;
          for (int a = 0; a < q; ++a) {
            double v = (t - a - 1 >= 0) ? E[t - a - 1] : 0.0;
            for (int k = 1; k <= lags; ++k) {
              v -= gamma[k - 1] * (1.0 + E[t - k]) * dg[static_cast<std::size_t>(t - k) * q + a];
            }
            row[a] = v;
          }
        }

        if (opts.gamma_second) {
          double* cur = dgg + static_cast<std::size_t>(t) * q * q;
          for (int a = 0; a < q; ++a) {
            for (int b = 0; b < q; ++b) {
              double v = 0.0;
              if (t - a - 1 >= 0) v -= (1.0 + E[t - a - 1]) * dg[static_cast<std::size_t>(t - a - 1) * q + b];
              if (t - b - 1 >= 0) v -= (1.0 + E[t - b - 1]) * dg[static_cast<std::size_t>(t - b - 1) * q + a];
              for (int k = 1; k <= lags; ++k) {
                const std::size_t p = static_cast<std::size_t>(t - k);
                const double c = gamma[k - 1] * (1.0 + E[t - k]);
                v += c * (dg[p * q + a] * dg[p * q + b] - dgg[(p * q + a) * q + b]);
              }
              cur[a * q + b] = v;
            }
          }
        }

        if (opts.eta_first) {
          double* row = de + RecursionWorkspace::tri(t);
          for (int t0 = 0; t0 < t; ++t0) row[t0] = 0.0;
          row[t] = 1.0;
          for (int k = 1; k <= lags; ++k) {
            const double c = gamma[k - 1] * (1.0 + E[t - k]);
            const double* prev = de + RecursionWorkspace::tri(t - k);
            for (int t0 = 0; t0 <= t - k; ++t0) row[t0] -= c * prev[t0];
          }
        }
      }
    }
  }
  return ws;
}

/// Explicit second derivatives d2W_t / d eta_{t0} d eta_{t1} for one series,
/// returned as T matrices (T x T, zero outside t0, t1 <= t). Memory is O(T^3);
/// meant for small panels and for checking the contracted Hessian.
inline std::vector<Eigen::MatrixXd> eta_second_derivatives(const GlarmaParams& params, const PanelData& data,
                                                           int condition, int replicate) {
  params.check_against(data);
  const int T = data.length();
  const int q = params.q();
  const auto ws = forward_recursion(params, data, {.eta_first = true});
  const int s = data.series_index(condition, replicate);

  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(T, T);  // D(t, t0) = dW_t / d eta_t0
  for (int t = 0; t < T; ++t)
    for (int t0 = 0; t0 <= t; ++t0) D(t, t0) = ws.dW_deta(s, t, t0);

  std::vector<Eigen::MatrixXd> d2(T, Eigen::MatrixXd::Zero(T, T));
  for (int t = 0; t < T; ++t) {
    const int lags = std::min(q, t);
    for (int k = 1; k <= lags; ++k) {
      const double c = params.gamma[k - 1] * (1.0 + ws.E(s, t - k));
      const int p = t - k;
      for (int t0 = 0; t0 <= p; ++t0)
        for (int t1 = 0; t1 <= p; ++t1) d2[t](t0, t1) += c * (D(p, t0) * D(p, t1) - d2[p](t0, t1));
    }
  }
  return d2;
}

}  // namespace glarma
