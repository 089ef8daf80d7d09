#pragma once

#include "glarma/panel.hpp"
#include "glarma/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace testing_util {

using glarma::PanelData;

inline PanelData make_panel(const std::vector<int>& reps, int T, const std::vector<std::int64_t>& counts) {
  PanelData p(reps, T);
  std::size_t k = 0;
  for (int i = 0; i < p.conditions(); ++i)
    for (int j = 0; j < p.replicates(i); ++j)
      for (int t = 0; t < T; ++t) p.set(i, j, t, counts.at(k++));
  return p;
}

inline PanelData random_panel(const std::vector<int>& reps, int T, double mean, glarma::Rng& rng) {
  PanelData p(reps, T);
  std::poisson_distribution<std::int64_t> pois(mean);
  for (int i = 0; i < p.conditions(); ++i)
    for (int j = 0; j < p.replicates(i); ++j)
      for (int t = 0; t < T; ++t) p.set(i, j, t, pois(rng));
  return p;
}

/// Random instance with I <= 3, J <= 5, T <= 20, q <= 3, Poisson(3) counts,
/// gamma uniform in [-0.4, 0.6] and eta near log 3.
struct Instance {
  PanelData data;
  Eigen::MatrixXd eta;
  Eigen::VectorXd gamma;
};

inline Instance random_instance(std::uint64_t seed, int max_q = 3) {
  auto rng = glarma::make_rng(seed, "instance");
  std::uniform_int_distribution<int> I(1, 3), J(1, 5), T(2, 20), Q(0, max_q);
  std::uniform_real_distribution<double> g(-0.4, 0.6), e(-0.3, 0.3);
  const int n = I(rng);
  std::vector<int> reps(n);
  for (int& r : reps) r = J(rng);
  const int len = T(rng);
  const int q = Q(rng);
  Instance inst{random_panel(reps, len, 3.0, rng), Eigen::MatrixXd(n, len), Eigen::VectorXd(q)};
  for (int k = 0; k < q; ++k) inst.gamma[k] = g(rng) / q;  // keep the sum inside (-0.4, 0.6)
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < len; ++t) inst.eta(i, t) = std::log(3.0) + e(rng);
  return inst;
}

/// Central difference of f at x along every coordinate, step 1e-5 * max(1, |x_k|).
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double h = 1e-5 * std::max(1.0, std::abs(x[k]));
    Eigen::VectorXd a = x, b = x;
    a[k] += h;
    b[k] -= h;
    g[k] = (f(a) - f(b)) / (2.0 * h);
  }
  return g;
}

inline Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x) {
  const Eigen::VectorXd f0 = f(x);
  Eigen::MatrixXd J(f0.size(), x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double h = 1e-5 * std::max(1.0, std::abs(x[k]));
    Eigen::VectorXd a = x, b = x;
    a[k] += h;
    b[k] -= h;
    J.col(k) = (f(a) - f(b)) / (2.0 * h);
  }
  return J;
}

/// ||a - b|| / max(||b||, floor): relative error with an absolute floor for near-zero references.
inline double rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double floor = 1e-6) {
  return (a - b).norm() / std::max(b.norm(), floor);
}

}  // namespace testing_util
