#pragma once

#include "glarma/panel.hpp"
#include "glarma/recursion.hpp"
#include "glarma/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace glarma {

enum class SignPolicy { all_positive, random_sign };

inline std::string to_string(SignPolicy p) { return p == SignPolicy::all_positive ? "all-positive" : "random-sign"; }

inline SignPolicy parse_sign_policy(const std::string& s) {
  if (s == "all-positive") return SignPolicy::all_positive;
  if (s == "random-sign") return SignPolicy::random_sign;
  throw Error("unknown sign policy '" + s + "' (expected all-positive or random-sign)");
}

struct SimScenario {
  std::string name = "custom";
  int T = 50;
  int J = 10;
  int I = 3;
  int q_star = 1;
  std::vector<double> gamma_star{0.5};
  int n_nonnull = 10;
  double magnitude_min = 0.41;
  double magnitude_max = 2.62;
  SignPolicy sign_policy = SignPolicy::random_sign;
  int n_reps = 50;
  std::uint64_t seed = 0;

  void validate() const {
    if (T < 1 || J < 1 || I < 1) throw Error("scenario dimensions must be positive");
    if (q_star < 0 || static_cast<int>(gamma_star.size()) != q_star)
      throw Error("scenario gamma_star must have q_star entries");
    if (n_nonnull < 0 || n_nonnull > I * T) throw Error("scenario n_nonnull must lie in [0, I*T]");
    if (!(magnitude_min > 0.0) || magnitude_max < magnitude_min)
      throw Error("scenario magnitude range must be positive and ordered");
    if (n_reps < 1) throw Error("scenario n_reps must be >= 1");
  }

  Eigen::VectorXd gamma() const {
    return Eigen::Map<const Eigen::VectorXd>(gamma_star.data(), static_cast<Eigen::Index>(gamma_star.size()));
  }
};

/// The eight simulation frameworks (T, J, I, q*, gamma*), rows 1..8.
inline SimScenario table1_row(int row) {
  static const int Ts[] = {50, 50, 200, 200, 50, 50, 200, 200};
  static const int Js[] = {10, 100, 10, 100, 10, 100, 10, 100};
  if (row < 1 || row > 8) throw Error("table1 rows are numbered 1..8");
  SimScenario s;
  s.name = "table1-row" + std::to_string(row);
  s.T = Ts[row - 1];
  s.J = Js[row - 1];
  s.I = 3;
  if (row <= 4) {
    s.q_star = 1;
    s.gamma_star = {0.5};
  } else {
    s.q_star = 2;
    s.gamma_star = {0.2, 0.5};
  }
  return s;
}

/// Accepts "table1-rowN" or a comma list such as
/// "T=50,J=100,I=3,qstar=1,gamma=0.5" (multiple gammas separated by ';').
inline SimScenario parse_scenario(const std::string& text, SimScenario base = {}) {
  if (text.rfind("table1-row", 0) == 0) {
    const auto row = table1_row(std::stoi(text.substr(10)));
    base.name = row.name;
    base.T = row.T;
    base.J = row.J;
    base.I = row.I;
    base.q_star = row.q_star;
    base.gamma_star = row.gamma_star;
    return base;
  }
  base.name = text;
  std::stringstream ss(text);
  std::string item;
  bool q_given = false;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Error("scenario entry '" + item + "' is not key=value");
    const std::string key = item.substr(0, eq);
    const std::string val = item.substr(eq + 1);
    try {
      if (key == "T") base.T = std::stoi(val);
      else if (key == "J") base.J = std::stoi(val);
      else if (key == "I") base.I = std::stoi(val);
      else if (key == "qstar" || key == "q_star") base.q_star = std::stoi(val), q_given = true;
      else if (key == "gamma" || key == "gamma_star") {
        base.gamma_star.clear();
        std::stringstream gs(val);
        std::string g;
        while (std::getline(gs, g, ';')) base.gamma_star.push_back(std::stod(g));
      } else if (key == "nonnull" || key == "n_nonnull") base.n_nonnull = std::stoi(val);
      else if (key == "sign") base.sign_policy = parse_sign_policy(val);
      else throw Error("unknown scenario key '" + key + "' (valid: T, J, I, qstar, gamma, nonnull, sign)");
    } catch (const std::logic_error&) {
      throw Error("bad value for scenario key '" + key + "': " + val);
    }
  }
  if (!q_given) base.q_star = static_cast<int>(base.gamma_star.size());
  base.validate();
  return base;
}

/// Sparse eta*: n_nonnull positions uniformly without replacement, magnitudes
/// uniform on the configured range, signs per policy.
inline Eigen::MatrixXd gen_eta_star(const SimScenario& sc, std::uint64_t rep_seed) {
  sc.validate();
  Rng rng = make_rng(rep_seed, "eta-star");
  const int n = sc.I * sc.T;
  std::vector<int> cells(n);
  for (int k = 0; k < n; ++k) cells[k] = k;
  for (int a = 0; a < sc.n_nonnull; ++a) {
    std::uniform_int_distribution<int> pick(a, n - 1);
    std::swap(cells[a], cells[pick(rng)]);
  }
  std::uniform_real_distribution<double> mag(sc.magnitude_min, sc.magnitude_max);
  std::bernoulli_distribution coin(0.5);
  Eigen::MatrixXd eta = Eigen::MatrixXd::Zero(sc.I, sc.T);
  for (int a = 0; a < sc.n_nonnull; ++a) {
    double v = mag(rng);
    if (sc.sign_policy == SignPolicy::random_sign && coin(rng)) v = -v;
    eta(cells[a] / sc.T, cells[a] % sc.T) = v;
  }
  return eta;
}

struct SimulatedPanel {
  PanelData data;
  std::size_t clamp_events = 0;
};

/// Sequential draw per (i, j): W_t from eta* and past E, Y_t ~ Poisson(exp W_t),
/// then E_t. W is clamped exactly as in forward_recursion.
inline SimulatedPanel simulate_panel(const SimScenario& sc, const Eigen::MatrixXd& eta_star,
                                     std::uint64_t rep_seed) {
  sc.validate();
  if (eta_star.rows() != sc.I || eta_star.cols() != sc.T) throw Error("eta_star shape does not match scenario");
  SimulatedPanel out{PanelData(std::vector<int>(sc.I, sc.J), sc.T), 0};
  const int q = sc.q_star;
  std::vector<double> E(sc.T);
  for (int i = 0; i < sc.I; ++i) {
    for (int j = 0; j < sc.J; ++j) {
      Rng rng = make_rng(rep_seed, "panel", static_cast<std::uint64_t>(out.data.series_index(i, j)));
      for (int t = 0; t < sc.T; ++t) {
        double w = eta_star(i, t);
        for (int k = 1; k <= std::min(q, t); ++k) w += sc.gamma_star[k - 1] * E[t - k];
        if (!std::isfinite(w)) throw OverflowError(i, j, t);
        if (w > kClampBound || w < -kClampBound) {
          w = std::clamp(w, -kClampBound, kClampBound);
          ++out.clamp_events;
        }
        const double mu = std::exp(w);
        std::poisson_distribution<std::int64_t> pois(mu);
        const std::int64_t y = pois(rng);
        out.data.set(i, j, t, y);
        E[t] = static_cast<double>(y) / mu - 1.0;
      }
    }
  }
  return out;
}

}  // namespace glarma
