#include "glarma/likelihood.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace glarma;
using testing_util::make_panel;
using testing_util::rel_err;

namespace {

const RecursionOptions kAll{.gamma_first = true, .gamma_second = true, .eta_first = true};

struct Worked {
  PanelData data = make_panel({1}, 3, {1, 2, 0});
  GlarmaParams params{Eigen::MatrixXd::Zero(1, 3), Eigen::VectorXd::Constant(1, 0.5)};
};

}  // namespace

TEST(Likelihood, WorkedExampleValue) {
  Worked w;
  EXPECT_NEAR(log_likelihood(w.params, w.data), -2.0 - std::exp(0.5), 1e-14);
}

TEST(Likelihood, WorkedExampleGammaDerivatives) {
  Worked w;
  const auto ws = forward_recursion(w.params, w.data, kAll);
  EXPECT_EQ(ws.dW_dgamma(0, 2, 0), 1.0);
  EXPECT_NEAR(score_gamma(w.data, ws)[0], -std::exp(0.5), 1e-14);
  EXPECT_NEAR(hessian_gamma(w.data, ws)(0, 0), -std::exp(0.5), 1e-14);
}

TEST(Likelihood, WorkedExampleEtaScore) {
  Worked w;
  const auto ws = forward_recursion(w.params, w.data, kAll);
  EXPECT_DOUBLE_EQ(ws.dW_deta(0, 1, 0), -0.5);
  EXPECT_DOUBLE_EQ(ws.dW_deta(0, 2, 0), 0.5);
  const auto g = score_eta(w.data, ws);
  EXPECT_NEAR(g[0], -0.5 - 0.5 * std::exp(0.5), 1e-14);
  EXPECT_NEAR(g[0], -1.324361, 1e-6);
  // Last position only sees its own cell.
  EXPECT_NEAR(g[2], 0.0 - std::exp(0.5), 1e-14);
}

TEST(Likelihood, ZeroDataZeroParametersGivesMinusCellCount) {
  PanelData data({2, 3}, 4);
  EXPECT_DOUBLE_EQ(log_likelihood({Eigen::MatrixXd::Zero(2, 4), Eigen::VectorXd::Zero(1)}, data), -20.0);
}

TEST(Likelihood, GlmReductionWithoutFeedback) {
  auto rng = make_rng(4, "glm");
  const auto data = testing_util::random_panel({3, 2}, 5, 4.0, rng);
  Eigen::MatrixXd eta = Eigen::MatrixXd::Random(2, 5);
  const GlarmaParams p{eta, Eigen::VectorXd(0)};
  const auto ws = forward_recursion(p, data, kAll);
  double L = 0.0;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(10);
  for (int i = 0; i < 2; ++i)
    for (int t = 0; t < 5; ++t)
      for (int j = 0; j < data.replicates(i); ++j) {
        L += data(i, j, t) * eta(i, t) - std::exp(eta(i, t));
        g[i * 5 + t] += data(i, j, t) - std::exp(eta(i, t));
      }
  EXPECT_NEAR(log_likelihood(data, ws), L, 1e-12 * std::abs(L));
  EXPECT_LT((score_eta(data, ws) - g).norm(), 1e-12);
  const auto H = hessian_eta(data, p, ws).dense();
  for (int a = 0; a < 10; ++a)
    for (int b = 0; b < 10; ++b) {
      const double expect = a == b ? -data.replicates(a / 5) * std::exp(eta(a / 5, a % 5)) : 0.0;
      EXPECT_NEAR(H(a, b), expect, 1e-12);
    }
}

TEST(Likelihood, DerivativesMatchFiniteDifferencesOnRandomInstances) {
  for (std::uint64_t seed = 100; seed < 150; ++seed) {
    const auto inst = testing_util::random_instance(seed);
    const int I = inst.data.conditions(), T = inst.data.length();
    const GlarmaParams p{inst.eta, inst.gamma};
    const auto ws = forward_recursion(p, inst.data, kAll);

    auto L_gamma = [&](const Eigen::VectorXd& g) { return log_likelihood({inst.eta, g}, inst.data); };
    auto L_eta = [&](const Eigen::VectorXd& e) { return log_likelihood({unflatten_eta(e, I, T), inst.gamma}, inst.data); };
    auto S_gamma = [&](const Eigen::VectorXd& g) {
      return score_gamma(inst.data, forward_recursion({inst.eta, g}, inst.data, kAll));
    };
    auto S_eta = [&](const Eigen::VectorXd& e) {
      return score_eta(inst.data, forward_recursion({unflatten_eta(e, I, T), inst.gamma}, inst.data, kAll));
    };
    const Eigen::VectorXd eflat = flatten_eta(inst.eta);

    if (p.q() > 0) {
      EXPECT_LT(rel_err(score_gamma(inst.data, ws), testing_util::fd_gradient(L_gamma, inst.gamma)), 1e-6) << seed;
      EXPECT_LT(rel_err(hessian_gamma(inst.data, ws), testing_util::fd_jacobian(S_gamma, inst.gamma)), 1e-4) << seed;
    }
    EXPECT_LT(rel_err(score_eta(inst.data, ws), testing_util::fd_gradient(L_eta, eflat)), 1e-6) << seed;
    EXPECT_LT(rel_err(hessian_eta(inst.data, p, ws).dense(), testing_util::fd_jacobian(S_eta, eflat)), 1e-4) << seed;
  }
}

TEST(Likelihood, EtaHessianIsExactlyBlockDiagonal) {
  for (std::uint64_t seed = 200; seed < 210; ++seed) {
    const auto inst = testing_util::random_instance(seed);
    const int T = inst.data.length();
    const GlarmaParams p{inst.eta, inst.gamma};
    const auto H = hessian_eta(inst.data, p, forward_recursion(p, inst.data, kAll)).dense();
    for (Eigen::Index a = 0; a < H.rows(); ++a)
      for (Eigen::Index b = 0; b < H.cols(); ++b)
        if (a / T != b / T) {
          EXPECT_EQ(H(a, b), 0.0);
        }
  }
}

TEST(Likelihood, ContractedHessianMatchesExplicitTensor) {
  for (std::uint64_t seed = 300; seed < 310; ++seed) {
    const auto inst = testing_util::random_instance(seed);
    const GlarmaParams p{inst.eta, inst.gamma};
    const auto fast = hessian_eta(inst.data, p, forward_recursion(p, inst.data, kAll)).dense();
    const auto slow = hessian_eta_explicit(inst.data, p).dense();
    EXPECT_LT(rel_err(fast, slow), 1e-10) << seed;
  }
}

TEST(Likelihood, SingleStepSeriesHasNoGammaInformation) {
  auto rng = make_rng(9, "t1");
  const auto data = testing_util::random_panel({2}, 1, 3.0, rng);
  const GlarmaParams p{Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Constant(2, 0.3)};
  const auto ws = forward_recursion(p, data, kAll);
  EXPECT_EQ(score_gamma(data, ws).norm(), 0.0);
}

TEST(Likelihood, CurvatureReportFlagsIndefiniteness) {
  EtaHessian h;
  h.blocks.push_back(Eigen::MatrixXd::Identity(2, 2) * -1.0);
  EXPECT_FALSE(h.negated_curvature().indefinite);
  h.blocks.push_back((Eigen::MatrixXd(2, 2) << 1.0, 0.0, 0.0, -1.0).finished());
  EXPECT_TRUE(h.negated_curvature().indefinite);
}
