#include "glarma/panel.hpp"

#include <gtest/gtest.h>

using glarma::PanelData;

TEST(Panel, DenseLayoutWithUnequalReplicates) {
  PanelData p({2, 3}, 4);
  EXPECT_EQ(p.conditions(), 2);
  EXPECT_EQ(p.series_count(), 5);
  EXPECT_EQ(p.series_index(1, 0), 2);
  EXPECT_EQ(p.condition_of(4), 1);
  p.set(1, 2, 3, 7);
  EXPECT_EQ(p(1, 2, 3), 7.0);
  EXPECT_EQ(p.series(1, 2)[3], 7.0);
  EXPECT_EQ(p.total_cells(), 20);
}

TEST(Panel, RejectsBadShapesAndCounts) {
  EXPECT_THROW(PanelData({}, 3), glarma::InputError);
  EXPECT_THROW(PanelData({1, 0}, 3), glarma::InputError);
  EXPECT_THROW(PanelData({1}, 0), glarma::InputError);
  PanelData p({1}, 2);
  EXPECT_THROW(p.set(0, 0, 0, -1), glarma::Error);
}

TEST(Panel, ParamsMustMatchPanel) {
  PanelData p({1, 1}, 3);
  glarma::GlarmaParams ok{Eigen::MatrixXd::Zero(2, 3), Eigen::VectorXd::Zero(1)};
  EXPECT_NO_THROW(ok.check_against(p));
  glarma::GlarmaParams wrong{Eigen::MatrixXd::Zero(2, 4), Eigen::VectorXd::Zero(1)};
  EXPECT_THROW(wrong.check_against(p), glarma::Error);
  glarma::GlarmaParams nonfinite{Eigen::MatrixXd::Constant(2, 3, std::nan("")), Eigen::VectorXd::Zero(0)};
  EXPECT_THROW(nonfinite.check_against(p), glarma::Error);
}

TEST(Panel, FlattenIsConditionMajor) {
  Eigen::MatrixXd eta(2, 3);
  eta << 1, 2, 3, 4, 5, 6;
  const auto v = glarma::flatten_eta(eta);
  EXPECT_EQ(v[glarma::eta_index(1, 0, 3)], 4.0);
  EXPECT_EQ(glarma::unflatten_eta(v, 2, 3), eta);
}
