#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "svo/horizon.h"
#include "test_oracles.h"

namespace svo {
namespace {

TEST(Horizon, LiftedMatricesMatchRollout) {
  const DiscreteDynamics d = DiscretizeZoh(BuildContinuous(0.45), 0.1);
  const int n = 30;
  const HorizonModel h = BuildHorizon(d, n);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> ud(-4.0, 4.0), pd(5.0, 25.0);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd u(n), p(n);
    for (int k = 0; k < n; ++k) {
      u[k] = ud(rng);
      p[k] = pd(rng);
    }
    const LongitudinalState x0{20.0 + trial, 15.0, -0.5 + 0.2 * trial};
    const Eigen::VectorXd gap =
        h.gap_x * x0.AsVector() + h.gap_u * u + h.gap_p * p;
    const Eigen::VectorXd speed = h.speed_x * x0.AsVector() + h.speed_u * u;
    const Eigen::VectorXd accel = h.accel_x * x0.AsVector() + h.accel_u * u;

    // Oracle: series discretization and a hand-written recursion.
    const auto z = testing_oracles::SeriesDiscretize(0.45, 0.1, 30);
    const auto ref = testing_oracles::RolloutByHand(
        z, {x0.gap, x0.speed, x0.accel}, std::vector<double>(u.begin(), u.end()),
        std::vector<double>(p.begin(), p.end()));
    const auto roll = Rollout(d, x0, std::span<const double>(u.data(), n),
                             std::span<const double>(p.data(), n));
    ASSERT_EQ(roll.size(), static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      EXPECT_NEAR(gap[k], ref[k].gap, 1e-8);
      EXPECT_NEAR(speed[k], ref[k].speed, 1e-9);
      EXPECT_NEAR(accel[k], ref[k].accel, 1e-9);
      EXPECT_NEAR(roll[k].gap, ref[k].gap, 1e-8);
      EXPECT_NEAR(roll[k].speed, ref[k].speed, 1e-9);
    }
  }
}

TEST(Horizon, CausalStructure) {
  // Control k cannot influence states before k + 1.
  const HorizonModel h =
      BuildHorizon(DiscretizeZoh(BuildContinuous(0.45), 0.1), 10);
  for (int r = 0; r < 10; ++r) {
    for (int c = r + 1; c < 10; ++c) {
      EXPECT_EQ(h.gap_u(r, c), 0.0);
      EXPECT_EQ(h.speed_u(r, c), 0.0);
      EXPECT_EQ(h.accel_u(r, c), 0.0);
      EXPECT_EQ(h.gap_p(r, c), 0.0);
    }
  }
}

TEST(Horizon, PreviewWindowHoldsLastValue) {
  const std::vector<double> p{1.0, 2.0, 3.0};
  const Eigen::VectorXd w = PreviewWindow(p, 5);
  ASSERT_EQ(w.size(), 5);
  EXPECT_EQ(w[0], 1.0);
  EXPECT_EQ(w[2], 3.0);
  EXPECT_EQ(w[4], 3.0);
  EXPECT_EQ(PreviewWindow(p, 2).size(), 2);
}

}  // namespace
}  // namespace svo
