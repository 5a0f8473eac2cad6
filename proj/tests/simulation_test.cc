#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "svo/errors.h"
#include "svo/simulation.h"

namespace svo {
namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> BrakeProfile() {
  // 2 s cruise at 20 m/s, 2 s ramp down to 16 m/s, 2 s cruise.
  std::vector<double> v;
  for (int k = 0; k <= 60; ++k) {
    if (k <= 20) v.push_back(20.0);
    else if (k <= 40) v.push_back(20.0 - 0.2 * (k - 20));
    else v.push_back(16.0);
  }
  return v;
}

TEST(Simulation, SyntheticScenarioShape) {
  const SimulationConfig cfg;
  const Scenario s = MakeSyntheticScenario(cfg);
  EXPECT_EQ(s.pv_speed.size(), 1201u);
  EXPECT_DOUBLE_EQ(s.speed_limit, 25.0);
  EXPECT_DOUBLE_EQ(s.pv_speed.front(), 20.0);
  EXPECT_DOUBLE_EQ(s.MaxPvSpeed(), 24.0);
  EXPECT_DOUBLE_EQ(s.av.gap, 5.0 + 1.2 * 20.0);
  EXPECT_DOUBLE_EQ(s.human.gap, 5.0 + 1.5 * 20.0);
}

TEST(Simulation, EffectiveConfigAppliesSpeedCaps) {
  SimulationConfig cfg;
  const Scenario s = MakeProfileScenario("p", {10.0, 18.0, 12.0}, 25.0, cfg);
  const SimulationConfig eff = EffectiveConfig(cfg, s);
  EXPECT_DOUBLE_EQ(eff.av.v_max, 18.0);
  EXPECT_DOUBLE_EQ(eff.human.v_max, 18.0);
  EXPECT_DOUBLE_EQ(eff.idm.v_des, 18.0);
  cfg.speed_caps_from_pv = false;
  EXPECT_DOUBLE_EQ(EffectiveConfig(cfg, s).av.v_max, cfg.av.v_max);
}

TEST(Simulation, EgoisticAvHoldsEquilibriumBehindSteadyPv) {
  const SimulationConfig cfg;
  const Scenario s = MakeConstantScenario(18.0, 5.0, 25.0, cfg);
  const EpisodeTrace t = RunEpisode(s, {0.0}, cfg);
  ASSERT_EQ(t.size(), 51u);
  for (std::size_t k = 0; k < t.size(); ++k) {
    EXPECT_NEAR(t.samples[kAv][k].gap, s.av.gap, 1e-6);
    EXPECT_NEAR(t.samples[kAv][k].speed, 18.0, 1e-6);
    EXPECT_NEAR(t.samples[kPv][k].speed, 18.0, 0.0);
    EXPECT_TRUE(std::isnan(t.samples[kPv][k].gap));
  }
  EXPECT_EQ(t.samples[kHv0][0].gap, s.human.gap);
  EXPECT_EQ(t.samples[kHv1][0].gap, s.fleet[0].gap);
}

TEST(Simulation, EpisodeInvariants) {
  const SimulationConfig cfg;
  const Scenario s = MakeProfileScenario("brake", BrakeProfile(), 25.0, cfg);
  const SimulationConfig eff = EffectiveConfig(cfg, s);
  const EpisodeTrace t = RunEpisode(s, {kPi / 6}, cfg);
  EXPECT_DOUBLE_EQ(t.phi, kPi / 6);
  for (std::size_t k = 0; k < t.size(); ++k) {
    const VehicleSample& av = t.samples[kAv][k];
    EXPECT_GE(av.control, eff.av.u_min);
    EXPECT_LE(av.control, eff.av.u_max);
    EXPECT_GE(av.gap, eff.av.d_min - 1e-4);
    EXPECT_LE(av.speed, eff.av.v_max + 1e-4);
    EXPECT_GE(t.samples[kHv0][k].gap, eff.human.d_min - 1e-4);
    for (int v = kHv1; v < kNumVehicles; ++v) {
      EXPECT_GT(t.samples[v][k].gap, 0.0);
      EXPECT_GE(t.samples[v][k].speed, 0.0);
    }
    const PlanDiagnostics& d = t.plans[k];
    const auto [we, wc] = SvoWeights(t.phi);
    EXPECT_NEAR(d.cost_total, we * d.cost_egoistic + wc * d.cost_courtesy,
                1e-9 * (1.0 + d.cost_total));
  }
}

TEST(Simulation, RepeatedEpisodesAreIdentical) {
  const SimulationConfig cfg;
  const Scenario s = MakeProfileScenario("brake", BrakeProfile(), 25.0, cfg);
  EXPECT_EQ(RunEpisode(s, {kPi / 4}, cfg), RunEpisode(s, {kPi / 4}, cfg));
}

TEST(Simulation, FleetCollisionRaisesEpisodeError) {
  const SimulationConfig cfg;
  Scenario s = MakeConstantScenario(20.0, 3.0, 25.0, cfg);
  // IDM brakes hard enough that a small positive gap survives, so start the
  // fleet overlapped.
  s.fleet[1].gap = 0.0;
  try {
    RunEpisode(s, {0.0}, cfg);
    FAIL() << "expected EpisodeError";
  } catch (const EpisodeError& e) {
    EXPECT_EQ(e.step(), 0u);
    EXPECT_NE(std::string(e.what()).find("fleet"), std::string::npos);
  }
}

TEST(Simulation, RejectsBadInputs) {
  const SimulationConfig cfg;
  Scenario s = MakeConstantScenario(20.0, 1.0, 25.0, cfg);
  EXPECT_THROW(RunEpisode(s, {1.0}, cfg), InvalidParameter);
  s.pv_speed[3] = -1.0;
  EXPECT_THROW(RunEpisode(s, {0.0}, cfg), InvalidParameter);
  SimulationConfig bad = cfg;
  bad.rho = 0.0;
  EXPECT_THROW(bad.Validate(), InvalidParameter);
}

TEST(Simulation, MetricsByHand) {
  EpisodeTrace t;
  t.plans.resize(2);
  // PV, then five followers with (gap, speed) at two steps.
  const double gaps[2][5] = {{10, 20, 30, 40, 50}, {12, 22, 32, 42, 52}};
  const double speeds[2][5] = {{10, 10, 0.2, 10, 10}, {12, 11, 0.4, 14, 13}};
  for (int k = 0; k < 2; ++k) {
    t.samples[kPv].push_back({NAN, 10.0, 0.0, NAN});
    for (int f = 0; f < 5; ++f) {
      t.samples[f + 1].push_back({gaps[k][f], speeds[k][f], 0.0, 0.0});
    }
  }
  const TrafficMetrics m = ComputeMetrics(t);
  ASSERT_EQ(m.pairs.size(), 5u);
  EXPECT_EQ(m.Pair(kAv).leader, "PV");
  EXPECT_DOUBLE_EQ(m.Pair(kAv).avg_gap, 11.0);
  EXPECT_DOUBLE_EQ(*m.Pair(kAv).avg_headway, 1.0);
  EXPECT_DOUBLE_EQ(*m.Pair(kHv0).avg_headway, (2.0 + 2.0) / 2.0);
  // HV1 never exceeds the headway speed threshold.
  EXPECT_FALSE(m.Pair(kHv1).avg_headway.has_value());
  EXPECT_EQ(m.Pair(kHv1).headway_excluded, 2u);
  EXPECT_DOUBLE_EQ(m.Pair(kHv1).min_gap, 30.0);
  EXPECT_DOUBLE_EQ(m.Pair(kHv1).max_gap, 32.0);
  EXPECT_DOUBLE_EQ(m.avg_gap, (11.0 + 21.0 + 31.0 + 41.0 + 51.0) / 5.0);
  const double hw3 = (4.0 + 42.0 / 14.0) / 2.0, hw4 = (5.0 + 4.0) / 2.0;
  EXPECT_DOUBLE_EQ(*m.avg_headway, (1.0 + 2.0 + hw3 + hw4) / 4.0);
  EXPECT_THROW(ComputeMetrics(EpisodeTrace{}), InvalidParameter);
}

TEST(Simulation, SweepMatchesIndependentEpisodes) {
  const SimulationConfig cfg;
  const Scenario s = MakeProfileScenario("brake", BrakeProfile(), 25.0, cfg);
  const std::vector<double> levels{kPi / 4, 0.0};
  const auto rows = SweepSvo(s, levels, cfg, 2);
  ASSERT_EQ(rows.size(), 2u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].phi, levels[i]);
    ASSERT_TRUE(rows[i].error.empty()) << rows[i].error;
    EXPECT_EQ(*rows[i].trace, RunEpisode(s, {levels[i]}, cfg));
  }
  EXPECT_THROW(SweepSvo(s, {0.0, 2.0}, cfg), InvalidParameter);
}

}  // namespace
}  // namespace svo
