#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "svo/errors.h"
#include "svo/irl.h"

namespace svo {
namespace {

FollowerPlanner PlannerFor(const DriverWeights& w) {
  FitOptions o;
  return FollowerPlanner(
      BuildHorizon(DiscretizeZoh(BuildContinuous(o.rho), 0.1), o.horizon_steps),
      w, o.constraints, o.speed_limit, o.solver);
}

// Leader drifting between 16 and 22 m/s.
std::vector<double> WavyLeader(double seconds, double phase) {
  std::vector<double> v;
  for (int k = 0; k <= static_cast<int>(seconds / 0.1); ++k) {
    const double t = 0.1 * k;
    v.push_back(19.0 + 3.0 * std::sin(2 * std::numbers::pi * t / 12.0 + phase));
  }
  return v;
}

DriverWeights TrueWeights() {
  DriverWeights w;
  w.w << 0.1, 1.0, 0.5, 0.3;
  w.tau_h = 1.5;
  w.d_s = 5.0;
  return w;
}

TEST(Irl, DemoFeatureSumsSkipInitialSample) {
  Demonstration d;
  d.samples = {{{10.0, 10.0, 5.0}, 10.0, 0.0}, {{25.0, 20.0, 1.0}, 18.0, 0.0}};
  const FeatureVector f = DemoFeatureSums(d, 25.0, 1.5, 5.0);
  EXPECT_DOUBLE_EQ(f.accel, 1.0);
  EXPECT_DOUBLE_EQ(f.desired_speed, 25.0);
  EXPECT_DOUBLE_EQ(f.relative_speed, 4.0);
  EXPECT_DOUBLE_EQ(f.relative_distance, 10.0);
}

TEST(Irl, MinHeadwayIgnoresSlowSamples) {
  Demonstration d;
  d.samples = {{{1.0, 0.5, 0.0}, 0.0, 0.0},
               {{30.0, 20.0, 0.0}, 20.0, 0.0},
               {{18.0, 12.0, 0.0}, 12.0, 0.0}};
  EXPECT_DOUBLE_EQ(EstimateMinHeadway({d}), 1.5);
  Demonstration slow;
  slow.samples = {{{1.0, 0.5, 0.0}, 0.0, 0.0}};
  EXPECT_THROW(EstimateMinHeadway({slow}), InvalidParameter);
}

TEST(Irl, ReplayReproducesSynthesizedDemo) {
  const FollowerPlanner p = PlannerFor(TrueWeights());
  const Demonstration d =
      SynthesizeDemonstration({34.0, 19.0, 0.0}, WavyLeader(5.0, 0.0), p);
  const Demonstration r = ReplayWithPlanner(d, p);
  ASSERT_EQ(r.samples.size(), d.samples.size());
  for (std::size_t k = 0; k < d.samples.size(); ++k) {
    EXPECT_EQ(r.samples[k].state, d.samples[k].state);
    EXPECT_EQ(r.samples[k].control, d.samples[k].control);
  }
}

TEST(Irl, ZeroIterationsLeavesWeightsUnchanged) {
  const FollowerPlanner p = PlannerFor(TrueWeights());
  const Demonstration d =
      SynthesizeDemonstration({34.0, 19.0, 0.0}, WavyLeader(3.0, 0.0), p);
  FitOptions o;
  o.max_iterations = 0;
  const FitResult r = FitWeightsMaxEnt({d}, DriverWeights::Default(), o);
  EXPECT_EQ(r.weights.w, DriverWeights::Default().w);
  EXPECT_EQ(r.iterations, 0);
  EXPECT_FALSE(r.converged);
}

TEST(Irl, RejectsMismatchedDt) {
  Demonstration a, b;
  a.samples = b.samples = {{{30.0, 20.0, 0.0}, 20.0, 0.0}};
  b.dt = 0.2;
  EXPECT_THROW(FitWeightsMaxEnt({a, b}, DriverWeights::Default(), {}),
               InvalidParameter);
  EXPECT_THROW(FitWeightsMaxEnt({}, DriverWeights::Default(), {}),
               InvalidParameter);
}

TEST(Irl, RoundTripMatchesFeatureExpectations) {
  const DriverWeights truth = TrueWeights();
  const FollowerPlanner p = PlannerFor(truth);
  std::vector<Demonstration> demos = {
      SynthesizeDemonstration({34.0, 19.0, 0.0}, WavyLeader(20.0, 0.0), p),
      SynthesizeDemonstration({20.0, 21.0, 0.0}, WavyLeader(20.0, 2.0), p),
  };
  DriverWeights start = DriverWeights::Default();
  start.tau_h = truth.tau_h;
  FitOptions o;
  o.tolerance = 0.05;
  const FitResult r = FitWeightsMaxEnt(demos, start, o);
  EXPECT_TRUE(r.converged);
  for (int i = 0; i < 4; ++i) {
    EXPECT_LE(std::abs(r.model_features[i] - r.demo_features[i]),
              0.05 * r.demo_features[i])
        << "feature " << i;
  }
}

}  // namespace
}  // namespace svo
