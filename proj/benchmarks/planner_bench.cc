#include <numbers>
#include <vector>

#include <benchmark/benchmark.h>

#include "svo/controller.h"
#include "svo/simulation.h"
#include "svo/traffic_flow.h"

namespace {

using namespace svo;

struct Setup {
  SimulationConfig cfg;
  Scenario scn = MakeSyntheticScenario(cfg);
  SimulationConfig eff = EffectiveConfig(cfg, scn);
  HorizonModel h = BuildHorizon(DiscretizeZoh(BuildContinuous(eff.rho), eff.dt),
                                eff.horizon_steps);
  FollowerPlanner follower{h, eff.planner_weights, eff.human, scn.speed_limit,
                           eff.inner_solver};
};

const Setup& Shared() {
  static const Setup s;
  return s;
}

void BM_DiscretizeZoh(benchmark::State& state) {
  const ContinuousDynamics c = BuildContinuous(0.45);
  for (auto _ : state) benchmark::DoNotOptimize(DiscretizeZoh(c, 0.1));
}
BENCHMARK(BM_DiscretizeZoh);

void BM_BuildHorizon(benchmark::State& state) {
  const DiscreteDynamics d = DiscretizeZoh(BuildContinuous(0.45), 0.1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(BuildHorizon(d, static_cast<int>(state.range(0))));
  }
}
BENCHMARK(BM_BuildHorizon)->Arg(10)->Arg(30)->Arg(60);

void BM_FollowerBestResponse(benchmark::State& state) {
  const Setup& s = Shared();
  const Eigen::VectorXd u = Eigen::VectorXd::Constant(s.h.steps, -1.0);
  const JointState x0{s.scn.av, s.scn.human};
  for (auto _ : state) benchmark::DoNotOptimize(BestResponseTo(s.follower, x0, u));
}
BENCHMARK(BM_FollowerBestResponse)->Unit(benchmark::kMicrosecond);

void BM_SocialPlan(benchmark::State& state) {
  const Setup& s = Shared();
  const double phi = std::numbers::pi / 4 * static_cast<double>(state.range(0)) / 3.0;
  const SocialPlanner planner(s.h, {phi}, s.eff.ego, s.eff.av, s.follower,
                              {.outer = s.eff.outer_solver});
  // Braking phase of the drive cycle, where the planner works hardest.
  const std::size_t k = 220;
  const std::span<const double> pv(s.scn.pv_speed.data() + k,
                                   s.scn.pv_speed.size() - k);
  const JointState x0{{22.0, 18.0, -1.0}, {20.0, 19.0, 0.0}};
  for (auto _ : state) benchmark::DoNotOptimize(planner.Plan(x0, pv));
}
BENCHMARK(BM_SocialPlan)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

void BM_StepFleet(benchmark::State& state) {
  const IdmParams p;
  std::vector<FleetVehicle> fleet = {{30.0, 20.0, 0.0}, {31.0, 20.0, 0.0},
                                     {29.0, 19.0, 0.0}};
  for (auto _ : state) benchmark::DoNotOptimize(StepFleet(fleet, 20.0, 20.1, 0.1, p));
}
BENCHMARK(BM_StepFleet);

void BM_EgoisticEpisode(benchmark::State& state) {
  const Setup& s = Shared();
  for (auto _ : state) benchmark::DoNotOptimize(RunEpisode(s.scn, {0.0}, s.cfg));
}
BENCHMARK(BM_EgoisticEpisode)->Unit(benchmark::kMillisecond)->Iterations(3);

}  // namespace

BENCHMARK_MAIN();
