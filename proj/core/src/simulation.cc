#include "svo/simulation.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

#include "svo/errors.h"
#include "svo/horizon.h"

namespace svo {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool SameDouble(double a, double b) {
  return (std::isnan(a) && std::isnan(b)) || a == b;
}

void CheckVehicle(const LongitudinalState& s, const char* name,
                  std::size_t step) {
  if (!s.IsFinite()) {
    throw EpisodeError(std::string(name) + " state became non-finite", step);
  }
  if (!(s.gap > 0.0)) {
    throw EpisodeError(std::string(name) + " collided with its predecessor (gap " +
                           std::to_string(s.gap) + " m)",
                       step);
  }
}

}  // namespace

bool VehicleSample::operator==(const VehicleSample& o) const {
  return SameDouble(gap, o.gap) && SameDouble(speed, o.speed) &&
         SameDouble(accel, o.accel) && SameDouble(control, o.control);
}

EpisodeTrace RunEpisode(const Scenario& scn, const SvoConfig& svo,
                        const SimulationConfig& base_cfg) {
  base_cfg.Validate();
  scn.Validate(base_cfg.dt);
  const SimulationConfig cfg = EffectiveConfig(base_cfg, scn);
  cfg.Validate();

  const DiscreteDynamics disc = DiscretizeZoh(BuildContinuous(cfg.rho), cfg.dt);
  const HorizonModel horizon = BuildHorizon(disc, cfg.horizon_steps);
  const FollowerPlanner model(horizon, cfg.planner_weights, cfg.human,
                              scn.speed_limit, cfg.inner_solver);
  const FollowerPlanner plant(
      horizon, cfg.plant_weights ? *cfg.plant_weights : cfg.planner_weights,
      cfg.human, scn.speed_limit, cfg.inner_solver);
  const SocialPlanner planner(horizon, svo, cfg.ego, cfg.av, model,
                              {.outer = cfg.outer_solver});

  const std::size_t steps = scn.pv_speed.size();
  EpisodeTrace trace;
  trace.label = scn.label;
  trace.dt = cfg.dt;
  trace.phi = svo.phi;
  for (auto& v : trace.samples) v.reserve(steps);
  trace.plans.reserve(steps);

  LongitudinalState av = scn.av;
  LongitudinalState hv0 = scn.human;
  std::vector<FleetVehicle> fleet(scn.fleet.begin(), scn.fleet.end());
  Eigen::VectorXd warm_av = Eigen::VectorXd::Zero(cfg.horizon_steps);
  Eigen::VectorXd warm_model = Eigen::VectorXd::Zero(cfg.horizon_steps);
  Eigen::VectorXd warm_plant = Eigen::VectorXd::Zero(cfg.horizon_steps);

  for (std::size_t k = 0; k < steps; ++k) {
    CheckVehicle(av, "AV", k);
    CheckVehicle(hv0, "HV0", k);

    const std::span<const double> preview(scn.pv_speed.data() + k, steps - k);
    const JointState joint{av, hv0};
    const PlanResult plan = planner.Plan(joint, preview, &warm_av, &warm_model);
    const BestResponse response =
        BestResponseTo(plant, joint, plan.controls, &warm_plant);
    const double u_av = plan.controls[0];
    const double u_hv0 = response.controls[0];

    const double pv_accel =
        k + 1 < steps ? (scn.pv_speed[k + 1] - scn.pv_speed[k]) / cfg.dt : 0.0;
    trace.samples[kPv].push_back({kNaN, scn.pv_speed[k], pv_accel, kNaN});
    trace.samples[kAv].push_back({av.gap, av.speed, av.accel, u_av});
    trace.samples[kHv0].push_back({hv0.gap, hv0.speed, hv0.accel, u_hv0});
    trace.plans.push_back({plan.cost_egoistic, plan.cost_courtesy,
                           plan.cost_total, plan.converged,
                           plan.inner_feasible, response.feasible,
                           plan.iterations, plan.max_violation});

    std::vector<FleetVehicle> next_fleet;
    if (k + 1 < steps) {
      const LongitudinalState av_next = Step(disc, av, u_av, scn.pv_speed[k]);
      const LongitudinalState hv0_next = Step(disc, hv0, u_hv0, av.speed);
      try {
        next_fleet = StepFleet(fleet, hv0.speed, hv0_next.speed, cfg.dt, cfg.idm);
      } catch (const EpisodeError& e) {
        throw EpisodeError(std::string("fleet: ") + e.what(), k);
      }
      av = av_next;
      hv0 = hv0_next;
    }
    for (std::size_t i = 0; i < fleet.size(); ++i) {
      trace.samples[kHv1 + i].push_back(
          {fleet[i].gap, fleet[i].speed,
           next_fleet.empty() ? fleet[i].accel : next_fleet[i].accel,
           next_fleet.empty() ? fleet[i].accel : next_fleet[i].accel});
    }
    if (k + 1 < steps) {
      for (std::size_t i = 0; i < next_fleet.size(); ++i) {
        if (!(next_fleet[i].gap > 0.0) || !std::isfinite(next_fleet[i].speed)) {
          throw EpisodeError(std::string(kVehicleNames[kHv1 + i]) +
                                 " collided with its predecessor",
                             k + 1);
        }
      }
      fleet = std::move(next_fleet);
    }

    warm_av = ShiftWarmStart(plan.controls);
    if (plan.human_controls.size() == cfg.horizon_steps) {
      warm_model = ShiftWarmStart(plan.human_controls);
    }
    warm_plant = ShiftWarmStart(response.controls);
  }
  return trace;
}

std::vector<SweepRow> SweepSvo(const Scenario& scn,
                               const std::vector<double>& levels,
                               const SimulationConfig& cfg, int max_threads) {
  for (double phi : levels) SvoWeights(phi);  // validates every level up front
  std::vector<SweepRow> rows(levels.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < levels.size(); i = next++) {
      SweepRow& row = rows[i];
      row.phi = levels[i];
      try {
        row.trace = RunEpisode(scn, {levels[i]}, cfg);
        row.metrics = ComputeMetrics(*row.trace);
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    }
  };
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (max_threads > 0) hw = std::min<unsigned>(hw, max_threads);
  const std::size_t n_threads = std::min<std::size_t>(hw, levels.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  return rows;
}

}  // namespace svo
