#include <algorithm>
#include <cmath>

#include "svo/errors.h"
#include "svo/simulation.h"

namespace svo {
namespace {

constexpr double kFleetStartSpeedRatio = 0.95;

}  // namespace

void SimulationConfig::Validate() const {
  if (!(dt > 0.0)) throw InvalidParameter("dt must be positive");
  if (horizon_steps < 1) throw InvalidParameter("horizon must be >= 1 step");
  if (!(rho > 0.0)) throw InvalidParameter("rho must be positive");
  ego.Validate();
  av.Validate();
  human.Validate();
  idm.Validate();
  planner_weights.Validate();
  if (plant_weights) plant_weights->Validate();
}

void Scenario::Validate(double expected_dt) const {
  if (pv_speed.empty()) throw InvalidParameter("scenario PV trace is empty");
  for (double v : pv_speed) {
    if (!std::isfinite(v) || v < 0.0) {
      throw InvalidParameter("scenario PV speeds must be finite and >= 0");
    }
  }
  if (std::abs(dt - expected_dt) > 1e-9) {
    throw InvalidParameter("scenario dt does not match the simulation dt");
  }
  if (!std::isfinite(speed_limit)) {
    throw InvalidParameter("speed limit must be finite");
  }
}

double Scenario::MaxPvSpeed() const {
  return *std::max_element(pv_speed.begin(), pv_speed.end());
}

SimulationConfig EffectiveConfig(const SimulationConfig& cfg,
                                 const Scenario& scn) {
  SimulationConfig out = cfg;
  if (cfg.speed_caps_from_pv && !scn.pv_speed.empty()) {
    const double vmax = scn.MaxPvSpeed();
    out.av.v_max = vmax;
    out.human.v_max = vmax;
    out.idm.v_des = vmax;
  }
  return out;
}

void InitializeAtEquilibrium(Scenario& scn, const SimulationConfig& cfg) {
  const SimulationConfig eff = EffectiveConfig(cfg, scn);
  const double v0 = scn.pv_speed.front();
  scn.av = {eff.ego.d_s + eff.ego.tau_r * v0, v0, 0.0};
  const DriverWeights& hw =
      eff.plant_weights ? *eff.plant_weights : eff.planner_weights;
  scn.human = {hw.d_s + hw.tau_h * v0, v0, 0.0};
  // No finite equilibrium exists at v0 >= v_des (e.g. a PV that starts at its
  // top speed); the fleet then starts at the gap for 95 % of v_des.
  const double s_eq =
      IdmEquilibriumGap(std::min(v0, kFleetStartSpeedRatio * eff.idm.v_des),
                        eff.idm);
  for (FleetVehicle& f : scn.fleet) f = {s_eq, v0, 0.0};
}

Scenario MakeSyntheticScenario(const SimulationConfig& cfg) {
  Scenario scn;
  scn.label = "synthetic-default";
  scn.dt = cfg.dt;
  scn.speed_limit = 25.0;
  const double duration = 120.0;
  const auto samples = static_cast<std::size_t>(std::lround(duration / cfg.dt));
  scn.pv_speed.resize(samples + 1);
  for (std::size_t k = 0; k <= samples; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    double v;
    if (t < 20.0) {
      v = 20.0;
    } else if (t < 30.0) {
      v = 20.0 - 1.2 * (t - 20.0);
    } else if (t < 60.0) {
      v = 8.0;
    } else if (t < 76.0) {
      v = 8.0 + 1.0 * (t - 60.0);
    } else {
      v = 24.0;
    }
    scn.pv_speed[k] = v;
  }
  InitializeAtEquilibrium(scn, cfg);
  return scn;
}

Scenario MakeConstantScenario(double speed, double duration_s,
                              double speed_limit,
                              const SimulationConfig& cfg) {
  Scenario scn;
  scn.label = "constant";
  scn.dt = cfg.dt;
  scn.speed_limit = speed_limit;
  const auto samples =
      static_cast<std::size_t>(std::lround(duration_s / cfg.dt));
  scn.pv_speed.assign(samples + 1, speed);
  InitializeAtEquilibrium(scn, cfg);
  return scn;
}

Scenario MakeProfileScenario(std::string label, std::vector<double> pv_speed,
                             double speed_limit, const SimulationConfig& cfg) {
  Scenario scn;
  scn.label = std::move(label);
  scn.dt = cfg.dt;
  scn.speed_limit = speed_limit;
  scn.pv_speed = std::move(pv_speed);
  scn.Validate(cfg.dt);
  InitializeAtEquilibrium(scn, cfg);
  return scn;
}

}  // namespace svo
