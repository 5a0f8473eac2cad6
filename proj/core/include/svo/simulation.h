#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "svo/controller.h"
#include "svo/driver_model.h"
#include "svo/dynamics.h"
#include "svo/traffic_flow.h"

namespace svo {

inline constexpr int kNumVehicles = 6;
inline constexpr std::array<const char*, kNumVehicles> kVehicleNames = {
    "PV", "AV", "HV0", "HV1", "HV2", "HV3"};
enum VehicleIndex { kPv = 0, kAv = 1, kHv0 = 2, kHv1 = 3, kHv2 = 4, kHv3 = 5 };

// Every parameter that influences an episode.
struct SimulationConfig {
  double dt = 0.1;        // s
  int horizon_steps = 30; // 3 s at dt = 0.1
  double rho = 0.45;      // s, actuation lag (AV and HV0)

  EgoisticParams ego;
  AvConstraints av;
  HumanConstraints human;
  IdmParams idm;
  DriverWeights planner_weights = DriverWeights::Default();
  // Weights of the simulated HV0 when they differ from the AV's model of it.
  std::optional<DriverWeights> plant_weights;

  // When set, v_Rmax, v_Hmax and the IDM desired speed are all replaced by
  // the maximum PV speed of the scenario.
  bool speed_caps_from_pv = true;

  NewtonOptions outer_solver{.max_iterations = 60,
                             .gradient_tolerance = 1e-7,
                             .decrease_tolerance = 1e-10,
                             .max_step = 0.0};
  NewtonOptions inner_solver{.max_iterations = 100,
                             .gradient_tolerance = 1e-10,
                             .decrease_tolerance = 1e-16};

  void Validate() const;
};

struct Scenario {
  std::string label;
  double dt = 0.1;
  double speed_limit = 25.0;  // v_L, m/s
  std::vector<double> pv_speed;

  // Initial states; see InitializeAtEquilibrium.
  LongitudinalState av;
  LongitudinalState human;
  std::array<FleetVehicle, 3> fleet{};

  void Validate(double expected_dt) const;
  double MaxPvSpeed() const;
};

// Places every vehicle at its own equilibrium for the initial PV speed: AV at
// its constant-time-headway gap, HV0 at its zero relative-distance gap and
// the fleet at the IDM equilibrium gap (IDM parameters after speed caps; for
// v0 above 95 % of v_des, the gap of 95 % of v_des).
void InitializeAtEquilibrium(Scenario& scn, const SimulationConfig& cfg);

// Synthetic 120 s PV drive cycle: cruise at 20 m/s, brake to 8 m/s, cruise,
// accelerate to 24 m/s, cruise. v_L = 25 m/s. Initialized at equilibrium.
Scenario MakeSyntheticScenario(const SimulationConfig& cfg);

// Constant PV speed, used for fixed-point checks.
Scenario MakeConstantScenario(double speed, double duration_s,
                              double speed_limit, const SimulationConfig& cfg);

// Scenario driven by a recorded PV speed trace, initialized at equilibrium.
Scenario MakeProfileScenario(std::string label, std::vector<double> pv_speed,
                             double speed_limit, const SimulationConfig& cfg);

// Config after applying scenario-derived speed caps.
SimulationConfig EffectiveConfig(const SimulationConfig& cfg,
                                 const Scenario& scn);

struct VehicleSample {
  double gap = 0.0;      // NaN for the PV
  double speed = 0.0;
  double accel = 0.0;
  double control = 0.0;  // NaN for the PV

  bool operator==(const VehicleSample& o) const;
};

struct PlanDiagnostics {
  double cost_egoistic = 0.0;
  double cost_courtesy = 0.0;
  double cost_total = 0.0;
  bool converged = true;
  bool inner_feasible = true;
  bool hv0_feasible = true;
  int iterations = 0;
  double av_violation = 0.0;

  friend bool operator==(const PlanDiagnostics&,
                         const PlanDiagnostics&) = default;
};

struct EpisodeTrace {
  std::string label;
  double dt = 0.1;
  double phi = 0.0;
  // samples[v][k]: vehicle v (VehicleIndex) at time k dt.
  std::array<std::vector<VehicleSample>, kNumVehicles> samples;
  std::vector<PlanDiagnostics> plans;

  std::size_t size() const { return plans.size(); }
  friend bool operator==(const EpisodeTrace&, const EpisodeTrace&) = default;
};

// Closed-loop episode: at each step the AV plans against the PV preview and
// applies its first control, HV0 applies the first control of its best
// response to the AV's plan, and the IDM fleet follows HV0. Throws
// EpisodeError on collision or non-finite state.
EpisodeTrace RunEpisode(const Scenario& scn, const SvoConfig& svo,
                        const SimulationConfig& cfg);

struct PairMetrics {
  std::string follower;
  std::string leader;
  double avg_gap = 0.0;
  std::optional<double> avg_headway;  // empty when no sample qualifies
  double min_gap = 0.0;
  double max_gap = 0.0;
  std::size_t samples = 0;
  std::size_t headway_excluded = 0;
};

struct TrafficMetrics {
  static constexpr double kHeadwaySpeedEps = 0.5;  // m/s

  std::vector<PairMetrics> pairs;  // AV-PV, HV0-AV, HV1-HV0, HV2-HV1, HV3-HV2
  double avg_gap = 0.0;
  std::optional<double> avg_headway;

  const PairMetrics& Pair(VehicleIndex follower) const {
    return pairs.at(follower - 1);
  }
};

TrafficMetrics ComputeMetrics(const EpisodeTrace& trace);

struct SweepRow {
  double phi = 0.0;
  std::optional<EpisodeTrace> trace;
  std::optional<TrafficMetrics> metrics;
  std::string error;  // empty on success
};

// One independent episode per SVO level; rows come back in `levels` order.
std::vector<SweepRow> SweepSvo(const Scenario& scn,
                               const std::vector<double>& levels,
                               const SimulationConfig& cfg,
                               int max_threads = 0);

}  // namespace svo
