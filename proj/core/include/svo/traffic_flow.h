#pragma once

#include <span>
#include <vector>

namespace svo {

// Intelligent Driver Model parameters. A scenario overrides v_des with the
// maximum PV speed.
struct IdmParams {
  double a_max = 2.0;   // m/s^2
  double b_comf = 2.0;  // m/s^2
  double v_des = 24.0;  // m/s
  double tau_d = 1.0;   // s
  double s0 = 3.0;      // m
  double delta = 4.0;

  void Validate() const;
};

// IDM acceleration. `dv` is own speed minus predecessor speed. The dynamic
// desired gap is floored at s0. Throws EpisodeError (step 0) when s <= 0.
double IdmAccel(double v, double dv, double s, const IdmParams& p);

// Gap at which a vehicle at constant speed v behind an equally fast leader
// has zero IDM acceleration. Requires 0 <= v < v_des.
double IdmEquilibriumGap(double v, const IdmParams& p);

struct FleetVehicle {
  double gap = 0.0;    // m, to own predecessor
  double speed = 0.0;  // m/s
  double accel = 0.0;  // m/s^2, last applied IDM acceleration

  friend bool operator==(const FleetVehicle&, const FleetVehicle&) = default;
};

// Advances the IDM fleet (ordered front to back) by one step with
// semi-implicit Euler: every acceleration is computed from the pre-update
// states, then speeds are updated and floored at zero, then gaps are advanced
// with the updated speeds of the vehicle and its predecessor.
// `leader_speed` and `leader_speed_next` are the speeds of the vehicle ahead
// of the first fleet member before and after the step.
std::vector<FleetVehicle> StepFleet(std::span<const FleetVehicle> fleet,
                                    double leader_speed,
                                    double leader_speed_next, double dt,
                                    const IdmParams& p);

}  // namespace svo
