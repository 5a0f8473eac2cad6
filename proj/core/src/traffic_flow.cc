#include "svo/traffic_flow.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "svo/errors.h"

namespace svo {

void IdmParams::Validate() const {
  if (!(a_max > 0.0 && b_comf > 0.0 && v_des > 0.0 && tau_d >= 0.0 &&
        s0 > 0.0 && delta > 0.0)) {
    throw InvalidParameter("IDM parameters out of range");
  }
}

double IdmAccel(double v, double dv, double s, const IdmParams& p) {
  if (!(s > 0.0)) {
    throw EpisodeError("IDM gap is non-positive (collision): s = " +
                           std::to_string(s),
                       0);
  }
  const double dynamic = p.tau_d * v + v * dv / (2.0 * std::sqrt(p.a_max * p.b_comf));
  const double s_star = p.s0 + std::max(0.0, dynamic);
  const double free = std::pow(std::max(0.0, v) / p.v_des, p.delta);
  const double ratio = s_star / s;
  return p.a_max * (1.0 - free - ratio * ratio);
}

double IdmEquilibriumGap(double v, const IdmParams& p) {
  if (!(v >= 0.0 && v < p.v_des)) {
    throw InvalidParameter("IDM equilibrium needs 0 <= v < v_des");
  }
  const double s_star = p.s0 + p.tau_d * v;
  return s_star / std::sqrt(1.0 - std::pow(v / p.v_des, p.delta));
}

std::vector<FleetVehicle> StepFleet(std::span<const FleetVehicle> fleet,
                                    double leader_speed,
                                    double leader_speed_next, double dt,
                                    const IdmParams& p) {
  std::vector<FleetVehicle> next(fleet.begin(), fleet.end());
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    const double pred_speed = i == 0 ? leader_speed : fleet[i - 1].speed;
    const FleetVehicle& me = fleet[i];
    next[i].accel = IdmAccel(me.speed, me.speed - pred_speed, me.gap, p);
    next[i].speed = std::max(0.0, me.speed + dt * next[i].accel);
  }
  for (std::size_t i = 0; i < next.size(); ++i) {
    const double pred_next = i == 0 ? leader_speed_next : next[i - 1].speed;
    next[i].gap = fleet[i].gap + dt * (pred_next - next[i].speed);
  }
  return next;
}

}  // namespace svo
