#pragma once

#include <Eigen/Core>

namespace svo {

// Longitudinal state of one vehicle relative to its predecessor.
struct LongitudinalState {
  double gap = 0.0;    // m, bumper-to-bumper distance to the preceding vehicle
  double speed = 0.0;  // m/s
  double accel = 0.0;  // m/s^2

  Eigen::Vector3d AsVector() const { return {gap, speed, accel}; }
  static LongitudinalState FromVector(const Eigen::Vector3d& x) {
    return {x[0], x[1], x[2]};
  }
  bool IsFinite() const;

  friend bool operator==(const LongitudinalState&,
                         const LongitudinalState&) = default;
};

// Third-order car-following model with first-order actuation lag:
//   gap' = v_prec - v,  v' = a,  a' = (u - a) / rho.
struct ContinuousDynamics {
  Eigen::Matrix3d A;
  Eigen::Vector3d B;
  Eigen::Vector3d D;
  double rho = 0.0;
};

// Zero-order-hold discretization of ContinuousDynamics at step `dt`:
//   x+ = Ad x + Bd u + Dd v_prec.
struct DiscreteDynamics {
  Eigen::Matrix3d Ad;
  Eigen::Vector3d Bd;
  Eigen::Vector3d Dd;
  double dt = 0.0;
  double rho = 0.0;
};

// Throws InvalidParameter unless rho > 0.
ContinuousDynamics BuildContinuous(double rho);

// Exact ZOH using the closed form of exp(A t) for this A; throws
// InvalidParameter unless dt > 0.
DiscreteDynamics DiscretizeZoh(const ContinuousDynamics& cont, double dt);

// One step of the discrete model. Throws InvalidParameter on non-finite input.
LongitudinalState Step(const DiscreteDynamics& disc, const LongitudinalState& x,
                       double u, double v_prec);

}  // namespace svo
