#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "svo/dynamics.h"

namespace svo {

// Lifted (batch) form of the discrete model over a planning horizon. Rows index
// the predicted states k = 1..N, i.e. the states reached after applying
// control k-1:
//   gap   = gap_x   x0 + gap_u   u + gap_p p
//   speed = speed_x x0 + speed_u u
//   accel = accel_x x0 + accel_u u
// where u and p are the control and preceding-speed sequences (k = 0..N-1).
struct HorizonModel {
  int steps = 0;
  DiscreteDynamics disc;

  Eigen::MatrixXd gap_x, gap_u, gap_p;
  Eigen::MatrixXd speed_x, speed_u;
  Eigen::MatrixXd accel_x, accel_u;
};

HorizonModel BuildHorizon(const DiscreteDynamics& disc, int steps);

// Predicted states k = 1..N by forward recursion.
std::vector<LongitudinalState> Rollout(const DiscreteDynamics& disc,
                                       const LongitudinalState& x0,
                                       std::span<const double> controls,
                                       std::span<const double> prec_speeds);

// First `steps` entries of `preview`, holding the last value when it is short.
Eigen::VectorXd PreviewWindow(std::span<const double> preview, int steps);

}  // namespace svo
