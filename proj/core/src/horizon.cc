#include "svo/horizon.h"

#include <algorithm>
#include <cassert>

#include "svo/errors.h"

namespace svo {

HorizonModel BuildHorizon(const DiscreteDynamics& disc, int steps) {
  if (steps <= 0) throw InvalidParameter("horizon must have at least 1 step");
  const int n = steps;
  HorizonModel h;
  h.steps = n;
  h.disc = disc;

  // Powers Ad^k, k = 0..n.
  std::vector<Eigen::Matrix3d> pow(n + 1);
  pow[0].setIdentity();
  for (int k = 1; k <= n; ++k) pow[k] = disc.Ad * pow[k - 1];

  Eigen::MatrixXd x_map(3 * n, 3), u_map = Eigen::MatrixXd::Zero(3 * n, n),
                  p_map = Eigen::MatrixXd::Zero(3 * n, n);
  for (int k = 1; k <= n; ++k) {
    x_map.block<3, 3>(3 * (k - 1), 0) = pow[k];
    for (int j = 0; j < k; ++j) {
      u_map.block<3, 1>(3 * (k - 1), j) = pow[k - 1 - j] * disc.Bd;
      p_map.block<3, 1>(3 * (k - 1), j) = pow[k - 1 - j] * disc.Dd;
    }
  }

  auto rows = [n](const Eigen::MatrixXd& m, int component) {
    Eigen::MatrixXd out(n, m.cols());
    for (int k = 0; k < n; ++k) out.row(k) = m.row(3 * k + component);
    return out;
  };
  h.gap_x = rows(x_map, 0);
  h.gap_u = rows(u_map, 0);
  h.gap_p = rows(p_map, 0);
  h.speed_x = rows(x_map, 1);
  h.speed_u = rows(u_map, 1);
  h.accel_x = rows(x_map, 2);
  h.accel_u = rows(u_map, 2);
  // Speed and acceleration never depend on the preceding vehicle.
  assert(rows(p_map, 1).isZero() && rows(p_map, 2).isZero());
  return h;
}

std::vector<LongitudinalState> Rollout(const DiscreteDynamics& disc,
                                       const LongitudinalState& x0,
                                       std::span<const double> controls,
                                       std::span<const double> prec_speeds) {
  if (controls.size() != prec_speeds.size()) {
    throw InvalidParameter("Rollout: control and preview lengths differ");
  }
  std::vector<LongitudinalState> out;
  out.reserve(controls.size());
  LongitudinalState x = x0;
  for (std::size_t k = 0; k < controls.size(); ++k) {
    x = Step(disc, x, controls[k], prec_speeds[k]);
    out.push_back(x);
  }
  return out;
}

Eigen::VectorXd PreviewWindow(std::span<const double> preview, int steps) {
  if (preview.empty()) throw InvalidParameter("empty speed preview");
  Eigen::VectorXd out(steps);
  for (int k = 0; k < steps; ++k) {
    const std::size_t idx =
        std::min<std::size_t>(static_cast<std::size_t>(k), preview.size() - 1);
    out[k] = preview[idx];
  }
  return out;
}

}  // namespace svo
