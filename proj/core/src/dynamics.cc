#include "svo/dynamics.h"

#include <cmath>
#include <string>

#include "svo/errors.h"

namespace svo {

bool LongitudinalState::IsFinite() const {
  return std::isfinite(gap) && std::isfinite(speed) && std::isfinite(accel);
}

ContinuousDynamics BuildContinuous(double rho) {
  if (!(rho > 0.0) || !std::isfinite(rho)) {
    throw InvalidParameter("actuation lag rho must be positive, got " +
                           std::to_string(rho));
  }
  ContinuousDynamics c;
  c.rho = rho;
  c.A << 0.0, -1.0, 0.0,
         0.0, 0.0, 1.0,
         0.0, 0.0, -1.0 / rho;
  c.B << 0.0, 0.0, 1.0 / rho;
  c.D << 1.0, 0.0, 0.0;
  return c;
}

DiscreteDynamics DiscretizeZoh(const ContinuousDynamics& cont, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw InvalidParameter("discretization step dt must be positive, got " +
                           std::to_string(dt));
  }
  const double rho = cont.rho;
  // One minus the lag decay over the step, computed without cancellation.
  const double decay_c = -std::expm1(-dt / rho);
  const double decay = 1.0 - decay_c;

  // Integrals of the accel response: speed gain and the doubly integrated
  // gap loss. Both are small differences for dt << rho, so evaluate them by
  // series there.
  double speed_gain;  // dt - rho (1 - e^{-dt/rho})
  double gap_loss;    // dt^2/2 - rho dt + rho^2 (1 - e^{-dt/rho})
  const double s = dt / rho;
  if (s < 1e-3) {
    speed_gain = rho * (s * s / 2.0 - s * s * s / 6.0 + s * s * s * s / 24.0);
    gap_loss = rho * rho * (s * s * s / 6.0 - s * s * s * s / 24.0 +
                            s * s * s * s * s / 120.0);
  } else {
    speed_gain = dt - rho * decay_c;
    gap_loss = dt * dt / 2.0 - rho * dt + rho * rho * decay_c;
  }

  DiscreteDynamics d;
  d.dt = dt;
  d.rho = rho;
  d.Ad << 1.0, -dt, -rho * speed_gain,
          0.0, 1.0, rho * decay_c,
          0.0, 0.0, decay;
  d.Bd << -gap_loss, speed_gain, decay_c;
  d.Dd << dt, 0.0, 0.0;
  return d;
}

LongitudinalState Step(const DiscreteDynamics& disc, const LongitudinalState& x,
                       double u, double v_prec) {
  if (!x.IsFinite() || !std::isfinite(u) || !std::isfinite(v_prec)) {
    throw InvalidParameter("Step: non-finite state or input");
  }
  return LongitudinalState::FromVector(disc.Ad * x.AsVector() + disc.Bd * u +
                                       disc.Dd * v_prec);
}

}  // namespace svo
