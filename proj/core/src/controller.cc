#include "svo/controller.h"

#include <cmath>
#include <numbers>
#include <string>

#include "svo/errors.h"

namespace svo {

void EgoisticParams::Validate() const {
  if (!(d_s > 0.0) || !(tau_r > 0.0)) {
    throw InvalidParameter("egoistic params need d_s > 0 and tau_r > 0");
  }
}

void AvConstraints::Validate() const {
  if (!(d_min < d_max) || !(v_min < v_max) || !(u_min < u_max) ||
      !(a_min < a_max)) {
    throw InvalidParameter("AV constraint bounds must satisfy min < max");
  }
}

std::pair<double, double> SvoWeights(double phi) {
  if (!(phi >= 0.0 && phi <= std::numbers::pi / 4.0 + 1e-12)) {
    throw InvalidParameter("SVO angle must lie in [0, pi/4], got " +
                           std::to_string(phi));
  }
  return {std::cos(phi), std::sin(phi)};
}

double EgoisticCost(std::span<const LongitudinalState> av_traj,
                    const EgoisticParams& p) {
  double c = 0.0;
  for (const LongitudinalState& s : av_traj) {
    const double e = p.d_s + s.speed * p.tau_r - s.gap;
    c += e * e;
  }
  return c;
}

double CourtesyCost(std::span<const LongitudinalState> hv0_traj,
                    double speed_limit) {
  double c = 0.0;
  for (const LongitudinalState& s : hv0_traj) {
    c += (speed_limit - s.speed) * (speed_limit - s.speed);
  }
  return c;
}

Eigen::VectorXd ShiftWarmStart(const Eigen::VectorXd& previous) {
  const Eigen::Index n = previous.size();
  Eigen::VectorXd out(n);
  if (n == 0) return out;
  out.head(n - 1) = previous.tail(n - 1);
  out[n - 1] = previous[n - 1];
  return out;
}

namespace {

struct AvPrediction {
  Eigen::VectorXd gap, speed, accel;
};

AvPrediction PredictAv(const HorizonModel& h, const LongitudinalState& av0,
                       const Eigen::VectorXd& pv, const Eigen::VectorXd& u) {
  const Eigen::Vector3d x = av0.AsVector();
  return {h.gap_x * x + h.gap_u * u + h.gap_p * pv,
          h.speed_x * x + h.speed_u * u, h.accel_x * x + h.accel_u * u};
}

std::vector<LongitudinalState> ToStates(const AvPrediction& p) {
  std::vector<LongitudinalState> out(p.gap.size());
  for (Eigen::Index k = 0; k < p.gap.size(); ++k) {
    out[k] = {p.gap[k], p.speed[k], p.accel[k]};
  }
  return out;
}

// Constant-time-headway tracking error e = d_s + tau v - d and its Jacobian.
Eigen::VectorXd HeadwayError(const EgoisticParams& ego, const AvPrediction& p) {
  return Eigen::VectorXd::Constant(p.gap.size(), ego.d_s) +
         ego.tau_r * p.speed - p.gap;
}

Eigen::MatrixXd HeadwayJacobian(const HorizonModel& h,
                                const EgoisticParams& ego) {
  return ego.tau_r * h.speed_u - h.gap_u;
}

AffineInequalities AvStateConstraints(const HorizonModel& h,
                                      const AvConstraints& c,
                                      const LongitudinalState& av0,
                                      const Eigen::VectorXd& pv) {
  const int n = h.steps;
  const Eigen::Vector3d x = av0.AsVector();
  const Eigen::VectorXd gap0 = h.gap_x * x + h.gap_p * pv;
  const Eigen::VectorXd speed0 = h.speed_x * x;
  const Eigen::VectorXd accel0 = h.accel_x * x;
  auto constant = [n](double v) { return Eigen::VectorXd::Constant(n, v); };

  AffineInequalities out;
  out.G.resize(6 * n, n);
  out.h.resize(6 * n);
  out.G.middleRows(0 * n, n) = -h.gap_u;
  out.h.segment(0 * n, n) = constant(c.d_min) - gap0;
  out.G.middleRows(1 * n, n) = h.gap_u;
  out.h.segment(1 * n, n) = gap0 - constant(c.d_max);
  out.G.middleRows(2 * n, n) = -h.speed_u;
  out.h.segment(2 * n, n) = constant(c.v_min) - speed0;
  out.G.middleRows(3 * n, n) = h.speed_u;
  out.h.segment(3 * n, n) = speed0 - constant(c.v_max);
  out.G.middleRows(4 * n, n) = -h.accel_u;
  out.h.segment(4 * n, n) = constant(c.a_min) - accel0;
  out.G.middleRows(5 * n, n) = h.accel_u;
  out.h.segment(5 * n, n) = accel0 - constant(c.a_max);
  return out;
}

Eigen::VectorXd InitialControls(int n, const Eigen::VectorXd* warm_start) {
  return (warm_start && warm_start->size() == n) ? *warm_start
                                                 : Eigen::VectorXd::Zero(n);
}

}  // namespace

struct SocialPlanner::Evaluation {
  AvPrediction av;
  double cost_egoistic = 0.0;
  double cost_courtesy = 0.0;
  double value = 0.0;
  BestResponse response;
  bool has_response = false;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};

SocialPlanner::SocialPlanner(HorizonModel horizon, SvoConfig svo,
                             EgoisticParams ego, AvConstraints cons,
                             FollowerPlanner follower, PlannerOptions options)
    : horizon_(std::move(horizon)),
      svo_(svo),
      ego_(ego),
      cons_(cons),
      follower_(std::move(follower)),
      options_(options) {
  ego_.Validate();
  cons_.Validate();
  std::tie(w_ego_, w_courtesy_) = SvoWeights(svo_.phi);
  if (follower_.horizon().steps != horizon_.steps) {
    throw InvalidParameter("follower and AV horizons differ");
  }
}

SocialPlanner::Evaluation SocialPlanner::Evaluate(
    const LongitudinalState& av0, const LongitudinalState& human0,
    const Eigen::VectorXd& pv, const Eigen::VectorXd& u, bool need_derivatives,
    Eigen::VectorXd* human_warm) const {
  const HorizonModel& h = horizon_;
  Evaluation ev;
  ev.av = PredictAv(h, av0, pv, u);
  const Eigen::VectorXd e = HeadwayError(ego_, ev.av);
  ev.cost_egoistic = e.squaredNorm();
  ev.value = w_ego_ * ev.cost_egoistic;
  Eigen::MatrixXd J_e;
  if (need_derivatives) {
    J_e = HeadwayJacobian(h, ego_);
    ev.grad = 2.0 * w_ego_ * (J_e.transpose() * e);
    ev.hess = 2.0 * w_ego_ * (J_e.transpose() * J_e);
  }

  if (w_courtesy_ == 0.0 || options_.single_level) return ev;

  const LeaderPrediction leader = LeaderPrediction::FromControls(h, av0, u);
  ev.response = follower_.Solve(human0, leader, human_warm);
  ev.has_response = true;
  if (human_warm) *human_warm = ev.response.controls;

  const HorizonModel& fh = follower_.horizon();
  const double v_limit = follower_.speed_limit();
  const Eigen::VectorXd v_h =
      fh.speed_x * human0.AsVector() + fh.speed_u * ev.response.controls;
  const Eigen::VectorXd r_c =
      Eigen::VectorXd::Constant(v_h.size(), v_limit) - v_h;
  ev.cost_courtesy = r_c.squaredNorm();
  ev.value += w_courtesy_ * ev.cost_courtesy;

  if (need_derivatives) {
    const int n = h.steps;
    Eigen::MatrixXd dprec = Eigen::MatrixXd::Zero(n, n);
    dprec.bottomRows(n - 1) = h.speed_u.topRows(n - 1);
    const Eigen::MatrixXd M = follower_.ResponseJacobian(
        human0, leader, ev.response, dprec, h.speed_u);
    const Eigen::MatrixXd J_c = -fh.speed_u * M;
    ev.grad.noalias() += 2.0 * w_courtesy_ * (J_c.transpose() * r_c);
    ev.hess.noalias() += 2.0 * w_courtesy_ * (J_c.transpose() * J_c);
  }
  return ev;
}

AffineInequalities SocialPlanner::StateConstraints(
    const LongitudinalState& av0, const Eigen::VectorXd& pv) const {
  return AvStateConstraints(horizon_, cons_, av0, pv);
}

PlanResult SocialPlanner::Plan(const JointState& x0,
                               std::span<const double> pv_preview,
                               const Eigen::VectorXd* warm_start,
                               const Eigen::VectorXd* human_warm_start) const {
  const int n = horizon_.steps;
  if (!x0.av.IsFinite() || !x0.human.IsFinite()) {
    throw InvalidParameter("plan: non-finite initial state");
  }
  const Eigen::VectorXd pv = PreviewWindow(pv_preview, n);
  const AffineInequalities cons = StateConstraints(x0.av, pv);

  Eigen::VectorXd human_warm = (human_warm_start &&
                                human_warm_start->size() == n)
                                   ? *human_warm_start
                                   : Eigen::VectorXd::Zero(n);
  NewtonObjective objective = [&](const Eigen::VectorXd& u,
                                  Eigen::VectorXd* grad,
                                  Eigen::MatrixXd* hess) {
    Evaluation ev = Evaluate(x0.av, x0.human, pv, u, grad || hess,
                             &human_warm);
    if (grad) *grad = std::move(ev.grad);
    if (hess) *hess = std::move(ev.hess);
    return ev.value;
  };

  const Eigen::VectorXd lo = Eigen::VectorXd::Constant(n, cons_.u_min);
  const Eigen::VectorXd hi = Eigen::VectorXd::Constant(n, cons_.u_max);
  const NewtonResult res = MinimizeBoxNewton(
      objective, lo, hi, cons, InitialControls(n, warm_start), options_.outer);

  PlanResult out;
  out.controls = res.u;
  out.converged = res.converged;
  out.max_violation = res.max_violation;
  out.iterations = res.iterations;

  Evaluation final_ev = Evaluate(x0.av, x0.human, pv, res.u, false,
                                 &human_warm);
  out.predicted_av = ToStates(final_ev.av);
  out.cost_egoistic = final_ev.cost_egoistic;

  // The follower's response is always reported, even when the courtesy term
  // is switched off and the optimization never consulted it.
  BestResponse response = final_ev.has_response
                              ? std::move(final_ev.response)
                              : (options_.single_level
                                     ? BestResponse{}
                                     : BestResponseTo(follower_, x0, res.u,
                                                      &human_warm));
  if (response.controls.size() == n) {
    out.human_controls = response.controls;
    out.predicted_human = response.states;
    out.inner_feasible = response.feasible;
    out.cost_courtesy =
        CourtesyCost(response.states, follower_.speed_limit());
  }
  out.cost_total = w_ego_ * out.cost_egoistic + w_courtesy_ * out.cost_courtesy;
  return out;
}

double SocialPlanner::CompositeCost(const JointState& x0,
                                    std::span<const double> pv_preview,
                                    const Eigen::VectorXd& controls) const {
  const Eigen::VectorXd pv = PreviewWindow(pv_preview, horizon_.steps);
  return Evaluate(x0.av, x0.human, pv, controls, false, nullptr).value;
}

Eigen::VectorXd SocialPlanner::CompositeGradient(
    const JointState& x0, std::span<const double> pv_preview,
    const Eigen::VectorXd& controls) const {
  const Eigen::VectorXd pv = PreviewWindow(pv_preview, horizon_.steps);
  return Evaluate(x0.av, x0.human, pv, controls, true, nullptr).grad;
}

PlanResult PlanEgoistic(const HorizonModel& horizon, const EgoisticParams& ego,
                        const AvConstraints& cons, const LongitudinalState& av0,
                        std::span<const double> pv_preview,
                        const Eigen::VectorXd* warm_start,
                        const NewtonOptions& options) {
  ego.Validate();
  cons.Validate();
  const int n = horizon.steps;
  const Eigen::VectorXd pv = PreviewWindow(pv_preview, n);
  const Eigen::MatrixXd J_e = HeadwayJacobian(horizon, ego);

  NewtonObjective objective = [&](const Eigen::VectorXd& u,
                                  Eigen::VectorXd* grad,
                                  Eigen::MatrixXd* hess) {
    const Eigen::VectorXd e = HeadwayError(ego, PredictAv(horizon, av0, pv, u));
    if (grad) *grad = 2.0 * (J_e.transpose() * e);
    if (hess) *hess = 2.0 * (J_e.transpose() * J_e);
    return e.squaredNorm();
  };
  const Eigen::VectorXd lo = Eigen::VectorXd::Constant(n, cons.u_min);
  const Eigen::VectorXd hi = Eigen::VectorXd::Constant(n, cons.u_max);
  const NewtonResult res =
      MinimizeBoxNewton(objective, lo, hi,
                        AvStateConstraints(horizon, cons, av0, pv),
                        InitialControls(n, warm_start), options);

  PlanResult out;
  out.controls = res.u;
  out.converged = res.converged;
  out.max_violation = res.max_violation;
  out.iterations = res.iterations;
  out.predicted_av = ToStates(PredictAv(horizon, av0, pv, res.u));
  out.cost_egoistic = EgoisticCost(out.predicted_av, ego);
  out.cost_total = out.cost_egoistic;
  return out;
}

}  // namespace svo
