#include "svo/driver_model.h"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>

#include "svo/errors.h"

namespace svo {

FeatureVector& FeatureVector::operator+=(const FeatureVector& o) {
  accel += o.accel;
  desired_speed += o.desired_speed;
  relative_speed += o.relative_speed;
  relative_distance += o.relative_distance;
  return *this;
}

DriverWeights DriverWeights::Default() {
  DriverWeights d;
  d.w << 0.1, 0.5, 0.5, 1.0;
  d.tau_h = 1.5;
  d.d_s = 5.0;
  return d;
}

void DriverWeights::Validate() const {
  for (int i = 0; i < 4; ++i) {
    if (!std::isfinite(w[i]) || w[i] < 0.0) {
      throw InvalidParameter("driver weight " + std::to_string(i) +
                             " must be finite and non-negative");
    }
  }
  if (!(tau_h > 0.0)) throw InvalidParameter("tau_h must be positive");
  if (!(d_s > 0.0)) throw InvalidParameter("d_s must be positive");
}

void HumanConstraints::Validate() const {
  if (!(v_min >= 0.0 && v_min < v_max)) {
    throw InvalidParameter("human speed bounds need 0 <= v_min < v_max");
  }
  if (!(u_min < u_max)) throw InvalidParameter("human control bounds empty");
}

FeatureVector Features(const LongitudinalState& human, double lead_speed,
                       double speed_limit, double tau_h, double d_s) {
  const double desired_gap = human.speed * tau_h + d_s;
  FeatureVector f;
  f.accel = human.accel * human.accel;
  f.desired_speed = (speed_limit - human.speed) * (speed_limit - human.speed);
  f.relative_speed = (lead_speed - human.speed) * (lead_speed - human.speed);
  f.relative_distance = std::abs(desired_gap - human.gap);
  return f;
}

double HumanStageCost(const FeatureVector& f, const DriverWeights& w) {
  return w.w.dot(f.AsVector());
}

LeaderPrediction LeaderPrediction::FromControls(
    const HorizonModel& h, const LongitudinalState& leader_state,
    const Eigen::VectorXd& controls) {
  const int n = h.steps;
  LeaderPrediction p;
  p.lead_speed = h.speed_x * leader_state.AsVector() + h.speed_u * controls;
  p.prec_speed.resize(n);
  p.prec_speed[0] = leader_state.speed;
  for (int k = 1; k < n; ++k) p.prec_speed[k] = p.lead_speed[k - 1];
  return p;
}

LeaderPrediction LeaderPrediction::FromSpeeds(std::span<const double> speeds,
                                              int steps) {
  if (speeds.empty()) throw InvalidParameter("empty leader speed trace");
  LeaderPrediction p;
  p.prec_speed = PreviewWindow(speeds, steps);
  p.lead_speed.resize(steps);
  for (int k = 0; k < steps; ++k) {
    const std::size_t idx = std::min<std::size_t>(k + 1, speeds.size() - 1);
    p.lead_speed[k] = speeds[idx];
  }
  return p;
}

namespace {

enum class Loss { kSquare, kSmoothAbs };

double LossValue(Loss loss, double r) {
  return loss == Loss::kSquare
             ? r * r
             : std::sqrt(r * r + FollowerPlanner::kSmoothingEps *
                                     FollowerPlanner::kSmoothingEps);
}
double LossSlope(Loss loss, double r) {
  if (loss == Loss::kSquare) return 2.0 * r;
  const double eps = FollowerPlanner::kSmoothingEps;
  return r / std::sqrt(r * r + eps * eps);
}
double LossCurvature(Loss loss, double r) {
  if (loss == Loss::kSquare) return 2.0;
  const double eps = FollowerPlanner::kSmoothingEps;
  const double s = std::sqrt(r * r + eps * eps);
  return eps * eps / (s * s * s);
}

}  // namespace

// Residual block r = J_u u + offset over the horizon, with the derivatives of
// r with respect to the leader's speeds kept for sensitivity analysis.
struct FollowerPlanner::Block {
  Loss loss;
  double weight;
  Eigen::MatrixXd J_u;
  Eigen::VectorXd offset;
  Eigen::MatrixXd J_prec;  // empty when independent
  Eigen::MatrixXd J_lead;  // empty when independent
};

FollowerPlanner::FollowerPlanner(HorizonModel horizon, DriverWeights weights,
                                 HumanConstraints constraints,
                                 double speed_limit, NewtonOptions options)
    : horizon_(std::move(horizon)),
      weights_(weights),
      constraints_(constraints),
      speed_limit_(speed_limit),
      options_(options) {
  weights_.Validate();
  constraints_.Validate();
  if (!std::isfinite(speed_limit_)) {
    throw InvalidParameter("speed limit must be finite");
  }
}

std::vector<FollowerPlanner::Block> FollowerPlanner::Blocks(
    const LongitudinalState& x0, const LeaderPrediction& leader) const {
  const HorizonModel& h = horizon_;
  const int n = h.steps;
  const Eigen::Vector3d x = x0.AsVector();
  const Eigen::VectorXd speed0 = h.speed_x * x;
  const Eigen::VectorXd gap0 = h.gap_x * x + h.gap_p * leader.prec_speed;
  const double tau = weights_.tau_h;

  std::vector<Block> blocks;
  blocks.reserve(4);
  blocks.push_back({Loss::kSquare, weights_.w[0], h.accel_u, h.accel_x * x,
                    {}, {}});
  blocks.push_back({Loss::kSquare, weights_.w[1], -h.speed_u,
                    Eigen::VectorXd::Constant(n, speed_limit_) - speed0, {},
                    {}});
  blocks.push_back({Loss::kSquare, weights_.w[2], -h.speed_u,
                    leader.lead_speed - speed0, {},
                    Eigen::MatrixXd::Identity(n, n)});
  blocks.push_back({Loss::kSmoothAbs, weights_.w[3],
                    tau * h.speed_u - h.gap_u,
                    tau * speed0 + Eigen::VectorXd::Constant(n, weights_.d_s) -
                        gap0,
                    -h.gap_p, {}});
  return blocks;
}

AffineInequalities FollowerPlanner::StateConstraints(
    const LongitudinalState& x0, const LeaderPrediction& leader,
    Eigen::MatrixXd* dprec) const {
  const HorizonModel& h = horizon_;
  const int n = h.steps;
  const Eigen::Vector3d x = x0.AsVector();
  const Eigen::VectorXd speed0 = h.speed_x * x;
  const Eigen::VectorXd gap0 = h.gap_x * x + h.gap_p * leader.prec_speed;

  AffineInequalities c;
  c.G.resize(3 * n, n);
  c.h.resize(3 * n);
  c.G.topRows(n) = -h.gap_u;
  c.h.head(n) = Eigen::VectorXd::Constant(n, constraints_.d_min) - gap0;
  c.G.middleRows(n, n) = h.speed_u;
  c.h.segment(n, n) = speed0 - Eigen::VectorXd::Constant(n, constraints_.v_max);
  c.G.bottomRows(n) = -h.speed_u;
  c.h.tail(n) = Eigen::VectorXd::Constant(n, constraints_.v_min) - speed0;
  if (dprec) {
    *dprec = Eigen::MatrixXd::Zero(3 * n, n);
    dprec->topRows(n) = -h.gap_p;
  }
  return c;
}

BestResponse FollowerPlanner::Solve(const LongitudinalState& x0,
                                    const LeaderPrediction& leader,
                                    const Eigen::VectorXd* warm_start) const {
  const int n = horizon_.steps;
  if (leader.prec_speed.size() != n || leader.lead_speed.size() != n) {
    throw InvalidParameter("leader prediction length differs from horizon");
  }
  if (!x0.IsFinite() || !leader.prec_speed.allFinite() ||
      !leader.lead_speed.allFinite()) {
    throw InvalidParameter("best response: non-finite inputs");
  }
  const std::vector<Block> blocks = Blocks(x0, leader);
  const AffineInequalities cons = StateConstraints(x0, leader);

  NewtonObjective objective = [&blocks](const Eigen::VectorXd& u,
                                        Eigen::VectorXd* grad,
                                        Eigen::MatrixXd* hess) {
    if (grad) grad->setZero(u.size());
    if (hess) hess->setZero(u.size(), u.size());
    double value = 0.0;
    for (const Block& b : blocks) {
      if (b.weight == 0.0) continue;
      const Eigen::VectorXd r = b.J_u * u + b.offset;
      Eigen::VectorXd slope(r.size()), curv(r.size());
      for (int i = 0; i < r.size(); ++i) {
        value += b.weight * LossValue(b.loss, r[i]);
        slope[i] = b.weight * LossSlope(b.loss, r[i]);
        curv[i] = b.weight * LossCurvature(b.loss, r[i]);
      }
      if (grad) grad->noalias() += b.J_u.transpose() * slope;
      if (hess) {
        hess->noalias() += b.J_u.transpose() * curv.asDiagonal() * b.J_u;
      }
    }
    return value;
  };

  const Eigen::VectorXd lo = Eigen::VectorXd::Constant(n, constraints_.u_min);
  const Eigen::VectorXd hi = Eigen::VectorXd::Constant(n, constraints_.u_max);
  const Eigen::VectorXd u0 =
      (warm_start && warm_start->size() == n) ? *warm_start
                                              : Eigen::VectorXd::Zero(n);
  NewtonResult res = MinimizeBoxNewton(objective, lo, hi, cons, u0, options_);

  BestResponse out;
  out.controls = res.u;
  out.converged = res.converged;
  out.max_violation = res.max_violation;
  out.feasible = res.max_violation <= kFeasibilityTol;
  out.multipliers = res.multipliers;
  out.cost = Cost(x0, leader, res.u);

  const Eigen::Vector3d x = x0.AsVector();
  const Eigen::VectorXd gap = horizon_.gap_x * x + horizon_.gap_u * res.u +
                              horizon_.gap_p * leader.prec_speed;
  const Eigen::VectorXd speed = horizon_.speed_x * x + horizon_.speed_u * res.u;
  const Eigen::VectorXd accel = horizon_.accel_x * x + horizon_.accel_u * res.u;
  out.states.resize(n);
  for (int k = 0; k < n; ++k) out.states[k] = {gap[k], speed[k], accel[k]};
  return out;
}

FeatureVector FollowerPlanner::FeatureSums(
    const LongitudinalState& x0, const LeaderPrediction& leader,
    const Eigen::VectorXd& controls) const {
  const HorizonModel& h = horizon_;
  const Eigen::Vector3d x = x0.AsVector();
  const Eigen::VectorXd gap =
      h.gap_x * x + h.gap_u * controls + h.gap_p * leader.prec_speed;
  const Eigen::VectorXd speed = h.speed_x * x + h.speed_u * controls;
  const Eigen::VectorXd accel = h.accel_x * x + h.accel_u * controls;
  FeatureVector sum;
  for (int k = 0; k < h.steps; ++k) {
    sum += Features({gap[k], speed[k], accel[k]}, leader.lead_speed[k],
                    speed_limit_, weights_.tau_h, weights_.d_s);
  }
  return sum;
}

double FollowerPlanner::Cost(const LongitudinalState& x0,
                             const LeaderPrediction& leader,
                             const Eigen::VectorXd& controls) const {
  return HumanStageCost(FeatureSums(x0, leader, controls), weights_);
}

Eigen::MatrixXd FollowerPlanner::ResponseJacobian(
    const LongitudinalState& x0, const LeaderPrediction& leader,
    const BestResponse& response, const Eigen::MatrixXd& dprec_dz,
    const Eigen::MatrixXd& dlead_dz) const {
  const int n = horizon_.steps;
  const int m = static_cast<int>(dprec_dz.cols());
  const Eigen::VectorXd& u = response.controls;

  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(n, m);
  for (const Block& b : Blocks(x0, leader)) {
    if (b.weight == 0.0) continue;
    const Eigen::VectorXd r = b.J_u * u + b.offset;
    Eigen::VectorXd curv(r.size());
    for (int i = 0; i < r.size(); ++i) {
      curv[i] = b.weight * LossCurvature(b.loss, r[i]);
    }
    const Eigen::MatrixXd JtD = b.J_u.transpose() * curv.asDiagonal();
    H.noalias() += JtD * b.J_u;
    if (b.J_prec.size() > 0) cross.noalias() += JtD * (b.J_prec * dprec_dz);
    if (b.J_lead.size() > 0) cross.noalias() += JtD * (b.J_lead * dlead_dz);
  }

  Eigen::MatrixXd G_prec;
  const AffineInequalities cons = StateConstraints(x0, leader, &G_prec);
  Eigen::VectorXd lambda = response.multipliers;
  if (lambda.size() != cons.size()) lambda = Eigen::VectorXd::Zero(cons.size());
  const double mu = options_.penalty_weight;
  const Eigen::VectorXd active = ActivePenaltyMask(cons, lambda, mu, u);
  for (int i = 0; i < cons.size(); ++i) {
    if (active[i] == 0.0) continue;
    H.noalias() += 2.0 * mu * cons.G.row(i).transpose() * cons.G.row(i);
    cross.noalias() += 2.0 * mu * cons.G.row(i).transpose() *
                       (G_prec.row(i) * dprec_dz);
  }

  // Controls pinned at their box bounds do not move to first order.
  std::vector<int> free_idx;
  for (int i = 0; i < n; ++i) {
    const bool pinned = u[i] <= constraints_.u_min + 1e-10 ||
                        u[i] >= constraints_.u_max - 1e-10;
    if (!pinned) free_idx.push_back(i);
  }
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, m);
  const int nf = static_cast<int>(free_idx.size());
  if (nf == 0) return jac;
  Eigen::MatrixXd Hf(nf, nf), Cf(nf, m);
  for (int a = 0; a < nf; ++a) {
    Cf.row(a) = cross.row(free_idx[a]);
    for (int b = 0; b < nf; ++b) Hf(a, b) = H(free_idx[a], free_idx[b]);
  }
  Hf.diagonal().array() += 1e-12 * std::max(1.0, Hf.diagonal().maxCoeff());
  const Eigen::MatrixXd sol = Hf.ldlt().solve(-Cf);
  for (int a = 0; a < nf; ++a) jac.row(free_idx[a]) = sol.row(a);
  return jac;
}

BestResponse BestResponseTo(const FollowerPlanner& planner,
                            const JointState& x0,
                            const Eigen::VectorXd& av_controls,
                            const Eigen::VectorXd* warm_start) {
  if (av_controls.size() != planner.horizon().steps) {
    throw InvalidParameter("AV control sequence length differs from horizon");
  }
  const LeaderPrediction leader =
      LeaderPrediction::FromControls(planner.horizon(), x0.av, av_controls);
  return planner.Solve(x0.human, leader, warm_start);
}

}  // namespace svo
