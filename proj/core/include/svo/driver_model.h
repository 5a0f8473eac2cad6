#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "svo/box_newton.h"
#include "svo/dynamics.h"
#include "svo/horizon.h"

namespace svo {

// Car-following features of the human follower, evaluated at one predicted
// state. All components are non-negative.
struct FeatureVector {
  double accel = 0.0;              // a_H^2
  double desired_speed = 0.0;      // (v_L - v_H)^2
  double relative_speed = 0.0;     // (v_lead - v_H)^2
  double relative_distance = 0.0;  // |v_H tau_H + d_s - d_H|

  Eigen::Vector4d AsVector() const {
    return {accel, desired_speed, relative_speed, relative_distance};
  }
  FeatureVector& operator+=(const FeatureVector& o);
};

// Linear cost weights over FeatureVector plus the two headway parameters the
// relative-distance feature needs.
struct DriverWeights {
  Eigen::Vector4d w = Eigen::Vector4d::Zero();
  double tau_h = 1.5;  // s, observed minimum time headway
  double d_s = 5.0;    // m, minimum gap

  // Synthetic profile shipped as configuration; no reference weights exist.
  static DriverWeights Default();
  // Throws InvalidParameter on negative/non-finite weights or non-positive
  // tau_h, d_s.
  void Validate() const;
};

struct HumanConstraints {
  double v_min = 0.0;
  double v_max = 24.0;
  double d_min = 5.0;
  // Control box; keeps the planner well-posed when the comfort weight is 0.
  double u_min = -4.0;
  double u_max = 4.0;

  void Validate() const;
};

FeatureVector Features(const LongitudinalState& human, double lead_speed,
                       double speed_limit, double tau_h, double d_s);

double HumanStageCost(const FeatureVector& f, const DriverWeights& w);

// States of the AV (relative to the PV) and of HV0 (relative to the AV).
struct JointState {
  LongitudinalState av;
  LongitudinalState human;
};

// Speed of the vehicle ahead of the follower over the horizon.
struct LeaderPrediction {
  Eigen::VectorXd prec_speed;  // k = 0..N-1, held over each step
  Eigen::VectorXd lead_speed;  // k = 1..N, at the predicted follower states

  // Leader driven by `controls` through the lifted model from `leader_state`.
  static LeaderPrediction FromControls(const HorizonModel& horizon,
                                       const LongitudinalState& leader_state,
                                       const Eigen::VectorXd& controls);
  // Leader following a known speed trace; entries past the end hold the last
  // value.
  static LeaderPrediction FromSpeeds(std::span<const double> speeds, int steps);
};

struct BestResponse {
  Eigen::VectorXd controls;
  std::vector<LongitudinalState> states;  // k = 1..N
  double cost = 0.0;  // horizon cost with the exact |.| distance feature
  bool feasible = true;
  bool converged = true;
  double max_violation = 0.0;
  Eigen::VectorXd multipliers;  // penalty multipliers at the solution
};

// Best-response planner of the human follower: minimizes the summed weighted
// features over the horizon by single shooting, given a predicted leader
// speed. The relative-distance feature is smoothed as sqrt(r^2 + eps^2) inside
// the solver only.
class FollowerPlanner {
 public:
  static constexpr double kSmoothingEps = 1e-3;
  static constexpr double kFeasibilityTol = 1e-6;

  FollowerPlanner(HorizonModel horizon, DriverWeights weights,
                  HumanConstraints constraints, double speed_limit,
                  NewtonOptions options = {});

  BestResponse Solve(const LongitudinalState& x0,
                     const LeaderPrediction& leader,
                     const Eigen::VectorXd* warm_start = nullptr) const;

  // Exact horizon cost (|.| distance feature) of an arbitrary control
  // sequence. Constraints are not included.
  double Cost(const LongitudinalState& x0, const LeaderPrediction& leader,
              const Eigen::VectorXd& controls) const;

  // Summed features along the predicted states of `controls`.
  FeatureVector FeatureSums(const LongitudinalState& x0,
                            const LeaderPrediction& leader,
                            const Eigen::VectorXd& controls) const;

  // Jacobian of the response controls with respect to leader parameters z,
  // given d(prec_speed)/dz and d(lead_speed)/dz, by implicit differentiation
  // of the stationarity condition at `response`.
  Eigen::MatrixXd ResponseJacobian(const LongitudinalState& x0,
                                   const LeaderPrediction& leader,
                                   const BestResponse& response,
                                   const Eigen::MatrixXd& dprec_dz,
                                   const Eigen::MatrixXd& dlead_dz) const;

  const HorizonModel& horizon() const { return horizon_; }
  const DriverWeights& weights() const { return weights_; }
  const HumanConstraints& constraints() const { return constraints_; }
  double speed_limit() const { return speed_limit_; }

 private:
  struct Block;
  std::vector<Block> Blocks(const LongitudinalState& x0,
                            const LeaderPrediction& leader) const;
  AffineInequalities StateConstraints(const LongitudinalState& x0,
                                      const LeaderPrediction& leader,
                                      Eigen::MatrixXd* dprec = nullptr) const;

  HorizonModel horizon_;
  DriverWeights weights_;
  HumanConstraints constraints_;
  double speed_limit_;
  NewtonOptions options_;
};

// Best response of HV0 to an AV control sequence. The AV trajectory is rolled
// out from `x0.av`; only its speed enters the human problem.
BestResponse BestResponseTo(const FollowerPlanner& planner,
                            const JointState& x0,
                            const Eigen::VectorXd& av_controls,
                            const Eigen::VectorXd* warm_start = nullptr);

}  // namespace svo
