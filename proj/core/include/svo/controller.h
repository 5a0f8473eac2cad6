#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "svo/box_newton.h"
#include "svo/driver_model.h"
#include "svo/dynamics.h"
#include "svo/horizon.h"

namespace svo {

// Social value orientation angle; 0 is egoistic, pi/4 prosocial.
struct SvoConfig {
  double phi = 0.0;
};

struct EgoisticParams {
  double d_s = 5.0;    // m
  double tau_r = 1.2;  // s

  void Validate() const;
};

// Box constraints of the AV planner.
struct AvConstraints {
  double d_min = 5.0, d_max = 45.0;
  double v_min = 0.0, v_max = 24.0;
  double u_min = -4.0, u_max = 4.0;
  double a_min = -3.0, a_max = 3.0;

  void Validate() const;
};

// Returns (cos phi, sin phi). Throws InvalidParameter outside [0, pi/4].
std::pair<double, double> SvoWeights(double phi);

// Sum over the horizon of (d_s + v tau_r - d)^2.
double EgoisticCost(std::span<const LongitudinalState> av_traj,
                    const EgoisticParams& p);

// Sum over the horizon of (v_L - v_H)^2.
double CourtesyCost(std::span<const LongitudinalState> hv0_traj,
                    double speed_limit);

struct PlanResult {
  Eigen::VectorXd controls;                        // u_R, k = 0..N-1
  std::vector<LongitudinalState> predicted_av;     // k = 1..N
  std::vector<LongitudinalState> predicted_human;  // k = 1..N, best response
  Eigen::VectorXd human_controls;
  double cost_egoistic = 0.0;
  double cost_courtesy = 0.0;
  double cost_total = 0.0;  // cos(phi) egoistic + sin(phi) courtesy
  bool converged = false;
  bool inner_feasible = true;
  double max_violation = 0.0;  // worst AV state-constraint violation
  int iterations = 0;
};

struct PlannerOptions {
  NewtonOptions outer;
  // Skip the follower model entirely; only for the egoistic baseline.
  bool single_level = false;
};

// Bi-level Stackelberg NMPC of the AV. For each candidate u_R the follower's
// best response is re-solved and the courtesy cost is evaluated on it; the
// outer problem is solved by projected Gauss-Newton with the exact gradient
// obtained by implicit differentiation of the follower's optimality
// condition.
class SocialPlanner {
 public:
  SocialPlanner(HorizonModel horizon, SvoConfig svo, EgoisticParams ego,
                AvConstraints cons, FollowerPlanner follower,
                PlannerOptions options = {});

  // `pv_preview[k]` is the PV speed over step k; a short preview holds its
  // last value. `warm_start` is u_R (already shifted by the caller).
  PlanResult Plan(const JointState& x0, std::span<const double> pv_preview,
                  const Eigen::VectorXd* warm_start = nullptr,
                  const Eigen::VectorXd* human_warm_start = nullptr) const;

  // Composite cost C_R of an arbitrary control sequence, re-solving the
  // follower response (penalties excluded).
  double CompositeCost(const JointState& x0, std::span<const double> pv_preview,
                       const Eigen::VectorXd& controls) const;

  // Exact gradient of the composite cost plus penalty at fixed multipliers;
  // exposed for finite-difference checks.
  Eigen::VectorXd CompositeGradient(const JointState& x0,
                                    std::span<const double> pv_preview,
                                    const Eigen::VectorXd& controls) const;

  const HorizonModel& horizon() const { return horizon_; }
  const FollowerPlanner& follower() const { return follower_; }
  const AvConstraints& constraints() const { return cons_; }
  const SvoConfig& svo() const { return svo_; }

 private:
  struct Evaluation;
  Evaluation Evaluate(const LongitudinalState& av0,
                      const LongitudinalState& human0,
                      const Eigen::VectorXd& pv, const Eigen::VectorXd& u,
                      bool need_derivatives,
                      Eigen::VectorXd* human_warm) const;
  AffineInequalities StateConstraints(const LongitudinalState& av0,
                                      const Eigen::VectorXd& pv) const;

  HorizonModel horizon_;
  SvoConfig svo_;
  EgoisticParams ego_;
  AvConstraints cons_;
  FollowerPlanner follower_;
  PlannerOptions options_;
  double w_ego_;
  double w_courtesy_;
};

// Courtesy-free NMPC that never consults the follower model.
PlanResult PlanEgoistic(const HorizonModel& horizon, const EgoisticParams& ego,
                        const AvConstraints& cons, const LongitudinalState& av0,
                        std::span<const double> pv_preview,
                        const Eigen::VectorXd* warm_start = nullptr,
                        const NewtonOptions& options = {});

// Receding-horizon warm start: drop the first control, repeat the last.
Eigen::VectorXd ShiftWarmStart(const Eigen::VectorXd& previous);

}  // namespace svo
