#pragma once

#include <vector>

#include <Eigen/Core>

#include "svo/driver_model.h"
#include "svo/dynamics.h"

namespace svo {

struct DemoSample {
  LongitudinalState state;  // HV0 relative to its leader
  double leader_speed = 0.0;
  double control = 0.0;
};

// One demonstrated car-following trajectory sampled at a fixed dt.
struct Demonstration {
  double dt = 0.1;
  std::vector<DemoSample> samples;

  void Validate() const;
};

// Empirical feature sums of a demonstration over samples 1..T-1 (sample 0 is
// the shared initial condition).
FeatureVector DemoFeatureSums(const Demonstration& demo, double speed_limit,
                              double tau_h, double d_s);

// Closed-loop rollout of the follower planner from the demonstration's initial
// state against the demonstrated leader speeds: replans every step and applies
// the first control. Returns the visited samples (same length as the demo).
Demonstration ReplayWithPlanner(const Demonstration& demo,
                                const FollowerPlanner& planner);

// Synthesizes a demonstration by running the planner closed loop behind a
// leader speed trace.
Demonstration SynthesizeDemonstration(const LongitudinalState& x0,
                                      const std::vector<double>& leader_speed,
                                      const FollowerPlanner& planner);

// Minimum of gap / speed over samples with speed > 1 m/s.
double EstimateMinHeadway(const std::vector<Demonstration>& demos);

struct FitOptions {
  double learn_rate = 0.5;
  int max_iterations = 200;
  // Stop when every feature's relative mismatch is below this.
  double tolerance = 0.01;
  double weight_cap = 1e6;
  int horizon_steps = 30;
  double rho = 0.45;
  double speed_limit = 25.0;
  HumanConstraints constraints;
  NewtonOptions solver{.max_iterations = 100,
                       .gradient_tolerance = 1e-10,
                       .decrease_tolerance = 1e-16};
};

struct FitResult {
  DriverWeights weights;
  int iterations = 0;
  bool converged = false;
  Eigen::Vector4d demo_features = Eigen::Vector4d::Zero();
  Eigen::Vector4d model_features = Eigen::Vector4d::Zero();
  double max_relative_mismatch = 0.0;
};

// Maximum-entropy IRL by feature-expectation matching. Each iteration replays
// every demonstration with the current weights and moves the weights along
// the log-likelihood gradient (model minus demonstrated feature sums, each
// scaled by its demonstrated magnitude), projected onto w >= 0. tau_h and d_s
// are held at the values in `initial`. Throws FitDivergence when the weight
// norm exceeds the cap.
FitResult FitWeightsMaxEnt(const std::vector<Demonstration>& demos,
                           const DriverWeights& initial,
                           const FitOptions& options);

}  // namespace svo
