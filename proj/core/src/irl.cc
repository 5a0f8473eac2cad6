#include "svo/irl.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>

#include "svo/errors.h"
#include "svo/horizon.h"

namespace svo {

void Demonstration::Validate() const {
  if (samples.empty()) throw InvalidParameter("demonstration is empty");
  if (!(dt > 0.0)) throw InvalidParameter("demonstration dt must be positive");
  for (const DemoSample& s : samples) {
    if (!s.state.IsFinite() || !std::isfinite(s.leader_speed) ||
        !std::isfinite(s.control)) {
      throw InvalidParameter("demonstration contains non-finite entries");
    }
  }
}

FeatureVector DemoFeatureSums(const Demonstration& demo, double speed_limit,
                              double tau_h, double d_s) {
  FeatureVector sum;
  for (std::size_t k = 1; k < demo.samples.size(); ++k) {
    const DemoSample& s = demo.samples[k];
    sum += Features(s.state, s.leader_speed, speed_limit, tau_h, d_s);
  }
  return sum;
}

namespace {

Demonstration ClosedLoop(const LongitudinalState& x0,
                         const std::vector<double>& leader, double dt,
                         const FollowerPlanner& planner) {
  const HorizonModel& h = planner.horizon();
  Demonstration out;
  out.dt = dt;
  out.samples.reserve(leader.size());
  LongitudinalState x = x0;
  Eigen::VectorXd warm = Eigen::VectorXd::Zero(h.steps);
  for (std::size_t k = 0; k < leader.size(); ++k) {
    const std::span<const double> preview(leader.data() + k, leader.size() - k);
    const BestResponse r =
        planner.Solve(x, LeaderPrediction::FromSpeeds(preview, h.steps), &warm);
    out.samples.push_back({x, leader[k], r.controls[0]});
    if (k + 1 < leader.size()) x = Step(h.disc, x, r.controls[0], leader[k]);
    warm.head(h.steps - 1) = r.controls.tail(h.steps - 1);
    warm[h.steps - 1] = r.controls[h.steps - 1];
  }
  return out;
}

std::vector<double> LeaderSpeeds(const Demonstration& demo) {
  std::vector<double> v;
  v.reserve(demo.samples.size());
  for (const DemoSample& s : demo.samples) v.push_back(s.leader_speed);
  return v;
}

}  // namespace

Demonstration ReplayWithPlanner(const Demonstration& demo,
                                const FollowerPlanner& planner) {
  demo.Validate();
  if (std::abs(demo.dt - planner.horizon().disc.dt) > 1e-9) {
    throw InvalidParameter("demonstration dt differs from planner dt");
  }
  return ClosedLoop(demo.samples.front().state, LeaderSpeeds(demo), demo.dt,
                    planner);
}

Demonstration SynthesizeDemonstration(const LongitudinalState& x0,
                                      const std::vector<double>& leader_speed,
                                      const FollowerPlanner& planner) {
  if (leader_speed.empty()) throw InvalidParameter("empty leader trace");
  return ClosedLoop(x0, leader_speed, planner.horizon().disc.dt, planner);
}

double EstimateMinHeadway(const std::vector<Demonstration>& demos) {
  double best = std::numeric_limits<double>::infinity();
  for (const Demonstration& d : demos) {
    for (const DemoSample& s : d.samples) {
      if (s.state.speed > 1.0) best = std::min(best, s.state.gap / s.state.speed);
    }
  }
  if (!std::isfinite(best) || !(best > 0.0)) {
    throw InvalidParameter(
        "cannot estimate time headway: no sample with speed > 1 m/s");
  }
  return best;
}

FitResult FitWeightsMaxEnt(const std::vector<Demonstration>& demos,
                           const DriverWeights& initial,
                           const FitOptions& options) {
  if (demos.empty()) throw InvalidParameter("no demonstrations to fit");
  initial.Validate();
  for (const Demonstration& d : demos) d.Validate();
  const double dt = demos.front().dt;
  for (const Demonstration& d : demos) {
    if (std::abs(d.dt - dt) > 1e-9) {
      throw InvalidParameter("demonstrations use different dt");
    }
  }

  const HorizonModel horizon = BuildHorizon(
      DiscretizeZoh(BuildContinuous(options.rho), dt), options.horizon_steps);

  FitResult result;
  result.weights = initial;
  for (const Demonstration& d : demos) {
    result.demo_features +=
        DemoFeatureSums(d, options.speed_limit, initial.tau_h, initial.d_s)
            .AsVector();
  }

  auto model_features = [&](const DriverWeights& w) {
    const FollowerPlanner planner(horizon, w, options.constraints,
                                  options.speed_limit, options.solver);
    Eigen::Vector4d sum = Eigen::Vector4d::Zero();
    for (const Demonstration& d : demos) {
      const Demonstration replay = ReplayWithPlanner(d, planner);
      sum += DemoFeatureSums(replay, options.speed_limit, w.tau_h, w.d_s)
                 .AsVector();
    }
    return sum;
  };
  auto relative = [&](const Eigen::Vector4d& model) {
    Eigen::Vector4d rel;
    for (int i = 0; i < 4; ++i) {
      const double scale = std::max(std::abs(result.demo_features[i]), 1e-9);
      const double diff = model[i] - result.demo_features[i];
      rel[i] = std::abs(diff) <= 1e-12 ? 0.0 : diff / scale;
    }
    return rel;
  };

  if (options.max_iterations <= 0) {
    result.converged = false;
    return result;
  }

  for (int it = 0; it < options.max_iterations; ++it) {
    result.model_features = model_features(result.weights);
    const Eigen::Vector4d rel = relative(result.model_features);
    result.max_relative_mismatch = rel.cwiseAbs().maxCoeff();
    result.iterations = it;
    if (result.max_relative_mismatch <= options.tolerance) {
      result.converged = true;
      return result;
    }
    // Ascent on log P(demos | w) = -w.F_demo - log Z; its gradient is
    // F_model - F_demo. Each component is normalized by the demonstrated
    // magnitude and scaled to the current weight level.
    const double level = std::max(result.weights.w.mean(), 1e-6);
    Eigen::Vector4d next = result.weights.w + options.learn_rate * level * rel;
    next = next.cwiseMax(0.0);
    const double norm = next.norm();
    if (!std::isfinite(norm) || norm > options.weight_cap) {
      throw FitDivergence("IRL weights diverged at iteration " +
                              std::to_string(it + 1) + " (norm " +
                              std::to_string(norm) + ")",
                          it + 1, norm);
    }
    result.weights.w = next;
  }
  result.model_features = model_features(result.weights);
  const Eigen::Vector4d rel = relative(result.model_features);
  result.max_relative_mismatch = rel.cwiseAbs().maxCoeff();
  result.iterations = options.max_iterations;
  result.converged = result.max_relative_mismatch <= options.tolerance;
  return result;
}

}  // namespace svo
