#pragma once

#include <functional>

#include <Eigen/Core>

namespace svo {

// Smooth objective with a (possibly approximate) PSD Hessian. `grad` and
// `hess` are null when only the value is needed (line search).
using NewtonObjective = std::function<double(
    const Eigen::VectorXd& u, Eigen::VectorXd* grad, Eigen::MatrixXd* hess)>;

// Affine inequalities G u + h <= 0.
struct AffineInequalities {
  Eigen::MatrixXd G;
  Eigen::VectorXd h;

  int size() const { return static_cast<int>(h.size()); }
};

struct NewtonOptions {
  int max_iterations = 100;
  // Stop when the inf-norm of the projected gradient drops below this.
  double gradient_tolerance = 1e-9;
  // Stop when the predicted decrease drops below this times (1 + |f|).
  double decrease_tolerance = 1e-15;
  // Quadratic penalty weight for the inequalities; multipliers are updated
  // augmented-Lagrangian style until the worst violation is below
  // `feasibility_tolerance` or `max_penalty_rounds` is exhausted.
  double penalty_weight = 1e4;
  double feasibility_tolerance = 1e-8;
  int max_penalty_rounds = 20;
  // Inf-norm cap on each step; <= 0 disables it.
  double max_step = 0.0;
};

struct NewtonResult {
  Eigen::VectorXd u;
  double value = 0.0;         // objective without penalty terms
  int iterations = 0;         // Newton iterations summed over penalty rounds
  bool converged = false;     // every round met a stopping test
  double max_violation = 0.0; // max(0, G u + h) at u
  Eigen::VectorXd multipliers;
};

// Projected Newton for box-constrained problems, with affine inequalities
// handled by an augmented quadratic penalty. `u0` is clamped into the box.
NewtonResult MinimizeBoxNewton(const NewtonObjective& objective,
                               const Eigen::VectorXd& lower,
                               const Eigen::VectorXd& upper,
                               const AffineInequalities& constraints,
                               const Eigen::VectorXd& u0,
                               const NewtonOptions& options = {});

// Value of the augmented penalty for a fixed multiplier vector. Its gradient
// and Hessian are added to `grad` and `hess`, which must already be sized.
// Exposed so callers can differentiate through a solution.
double AugmentedPenalty(const AffineInequalities& constraints,
                        const Eigen::VectorXd& multipliers, double weight,
                        const Eigen::VectorXd& u, Eigen::VectorXd* grad,
                        Eigen::MatrixXd* hess);

// Rows of the penalty that are active (curvature 2 * weight) at u.
Eigen::VectorXd ActivePenaltyMask(const AffineInequalities& constraints,
                                  const Eigen::VectorXd& multipliers,
                                  double weight, const Eigen::VectorXd& u);

}  // namespace svo
