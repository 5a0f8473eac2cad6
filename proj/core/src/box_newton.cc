#include "svo/box_newton.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Cholesky>

namespace svo {
namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxBacktracks = 40;

Eigen::VectorXd Clamp(const Eigen::VectorXd& u, const Eigen::VectorXd& lo,
                      const Eigen::VectorXd& hi) {
  return u.cwiseMax(lo).cwiseMin(hi);
}

// Solves (H + delta I) d = -g, raising delta until the factorization is
// positive definite.
Eigen::VectorXd DampedNewtonStep(const Eigen::MatrixXd& H,
                                 const Eigen::VectorXd& g) {
  const int n = static_cast<int>(g.size());
  const double scale = std::max(1.0, H.diagonal().cwiseAbs().maxCoeff());
  double delta = 0.0;
  for (int attempt = 0; attempt < 30; ++attempt) {
    Eigen::MatrixXd M = H;
    M.diagonal().array() += delta;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() &&
        ldlt.vectorD().minCoeff() > 1e-13 * scale) {
      Eigen::VectorXd d = ldlt.solve(-g);
      if (d.allFinite()) return d;
    }
    delta = (delta == 0.0) ? 1e-10 * scale : 10.0 * delta;
  }
  // Fall back to steepest descent.
  return -g / scale * (n > 0 ? 1.0 : 0.0);
}

struct RoundOutcome {
  Eigen::VectorXd u;
  int iterations = 0;
  bool converged = false;
  bool stalled = false;  // line search found no decrease
};

RoundOutcome NewtonRound(const NewtonObjective& penalized,
                         const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                         Eigen::VectorXd u, const NewtonOptions& opt) {
  const int n = static_cast<int>(u.size());
  RoundOutcome out;
  Eigen::VectorXd g(n);
  Eigen::MatrixXd H(n, n);
  for (int it = 0; it < opt.max_iterations; ++it) {
    const double f = penalized(u, &g, &H);
    const Eigen::VectorXd projected = u - Clamp(u - g, lo, hi);
    const double pg = n > 0 ? projected.cwiseAbs().maxCoeff() : 0.0;
    if (pg <= opt.gradient_tolerance) {
      out.converged = true;
      break;
    }

    // Bertsekas-style active set: variables at a bound whose gradient pushes
    // further outward are held fixed. Variables sitting on a bound whose
    // Newton step would leave the box are added and the step recomputed.
    const double eps = std::min(1e-6, pg);
    std::vector<char> active(n, 0);
    for (int i = 0; i < n; ++i) {
      const bool at_lo = u[i] <= lo[i] + eps && g[i] > 0.0;
      const bool at_hi = u[i] >= hi[i] - eps && g[i] < 0.0;
      active[i] = at_lo || at_hi;
    }
    Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
    for (int pass = 0; pass <= n; ++pass) {
      std::vector<int> free_idx;
      for (int i = 0; i < n; ++i) {
        if (!active[i]) free_idx.push_back(i);
      }
      d.setZero();
      const int nf = static_cast<int>(free_idx.size());
      if (nf > 0) {
        Eigen::MatrixXd Hf(nf, nf);
        Eigen::VectorXd gf(nf);
        for (int a = 0; a < nf; ++a) {
          gf[a] = g[free_idx[a]];
          for (int b = 0; b < nf; ++b) Hf(a, b) = H(free_idx[a], free_idx[b]);
        }
        const Eigen::VectorXd df = DampedNewtonStep(Hf, gf);
        for (int a = 0; a < nf; ++a) d[free_idx[a]] = df[a];
      }
      bool grew = false;
      for (int i : free_idx) {
        if ((u[i] <= lo[i] && d[i] < 0.0) || (u[i] >= hi[i] && d[i] > 0.0)) {
          active[i] = 1;
          grew = true;
        }
      }
      if (!grew) break;
    }
    if (opt.max_step > 0.0 && n > 0) {
      const double big = d.cwiseAbs().maxCoeff();
      if (big > opt.max_step) d *= opt.max_step / big;
    }

    const double predicted = -g.dot(d);
    if (predicted <= opt.decrease_tolerance * (1.0 + std::abs(f))) {
      out.converged = true;
      break;
    }

    // Longest step keeping every free variable inside the box; the variable
    // that limits it is snapped onto its bound.
    double alpha_max = 1.0;
    int blocking = -1;
    for (int i = 0; i < n; ++i) {
      if (d[i] > 0.0 && u[i] + d[i] > hi[i]) {
        const double a = std::max(0.0, (hi[i] - u[i]) / d[i]);
        if (a < alpha_max) alpha_max = a, blocking = i;
      } else if (d[i] < 0.0 && u[i] + d[i] < lo[i]) {
        const double a = std::max(0.0, (lo[i] - u[i]) / d[i]);
        if (a < alpha_max) alpha_max = a, blocking = i;
      }
    }

    double alpha = alpha_max;
    bool accepted = false;
    for (int bt = 0; bt < kMaxBacktracks; ++bt) {
      Eigen::VectorXd trial = Clamp(u + alpha * d, lo, hi);
      if (bt == 0 && blocking >= 0) {
        trial[blocking] = d[blocking] > 0.0 ? hi[blocking] : lo[blocking];
      }
      const double ft = penalized(trial, nullptr, nullptr);
      if (std::isfinite(ft) && ft <= f + kArmijo * g.dot(trial - u)) {
        u = trial;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    out.iterations = it + 1;
    if (!accepted) {
      // No representable decrease left along the Newton direction.
      out.converged = predicted <= 1e-10 * (1.0 + std::abs(f));
      out.stalled = true;
      break;
    }
  }
  out.u = std::move(u);
  return out;
}

}  // namespace

double AugmentedPenalty(const AffineInequalities& c,
                        const Eigen::VectorXd& multipliers, double weight,
                        const Eigen::VectorXd& u, Eigen::VectorXd* grad,
                        Eigen::MatrixXd* hess) {
  if (c.size() == 0) return 0.0;
  const Eigen::VectorXd g = c.G * u + c.h;
  double value = 0.0;
  for (int i = 0; i < c.size(); ++i) {
    const double shifted = g[i] + multipliers[i] / (2.0 * weight);
    value -= multipliers[i] * multipliers[i] / (4.0 * weight);
    if (shifted <= 0.0) continue;
    value += weight * shifted * shifted;
    if (grad) *grad += 2.0 * weight * shifted * c.G.row(i).transpose();
    if (hess) {
      hess->noalias() += 2.0 * weight * c.G.row(i).transpose() * c.G.row(i);
    }
  }
  return value;
}

Eigen::VectorXd ActivePenaltyMask(const AffineInequalities& c,
                                  const Eigen::VectorXd& multipliers,
                                  double weight, const Eigen::VectorXd& u) {
  Eigen::VectorXd mask = Eigen::VectorXd::Zero(c.size());
  if (c.size() == 0) return mask;
  const Eigen::VectorXd g = c.G * u + c.h;
  for (int i = 0; i < c.size(); ++i) {
    if (g[i] + multipliers[i] / (2.0 * weight) > 0.0) mask[i] = 1.0;
  }
  return mask;
}

NewtonResult MinimizeBoxNewton(const NewtonObjective& objective,
                               const Eigen::VectorXd& lower,
                               const Eigen::VectorXd& upper,
                               const AffineInequalities& constraints,
                               const Eigen::VectorXd& u0,
                               const NewtonOptions& options) {
  NewtonResult result;
  result.multipliers = Eigen::VectorXd::Zero(constraints.size());
  Eigen::VectorXd u = Clamp(u0, lower, upper);
  const double mu = options.penalty_weight;

  bool all_converged = true;
  const int rounds = constraints.size() > 0 ? options.max_penalty_rounds : 1;
  for (int round = 0; round < rounds; ++round) {
    const Eigen::VectorXd lambda = result.multipliers;
    NewtonObjective penalized = [&](const Eigen::VectorXd& x,
                                    Eigen::VectorXd* grad,
                                    Eigen::MatrixXd* hess) {
      double v = objective(x, grad, hess);
      v += AugmentedPenalty(constraints, lambda, mu, x, grad, hess);
      return v;
    };
    RoundOutcome r = NewtonRound(penalized, lower, upper, u, options);
    u = std::move(r.u);
    result.iterations += r.iterations;
    if (constraints.size() == 0) {
      all_converged = r.converged;
      break;
    }
    const Eigen::VectorXd g = constraints.G * u + constraints.h;
    result.max_violation = std::max(0.0, g.maxCoeff());
    all_converged = r.converged;
    if (result.max_violation <= options.feasibility_tolerance) break;
    // Multiplier updates cannot help once the line search has stalled.
    if (r.stalled && !r.converged) break;
    if (round + 1 == rounds) break;
    result.multipliers =
        (result.multipliers + 2.0 * mu * g).cwiseMax(0.0);
  }

  result.u = u;
  result.value = objective(u, nullptr, nullptr);
  result.converged = all_converged;
  return result;
}

}  // namespace svo
