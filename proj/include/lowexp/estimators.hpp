#pragma once

#include <Eigen/Core>

#include <cstdint>

#include "lowexp/problem.hpp"
#include "lowexp/rng.hpp"

namespace lowexp {

enum class EstimatorKind { Score, FiniteDifference, Batched };

// A stochastic gradient sample together with its Monte Carlo cost.
// mc_draws counts objective draws (whole datasets for dataset-valued
// problems); a central-difference estimate over q coordinates with batch M
// costs exactly 2*q*M objective draws.
struct GradientEstimate {
  Eigen::VectorXd value;
  std::uint64_t mc_draws = 0;
  EstimatorKind kind = EstimatorKind::Score;
};

enum class Coupling { Independent, CommonRandomNumbers };

// Central-difference settings: perturbation radius c_t = c0 * t^(-gamma) and
// batch_M averaged pairs per coordinate. CommonRandomNumbers feeds the same
// uniforms to the +/- perturbed samplers via the problem's inverse CDF.
struct FdConfig {
  double c0 = 1.0;
  double gamma = 0.0;
  int batch_M = 1;
  Coupling coupling = Coupling::Independent;

  double radius_at(int t) const;
};

// One unbiased score-function draw h_theta(Y).
GradientEstimate score_gradient(const ExpectationProblem& problem,
                                const Eigen::VectorXd& theta, Rng& rng);

// Mean of `batch` independent score draws. kind is Batched for batch > 1.
GradientEstimate batched_score_gradient(const ExpectationProblem& problem,
                                        const Eigen::VectorXd& theta, int batch, Rng& rng);

// Central-difference gradient estimate at iteration t (radius c_t).
GradientEstimate fd_gradient(const ExpectationProblem& problem, const Eigen::VectorXd& theta,
                             int t, const FdConfig& cfg, Rng& rng);

// Componentwise magnitude clamp: v -> sign(v) * min(|v|, bound).
GradientEstimate clip(GradientEstimate est, double bound);

// Plain Monte Carlo estimate of M(theta).
struct ValueEstimate {
  double value = 0.0;
  std::uint64_t mc_draws = 0;  // objective draws
};
ValueEstimate monte_carlo_value(const ExpectationProblem& problem, const Eigen::VectorXd& theta,
                                std::uint64_t draws, Rng& rng);

}  // namespace lowexp
