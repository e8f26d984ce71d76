#pragma once

#include <atomic>
#include <cstdint>
#include <span>
#include <vector>

#include "lowexp/problem.hpp"
#include "lowexp/sa.hpp"

namespace lowexp {

struct MleResult {
  Eigen::VectorXd theta_hat;
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Full factorial design: one row per combination of the given factor levels,
// `factors` columns, enumerated lexicographically with the last column
// cycling fastest.
Eigen::MatrixXd full_factorial_design(const std::vector<double>& levels, int factors);

Eigen::VectorXd simulate_response(const Eigen::MatrixXd& design, const Eigen::VectorXd& theta,
                                  Rng& rng);
Eigen::VectorXd simulate_response_inverse(const Eigen::MatrixXd& design,
                                          const Eigen::VectorXd& theta,
                                          std::span<const double> uniforms);

double log_likelihood(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& theta);

// Newton-Raphson fit with step halving. Degenerate responses (all zeros or
// all ones), iterate blow-up past ||theta|| = 1e3, and singular Hessians are
// reported via converged = false; theta_hat then holds the last iterate as a
// stand-in for the (possibly non-existent) maximizer.
MleResult logistic_mle(const Eigen::MatrixXd& design, const Eigen::VectorXd& y);

// MLE under the constraint theta[coord] >= 0: the unconstrained fit if it
// already satisfies the constraint, otherwise a refit with theta[coord]
// pinned to zero.
MleResult constrained_mle(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, int coord);

// Likelihood-ratio statistic T(y, theta) = l(theta_hat; y) - l(theta; y).
double likelihood_ratio_stat(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& theta);

// Plausibility contour pi(theta) = P_theta{ T(Y, theta) > T(y_obs, theta) }
// exposed as an expectation functional: each objective draw simulates a full
// response vector at theta, refits the model, and returns the indicator.
class LogisticContourProblem final : public ExpectationProblem {
 public:
  LogisticContourProblem(Eigen::MatrixXd design, Eigen::VectorXd y_obs);

  LogisticContourProblem(const LogisticContourProblem&) = delete;
  LogisticContourProblem& operator=(const LogisticContourProblem&) = delete;

  int dimension() const override { return static_cast<int>(design_.cols()); }
  double sample_objective(const Eigen::VectorXd& theta, Rng& rng) const override;
  std::uint64_t draws_per_objective() const override {
    return static_cast<std::uint64_t>(design_.rows());
  }

  bool has_inverse_cdf() const override { return true; }
  int uniforms_per_draw() const override { return static_cast<int>(design_.rows()); }
  double sample_objective_inverse(const Eigen::VectorXd& theta,
                                  std::span<const double> uniforms) const override;

  // Monte Carlo contour estimate from N objective draws.
  double contour(const Eigen::VectorXd& theta, std::uint64_t draws, Rng& rng) const;

  const Eigen::MatrixXd& design() const { return design_; }
  const Eigen::VectorXd& y_obs() const { return y_obs_; }
  const MleResult& observed_mle() const { return observed_mle_; }
  std::uint64_t mle_attempts() const { return mle_attempts_.load(); }
  std::uint64_t mle_failures() const { return mle_failures_.load(); }

 private:
  double indicator_from_response(const Eigen::VectorXd& theta, const Eigen::VectorXd& y_sim) const;

  Eigen::MatrixXd design_;
  Eigen::VectorXd y_obs_;
  MleResult observed_mle_;
  mutable std::atomic<std::uint64_t> mle_attempts_{0};
  mutable std::atomic<std::uint64_t> mle_failures_{0};
};

// Maximizing the contour over the assertion {theta[coord] >= 0} expressed as
// a minimization problem plus the matching box constraint.
struct UpperProbabilityObjective {
  NegatedObjective objective;
  BoxConstraint box;
};

UpperProbabilityObjective upper_probability_objective(const LogisticContourProblem& problem,
                                                      int coord);

}  // namespace lowexp
