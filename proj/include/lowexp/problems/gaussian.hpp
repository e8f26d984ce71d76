#pragma once

#include "lowexp/problem.hpp"

namespace lowexp {

// M(theta) = P(|X| > threshold) for X ~ N(theta, sigma^2).
// Objective draws are indicator samples; the score-function gradient sampler
// and an exact value oracle are both available.
class GaussianTailProblem final : public ExpectationProblem {
 public:
  explicit GaussianTailProblem(double threshold = 2.0, double sigma = 2.0);

  int dimension() const override { return 1; }
  double sample_objective(const Eigen::VectorXd& theta, Rng& rng) const override;

  bool has_inverse_cdf() const override { return true; }
  int uniforms_per_draw() const override { return 1; }
  double sample_objective_inverse(const Eigen::VectorXd& theta,
                                  std::span<const double> uniforms) const override;

  bool has_score_sampler() const override { return true; }
  Eigen::VectorXd sample_score_gradient(const Eigen::VectorXd& theta, Rng& rng) const override;

  bool has_value_oracle() const override { return true; }
  double oracle_value(const Eigen::VectorXd& theta) const override;

  double threshold() const { return threshold_; }
  double sigma() const { return sigma_; }

 private:
  double indicator(double x) const { return std::abs(x) > threshold_ ? 1.0 : 0.0; }

  double threshold_;
  double sigma_;
};

}  // namespace lowexp
