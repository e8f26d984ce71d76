#pragma once

#include <stdexcept>

#include "lowexp/problem.hpp"

namespace lowexp {

// Deterministic sanity problem: M(theta) = ||theta||^2 with exact gradient
// 2*theta served through the score-sampler interface. Useful for checking the
// optimizers against a noise-free target with a known minimizer at the origin.
class DeterministicQuadraticProblem final : public ExpectationProblem {
 public:
  explicit DeterministicQuadraticProblem(int dim) : dim_(dim) {
    if (dim < 1) throw std::invalid_argument("DeterministicQuadraticProblem: dim must be >= 1");
  }

  int dimension() const override { return dim_; }

  double sample_objective(const Eigen::VectorXd& theta, Rng&) const override {
    check(theta);
    return theta.squaredNorm();
  }

  bool has_inverse_cdf() const override { return true; }
  int uniforms_per_draw() const override { return 0; }
  double sample_objective_inverse(const Eigen::VectorXd& theta,
                                  std::span<const double>) const override {
    check(theta);
    return theta.squaredNorm();
  }

  bool has_score_sampler() const override { return true; }
  Eigen::VectorXd sample_score_gradient(const Eigen::VectorXd& theta, Rng&) const override {
    check(theta);
    return 2.0 * theta;
  }

  bool has_value_oracle() const override { return true; }
  double oracle_value(const Eigen::VectorXd& theta) const override {
    check(theta);
    return theta.squaredNorm();
  }

 private:
  void check(const Eigen::VectorXd& theta) const {
    if (theta.size() != dim_)
      throw std::invalid_argument("DeterministicQuadraticProblem: theta dimension mismatch");
  }

  int dim_;
};

}  // namespace lowexp
