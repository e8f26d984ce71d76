#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <stdexcept>

#include "lowexp/rng.hpp"

namespace lowexp {

// Requested estimator not supported by the problem (no score sampler, or no
// inverse-CDF sampler for common-random-numbers coupling).
struct UnsupportedEstimator : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A simulation-only expectation functional M(theta) = E[g_theta(Y)] with
// Y ~ P_theta. The required surface is a single objective draw; problems may
// additionally expose an unbiased score-function gradient sample, inverse-CDF
// sampling from caller-supplied uniforms (the hook for common random
// numbers), and a closed-form value oracle.
class ExpectationProblem {
 public:
  virtual ~ExpectationProblem() = default;

  virtual int dimension() const = 0;

  // One draw of g_theta(Y).
  virtual double sample_objective(const Eigen::VectorXd& theta, Rng& rng) const = 0;

  // Raw simulation draws behind a single objective sample: 1 for scalar
  // problems, the dataset size n for dataset-valued ones. Budget accounting
  // scales objective draws by this factor.
  virtual std::uint64_t draws_per_objective() const { return 1; }

  virtual bool has_inverse_cdf() const { return false; }
  virtual int uniforms_per_draw() const { return 0; }
  // g_theta applied to P_theta^{-1}(u) for the supplied uniforms; the same
  // uniforms fed at two nearby theta give coupled draws.
  virtual double sample_objective_inverse(const Eigen::VectorXd& /*theta*/,
                                          std::span<const double> /*uniforms*/) const {
    throw UnsupportedEstimator("problem has no inverse-CDF sampler");
  }

  virtual bool has_score_sampler() const { return false; }
  // One unbiased gradient sample h_theta(Y) with E[h_theta(Y)] = dM/dtheta.
  virtual Eigen::VectorXd sample_score_gradient(const Eigen::VectorXd& /*theta*/,
                                                Rng& /*rng*/) const {
    throw UnsupportedEstimator("problem has no score-function gradient sampler");
  }

  virtual bool has_value_oracle() const { return false; }
  virtual double oracle_value(const Eigen::VectorXd& /*theta*/) const {
    throw UnsupportedEstimator("problem has no closed-form value oracle");
  }
};

// View of another problem with the objective (and gradient) negated, so that
// minimizing the view maximizes the wrapped functional.
class NegatedObjective final : public ExpectationProblem {
 public:
  explicit NegatedObjective(const ExpectationProblem& base) : base_(&base) {}

  int dimension() const override { return base_->dimension(); }

  double sample_objective(const Eigen::VectorXd& theta, Rng& rng) const override {
    return -base_->sample_objective(theta, rng);
  }

  std::uint64_t draws_per_objective() const override { return base_->draws_per_objective(); }

  bool has_inverse_cdf() const override { return base_->has_inverse_cdf(); }
  int uniforms_per_draw() const override { return base_->uniforms_per_draw(); }
  double sample_objective_inverse(const Eigen::VectorXd& theta,
                                  std::span<const double> uniforms) const override {
    return -base_->sample_objective_inverse(theta, uniforms);
  }

  bool has_score_sampler() const override { return base_->has_score_sampler(); }
  Eigen::VectorXd sample_score_gradient(const Eigen::VectorXd& theta, Rng& rng) const override {
    return -base_->sample_score_gradient(theta, rng);
  }

  bool has_value_oracle() const override { return base_->has_value_oracle(); }
  double oracle_value(const Eigen::VectorXd& theta) const override {
    return -base_->oracle_value(theta);
  }

  const ExpectationProblem& base() const { return *base_; }

 private:
  const ExpectationProblem* base_;
};

}  // namespace lowexp
