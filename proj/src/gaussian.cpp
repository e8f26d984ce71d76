#include "lowexp/problems/gaussian.hpp"

#include <cmath>
#include <stdexcept>

#include "lowexp/rng.hpp"

namespace lowexp {

GaussianTailProblem::GaussianTailProblem(double threshold, double sigma)
    : threshold_(threshold), sigma_(sigma) {
  if (!(threshold > 0.0)) throw std::invalid_argument("GaussianTailProblem: threshold must be positive");
  if (!(sigma > 0.0)) throw std::invalid_argument("GaussianTailProblem: sigma must be positive");
}

double GaussianTailProblem::sample_objective(const Eigen::VectorXd& theta, Rng& rng) const {
  if (theta.size() != 1) throw std::invalid_argument("GaussianTailProblem: theta must be scalar");
  const double x = theta[0] + sigma_ * rng.normal();
  return indicator(x);
}

double GaussianTailProblem::sample_objective_inverse(const Eigen::VectorXd& theta,
                                                     std::span<const double> uniforms) const {
  if (theta.size() != 1) throw std::invalid_argument("GaussianTailProblem: theta must be scalar");
  if (uniforms.size() != 1)
    throw std::invalid_argument("GaussianTailProblem: expected exactly one uniform");
  const double x = theta[0] + sigma_ * normal_quantile(uniforms[0]);
  return indicator(x);
}

Eigen::VectorXd GaussianTailProblem::sample_score_gradient(const Eigen::VectorXd& theta,
                                                           Rng& rng) const {
  if (theta.size() != 1) throw std::invalid_argument("GaussianTailProblem: theta must be scalar");
  const double x = theta[0] + sigma_ * rng.normal();
  Eigen::VectorXd h(1);
  // g is theta-free, so the gradient sample reduces to g(x) * d/dtheta log p_theta(x).
  h[0] = indicator(x) * (x - theta[0]) / (sigma_ * sigma_);
  return h;
}

double GaussianTailProblem::oracle_value(const Eigen::VectorXd& theta) const {
  if (theta.size() != 1) throw std::invalid_argument("GaussianTailProblem: theta must be scalar");
  const double t = theta[0];
  return normal_cdf((-threshold_ - t) / sigma_) + 1.0 - normal_cdf((threshold_ - t) / sigma_);
}

}  // namespace lowexp
