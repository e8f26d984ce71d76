#include "lowexp/estimators.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace lowexp {

double FdConfig::radius_at(int t) const {
  if (t < 1) throw std::invalid_argument("FdConfig::radius_at: t must be >= 1");
  if (!(c0 > 0.0)) throw std::invalid_argument("FdConfig: c0 must be positive");
  if (gamma < 0.0) throw std::invalid_argument("FdConfig: gamma must be >= 0");
  return gamma == 0.0 ? c0 : c0 * std::pow(static_cast<double>(t), -gamma);
}

GradientEstimate score_gradient(const ExpectationProblem& problem,
                                const Eigen::VectorXd& theta, Rng& rng) {
  if (!problem.has_score_sampler())
    throw UnsupportedEstimator("score_gradient: problem has no score-function sampler");
  return {problem.sample_score_gradient(theta, rng), 1, EstimatorKind::Score};
}

GradientEstimate batched_score_gradient(const ExpectationProblem& problem,
                                        const Eigen::VectorXd& theta, int batch, Rng& rng) {
  if (batch < 1) throw std::invalid_argument("batched_score_gradient: batch must be >= 1");
  if (!problem.has_score_sampler())
    throw UnsupportedEstimator("batched_score_gradient: problem has no score-function sampler");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(theta.size());
  for (int j = 0; j < batch; ++j) sum += problem.sample_score_gradient(theta, rng);
  return {sum / batch, static_cast<std::uint64_t>(batch),
          batch > 1 ? EstimatorKind::Batched : EstimatorKind::Score};
}

GradientEstimate fd_gradient(const ExpectationProblem& problem, const Eigen::VectorXd& theta,
                             int t, const FdConfig& cfg, Rng& rng) {
  const auto q = theta.size();
  if (q < 1) throw std::invalid_argument("fd_gradient: dimension must be >= 1");
  if (cfg.batch_M < 1) throw std::invalid_argument("fd_gradient: batch_M must be >= 1");
  const bool crn = cfg.coupling == Coupling::CommonRandomNumbers;
  if (crn && !problem.has_inverse_cdf())
    throw UnsupportedEstimator("fd_gradient: CommonRandomNumbers requires an inverse-CDF sampler");

  const double c = cfg.radius_at(t);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(q);
  std::vector<double> uniforms;
  if (crn) uniforms.resize(static_cast<std::size_t>(problem.uniforms_per_draw()));

  Eigen::VectorXd shifted = theta;
  for (Eigen::Index i = 0; i < q; ++i) {
    double acc = 0.0;
    for (int j = 0; j < cfg.batch_M; ++j) {
      double plus, minus;
      if (crn) {
        for (double& u : uniforms) u = rng.uniform();
        shifted[i] = theta[i] + c;
        plus = problem.sample_objective_inverse(shifted, uniforms);
        shifted[i] = theta[i] - c;
        minus = problem.sample_objective_inverse(shifted, uniforms);
      } else {
        shifted[i] = theta[i] + c;
        plus = problem.sample_objective(shifted, rng);
        shifted[i] = theta[i] - c;
        minus = problem.sample_objective(shifted, rng);
      }
      acc += (plus - minus) / (2.0 * c);
    }
    shifted[i] = theta[i];
    grad[i] = acc / cfg.batch_M;
  }
  const auto draws = static_cast<std::uint64_t>(2 * q) * static_cast<std::uint64_t>(cfg.batch_M);
  return {std::move(grad), draws, EstimatorKind::FiniteDifference};
}

GradientEstimate clip(GradientEstimate est, double bound) {
  if (!(bound > 0.0)) throw std::invalid_argument("clip: bound must be positive");
  est.value = est.value.cwiseMax(-bound).cwiseMin(bound);
  return est;
}

ValueEstimate monte_carlo_value(const ExpectationProblem& problem, const Eigen::VectorXd& theta,
                                std::uint64_t draws, Rng& rng) {
  if (draws < 1) throw std::invalid_argument("monte_carlo_value: draws must be >= 1");
  double sum = 0.0;
  for (std::uint64_t i = 0; i < draws; ++i) sum += problem.sample_objective(theta, rng);
  return {sum / static_cast<double>(draws), draws};
}

}  // namespace lowexp
