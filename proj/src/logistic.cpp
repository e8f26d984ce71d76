#include "lowexp/problems/logistic.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace lowexp {

namespace {

constexpr double kGradTol = 1e-8;
constexpr int kMaxIter = 100;
constexpr double kThetaCap = 1e3;

double sigmoid(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

// log(1 + exp(eta)) without overflow.
double log1pexp(double eta) {
  return std::max(eta, 0.0) + std::log1p(std::exp(-std::abs(eta)));
}

void check_response(const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
  if (y.size() != design.rows())
    throw std::invalid_argument("logistic: response length does not match design rows");
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] != 0.0 && y[i] != 1.0)
      throw std::invalid_argument("logistic: response entries must be 0 or 1");
  }
}

}  // namespace

Eigen::MatrixXd full_factorial_design(const std::vector<double>& levels, int factors) {
  if (levels.empty()) throw std::invalid_argument("full_factorial_design: no levels given");
  if (factors < 1) throw std::invalid_argument("full_factorial_design: factors must be >= 1");
  const auto L = static_cast<Eigen::Index>(levels.size());
  Eigen::Index rows = 1;
  for (int f = 0; f < factors; ++f) rows *= L;
  Eigen::MatrixXd design(rows, factors);
  for (Eigen::Index r = 0; r < rows; ++r) {
    Eigen::Index rem = r;
    for (int f = factors - 1; f >= 0; --f) {
      design(r, f) = levels[static_cast<std::size_t>(rem % L)];
      rem /= L;
    }
  }
  return design;
}

Eigen::VectorXd simulate_response(const Eigen::MatrixXd& design, const Eigen::VectorXd& theta,
                                  Rng& rng) {
  if (theta.size() != design.cols())
    throw std::invalid_argument("simulate_response: theta dimension mismatch");
  Eigen::VectorXd y(design.rows());
  for (Eigen::Index i = 0; i < design.rows(); ++i)
    y[i] = rng.bernoulli(sigmoid(design.row(i).dot(theta))) ? 1.0 : 0.0;
  return y;
}

Eigen::VectorXd simulate_response_inverse(const Eigen::MatrixXd& design,
                                          const Eigen::VectorXd& theta,
                                          std::span<const double> uniforms) {
  if (theta.size() != design.cols())
    throw std::invalid_argument("simulate_response_inverse: theta dimension mismatch");
  if (std::cmp_not_equal(uniforms.size(), design.rows()))
    throw std::invalid_argument("simulate_response_inverse: need one uniform per row");
  Eigen::VectorXd y(design.rows());
  for (Eigen::Index i = 0; i < design.rows(); ++i)
    y[i] = uniforms[static_cast<std::size_t>(i)] < sigmoid(design.row(i).dot(theta)) ? 1.0 : 0.0;
  return y;
}

double log_likelihood(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& theta) {
  check_response(design, y);
  if (theta.size() != design.cols())
    throw std::invalid_argument("log_likelihood: theta dimension mismatch");
  double ll = 0.0;
  for (Eigen::Index i = 0; i < design.rows(); ++i) {
    const double eta = design.row(i).dot(theta);
    ll += y[i] * eta - log1pexp(eta);
  }
  return ll;
}

MleResult logistic_mle(const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
  check_response(design, y);
  const Eigen::Index n = design.rows();
  const Eigen::Index q = design.cols();
  const double ysum = y.sum();
  const bool degenerate = ysum == 0.0 || ysum == static_cast<double>(n);

  MleResult res;
  res.theta_hat = Eigen::VectorXd::Zero(q);
  res.loglik = log_likelihood(design, y, res.theta_hat);

  bool gradient_converged = false;
  for (int iter = 0; iter < kMaxIter; ++iter) {
    const Eigen::VectorXd p =
        (design * res.theta_hat).unaryExpr([](double eta) { return sigmoid(eta); });
    const Eigen::VectorXd grad = design.transpose() * (y - p);
    if (grad.lpNorm<Eigen::Infinity>() < kGradTol) {
      gradient_converged = true;
      break;
    }
    const Eigen::VectorXd w = p.array() * (1.0 - p.array());
    const Eigen::MatrixXd hess = design.transpose() * w.asDiagonal() * design;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    if (ldlt.info() != Eigen::Success ||
        (ldlt.vectorD().array().abs() < 1e-12).any())
      break;  // (near-)singular information matrix
    const Eigen::VectorXd direction = ldlt.solve(grad);
    if (!direction.allFinite()) break;

    // Step halving: back off until the likelihood stops decreasing.
    double scale = 1.0;
    bool accepted = false;
    for (int h = 0; h < 40; ++h) {
      const Eigen::VectorXd cand = res.theta_hat + scale * direction;
      const double cand_ll = log_likelihood(design, y, cand);
      if (cand_ll >= res.loglik - 1e-12) {
        res.theta_hat = cand;
        res.loglik = cand_ll;
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    res.iterations = iter + 1;
    if (!accepted) break;
    if (res.theta_hat.norm() > kThetaCap) break;  // diverging fit (no finite MLE)
  }
  res.converged = gradient_converged && !degenerate && res.theta_hat.norm() <= kThetaCap;
  return res;
}

MleResult constrained_mle(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, int coord) {
  if (coord < 0 || coord >= design.cols())
    throw std::invalid_argument("constrained_mle: coord out of range");
  MleResult full = logistic_mle(design, y);
  if (full.theta_hat[coord] >= 0.0) return full;

  // Constrained optimum sits on the boundary theta[coord] = 0, i.e. a fit
  // with that column removed.
  const Eigen::Index q = design.cols();
  Eigen::MatrixXd reduced(design.rows(), q - 1);
  Eigen::Index c = 0;
  for (Eigen::Index j = 0; j < q; ++j) {
    if (j == coord) continue;
    reduced.col(c++) = design.col(j);
  }
  MleResult sub = logistic_mle(reduced, y);

  MleResult res;
  res.theta_hat = Eigen::VectorXd::Zero(q);
  c = 0;
  for (Eigen::Index j = 0; j < q; ++j) {
    if (j == coord) continue;
    res.theta_hat[j] = sub.theta_hat[c++];
  }
  res.loglik = sub.loglik;
  res.converged = sub.converged;
  res.iterations = full.iterations + sub.iterations;
  return res;
}

double likelihood_ratio_stat(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& theta) {
  const MleResult fit = logistic_mle(design, y);
  return fit.loglik - log_likelihood(design, y, theta);
}

LogisticContourProblem::LogisticContourProblem(Eigen::MatrixXd design, Eigen::VectorXd y_obs)
    : design_(std::move(design)), y_obs_(std::move(y_obs)) {
  if (design_.rows() < 1 || design_.cols() < 1)
    throw std::invalid_argument("LogisticContourProblem: empty design");
  check_response(design_, y_obs_);
  observed_mle_ = logistic_mle(design_, y_obs_);
}

double LogisticContourProblem::indicator_from_response(const Eigen::VectorXd& theta,
                                                       const Eigen::VectorXd& y_sim) const {
  ++mle_attempts_;
  const MleResult fit = logistic_mle(design_, y_sim);
  if (!fit.converged) ++mle_failures_;
  const double t_sim = fit.loglik - log_likelihood(design_, y_sim, theta);
  const double t_obs = observed_mle_.loglik - log_likelihood(design_, y_obs_, theta);
  return t_sim > t_obs ? 1.0 : 0.0;
}

double LogisticContourProblem::sample_objective(const Eigen::VectorXd& theta, Rng& rng) const {
  if (theta.size() != design_.cols())
    throw std::invalid_argument("LogisticContourProblem: theta dimension mismatch");
  return indicator_from_response(theta, simulate_response(design_, theta, rng));
}

double LogisticContourProblem::sample_objective_inverse(const Eigen::VectorXd& theta,
                                                        std::span<const double> uniforms) const {
  if (theta.size() != design_.cols())
    throw std::invalid_argument("LogisticContourProblem: theta dimension mismatch");
  return indicator_from_response(theta, simulate_response_inverse(design_, theta, uniforms));
}

double LogisticContourProblem::contour(const Eigen::VectorXd& theta, std::uint64_t draws,
                                       Rng& rng) const {
  if (draws < 1) throw std::invalid_argument("LogisticContourProblem::contour: draws must be >= 1");
  double sum = 0.0;
  for (std::uint64_t i = 0; i < draws; ++i) sum += sample_objective(theta, rng);
  return sum / static_cast<double>(draws);
}

UpperProbabilityObjective upper_probability_objective(const LogisticContourProblem& problem,
                                                      int coord) {
  const int q = problem.dimension();
  if (coord < 0 || coord >= q)
    throw std::invalid_argument("upper_probability_objective: coord out of range");
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::VectorXd lower = Eigen::VectorXd::Constant(q, -inf);
  lower[coord] = 0.0;
  return {NegatedObjective(problem), BoxConstraint(lower, Eigen::VectorXd::Constant(q, inf))};
}

}  // namespace lowexp
