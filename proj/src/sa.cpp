#include "lowexp/sa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "lowexp/rng.hpp"

namespace lowexp {

BoxConstraint::BoxConstraint(Eigen::VectorXd lower, Eigen::VectorXd upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size())
    throw std::invalid_argument("BoxConstraint: bound dimensions differ");
  if (lower_.size() == 0) throw std::invalid_argument("BoxConstraint: empty bounds");
  for (Eigen::Index i = 0; i < lower_.size(); ++i) {
    if (std::isnan(lower_[i]) || std::isnan(upper_[i]))
      throw std::invalid_argument("BoxConstraint: NaN bound");
    if (!(lower_[i] < upper_[i]))
      throw std::invalid_argument("BoxConstraint: lower bound must be below upper bound");
  }
}

BoxConstraint BoxConstraint::unbounded(int dim) {
  const double inf = std::numeric_limits<double>::infinity();
  return BoxConstraint(Eigen::VectorXd::Constant(dim, -inf), Eigen::VectorXd::Constant(dim, inf));
}

Eigen::VectorXd BoxConstraint::project(const Eigen::VectorXd& theta) const {
  if (theta.size() != lower_.size())
    throw std::invalid_argument("BoxConstraint::project: dimension mismatch");
  return theta.cwiseMax(lower_).cwiseMin(upper_);
}

bool BoxConstraint::contains(const Eigen::VectorXd& theta, double tol) const {
  if (theta.size() != lower_.size())
    throw std::invalid_argument("BoxConstraint::contains: dimension mismatch");
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    if (theta[i] < lower_[i] - tol || theta[i] > upper_[i] + tol) return false;
  }
  return true;
}

Eigen::VectorXd rm_step(const Eigen::VectorXd& theta, const Eigen::VectorXd& grad, double eps) {
  if (theta.size() != grad.size())
    throw std::invalid_argument("rm_step: dimension mismatch");
  if (!grad.allFinite()) throw DivergedIterate("rm_step: non-finite gradient estimate");
  return theta - eps * grad;
}

BfgsState BfgsState::identity(int dim) {
  if (dim < 1) throw std::invalid_argument("BfgsState: dimension must be >= 1");
  BfgsState s;
  s.Z = Eigen::MatrixXd::Identity(dim, dim);
  s.prev_theta = Eigen::VectorXd::Zero(dim);
  s.prev_grad = Eigen::VectorXd::Zero(dim);
  return s;
}

Eigen::VectorXd newton_step(const Eigen::VectorXd& theta, const Eigen::VectorXd& grad,
                            BfgsState& state, double eps) {
  const auto q = theta.size();
  if (grad.size() != q || state.Z.rows() != q || state.Z.cols() != q)
    throw std::invalid_argument("newton_step: dimension mismatch");
  if (!grad.allFinite()) throw DivergedIterate("newton_step: non-finite gradient estimate");

  if (state.has_prev) {
    const Eigen::VectorXd delta = theta - state.prev_theta;
    const Eigen::VectorXd gamma = grad - state.prev_grad;
    const double dg = delta.dot(gamma);
    if (std::abs(dg) >= kBfgsCurvatureTol) {
      const Eigen::MatrixXd V =
          Eigen::MatrixXd::Identity(q, q) - (gamma * delta.transpose()) / dg;
      Eigen::MatrixXd refreshed = V.transpose() * state.Z * V + (delta * delta.transpose()) / dg;
      if (refreshed.allFinite()) {
        state.Z = std::move(refreshed);
      } else {
        state.Z = Eigen::MatrixXd::Identity(q, q);
        ++state.resets;
      }
    }
  }
  state.prev_theta = theta;
  state.prev_grad = grad;
  state.has_prev = true;
  return theta - eps * (state.Z * grad);
}

AdadeltaState AdadeltaState::init(int dim, double rho, double eta) {
  if (dim < 1) throw std::invalid_argument("AdadeltaState: dimension must be >= 1");
  if (!(rho > 0.0 && rho < 1.0))
    throw std::invalid_argument("AdadeltaState: rho must lie in (0, 1)");
  if (!(eta > 0.0)) throw std::invalid_argument("AdadeltaState: eta must be positive");
  AdadeltaState s;
  s.rho = rho;
  s.eta = eta;
  s.S = Eigen::VectorXd::Zero(dim);
  s.D = Eigen::VectorXd::Zero(dim);
  return s;
}

Eigen::VectorXd adadelta_step(const Eigen::VectorXd& theta, const Eigen::VectorXd& grad,
                              AdadeltaState& state) {
  const auto q = theta.size();
  if (grad.size() != q || state.S.size() != q || state.D.size() != q)
    throw std::invalid_argument("adadelta_step: dimension mismatch");
  if (!grad.allFinite()) throw DivergedIterate("adadelta_step: non-finite gradient estimate");

  state.S = state.rho * state.S + (1.0 - state.rho) * grad.cwiseProduct(grad);
  const Eigen::VectorXd rms_d = (state.D.array() + state.eta).sqrt();
  const Eigen::VectorXd rms_s = (state.S.array() + state.eta).sqrt();
  const Eigen::VectorXd delta = -(rms_d.array() / rms_s.array() * grad.array()).matrix();
  state.D = state.rho * state.D + (1.0 - state.rho) * delta.cwiseProduct(delta);
  return theta + delta;
}

std::string to_string(UpdateRule rule) {
  switch (rule) {
    case UpdateRule::RM: return "rm";
    case UpdateRule::KW: return "kw";
    case UpdateRule::Newton: return "newton";
    case UpdateRule::Adadelta: return "adadelta";
  }
  return "unknown";
}

Trajectory run(const ExpectationProblem& problem, UpdateRule rule, const StepSchedule& schedule,
               const Eigen::VectorXd& theta0, const RunOptions& options, RunStats* stats) {
  const int q = problem.dimension();
  if (theta0.size() != q) throw std::invalid_argument("run: theta0 dimension mismatch");
  if (options.iterations < 1) throw std::invalid_argument("run: iterations must be >= 1");
  if (options.batch_size < 1) throw std::invalid_argument("run: batch_size must be >= 1");
  if (options.box && options.box->dimension() != q)
    throw std::invalid_argument("run: box dimension mismatch");

  const int T = options.iterations;
  const int window = options.average_window > 0 ? options.average_window : std::max(1, T / 10);
  Trajectory traj(window);

  Rng rng(options.rng_seed);
  const bool use_score = problem.has_score_sampler();
  FdConfig fd = options.fd;
  fd.batch_M = options.batch_size;  // batch_size governs every estimator path

  BfgsState bfgs = BfgsState::identity(q);
  AdadeltaState ada = AdadeltaState::init(q, options.adadelta_rho, options.adadelta_eta);

  Eigen::VectorXd theta = theta0;
  for (int t = 1; t <= T; ++t) {
    GradientEstimate est = [&] {
      switch (rule) {
        case UpdateRule::RM:
          return batched_score_gradient(problem, theta, options.batch_size, rng);
        case UpdateRule::KW:
          return fd_gradient(problem, theta, t, fd, rng);
        case UpdateRule::Newton:
        case UpdateRule::Adadelta:
          return use_score ? batched_score_gradient(problem, theta, options.batch_size, rng)
                           : fd_gradient(problem, theta, t, fd, rng);
      }
      throw std::logic_error("run: unknown update rule");
    }();
    if (options.clip_bound) est = clip(std::move(est), *options.clip_bound);

    const double eps = rule == UpdateRule::Adadelta ? 0.0 : schedule.at(t);
    switch (rule) {
      case UpdateRule::RM:
      case UpdateRule::KW:
        theta = rm_step(theta, est.value, eps);
        break;
      case UpdateRule::Newton:
        theta = newton_step(theta, est.value, bfgs, eps);
        break;
      case UpdateRule::Adadelta:
        theta = adadelta_step(theta, est.value, ada);
        break;
    }
    if (options.box) theta = options.box->project(theta);
    if (!theta.allFinite())
      throw DivergedIterate("run: iterate became non-finite at t=" + std::to_string(t));
    traj.append(theta);
    traj.add_samples(est.mc_draws * problem.draws_per_objective());
  }
  if (stats) stats->bfgs_resets = bfgs.resets;
  return traj;
}

PilotResult pilot_select_epsilon0(const ExpectationProblem& problem, UpdateRule rule,
                                  const StepSchedule& schedule_template,
                                  const Eigen::VectorXd& theta0, const RunOptions& options,
                                  const std::vector<double>& candidates, int pilot_iters,
                                  double variation_threshold, std::uint64_t rng_seed) {
  if (candidates.empty())
    throw std::invalid_argument("pilot_select_epsilon0: candidate list is empty");
  if (pilot_iters < 2)
    throw std::invalid_argument("pilot_select_epsilon0: pilot_iters must be >= 2");
  if (!(variation_threshold > 0.0))
    throw std::invalid_argument("pilot_select_epsilon0: variation threshold must be positive");
  if (!std::is_sorted(candidates.begin(), candidates.end()))
    throw std::invalid_argument("pilot_select_epsilon0: candidates must be sorted ascending");

  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!(candidates[i] > 0.0))
      throw std::invalid_argument("pilot_select_epsilon0: candidates must be positive");
    StepSchedule sched = schedule_template.kind == ScheduleKind::Constant
                             ? StepSchedule::constant(candidates[i])
                             : StepSchedule::power_law(candidates[i], schedule_template.tau);
    RunOptions opts = options;
    opts.iterations = pilot_iters;
    opts.rng_seed = derive_seed(rng_seed, static_cast<std::uint64_t>(i));
    const Trajectory traj = run(problem, rule, sched, theta0, opts);

    double range = 0.0;
    const auto& iters = traj.iterates();
    for (int c = 0; c < problem.dimension(); ++c) {
      double lo = iters.front()[c], hi = iters.front()[c];
      for (const auto& th : iters) {
        lo = std::min(lo, th[c]);
        hi = std::max(hi, th[c]);
      }
      range = std::max(range, hi - lo);
    }
    if (range >= variation_threshold) return {candidates[i], true};
  }
  return {candidates.back(), false};
}

}  // namespace lowexp
