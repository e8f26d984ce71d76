#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lowexp/estimators.hpp"
#include "lowexp/problem.hpp"
#include "lowexp/schedule.hpp"
#include "lowexp/trajectory.hpp"

namespace lowexp {

// Thrown when an iterate or gradient estimate stops being finite.
struct DivergedIterate : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Axis-aligned box; infinite bounds model unconstrained coordinates.
class BoxConstraint {
 public:
  BoxConstraint(Eigen::VectorXd lower, Eigen::VectorXd upper);

  static BoxConstraint unbounded(int dim);

  const Eigen::VectorXd& lower() const { return lower_; }
  const Eigen::VectorXd& upper() const { return upper_; }
  int dimension() const { return static_cast<int>(lower_.size()); }

  Eigen::VectorXd project(const Eigen::VectorXd& theta) const;
  bool contains(const Eigen::VectorXd& theta, double tol = 0.0) const;

 private:
  Eigen::VectorXd lower_;
  Eigen::VectorXd upper_;
};

Eigen::VectorXd rm_step(const Eigen::VectorXd& theta, const Eigen::VectorXd& grad, double eps);

inline constexpr double kBfgsCurvatureTol = 1e-12;

struct BfgsState {
  Eigen::MatrixXd Z;
  Eigen::VectorXd prev_theta;
  Eigen::VectorXd prev_grad;
  bool has_prev = false;
  int resets = 0;

  static BfgsState identity(int dim);
};

// Refreshes the inverse-Hessian approximation from the latest (theta, grad)
// pair, then takes the scaled quasi-Newton step.
Eigen::VectorXd newton_step(const Eigen::VectorXd& theta, const Eigen::VectorXd& grad,
                            BfgsState& state, double eps);

struct AdadeltaState {
  double rho = 0.995;
  double eta = 1e-6;
  Eigen::VectorXd S;  // decaying average of squared gradients
  Eigen::VectorXd D;  // decaying average of squared updates

  static AdadeltaState init(int dim, double rho = 0.995, double eta = 1e-6);
};

Eigen::VectorXd adadelta_step(const Eigen::VectorXd& theta, const Eigen::VectorXd& grad,
                              AdadeltaState& state);

enum class UpdateRule { RM, KW, Newton, Adadelta };

std::string to_string(UpdateRule rule);

struct RunOptions {
  std::optional<BoxConstraint> box;
  int batch_size = 1;
  std::optional<double> clip_bound;
  int iterations = 1;
  int average_window = 0;  // 0 -> max(1, iterations / 10)
  std::uint64_t rng_seed = 0;
  FdConfig fd;
  double adadelta_rho = 0.995;
  double adadelta_eta = 1e-6;
};

struct RunStats {
  int bfgs_resets = 0;
};

Trajectory run(const ExpectationProblem& problem, UpdateRule rule, const StepSchedule& schedule,
               const Eigen::VectorXd& theta0, const RunOptions& options,
               RunStats* stats = nullptr);

struct PilotResult {
  double epsilon0 = 0.0;
  bool threshold_met = false;
};

// Short trial runs over candidate step scales; picks the smallest candidate
// whose iterate range clears the variation threshold, else the largest.
PilotResult pilot_select_epsilon0(const ExpectationProblem& problem, UpdateRule rule,
                                  const StepSchedule& schedule_template,
                                  const Eigen::VectorXd& theta0, const RunOptions& options,
                                  const std::vector<double>& candidates, int pilot_iters,
                                  double variation_threshold, std::uint64_t rng_seed);

}  // namespace lowexp
