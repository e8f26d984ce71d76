#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace lowexp {

// Recorded iterate sequence theta_1..theta_T. The running (Polyak) mean is
// maintained incrementally, thetabar_t = thetabar_{t-1} + (theta_t -
// thetabar_{t-1})/t; the window mean averages the most recent min(k, T)
// iterates. samples_used counts raw Monte Carlo draws consumed to produce
// the recorded iterates.
class Trajectory {
 public:
  explicit Trajectory(int window = 0) : window_(window) {}

  void append(const Eigen::VectorXd& theta) {
    if (!iterates_.empty() && theta.size() != iterates_.front().size())
      throw std::invalid_argument("Trajectory::append: dimension mismatch");
    iterates_.push_back(theta);
    if (iterates_.size() == 1) {
      running_mean_ = theta;
    } else {
      running_mean_ += (theta - running_mean_) / static_cast<double>(iterates_.size());
    }
  }

  void add_samples(std::uint64_t raw_draws) { samples_used_ += raw_draws; }

  std::size_t size() const { return iterates_.size(); }
  bool empty() const { return iterates_.empty(); }
  const std::vector<Eigen::VectorXd>& iterates() const { return iterates_; }

  const Eigen::VectorXd& final_iterate() const {
    if (iterates_.empty()) throw std::logic_error("Trajectory: no iterates recorded");
    return iterates_.back();
  }

  const Eigen::VectorXd& running_mean() const {
    if (iterates_.empty()) throw std::logic_error("Trajectory: no iterates recorded");
    return running_mean_;
  }

  // Mean of the last min(window, T) iterates; window <= 0 means all of them.
  Eigen::VectorXd window_mean() const {
    if (iterates_.empty()) throw std::logic_error("Trajectory: no iterates recorded");
    std::size_t k = iterates_.size();
    if (window_ > 0 && static_cast<std::size_t>(window_) < k)
      k = static_cast<std::size_t>(window_);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(iterates_.front().size());
    for (std::size_t i = iterates_.size() - k; i < iterates_.size(); ++i) mean += iterates_[i];
    return mean / static_cast<double>(k);
  }

  int window() const { return window_; }
  std::uint64_t samples_used() const { return samples_used_; }

 private:
  std::vector<Eigen::VectorXd> iterates_;
  Eigen::VectorXd running_mean_;
  int window_ = 0;
  std::uint64_t samples_used_ = 0;
};

}  // namespace lowexp
