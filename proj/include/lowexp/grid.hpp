#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <vector>

#include "lowexp/problem.hpp"

namespace lowexp {

// Rectangular evaluation grid: evenly spaced points (endpoints included) in
// each coordinate, a fixed Monte Carlo budget per point.
struct GridSpec {
  std::vector<std::pair<double, double>> bounds;
  std::vector<int> points_per_dim;
  std::uint64_t samples_per_point = 1;

  void validate() const;
  std::uint64_t total_points() const;
  // Flat enumeration with the last coordinate cycling fastest.
  Eigen::VectorXd point_at(std::uint64_t flat_index) const;
};

enum class GridMode { Min, Max };

struct GridResult {
  Eigen::VectorXd theta_best;
  double value_best = 0.0;
  std::uint64_t best_index = 0;
  std::vector<double> all_values;
  std::uint64_t objective_draws = 0;
  std::uint64_t raw_draws = 0;
};

// Estimates M at every grid point with samples_per_point draws (independent
// substream per point) and reports the arg-min/arg-max; exact ties keep the
// lowest flat index.
GridResult grid_search(const ExpectationProblem& problem, const GridSpec& spec, GridMode mode,
                       std::uint64_t seed);

}  // namespace lowexp
