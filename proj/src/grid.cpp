#include "lowexp/grid.hpp"

#include <stdexcept>

#include "lowexp/estimators.hpp"
#include "lowexp/rng.hpp"

namespace lowexp {

void GridSpec::validate() const {
  if (bounds.empty()) throw std::invalid_argument("GridSpec: no bounds given");
  if (points_per_dim.size() != bounds.size())
    throw std::invalid_argument("GridSpec: points_per_dim size does not match bounds");
  for (std::size_t d = 0; d < bounds.size(); ++d) {
    if (!(bounds[d].first <= bounds[d].second))
      throw std::invalid_argument("GridSpec: lower bound above upper bound");
    if (points_per_dim[d] < 1) throw std::invalid_argument("GridSpec: need >= 1 point per dim");
    if (points_per_dim[d] == 1 && bounds[d].first != bounds[d].second) {
      // A single point collapses to the lower bound; allowed, nothing to check.
    }
  }
  if (samples_per_point < 1) throw std::invalid_argument("GridSpec: samples_per_point must be >= 1");
}

std::uint64_t GridSpec::total_points() const {
  std::uint64_t total = 1;
  for (int n : points_per_dim) total *= static_cast<std::uint64_t>(n);
  return total;
}

Eigen::VectorXd GridSpec::point_at(std::uint64_t flat_index) const {
  const auto dims = static_cast<int>(bounds.size());
  Eigen::VectorXd theta(dims);
  std::uint64_t rem = flat_index;
  for (int d = dims - 1; d >= 0; --d) {
    const auto n = static_cast<std::uint64_t>(points_per_dim[static_cast<std::size_t>(d)]);
    const auto idx = rem % n;
    rem /= n;
    const auto [lo, hi] = bounds[static_cast<std::size_t>(d)];
    theta[d] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(idx) / static_cast<double>(n - 1);
  }
  if (rem != 0) throw std::out_of_range("GridSpec::point_at: flat_index out of range");
  return theta;
}

GridResult grid_search(const ExpectationProblem& problem, const GridSpec& spec, GridMode mode,
                       std::uint64_t seed) {
  spec.validate();
  if (static_cast<int>(spec.bounds.size()) != problem.dimension())
    throw std::invalid_argument("grid_search: grid dimension does not match problem");

  const std::uint64_t total = spec.total_points();
  GridResult res;
  res.all_values.reserve(total);
  for (std::uint64_t j = 0; j < total; ++j) {
    const Eigen::VectorXd theta = spec.point_at(j);
    Rng rng(derive_seed(seed, j));
    const double value = monte_carlo_value(problem, theta, spec.samples_per_point, rng).value;
    res.all_values.push_back(value);
    const bool better = j == 0 || (mode == GridMode::Min ? value < res.value_best
                                                         : value > res.value_best);
    if (better) {
      res.value_best = value;
      res.best_index = j;
      res.theta_best = theta;
    }
  }
  res.objective_draws = total * spec.samples_per_point;
  res.raw_draws = res.objective_draws * problem.draws_per_objective();
  return res;
}

}  // namespace lowexp
