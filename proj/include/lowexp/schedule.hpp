#pragma once

#include <cmath>
#include <stdexcept>

namespace lowexp {

enum class ScheduleKind { PowerLaw, Constant };

// Deterministic step-size sequence eps_t = eps0 * t^(-tau), t >= 1, or a
// constant eps0. A power law with tau in (1/2, 1] has divergent step sum and
// summable squared steps, the combination required for almost-sure
// convergence of the iterates.
struct StepSchedule {
  double epsilon0 = 1.0;
  double tau = 0.5;
  ScheduleKind kind = ScheduleKind::PowerLaw;

  static StepSchedule power_law(double epsilon0, double tau) {
    if (!(epsilon0 > 0.0))
      throw std::invalid_argument("StepSchedule: epsilon0 must be positive");
    if (!(tau > 0.0 && tau <= 1.0))
      throw std::invalid_argument("StepSchedule: tau must lie in (0, 1]");
    return {epsilon0, tau, ScheduleKind::PowerLaw};
  }

  static StepSchedule constant(double epsilon0) {
    if (!(epsilon0 > 0.0))
      throw std::invalid_argument("StepSchedule: epsilon0 must be positive");
    return {epsilon0, 0.0, ScheduleKind::Constant};
  }

  // eps_t for iteration t >= 1.
  double at(int t) const {
    if (t < 1) throw std::invalid_argument("StepSchedule::at: t must be >= 1");
    if (kind == ScheduleKind::Constant) return epsilon0;
    return epsilon0 * std::pow(static_cast<double>(t), -tau);
  }

  bool satisfies_decay() const {
    return kind == ScheduleKind::PowerLaw && tau > 0.5 && tau <= 1.0;
  }
};

}  // namespace lowexp
