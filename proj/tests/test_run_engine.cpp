#include <cmath>

#include "doctest.h"
#include "lowexp/problems/gaussian.hpp"
#include "lowexp/problems/logistic.hpp"
#include "lowexp/problems/quadratic.hpp"
#include "lowexp/sa.hpp"

using namespace lowexp;

namespace {

Eigen::VectorXd make_vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

// Gradient sampler that always explodes, to exercise divergence detection.
class ExplodingProblem final : public ExpectationProblem {
 public:
  int dimension() const override { return 1; }
  double sample_objective(const Eigen::VectorXd&, Rng&) const override { return 0.0; }
  bool has_score_sampler() const override { return true; }
  Eigen::VectorXd sample_score_gradient(const Eigen::VectorXd&, Rng&) const override {
    return Eigen::VectorXd::Constant(1, 1e308);
  }
};

}  // namespace

TEST_CASE("rm run contracts on the deterministic quadratic") {
  const DeterministicQuadraticProblem prob(1);
  RunOptions opts;
  opts.iterations = 50;
  // theta' = theta - 0.4 * 2 theta = 0.2 theta each step.
  const auto traj =
      run(prob, UpdateRule::RM, StepSchedule::constant(0.4), make_vec({1.0}), opts);
  CHECK(traj.size() == 50);
  const double expected = std::pow(0.2, 50);
  CHECK(traj.final_iterate()[0] ==
        doctest::Approx(expected).epsilon(1e-10));
  CHECK(std::abs(traj.final_iterate()[0]) < 1e-8);
}

TEST_CASE("single-iteration run") {
  const DeterministicQuadraticProblem prob(1);
  RunOptions opts;
  opts.iterations = 1;
  const auto traj =
      run(prob, UpdateRule::RM, StepSchedule::constant(0.1), make_vec({1.0}), opts);
  CHECK(traj.size() == 1);
  CHECK(traj.final_iterate() == traj.running_mean());
  CHECK(traj.final_iterate() == traj.window_mean());
  CHECK(traj.final_iterate()[0] == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("projection keeps every iterate inside the box") {
  const GaussianTailProblem prob;
  RunOptions opts;
  opts.iterations = 200;
  opts.box = BoxConstraint(make_vec({0.5}), make_vec({3.0}));
  opts.rng_seed = 404;
  const auto traj =
      run(prob, UpdateRule::RM, StepSchedule::power_law(20.0, 0.5), make_vec({2.0}), opts);
  for (const auto& th : traj.iterates()) {
    CHECK(th[0] >= 0.5);
    CHECK(th[0] <= 3.0);
  }
}

TEST_CASE("sample accounting is exact") {
  const GaussianTailProblem gauss;
  RunOptions rm_opts;
  rm_opts.iterations = 7;
  rm_opts.batch_size = 3;
  const auto rm_traj =
      run(gauss, UpdateRule::RM, StepSchedule::power_law(1.0, 0.5), make_vec({1.0}), rm_opts);
  CHECK(rm_traj.samples_used() == 21);

  const DeterministicQuadraticProblem quad(2);
  RunOptions kw_opts;
  kw_opts.iterations = 5;
  kw_opts.batch_size = 4;
  const auto kw_traj =
      run(quad, UpdateRule::KW, StepSchedule::power_law(0.1, 0.5), make_vec({1.0, 1.0}),
          kw_opts);
  CHECK(kw_traj.samples_used() == 2 * 2 * 4 * 5);

  const auto design = full_factorial_design({0.0, 1.0}, 2);
  const LogisticContourProblem contour(design, make_vec({0, 1, 1, 0}));
  const NegatedObjective neg(contour);
  RunOptions lg_opts;
  lg_opts.iterations = 3;
  lg_opts.batch_size = 2;
  lg_opts.fd.c0 = 1.0;
  const auto lg_traj =
      run(neg, UpdateRule::KW, StepSchedule::power_law(5.0, 0.5), make_vec({0.0, 0.0}), lg_opts);
  CHECK(lg_traj.samples_used() == 2 * 2 * 2 * 3 * 4);  // 2q * batch * T * rows
}

TEST_CASE("kiefer-wolfowitz run approaches the quadratic minimum") {
  const DeterministicQuadraticProblem prob(2);
  RunOptions opts;
  opts.iterations = 120;
  opts.fd.c0 = 0.5;
  opts.fd.gamma = 0.25;
  const auto traj = run(prob, UpdateRule::KW, StepSchedule::power_law(0.25, 0.5),
                        make_vec({2.0, -3.0}), opts);
  CHECK(traj.final_iterate().norm() < 1e-3);
}

TEST_CASE("newton run converges on the quadratic") {
  const DeterministicQuadraticProblem prob(2);
  RunOptions opts;
  opts.iterations = 200;
  const auto traj = run(prob, UpdateRule::Newton, StepSchedule::power_law(0.4, 0.5),
                        make_vec({4.0, -4.0}), opts);
  CHECK(traj.final_iterate().norm() < 1e-3);
}

TEST_CASE("divergence raises with the iteration number") {
  const ExplodingProblem prob;
  RunOptions opts;
  opts.iterations = 10;
  try {
    run(prob, UpdateRule::RM, StepSchedule::constant(1.0), make_vec({0.0}), opts);
    FAIL("expected DivergedIterate");
  } catch (const DivergedIterate& e) {
    CHECK(std::string(e.what()).find("t=") != std::string::npos);
  }
}

TEST_CASE("gradient clipping bounds the effective update") {
  const ExplodingProblem prob;
  RunOptions opts;
  opts.iterations = 5;
  opts.clip_bound = 1.0;  // the raw estimate is 1e308; clipped runs survive
  const auto traj =
      run(prob, UpdateRule::RM, StepSchedule::constant(0.1), make_vec({0.0}), opts);
  CHECK(traj.final_iterate()[0] == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("run validation") {
  const DeterministicQuadraticProblem prob(2);
  RunOptions opts;
  opts.iterations = 0;
  CHECK_THROWS_AS(
      run(prob, UpdateRule::RM, StepSchedule::constant(0.1), make_vec({1.0, 1.0}), opts),
      std::invalid_argument);
  opts.iterations = 1;
  CHECK_THROWS_AS(run(prob, UpdateRule::RM, StepSchedule::constant(0.1), make_vec({1.0}), opts),
                  std::invalid_argument);
  opts.box = BoxConstraint(make_vec({0.0}), make_vec({1.0}));
  CHECK_THROWS_AS(
      run(prob, UpdateRule::RM, StepSchedule::constant(0.1), make_vec({1.0, 1.0}), opts),
      std::invalid_argument);
}

TEST_CASE("default window is a tenth of the horizon") {
  const DeterministicQuadraticProblem prob(1);
  RunOptions opts;
  opts.iterations = 40;
  const auto traj =
      run(prob, UpdateRule::RM, StepSchedule::constant(0.05), make_vec({1.0}), opts);
  CHECK(traj.window() == 4);
}

TEST_CASE("bfgs reset counter is exposed") {
  const DeterministicQuadraticProblem prob(2);
  RunOptions opts;
  opts.iterations = 30;
  RunStats stats;
  run(prob, UpdateRule::Newton, StepSchedule::power_law(0.3, 0.5), make_vec({2.0, 2.0}), opts,
      &stats);
  CHECK(stats.bfgs_resets == 0);
}

TEST_CASE("same seed reproduces the trajectory exactly") {
  const GaussianTailProblem prob;
  RunOptions opts;
  opts.iterations = 100;
  opts.rng_seed = 31337;
  const auto a =
      run(prob, UpdateRule::RM, StepSchedule::power_law(20.0, 0.5), make_vec({6.0}), opts);
  const auto b =
      run(prob, UpdateRule::RM, StepSchedule::power_law(20.0, 0.5), make_vec({6.0}), opts);
  REQUIRE(a.size() == b.size());
  for (std::size_t t = 0; t < a.size(); ++t) CHECK(a.iterates()[t] == b.iterates()[t]);
  opts.rng_seed = 31338;
  const auto c =
      run(prob, UpdateRule::RM, StepSchedule::power_law(20.0, 0.5), make_vec({6.0}), opts);
  CHECK(a.final_iterate() != c.final_iterate());
}

TEST_CASE("pilot selects the smallest step that moves the iterates") {
  const DeterministicQuadraticProblem prob(1);
  RunOptions opts;
  const auto res = pilot_select_epsilon0(prob, UpdateRule::RM, StepSchedule::power_law(1.0, 0.5),
                                         make_vec({1.0}), opts, {1e-6, 0.05}, 20, 0.1, 9);
  CHECK(res.threshold_met);
  CHECK(res.epsilon0 == 0.05);
}

TEST_CASE("pilot falls back to the largest candidate when nothing moves") {
  const DeterministicQuadraticProblem prob(1);
  RunOptions opts;
  const auto res = pilot_select_epsilon0(prob, UpdateRule::RM, StepSchedule::power_law(1.0, 0.5),
                                         make_vec({1.0}), opts, {1e-9, 1e-8}, 10, 0.1, 9);
  CHECK_FALSE(res.threshold_met);
  CHECK(res.epsilon0 == 1e-8);
}

TEST_CASE("pilot is reproducible and validates inputs") {
  const GaussianTailProblem prob;
  RunOptions opts;
  const auto a = pilot_select_epsilon0(prob, UpdateRule::RM, StepSchedule::power_law(1.0, 0.5),
                                       make_vec({6.0}), opts, {0.1, 1.0, 10.0}, 25, 0.5, 77);
  const auto b = pilot_select_epsilon0(prob, UpdateRule::RM, StepSchedule::power_law(1.0, 0.5),
                                       make_vec({6.0}), opts, {0.1, 1.0, 10.0}, 25, 0.5, 77);
  CHECK(a.epsilon0 == b.epsilon0);
  CHECK(a.threshold_met == b.threshold_met);
  CHECK_THROWS_AS(pilot_select_epsilon0(prob, UpdateRule::RM, StepSchedule::power_law(1.0, 0.5),
                                        make_vec({6.0}), opts, {}, 10, 0.5, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(pilot_select_epsilon0(prob, UpdateRule::RM, StepSchedule::power_law(1.0, 0.5),
                                        make_vec({6.0}), opts, {1.0, 0.1}, 10, 0.5, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(pilot_select_epsilon0(prob, UpdateRule::RM, StepSchedule::power_law(1.0, 0.5),
                                        make_vec({6.0}), opts, {1.0}, 1, 0.5, 1),
                  std::invalid_argument);
}

TEST_CASE("adadelta run drifts toward the minimum") {
  const DeterministicQuadraticProblem prob(1);
  RunOptions opts;
  opts.iterations = 3000;
  opts.adadelta_rho = 0.9;
  const auto traj = run(prob, UpdateRule::Adadelta, StepSchedule::power_law(1.0, 0.5),
                        make_vec({1.0}), opts);
  // The warm-up is slow but the deterministic gradient then drives theta to
  // numerical zero well before 3000 steps.
  CHECK(std::abs(traj.final_iterate()[0]) < 1e-6);
}
