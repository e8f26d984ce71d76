#include <stdexcept>

#include "lowexp/runner.hpp"

namespace lowexp {

namespace {

using nlohmann::json;

json gaussian_problem() {
  return {{"type", "gaussian"}, {"threshold", 2.0}, {"sigma", 2.0}};
}

// All Gaussian searches are confined to the same compact interval; the
// objective is flat far from the origin, so an unprojected run under a large
// step scale can wander off and stall.
json gaussian_box() {
  return {{"lower", {-7.0}}, {"upper", {7.0}}};
}

// Same idea for the contour searches: stay within the compact region the
// grid scans, with the assertion realized by the lower bound on theta_2.
json logistic_box(int q) {
  json lower = json::array(), upper = json::array();
  for (int i = 0; i < q; ++i) {
    lower.push_back(i == 1 ? 0.0 : -3.0);
    upper.push_back(3.0);
  }
  return {{"lower", lower}, {"upper", upper}};
}

json sim1_problem() {
  return {{"type", "logistic"},
          {"levels", {0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0}},
          {"factors", 3},
          {"theta_star", {-2.0, -1.0, 2.0}},
          {"assertion_coord", 1}};
}

json sim2_problem() {
  return {{"type", "logistic"},
          {"levels", {0.0, 0.5, 1.0}},
          {"factors", 4},
          {"theta_star", {-2.0, -1.0, 2.0, 1.0}},
          {"assertion_coord", 1}};
}

// Contour-search tuning: common-random-numbers coupling plus a moderate step
// scale keeps the iterates in the band where the contour is nonzero. Larger
// step scales eject them into flat regions where every finite-difference
// batch returns zero and the run stalls there.
json kw_method(int batch, int iterations, int q) {
  return {{"type", "kw"},     {"epsilon0", 2.0},         {"tau", 0.5},
          {"c0", 1.0},        {"gamma", 0.5},            {"batch", batch},
          {"iterations", iterations}, {"box", logistic_box(q)},
          {"theta0_policy", "constrained-mle"}, {"coupling", "crn"}};
}

json build(const std::string& name) {
  // Tail-probability experiments: minimize M(theta) = P(|X| > 2), X ~
  // N(theta, 4), from theta0 = 6. The minimizer is 0 with M(0) ~ 0.3173.
  if (name == "gaussian-traj-lr1" || name == "gaussian-traj-lr5") {
    return {{"name", name},
            {"problem", gaussian_problem()},
            {"method",
             {{"type", "rm"},
              {"epsilon0", name == "gaussian-traj-lr5" ? 5.0 : 1.0},
              {"tau", 0.5},
              {"iterations", 1000},
              {"theta0", {6.0}},
              {"box", gaussian_box()}}},
            {"replications", 2},
            {"base_seed", 11},
            {"write_trajectories", true}};
  }
  if (name == "gaussian-rm") {
    return {{"name", name},
            {"problem", gaussian_problem()},
            {"method",
             {{"type", "rm"},
              {"epsilon0", 20.0},
              {"tau", 0.5},
              {"iterations", 1000},
              {"theta0", {6.0}},
              {"box", gaussian_box()}}},
            {"replications", 1000},
            {"base_seed", 21}};
  }
  if (name == "gaussian-rm-batched") {
    return {{"name", name},
            {"problem", gaussian_problem()},
            {"method",
             {{"type", "rm"},
              {"epsilon0", 20.0},
              {"tau", 0.5},
              {"batch", 10},
              {"iterations", 100},
              {"theta0", {6.0}},
              {"box", gaussian_box()}}},
            {"replications", 1000},
            {"base_seed", 22}};
  }
  if (name == "gaussian-grid") {
    return {{"name", name},
            {"problem", gaussian_problem()},
            {"method",
             {{"type", "grid"},
              {"grid",
               {{"bounds", {{-6.0, 6.0}}}, {"points", {100}}, {"samples", 10}}}}},
            {"replications", 1000},
            {"base_seed", 23}};
  }
  if (name == "gaussian-newton") {
    return {{"name", name},
            {"problem", gaussian_problem()},
            {"method",
             {{"type", "newton"},
              {"epsilon0", 1.0},
              {"tau", 0.5},
              {"batch", 50},
              {"iterations", 1000},
              {"theta0", {6.0}},
              {"box", gaussian_box()}}},
            {"replications", 100},
            {"base_seed", 24}};
  }
  if (name == "gaussian-adadelta") {
    return {{"name", name},
            {"problem", gaussian_problem()},
            {"method",
             {{"type", "adadelta"},
              {"rho", 0.995},
              {"eta", 1e-6},
              {"iterations", 10000},
              {"theta0", {6.0}},
              {"box", gaussian_box()}}},
            {"replications", 1000},
            {"base_seed", 25}};
  }

  // Plausibility-contour experiments: maximize pi(theta) over the assertion
  // {theta_2 > 0}; 200 observed responses simulated at theta_star.
  if (name == "logistic-sim1-kw16") {
    return {{"name", name},
            {"problem", sim1_problem()},
            {"method", kw_method(16, 1250, 3)},
            {"replications", 200},
            {"base_seed", 31}};
  }
  if (name == "logistic-sim1-kw40") {
    return {{"name", name},
            {"problem", sim1_problem()},
            {"method", kw_method(40, 500, 3)},
            {"replications", 200},
            {"base_seed", 32}};
  }
  if (name == "logistic-sim1-grid") {
    return {{"name", name},
            {"problem", sim1_problem()},
            {"method",
             {{"type", "grid"},
              {"grid",
               {{"bounds", {{-3.0, 3.0}, {0.0, 3.0}, {-3.0, 3.0}}},
                {"points", {15, 15, 15}},
                {"samples", 36}}}}},
            {"replications", 200},
            {"base_seed", 33}};
  }
  if (name == "logistic-sim2-kw16") {
    return {{"name", name},
            {"problem", sim2_problem()},
            {"method", kw_method(16, 1250, 4)},
            {"replications", 200},
            {"base_seed", 41}};
  }
  if (name == "logistic-sim2-kw40") {
    return {{"name", name},
            {"problem", sim2_problem()},
            {"method", kw_method(40, 500, 4)},
            {"replications", 200},
            {"base_seed", 42}};
  }
  if (name == "logistic-sim2-grid") {
    return {{"name", name},
            {"problem", sim2_problem()},
            {"method",
             {{"type", "grid"},
              {"grid",
               {{"bounds", {{-3.0, 3.0}, {0.0, 3.0}, {-3.0, 3.0}, {-3.0, 3.0}}},
                {"points", {10, 10, 10, 10}},
                {"samples", 16}}}}},
            {"replications", 200},
            {"base_seed", 43}};
  }

  if (name == "quadratic-smoke") {
    return {{"name", name},
            {"problem", {{"type", "quadratic"}, {"dim", 2}}},
            {"method",
             {{"type", "newton"},
              {"epsilon0", 0.5},
              {"tau", 0.5},
              {"iterations", 50},
              {"theta0", {3.0, -2.0}}}},
            {"replications", 1},
            {"base_seed", 99}};
  }
  throw ConfigError("unknown preset '" + name + "'");
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"gaussian-traj-lr1",  "gaussian-traj-lr5", "gaussian-rm",
          "gaussian-rm-batched", "gaussian-grid",     "gaussian-newton",
          "gaussian-adadelta",   "logistic-sim1-kw16", "logistic-sim1-kw40",
          "logistic-sim1-grid",  "logistic-sim2-kw16", "logistic-sim2-kw40",
          "logistic-sim2-grid",  "quadratic-smoke"};
}

nlohmann::json preset_config(const std::string& name) {
  return build(name);
}

}  // namespace lowexp
