#include "lowexp/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <thread>
#include <utility>

#include "lowexp/problems/gaussian.hpp"
#include "lowexp/problems/logistic.hpp"
#include "lowexp/problems/quadratic.hpp"
#include "lowexp/rng.hpp"
#include "lowexp/version.hpp"

namespace lowexp {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void fail(const std::string& field, const std::string& why) {
  throw ConfigError("config field '" + field + "': " + why);
}

bool present(const json& j, const char* key) {
  auto it = j.find(key);
  return it != j.end() && !it->is_null();
}

const json& require(const json& j, const std::string& path, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) fail(path + key, "is required");
  return *it;
}

double as_double(const json& v, const std::string& field) {
  if (!v.is_number()) fail(field, "must be a number");
  return v.get<double>();
}

int as_int(const json& v, const std::string& field) {
  if (!v.is_number_integer()) fail(field, "must be an integer");
  return v.get<int>();
}

std::uint64_t as_u64(const json& v, const std::string& field) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                 v.get<std::int64_t>() < 0))
    fail(field, "must be a non-negative integer");
  return v.get<std::uint64_t>();
}

bool as_bool(const json& v, const std::string& field) {
  if (!v.is_boolean()) fail(field, "must be a boolean");
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& field) {
  if (!v.is_string()) fail(field, "must be a string");
  return v.get<std::string>();
}

std::vector<double> as_double_array(const json& v, const std::string& field) {
  if (!v.is_array() || v.empty()) fail(field, "must be a non-empty array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_number()) fail(field, "must contain only numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

Eigen::VectorXd as_vector(const json& v, const std::string& field) {
  const auto xs = as_double_array(v, field);
  Eigen::VectorXd vec(static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) vec[static_cast<Eigen::Index>(i)] = xs[i];
  return vec;
}

void reject_unknown(const json& j, const std::string& path,
                    std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) fail(path + it.key(), "is not a recognized field");
  }
}

int problem_dimension(const ExperimentConfig& c) {
  switch (c.problem) {
    case ProblemKind::Gaussian: return 1;
    case ProblemKind::Quadratic: return c.quadratic.dim;
    case ProblemKind::Logistic: return c.logistic.factors;
  }
  return 0;
}

int resolved_batch(const ExperimentConfig& c) {
  if (c.method.batch > 0) return c.method.batch;
  return c.problem == ProblemKind::Logistic ? static_cast<int>(c.logistic.contour_draws) : 1;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  reject_unknown(j, "", {"name", "problem", "method", "replications", "base_seed", "workers",
                         "eval_draws", "write_trajectories", "trajectory_reps", "output_dir"});
  ExperimentConfig c;
  if (present(j, "name")) c.name = as_string(j["name"], "name");
  if (c.name.empty() || c.name.find('/') != std::string::npos) fail("name", "must be a non-empty path-safe string");

  const json& p = require(j, "", "problem");
  if (!p.is_object()) fail("problem", "must be an object");
  const std::string ptype = as_string(require(p, "problem.", "type"), "problem.type");
  if (ptype == "gaussian") {
    c.problem = ProblemKind::Gaussian;
    reject_unknown(p, "problem.", {"type", "threshold", "sigma"});
    if (present(p, "threshold")) c.gaussian.threshold = as_double(p["threshold"], "problem.threshold");
    if (present(p, "sigma")) c.gaussian.sigma = as_double(p["sigma"], "problem.sigma");
    if (!(c.gaussian.threshold > 0.0)) fail("problem.threshold", "must be positive");
    if (!(c.gaussian.sigma > 0.0)) fail("problem.sigma", "must be positive");
  } else if (ptype == "quadratic") {
    c.problem = ProblemKind::Quadratic;
    reject_unknown(p, "problem.", {"type", "dim"});
    if (present(p, "dim")) c.quadratic.dim = as_int(p["dim"], "problem.dim");
    if (c.quadratic.dim < 1) fail("problem.dim", "must be >= 1");
  } else if (ptype == "logistic") {
    c.problem = ProblemKind::Logistic;
    reject_unknown(p, "problem.",
                   {"type", "levels", "factors", "theta_star", "assertion_coord", "contour_draws"});
    c.logistic.levels = as_double_array(require(p, "problem.", "levels"), "problem.levels");
    c.logistic.factors = as_int(require(p, "problem.", "factors"), "problem.factors");
    if (c.logistic.factors < 1) fail("problem.factors", "must be >= 1");
    c.logistic.theta_star = as_vector(require(p, "problem.", "theta_star"), "problem.theta_star");
    if (c.logistic.theta_star.size() != c.logistic.factors)
      fail("problem.theta_star", "length must equal problem.factors");
    if (present(p, "assertion_coord"))
      c.logistic.assertion_coord = as_int(p["assertion_coord"], "problem.assertion_coord");
    if (c.logistic.assertion_coord < 0 || c.logistic.assertion_coord >= c.logistic.factors)
      fail("problem.assertion_coord", "must index a design column");
    if (present(p, "contour_draws"))
      c.logistic.contour_draws = as_u64(p["contour_draws"], "problem.contour_draws");
    if (c.logistic.contour_draws < 1) fail("problem.contour_draws", "must be >= 1");
  } else {
    fail("problem.type", "must be one of gaussian, quadratic, logistic");
  }
  const int q = problem_dimension(c);

  const json& m = require(j, "", "method");
  if (!m.is_object()) fail("method", "must be an object");
  reject_unknown(m, "method.",
                 {"type", "epsilon0", "tau", "constant_step", "c0", "gamma", "batch", "iterations",
                  "average_window", "clip", "box", "theta0", "theta0_policy", "rho", "eta",
                  "coupling", "grid"});
  c.method.type = as_string(require(m, "method.", "type"), "method.type");
  const std::string& mt = c.method.type;
  if (mt != "rm" && mt != "kw" && mt != "newton" && mt != "adadelta" && mt != "grid")
    fail("method.type", "must be one of rm, kw, newton, adadelta, grid");

  if (present(m, "epsilon0")) c.method.epsilon0 = as_double(m["epsilon0"], "method.epsilon0");
  if (present(m, "tau")) c.method.tau = as_double(m["tau"], "method.tau");
  if (present(m, "constant_step"))
    c.method.constant_step = as_bool(m["constant_step"], "method.constant_step");
  if (present(m, "c0")) c.method.c0 = as_double(m["c0"], "method.c0");
  if (present(m, "gamma")) c.method.gamma = as_double(m["gamma"], "method.gamma");
  if (present(m, "batch")) c.method.batch = as_int(m["batch"], "method.batch");
  if (present(m, "iterations")) c.method.iterations = as_int(m["iterations"], "method.iterations");
  if (present(m, "average_window"))
    c.method.average_window = as_int(m["average_window"], "method.average_window");
  if (present(m, "clip")) c.method.clip = as_double(m["clip"], "method.clip");
  if (present(m, "rho")) c.method.rho = as_double(m["rho"], "method.rho");
  if (present(m, "eta")) c.method.eta = as_double(m["eta"], "method.eta");
  if (present(m, "theta0_policy"))
    c.method.theta0_policy = as_string(m["theta0_policy"], "method.theta0_policy");
  if (present(m, "coupling")) {
    const std::string cp = as_string(m["coupling"], "method.coupling");
    if (cp == "independent") c.method.coupling = Coupling::Independent;
    else if (cp == "crn") c.method.coupling = Coupling::CommonRandomNumbers;
    else fail("method.coupling", "must be 'independent' or 'crn'");
  }
  if (present(m, "theta0")) {
    c.method.theta0 = as_vector(m["theta0"], "method.theta0");
    if (c.method.theta0->size() != q) fail("method.theta0", "length must match problem dimension");
  }
  if (present(m, "box")) {
    const json& b = m["box"];
    if (!b.is_object()) fail("method.box", "must be an object with 'lower' and 'upper'");
    reject_unknown(b, "method.box.", {"lower", "upper"});
    auto bound_vec = [&](const char* key) {
      const json& arr = require(b, "method.box.", key);
      const std::string field = std::string("method.box.") + key;
      if (!arr.is_array() || arr.size() != static_cast<std::size_t>(q))
        fail(field, "must be an array matching the problem dimension");
      Eigen::VectorXd v(q);
      for (int i = 0; i < q; ++i) {
        const json& e = arr[static_cast<std::size_t>(i)];
        if (e.is_null())
          v[i] = std::string(key) == "lower" ? -kInf : kInf;  // null encodes an open side
        else if (e.is_number())
          v[i] = e.get<double>();
        else
          fail(field, "entries must be numbers or null");
      }
      return v;
    };
    try {
      c.method.box.emplace(bound_vec("lower"), bound_vec("upper"));
    } catch (const std::invalid_argument& e) {
      fail("method.box", e.what());
    }
  }

  if (mt == "grid") {
    const json& g = require(m, "method.", "grid");
    if (!g.is_object()) fail("method.grid", "must be an object");
    reject_unknown(g, "method.grid.", {"bounds", "points", "samples"});
    const json& bounds = require(g, "method.grid.", "bounds");
    if (!bounds.is_array() || bounds.size() != static_cast<std::size_t>(q))
      fail("method.grid.bounds", "must be an array of [lo, hi] pairs matching the dimension");
    for (const auto& pr : bounds) {
      if (!pr.is_array() || pr.size() != 2 || !pr[0].is_number() || !pr[1].is_number())
        fail("method.grid.bounds", "entries must be [lo, hi] number pairs");
      c.method.grid.bounds.emplace_back(pr[0].get<double>(), pr[1].get<double>());
    }
    const json& pts = require(g, "method.grid.", "points");
    if (!pts.is_array() || pts.size() != static_cast<std::size_t>(q))
      fail("method.grid.points", "must be an integer array matching the dimension");
    for (const auto& e : pts) {
      if (!e.is_number_integer()) fail("method.grid.points", "entries must be integers");
      c.method.grid.points_per_dim.push_back(e.get<int>());
    }
    if (present(g, "samples"))
      c.method.grid.samples_per_point = as_u64(g["samples"], "method.grid.samples");
    try {
      c.method.grid.validate();
    } catch (const std::invalid_argument& e) {
      fail("method.grid", e.what());
    }
  } else {
    if (present(m, "grid")) fail("method.grid", "is only valid for method.type 'grid'");
    if (!(c.method.epsilon0 > 0.0)) fail("method.epsilon0", "must be positive");
    if (!c.method.constant_step && !(c.method.tau > 0.0 && c.method.tau <= 1.0))
      fail("method.tau", "must lie in (0, 1]");
    if (c.method.iterations < 1) fail("method.iterations", "must be >= 1");
    if (c.method.batch < 0) fail("method.batch", "must be >= 0 (0 selects the problem default)");
    if (c.method.clip && !(*c.method.clip > 0.0)) fail("method.clip", "must be positive");
    if (mt == "kw") {
      if (!(c.method.c0 > 0.0)) fail("method.c0", "must be positive");
      if (c.method.gamma < 0.0) fail("method.gamma", "must be >= 0");
    }
    if (mt == "adadelta") {
      if (!(c.method.rho > 0.0 && c.method.rho < 1.0)) fail("method.rho", "must lie in (0, 1)");
      if (!(c.method.eta > 0.0)) fail("method.eta", "must be positive");
    }
  }
  if (c.method.theta0_policy != "zero" && c.method.theta0_policy != "constrained-mle")
    fail("method.theta0_policy", "must be 'zero' or 'constrained-mle'");
  if (c.method.theta0_policy == "constrained-mle" && c.problem != ProblemKind::Logistic)
    fail("method.theta0_policy", "'constrained-mle' requires the logistic problem");
  if (c.method.coupling == Coupling::CommonRandomNumbers && mt != "kw")
    fail("method.coupling", "'crn' only applies to finite-difference methods");

  if (present(j, "replications")) c.replications = as_int(j["replications"], "replications");
  if (c.replications < 1) fail("replications", "must be >= 1");
  if (present(j, "base_seed")) c.base_seed = as_u64(j["base_seed"], "base_seed");
  if (present(j, "workers")) c.workers = as_int(j["workers"], "workers");
  if (c.workers < 1) fail("workers", "must be >= 1");
  if (present(j, "eval_draws")) c.eval_draws = as_u64(j["eval_draws"], "eval_draws");
  if (c.eval_draws < 1) fail("eval_draws", "must be >= 1");
  if (present(j, "write_trajectories"))
    c.write_trajectories = as_bool(j["write_trajectories"], "write_trajectories");
  if (present(j, "trajectory_reps"))
    c.trajectory_reps = as_int(j["trajectory_reps"], "trajectory_reps");
  if (c.trajectory_reps < 0) fail("trajectory_reps", "must be >= 0");
  if (present(j, "output_dir")) c.output_dir = as_string(j["output_dir"], "output_dir");
  return c;
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  json p;
  switch (c.problem) {
    case ProblemKind::Gaussian:
      p = {{"type", "gaussian"}, {"threshold", c.gaussian.threshold}, {"sigma", c.gaussian.sigma}};
      break;
    case ProblemKind::Quadratic:
      p = {{"type", "quadratic"}, {"dim", c.quadratic.dim}};
      break;
    case ProblemKind::Logistic: {
      json theta_star = json::array();
      for (Eigen::Index i = 0; i < c.logistic.theta_star.size(); ++i)
        theta_star.push_back(c.logistic.theta_star[i]);
      p = {{"type", "logistic"},
           {"levels", c.logistic.levels},
           {"factors", c.logistic.factors},
           {"theta_star", theta_star},
           {"assertion_coord", c.logistic.assertion_coord},
           {"contour_draws", c.logistic.contour_draws}};
      break;
    }
  }

  json m = {{"type", c.method.type}};
  if (c.method.type == "grid") {
    json bounds = json::array();
    for (const auto& [lo, hi] : c.method.grid.bounds) bounds.push_back(json::array({lo, hi}));
    m["grid"] = {{"bounds", bounds},
                 {"points", c.method.grid.points_per_dim},
                 {"samples", c.method.grid.samples_per_point}};
  } else {
    m["epsilon0"] = c.method.epsilon0;
    m["tau"] = c.method.tau;
    m["constant_step"] = c.method.constant_step;
    m["c0"] = c.method.c0;
    m["gamma"] = c.method.gamma;
    m["batch"] = c.method.batch;
    m["iterations"] = c.method.iterations;
    m["average_window"] = c.method.average_window;
    m["clip"] = c.method.clip ? json(*c.method.clip) : json(nullptr);
    m["rho"] = c.method.rho;
    m["eta"] = c.method.eta;
    m["coupling"] = c.method.coupling == Coupling::CommonRandomNumbers ? "crn" : "independent";
    m["theta0_policy"] = c.method.theta0_policy;
    if (c.method.theta0) {
      json t0 = json::array();
      for (Eigen::Index i = 0; i < c.method.theta0->size(); ++i) t0.push_back((*c.method.theta0)[i]);
      m["theta0"] = t0;
    } else {
      m["theta0"] = nullptr;
    }
    if (c.method.box) {
      json lower = json::array(), upper = json::array();
      for (Eigen::Index i = 0; i < c.method.box->lower().size(); ++i) {
        const double lo = c.method.box->lower()[i], hi = c.method.box->upper()[i];
        lower.push_back(std::isinf(lo) ? json(nullptr) : json(lo));
        upper.push_back(std::isinf(hi) ? json(nullptr) : json(hi));
      }
      m["box"] = {{"lower", lower}, {"upper", upper}};
    } else {
      m["box"] = nullptr;
    }
  }

  return {{"name", c.name},
          {"problem", p},
          {"method", m},
          {"replications", c.replications},
          {"base_seed", c.base_seed},
          {"workers", c.workers},
          {"eval_draws", c.eval_draws},
          {"write_trajectories", c.write_trajectories},
          {"trajectory_reps", c.trajectory_reps},
          {"output_dir", c.output_dir}};
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  return fnv1a(config_to_json(config).dump());
}

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return kNaN;
  double s = 0.0;
  for (double x : xs) {
    if (std::isnan(x)) return kNaN;
    s += x;
  }
  return s / static_cast<double>(xs.size());
}

double sd_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return kNaN;
  const double m = mean_of(xs);
  if (std::isnan(m)) return kNaN;
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double median_of(std::vector<double> xs) {
  if (xs.empty()) return kNaN;
  for (double x : xs)
    if (std::isnan(x)) return kNaN;
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

namespace {

std::vector<std::string> value_columns(int q) {
  std::vector<std::string> cols;
  auto coords = [&](const std::string& prefix) {
    for (int i = 1; i <= q; ++i) cols.push_back(prefix + "_" + std::to_string(i));
  };
  coords("final");
  coords("polyak");
  coords("window");
  cols.insert(cols.end(), {"value_final", "value_polyak", "value_window", "reference_value"});
  coords("ref");
  cols.insert(cols.end(), {"grid_value_best", "samples_used", "mle_failure_rate"});
  return cols;
}

std::vector<double> record_values(const ReplicationRecord& r, int q) {
  std::vector<double> v;
  auto coords = [&](const Eigen::VectorXd& th) {
    for (int i = 0; i < q; ++i)
      v.push_back(th.size() == q ? th[i] : kNaN);
  };
  coords(r.final_iterate);
  coords(r.polyak_iterate);
  coords(r.window_iterate);
  v.insert(v.end(), {r.value_at_final, r.value_at_polyak, r.value_at_window, r.reference_value});
  coords(r.reference_theta);
  v.insert(v.end(),
           {r.grid_value_best, static_cast<double>(r.samples_used), r.mle_failure_rate});
  return v;
}

}  // namespace

Aggregates summarize(const RunSummary& summary) {
  const int q = summary.dimension;
  Aggregates agg;
  agg.columns = value_columns(q);
  const std::size_t ncols = agg.columns.size();
  std::vector<std::vector<double>> cols(ncols);
  for (const auto& rec : summary.replications) {
    if (rec.aborted) continue;
    const auto vals = record_values(rec, q);
    for (std::size_t i = 0; i < ncols; ++i) cols[i].push_back(vals[i]);
  }
  agg.mean.resize(ncols);
  agg.sd.resize(ncols);
  agg.median.resize(ncols);
  for (std::size_t i = 0; i < ncols; ++i) {
    agg.mean[i] = mean_of(cols[i]);
    agg.sd[i] = sd_of(cols[i]);
    agg.median[i] = median_of(cols[i]);
  }
  return agg;
}

BudgetReport budget_report(const ExperimentConfig& c) {
  const int q = problem_dimension(c);
  BudgetReport rep;
  rep.draws_per_objective = 1;
  if (c.problem == ProblemKind::Logistic) {
    std::uint64_t rows = 1;
    for (int f = 0; f < c.logistic.factors; ++f) rows *= c.logistic.levels.size();
    rep.draws_per_objective = rows;
  }
  const auto T = static_cast<std::uint64_t>(c.method.iterations);
  const auto B = static_cast<std::uint64_t>(resolved_batch(c));
  if (c.method.type == "grid") {
    rep.objective_draws_per_replication =
        c.method.grid.total_points() * c.method.grid.samples_per_point;
  } else if (c.method.type == "kw") {
    rep.objective_draws_per_replication = T * 2 * static_cast<std::uint64_t>(q) * B;
  } else {
    rep.objective_draws_per_replication = T * B;
  }
  rep.raw_draws_per_replication = rep.objective_draws_per_replication * rep.draws_per_objective;
  rep.total_raw_draws = rep.raw_draws_per_replication * static_cast<std::uint64_t>(c.replications);
  return rep;
}

namespace {

struct RepOutput {
  ReplicationRecord rec;
  std::vector<Eigen::VectorXd> trajectory;  // only when captured
};

UpdateRule rule_from_type(const std::string& type) {
  if (type == "rm") return UpdateRule::RM;
  if (type == "kw") return UpdateRule::KW;
  if (type == "newton") return UpdateRule::Newton;
  return UpdateRule::Adadelta;
}

StepSchedule schedule_from(const MethodSpec& m) {
  return m.constant_step ? StepSchedule::constant(m.epsilon0)
                         : StepSchedule::power_law(m.epsilon0, m.tau);
}

RepOutput run_one(const ExperimentConfig& cfg, int r, const Eigen::MatrixXd* design,
                  bool capture_trajectory) {
  const int q = problem_dimension(cfg);
  RepOutput out;
  ReplicationRecord& rec = out.rec;
  rec.replication = r;
  rec.final_iterate = Eigen::VectorXd::Constant(q, kNaN);
  rec.polyak_iterate = Eigen::VectorXd::Constant(q, kNaN);
  rec.window_iterate = Eigen::VectorXd::Constant(q, kNaN);
  rec.reference_theta = Eigen::VectorXd::Constant(q, kNaN);

  const std::uint64_t seed_r = derive_seed(cfg.base_seed, static_cast<std::uint64_t>(r));
  try {
    std::unique_ptr<ExpectationProblem> owned;
    const LogisticContourProblem* contour = nullptr;
    if (cfg.problem == ProblemKind::Gaussian) {
      owned = std::make_unique<GaussianTailProblem>(cfg.gaussian.threshold, cfg.gaussian.sigma);
    } else if (cfg.problem == ProblemKind::Quadratic) {
      owned = std::make_unique<DeterministicQuadraticProblem>(cfg.quadratic.dim);
    } else {
      Rng rng_y(derive_seed(seed_r, 1));
      Eigen::VectorXd y_obs = simulate_response(*design, cfg.logistic.theta_star, rng_y);
      auto problem = std::make_unique<LogisticContourProblem>(*design, std::move(y_obs));
      contour = problem.get();
      owned = std::move(problem);
    }

    // The logistic target is the upper probability over the assertion: the
    // negated contour is minimized subject to the half-space box.
    NegatedObjective negated(*owned);
    const ExpectationProblem& search_target =
        cfg.problem == ProblemKind::Logistic ? static_cast<const ExpectationProblem&>(negated)
                                             : *owned;
    const ExpectationProblem& eval_target = *owned;

    std::optional<BoxConstraint> box = cfg.method.box;
    if (cfg.problem == ProblemKind::Logistic && !box) {
      Eigen::VectorXd lower = Eigen::VectorXd::Constant(q, -kInf);
      lower[cfg.logistic.assertion_coord] = 0.0;
      box.emplace(std::move(lower), Eigen::VectorXd::Constant(q, kInf));
    }

    MleResult reference;
    if (contour) {
      reference = constrained_mle(*design, contour->y_obs(), cfg.logistic.assertion_coord);
      rec.reference_theta = reference.theta_hat;
    }

    if (cfg.method.type == "grid") {
      const GridMode mode =
          cfg.problem == ProblemKind::Logistic ? GridMode::Max : GridMode::Min;
      const GridResult gr =
          grid_search(eval_target, cfg.method.grid, mode, derive_seed(seed_r, 2));
      rec.final_iterate = gr.theta_best;
      rec.polyak_iterate = gr.theta_best;
      rec.window_iterate = gr.theta_best;
      rec.grid_value_best = gr.value_best;
      rec.samples_used = gr.raw_draws;
    } else {
      Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(q);
      if (cfg.method.theta0) {
        theta0 = *cfg.method.theta0;
      } else if (cfg.method.theta0_policy == "constrained-mle") {
        theta0 = reference.theta_hat;
      }
      if (box) theta0 = box->project(theta0);

      RunOptions opts;
      opts.box = box;
      opts.batch_size = resolved_batch(cfg);
      opts.clip_bound = cfg.method.clip;
      opts.iterations = cfg.method.iterations;
      opts.average_window = cfg.method.average_window;
      opts.rng_seed = derive_seed(seed_r, 2);
      opts.fd.c0 = cfg.method.c0;
      opts.fd.gamma = cfg.method.gamma;
      opts.fd.coupling = cfg.method.coupling;
      opts.adadelta_rho = cfg.method.rho;
      opts.adadelta_eta = cfg.method.eta;

      const Trajectory traj = run(search_target, rule_from_type(cfg.method.type),
                                  schedule_from(cfg.method), theta0, opts);
      rec.final_iterate = traj.final_iterate();
      rec.polyak_iterate = traj.running_mean();
      rec.window_iterate = traj.window_mean();
      rec.samples_used = traj.samples_used();
      if (capture_trajectory) out.trajectory = traj.iterates();
    }

    Rng rng_eval(derive_seed(seed_r, 3));
    rec.value_at_final =
        monte_carlo_value(eval_target, rec.final_iterate, cfg.eval_draws, rng_eval).value;
    rec.value_at_polyak =
        monte_carlo_value(eval_target, rec.polyak_iterate, cfg.eval_draws, rng_eval).value;
    rec.value_at_window =
        monte_carlo_value(eval_target, rec.window_iterate, cfg.eval_draws, rng_eval).value;

    if (contour) {
      Rng rng_ref(derive_seed(seed_r, 4));
      rec.reference_value = contour->contour(reference.theta_hat, cfg.eval_draws, rng_ref);
      const std::uint64_t attempts = contour->mle_attempts();
      rec.mle_failure_rate =
          attempts > 0 ? static_cast<double>(contour->mle_failures()) / attempts : kNaN;
    }
  } catch (const std::exception& e) {
    rec.aborted = true;
    rec.abort_message = e.what();
    rec.final_iterate = Eigen::VectorXd::Constant(q, kNaN);
    rec.polyak_iterate = Eigen::VectorXd::Constant(q, kNaN);
    rec.window_iterate = Eigen::VectorXd::Constant(q, kNaN);
    rec.samples_used = 0;
  }
  return out;
}

void write_outputs(const ExperimentConfig& cfg, const RunSummary& summary,
                   const std::vector<RepOutput>& outputs) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::path(cfg.output_dir) / cfg.name;
  fs::create_directories(dir);
  const int q = summary.dimension;

  {
    std::ofstream f(dir / "replications.csv", std::ios::binary);
    f << "replication,aborted,abort_message";
    for (const auto& col : value_columns(q)) f << ',' << col;
    f << '\n';
    for (const auto& rec : summary.replications) {
      f << rec.replication << ',' << (rec.aborted ? 1 : 0) << ','
        << csv_quote(rec.abort_message);
      for (double v : record_values(rec, q)) f << ',' << fmt(v);
      f << '\n';
    }
  }

  {
    const Aggregates agg = summarize(summary);
    std::ofstream f(dir / "aggregates.csv", std::ios::binary);
    f << "stat";
    for (const auto& col : agg.columns) f << ',' << col;
    f << '\n';
    auto row = [&](const char* name, const std::vector<double>& xs) {
      f << name;
      for (double v : xs) f << ',' << fmt(v);
      f << '\n';
    };
    row("mean", agg.mean);
    row("sd", agg.sd);
    row("median", agg.median);
  }

  if (cfg.write_trajectories && cfg.method.type != "grid") {
    const StepSchedule sched = schedule_from(cfg.method);
    std::ofstream f(dir / "trajectory.csv", std::ios::binary);
    f << "replication,t";
    for (int i = 1; i <= q; ++i) f << ",theta_" << i;
    for (int i = 1; i <= q; ++i) f << ",thetabar_" << i;
    f << ",eps_t,samples_cum\n";
    for (const auto& out : outputs) {
      if (out.trajectory.empty()) continue;
      const std::uint64_t per_iter = out.rec.samples_used / out.trajectory.size();
      Eigen::VectorXd bar = Eigen::VectorXd::Zero(q);
      for (std::size_t t1 = 0; t1 < out.trajectory.size(); ++t1) {
        const int t = static_cast<int>(t1) + 1;
        bar += (out.trajectory[t1] - bar) / static_cast<double>(t);
        f << out.rec.replication << ',' << t;
        for (int i = 0; i < q; ++i) f << ',' << fmt(out.trajectory[t1][i]);
        for (int i = 0; i < q; ++i) f << ',' << fmt(bar[i]);
        const double eps = cfg.method.type == "adadelta" ? 0.0 : sched.at(t);
        f << ',' << fmt(eps) << ',' << per_iter * static_cast<std::uint64_t>(t) << '\n';
      }
    }
  }

  {
    char hash_buf[32];
    std::snprintf(hash_buf, sizeof hash_buf, "%016llx",
                  static_cast<unsigned long long>(config_hash(cfg)));
    json manifest = {{"name", cfg.name},
                     {"version", kVersion},
                     {"base_seed", cfg.base_seed},
                     {"replications", cfg.replications},
                     {"aborted", summary.aborted_count},
                     {"config_hash", hash_buf},
                     {"config", config_to_json(cfg)}};
    std::ofstream f(dir / "manifest.json", std::ios::binary);
    f << manifest.dump(2) << '\n';
  }
}

}  // namespace

RunSummary run_experiment(const ExperimentConfig& cfg) {
  RunSummary summary;
  summary.config = cfg;
  summary.dimension = problem_dimension(cfg);

  Eigen::MatrixXd design;
  if (cfg.problem == ProblemKind::Logistic)
    design = full_factorial_design(cfg.logistic.levels, cfg.logistic.factors);

  const int R = cfg.replications;
  std::vector<RepOutput> outputs(static_cast<std::size_t>(R));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (;;) {
      const int r = next.fetch_add(1);
      if (r >= R) break;
      const bool capture = cfg.write_trajectories && cfg.method.type != "grid" &&
                           r < cfg.trajectory_reps;
      outputs[static_cast<std::size_t>(r)] =
          run_one(cfg, r, design.size() > 0 ? &design : nullptr, capture);
    }
  };
  const int workers = std::min(cfg.workers, R);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  summary.replications.reserve(static_cast<std::size_t>(R));
  for (const auto& out : outputs) {
    if (out.rec.aborted) ++summary.aborted_count;
    summary.replications.push_back(out.rec);
  }

  if (!cfg.output_dir.empty()) write_outputs(cfg, summary, outputs);
  return summary;
}

std::vector<ReplicationRecord> read_replications_csv(const std::string& path, int dimension) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_replications_csv: cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("read_replications_csv: empty file");
  const int q = dimension;
  const std::size_t expected = 3 + value_columns(q).size();
  std::vector<ReplicationRecord> records;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != expected)
      throw std::runtime_error("read_replications_csv: malformed row in " + path);
    ReplicationRecord rec;
    std::size_t i = 0;
    rec.replication = std::stoi(fields[i++]);
    rec.aborted = fields[i++] == "1";
    rec.abort_message = fields[i++];
    auto take_vec = [&] {
      Eigen::VectorXd v(q);
      for (int c = 0; c < q; ++c) v[c] = std::strtod(fields[i++].c_str(), nullptr);
      return v;
    };
    auto take = [&] { return std::strtod(fields[i++].c_str(), nullptr); };
    rec.final_iterate = take_vec();
    rec.polyak_iterate = take_vec();
    rec.window_iterate = take_vec();
    rec.value_at_final = take();
    rec.value_at_polyak = take();
    rec.value_at_window = take();
    rec.reference_value = take();
    rec.reference_theta = take_vec();
    rec.grid_value_best = take();
    rec.samples_used = static_cast<std::uint64_t>(take());
    rec.mle_failure_rate = take();
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace lowexp
