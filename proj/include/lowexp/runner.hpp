#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "lowexp/grid.hpp"
#include "lowexp/sa.hpp"

namespace lowexp {

// Invalid or missing configuration; the message names the offending field.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ProblemKind { Gaussian, Quadratic, Logistic };

struct GaussianSpec {
  double threshold = 2.0;
  double sigma = 2.0;
};

struct QuadraticSpec {
  int dim = 1;
};

struct LogisticSpec {
  std::vector<double> levels;
  int factors = 0;
  Eigen::VectorXd theta_star;
  int assertion_coord = 1;  // coordinate whose positivity defines the assertion
  std::uint64_t contour_draws = 100;  // default per-iteration batch for kw
};

struct MethodSpec {
  std::string type = "rm";  // rm | kw | newton | adadelta | grid
  double epsilon0 = 1.0;
  double tau = 0.5;
  bool constant_step = false;
  double c0 = 1.0;
  double gamma = 0.0;
  int batch = 0;  // 0 -> problem default
  int iterations = 1000;
  int average_window = 0;  // 0 -> iterations / 10
  std::optional<double> clip;
  std::optional<BoxConstraint> box;
  std::optional<Eigen::VectorXd> theta0;
  std::string theta0_policy = "zero";  // zero | constrained-mle
  double rho = 0.995;
  double eta = 1e-6;
  Coupling coupling = Coupling::Independent;
  GridSpec grid;
};

struct ExperimentConfig {
  std::string name = "experiment";
  ProblemKind problem = ProblemKind::Gaussian;
  GaussianSpec gaussian;
  QuadraticSpec quadratic;
  LogisticSpec logistic;
  MethodSpec method;
  int replications = 1;
  std::uint64_t base_seed = 0;
  int workers = 1;
  std::uint64_t eval_draws = 1000;
  bool write_trajectories = false;
  int trajectory_reps = 100;
  std::string output_dir;  // empty -> in-memory only
};

ExperimentConfig parse_config(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);
std::uint64_t config_hash(const ExperimentConfig& config);

struct ReplicationRecord {
  int replication = 0;
  bool aborted = false;
  std::string abort_message;
  Eigen::VectorXd final_iterate;
  Eigen::VectorXd polyak_iterate;
  Eigen::VectorXd window_iterate;
  double value_at_final = std::numeric_limits<double>::quiet_NaN();
  double value_at_polyak = std::numeric_limits<double>::quiet_NaN();
  double value_at_window = std::numeric_limits<double>::quiet_NaN();
  double reference_value = std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd reference_theta;
  double grid_value_best = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t samples_used = 0;  // raw simulation draws in the search itself
  double mle_failure_rate = std::numeric_limits<double>::quiet_NaN();
};

struct RunSummary {
  ExperimentConfig config;
  int dimension = 0;
  std::vector<ReplicationRecord> replications;
  int aborted_count = 0;
};

// Column-wise mean / sd (n-1 divisor) / median over non-aborted replications.
struct Aggregates {
  std::vector<std::string> columns;
  std::vector<double> mean;
  std::vector<double> sd;
  std::vector<double> median;
};

Aggregates summarize(const RunSummary& summary);

double mean_of(const std::vector<double>& xs);
double sd_of(const std::vector<double>& xs);
double median_of(std::vector<double> xs);

RunSummary run_experiment(const ExperimentConfig& config);

// Reads back a replications.csv produced by run_experiment (round-trip checks).
std::vector<ReplicationRecord> read_replications_csv(const std::string& path, int dimension);

struct BudgetReport {
  std::uint64_t objective_draws_per_replication = 0;
  std::uint64_t raw_draws_per_replication = 0;
  std::uint64_t total_raw_draws = 0;
  std::uint64_t draws_per_objective = 1;
};

// Deterministic search-budget accounting (evaluation draws excluded).
BudgetReport budget_report(const ExperimentConfig& config);

std::vector<std::string> preset_names();
nlohmann::json preset_config(const std::string& name);

}  // namespace lowexp
