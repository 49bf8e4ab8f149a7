#pragma once

#include "anchormdp/model_based.hpp"
#include "anchormdp/model_io.hpp"
#include "anchormdp/q_learning.hpp"

#include <iosfwd>
#include <string>

namespace anchormdp {

enum class Algorithm { model_based, q_learning };

Algorithm parse_algorithm(std::string_view name);
std::string_view to_string(Algorithm algo);

/// Sweep description. Config files use these field names as keys.
struct ExperimentConfig {
    // model
    Index states = 50;
    Index actions = 3;
    Index feature_dim = 5;
    double gamma = 0.9;
    std::uint64_t model_seed = 1;
    double xi = 0.0;
    // algorithm
    Algorithm algorithm = Algorithm::model_based;
    std::vector<std::int64_t> grid;  ///< N values (model_based) or T values (q_learning)
    int trials = 1;
    std::uint64_t seed = 0;
    double eps_opt = 1e-6;
    ScheduleKind schedule = ScheduleKind::linearly_rescaled;
    double c1 = 1.0;
    double c2 = 1.0;
    // execution
    std::string output;
    unsigned workers = 1;
};

/// Throws PreconditionError naming the offending field.
void validate_config(const ExperimentConfig& config);

/// `#` comments, one `key = value` per line; grid is a comma-separated list.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

struct RunRecord {
    Algorithm algo = Algorithm::model_based;
    Index states = 0;
    Index actions = 0;
    Index feature_dim = 0;
    double gamma = 0.0;
    double xi = 0.0;
    std::int64_t param = 0;
    std::uint64_t seed = 0;
    double error = 0.0;
    std::int64_t samples = 0;
    double wall_ms = 0.0;
};

/// The model a sweep runs on, with its exact optimum.
struct Experiment {
    SimplexModel simplex;  ///< linear reference model and its anchors
    TabularMDP true_mdp;   ///< perturbed when xi > 0
    QFunction q_star;
};

Experiment prepare_experiment(const ExperimentConfig& config);

/// Seed of trial j: derive(config.seed, j).
std::uint64_t trial_seed(std::uint64_t base_seed, int trial);

/// Runs one (grid value, trial) cell. Model-based cells report
/// evaluate_policy_error of the returned policy; Q-learning cells report
/// ||Q_T - Q*||_inf.
RunRecord run_cell(const Experiment& experiment, const ExperimentConfig& config,
                   std::int64_t param, int trial);

/// Every (grid value, trial) cell, run on `config.workers` threads and
/// sorted by (param, seed). Writes CSV to config.output when it is non-empty.
std::vector<RunRecord> sweep(const ExperimentConfig& config);
std::vector<RunRecord> sweep(const Experiment& experiment, const ExperimentConfig& config);

inline constexpr const char* kCsvHeader = "algo,S,A,K,gamma,xi,param,seed,error,samples,wall_ms";

void write_records_csv(std::ostream& out, const std::vector<RunRecord>& records);
std::vector<RunRecord> read_records_csv(std::istream& in);

enum class Aggregate { median };

/// Aggregated error per grid value, ascending in param.
std::vector<std::pair<std::int64_t, double>> aggregate_errors(const std::vector<RunRecord>& records,
                                                              Aggregate aggregate = Aggregate::median);

/// Least-squares slope of log(aggregate error) against log(param). Needs at
/// least three distinct params and positive aggregates.
double fit_loglog_slope(const std::vector<RunRecord>& records,
                        Aggregate aggregate = Aggregate::median);

double median(std::vector<double> values);

// ---------------------------------------------------------------------------
// Model verification

struct InvariantCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Runs the structural and property checks on a model file's contents.
/// Randomized checks are driven by `seed`.
std::vector<InvariantCheck> verify_model(const RawModel& raw, std::uint64_t seed);

}  // namespace anchormdp
