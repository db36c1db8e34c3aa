#pragma once

#include "perfopt/optimizers.hpp"
#include "perfopt/scenarios.hpp"

#include <json.hpp>

#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace perfopt {

struct AlgorithmSpec {
    std::string name;   // two_stage, dfo, greedy_sgd, lazy_sgd, rrm
    std::string label;  // column value in the outputs; defaults to name
    std::map<std::string, double> numbers;
    std::map<std::string, std::string> strings;
    std::vector<double> theta0;  // empty: scenario default; size 1: fill value
};

struct ExperimentConfig {
    std::string scenario;
    ScenarioParams params;
    std::optional<std::uint64_t> scenario_seed;  // pins a random instance across trials
    std::vector<AlgorithmSpec> algorithms;
    std::size_t trials = 50;
    std::vector<std::size_t> checkpoints;
    std::uint64_t seed = 0;
    std::string output = "results";
    std::string evaluation = "mc";  // "mc" or "closed_form"
    std::size_t eval_samples = 10000;
    std::string metric;  // empty: scenario default

    /// round(10^(2 + k/2)) for k = 0..8.
    static std::vector<std::size_t> default_checkpoints();
};

/// Parses a YAML experiment file. Errors carry "path:line:column: message".
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");

struct TrialRow {
    std::string algorithm;
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    std::size_t samples = 0;
    double theta_norm = 0.0;
    std::string metric_name;
    std::optional<double> metric_value;
    std::string flag;
    Vector theta;  // not written to the CSV
};

struct AggregateCell {
    std::string algorithm;
    std::size_t samples = 0;
    std::size_t n = 0;
    std::size_t failed = 0;
    std::optional<double> median, mean, ci_low, ci_high;
};

struct ExperimentResult {
    ExperimentConfig config;
    std::string metric;
    std::vector<TrialRow> rows;  // ordered by trial, algorithm, checkpoint
    std::vector<AggregateCell> cells;
    std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> hyperparameters;
    Scenario scenario;  // instance built from the master seed
};

/// Runs every trial (in parallel when jobs > 1) and aggregates. Output is
/// independent of the job count.
ExperimentResult run_experiment(const ExperimentConfig& cfg, std::size_t jobs = 1);

void write_csv(const ExperimentResult& result, std::ostream& out);
nlohmann::ordered_json aggregate_json(const ExperimentResult& result);
/// Writes results.csv and aggregate.json into dir (created if missing).
void write_outputs(const ExperimentResult& result, const std::string& dir);

/// Percentile bootstrap interval of the median.
std::pair<double, double> bootstrap_ci(const std::vector<double>& values, double level = 0.95,
                                       std::size_t resamples = 2000, std::uint64_t seed = 0);

/// Type-7 sample quantile of sorted data.
double quantile_sorted(const std::vector<double>& sorted, double p);
double median(std::vector<double> values);

/// Job count: the explicit value if given, else PERFOPT_JOBS, else 1.
std::size_t resolve_jobs(std::optional<std::size_t> explicit_jobs);

}  // namespace perfopt
