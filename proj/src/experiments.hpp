// Experiment harness: instance generators for the three simulated studies,
// deterministic Monte Carlo execution over a list of algorithm
// configurations, and report emission (jsonl, csv, per-algorithm summary).
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "baselines.hpp"
#include "mislid.hpp"

namespace mislid::experiments {

using model::Instance;
using model::TopMQuery;

// A generated problem: the instance (which embeds the model set handed to
// the algorithms), the query, and instance-level metadata for reports.
struct GeneratedInstance {
    Instance instance;
    TopMQuery query;
    // Gap between the m-th and (m+1)-th true means.
    double gap = 0.0;
    // True deviation from linearity, which the model set's epsilon may
    // understate when the study probes a misspecified user input.
    double epsilon_star = 0.0;
};

// Study (A): K=10, d=5, m=3. A random normalized linear instance plus a
// deviation of size epsilon concentrated on the fourth-best arm, so any
// epsilon above the gap swaps the third and fourth arms. The mean bound is
// set just above the realized means.
GeneratedInstance gen_experiment_a(std::uint64_t seed, double epsilon,
                                   double delta = 0.05,
                                   bool row_normalize = false);

// Study (B): K=15, d=8, m=3. A random normalized instance whose deviation
// has infinity-norm exactly epsilon_star, while the model set carries the
// user-supplied epsilon_user (a misspecified belief when smaller).
GeneratedInstance gen_experiment_b(std::uint64_t seed, double epsilon_user,
                                   double epsilon_star, double delta = 0.05,
                                   bool row_normalize = false);

// Study (C): the study-(B) model with epsilon_user = epsilon_star = 1, used
// to compare gain modes.
GeneratedInstance gen_experiment_c(std::uint64_t seed, double delta = 0.05);

// One algorithm entry of an experiment: a display name plus the tagged
// configuration (the baseline config is read when algorithm != "mislid").
struct AlgorithmSpec {
    std::string name;
    std::string algorithm = "mislid"; // "mislid" | "lucb" | "lingape"
    algo::AlgoConfig mislid;
    baselines::BaselineConfig baseline;
};

struct GeneratorSpec {
    std::string name = "exp_a"; // "exp_a" | "exp_b" | "exp_c" | "custom"
    double epsilon = 0.0;       // exp_a
    double epsilon_user = 1.0;  // exp_b
    double epsilon_star = 1.0;  // exp_b
    bool row_normalize = false;
    std::string file; // custom: instance JSON path
    int m = 3;        // custom only; the studies fix m = 3
};

struct ExperimentSpec {
    GeneratorSpec generator;
    std::vector<AlgorithmSpec> algorithms;
    long repetitions = 1;
    std::uint64_t base_seed = 0;
    double delta = 0.05;
};

// Parses the experiment description: {generator, algorithms, repetitions,
// seeds, delta}. Algorithm entries default their display names to the
// algorithm plus distinguishing options; duplicates get an index suffix.
ExperimentSpec spec_from_json(const std::string& text);

// Builds the problem an ExperimentSpec describes (the instance is fixed once
// per base seed; repetition randomness is reward noise and algorithm
// internals only).
GeneratedInstance generate(const ExperimentSpec& spec);

// Injective per-run seed derivation for a fixed base seed; stream 0 is the
// instance, stream 1 + rep * 2^16 + algo the runs.
std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t stream);

struct RunRecord {
    std::string algorithm;
    long repetition = 0;
    algo::RunResult result;
    std::string error; // empty on success; failed runs count as incomplete
};

// Executes repetitions x algorithms runs with deterministically derived
// seeds. Individual run failures are recorded, not fatal. jobs > 1 fans
// repetitions out across threads; record content is schedule-independent.
std::vector<RunRecord> run_monte_carlo(const ExperimentSpec& spec, int jobs = 1);

void write_jsonl(const std::vector<RunRecord>& records, std::ostream& out);
std::vector<RunRecord> read_jsonl(std::istream& in);
void write_csv(const std::vector<RunRecord>& records, std::ostream& out);

struct AlgorithmSummary {
    std::string algorithm;
    long runs = 0;
    double mean_tau = 0.0;
    double std_tau = 0.0; // sample standard deviation
    double error_rate = 0.0;
    long incomplete = 0;
    // Boxplot quantiles of tau (linear interpolation).
    double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

// Per-algorithm aggregation in first-seen order; every statistic is
// recomputable from the jsonl records.
std::vector<AlgorithmSummary> summarize(const std::vector<RunRecord>& records);
std::string summary_to_json(const std::vector<AlgorithmSummary>& summaries);
void write_summary(const std::vector<RunRecord>& records, std::ostream& out);

// Writes results.jsonl, summary.json and instance.json into out_dir.
void write_outputs(const std::vector<RunRecord>& records,
                   const GeneratedInstance& problem, const std::string& out_dir);

} // namespace mislid::experiments
