// The MisLid identification algorithm: forced-exploration initialization,
// projected estimation, a learner-driven sampling rule with optimistic gains,
// and a self-normalized stopping rule, plus the practical variations
// (geometric stopping grid, restricted sampling-side arm set, non-optimistic
// gains).
#pragma once

#include <cstdint>
#include <vector>

#include "geometry.hpp"
#include "learner.hpp"
#include "model.hpp"
#include "rng.hpp"

namespace mislid::algo {

using model::FeatureMatrix;
using model::Instance;
using model::ModelSet;
using model::SufficientStats;
using model::TopMQuery;
using model::Vec;

enum class StoppingMode { theoretical, heuristic };

struct StoppingConfig {
    StoppingMode mode = StoppingMode::heuristic;
    // Stopping checks run at rounds t1, ceil(gamma t1), ceil(gamma^2 t1), ...
    // gamma = 1 checks every round. The practical range is [1, 1.3].
    double geometric_grid_gamma = 1.0;
};

enum class GainMode { optimistic, aggressive, empirical };

struct AlgoConfig {
    GainMode gain_mode = GainMode::optimistic;
    learner::LearnerKind learner_kind = learner::LearnerKind::adahedge;
    StoppingConfig stopping;
    // Restrict the sampling-side closest-alternative search to a working set
    // of at most m + 2d arms (never applied to the stopping check).
    bool restricted_arms = false;
    long safety_cap = 10'000'000;
};

struct RunResult {
    long tau = 0;
    std::vector<int> answer;
    bool correct = false;
    // False when the safety cap ended the run before the stopping rule fired;
    // answer then holds the current estimate's top m.
    bool complete = true;
    std::uint64_t seed = 0;
    double wall_ms = 0.0;
    double init_ms = 0.0;
    double stopping_ms = 0.0;
    double sampling_ms = 0.0;
    double estimation_ms = 0.0;
    long stopping_checks = 0;
};

// Round-robin schedule over a barycentric spanner of the feature rows,
// truncated at the first prefix whose design matrix has minimum eigenvalue
// at least 2L^2, L being the largest feature norm. Throws numeric_error when
// the rows do not span the feature space.
std::vector<int> init_sequence(const FeatureMatrix& features);

// Threshold beta_{t,delta} for the stopping statistic. Heuristic mode uses
// ln((1+ln(t+1))/delta); theoretical mode takes the minimum of the
// unstructured and linear concentration branches.
double stopping_threshold(long t, const TopMQuery& query, const ModelSet& model,
                          StoppingMode mode);

// Exploration bonus c_t^k: the minimum of the linear branch
// 8(LK+1)^2 eps^2 + 4 alpha^lin |phi_k|^2_{V^-1}, the unstructured branch
// 2 alpha^uns / N^k (infinite at zero count), and the cap 4M^2. Requires an
// invertible design.
double bonus(int k, const SufficientStats& stats, const ModelSet& model);

// Per-arm gain coefficients fed to the learner; the played gain is their
// inner product with the weight vector.
Vec gain_vector(const geometry::ProjectedEstimate& estimate,
                const geometry::AlternativeSolution& alt, const Vec& bonuses,
                GainMode mode);

enum class Phase { initializing, running, stopped };

// One identification run's mutable state. step() advances a single round
// against the environment; run() drives it to completion.
class AlgorithmState {
public:
    AlgorithmState(const ModelSet& model, TopMQuery query, AlgoConfig config,
                   std::uint64_t seed);

    Phase phase() const { return phase_; }
    long rounds() const { return stats_.rounds(); }
    const SufficientStats& stats() const { return stats_; }
    const geometry::ProjectedEstimate& estimate() const;
    const std::vector<int>& answer() const;

    // Executes one round: an initialization pull, or a stopping check (when
    // due) followed by learner proposal, gain update, a sampled pull, and
    // re-estimation. Throws precondition_error once stopped.
    void step(const Instance& env);

    // Value of the stopping statistic inf over alternatives of
    // |mu_tilde - lambda|^2_{D_N}, and the threshold side 2 beta. Exposed for
    // instrumentation; requires the running phase.
    double stopping_statistic();
    double stopping_threshold_now() const;

    double stopping_ms = 0.0;
    double sampling_ms = 0.0;
    double estimation_ms = 0.0;
    long stopping_checks = 0;

private:
    void initialization_pull(const Instance& env);
    void observe(const Instance& env, int arm);
    void reproject();
    std::vector<geometry::HalfSpacePair> sampling_pairs(const std::vector<int>& ans);
    void remember_pair(geometry::HalfSpacePair pair);

    const ModelSet* model_;
    TopMQuery query_;
    AlgoConfig config_;
    Rng rng_;
    SufficientStats stats_;
    geometry::ProjectedEstimate estimate_;
    learner::LearnerState learner_;
    geometry::AlternativeFinder sampling_finder_;
    geometry::AlternativeFinder stopping_finder_;
    std::vector<int> init_order_;
    std::size_t init_done_ = 0;
    Phase phase_ = Phase::initializing;
    std::vector<int> answer_;
    std::vector<int> recent_arms_;
    double grid_point_ = 0.0;
    long next_check_ = 0;
    Vec bonuses_;
    Vec gains_;
};

// Full identification run with the given seed; deterministic given
// (env, query, model, config, seed).
RunResult run(const Instance& env, const TopMQuery& query, const ModelSet& model,
              const AlgoConfig& config, std::uint64_t seed);

} // namespace mislid::algo
