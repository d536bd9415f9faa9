// Comparison algorithms: LUCB for unstructured Top-m identification and
// LinGapE, a gap-index algorithm that trusts the linear model outright and
// therefore loses correctness under large misspecification.
#pragma once

#include <cstdint>

#include "mislid.hpp"

namespace mislid::baselines {

using model::Instance;
using model::TopMQuery;
using model::Vec;

enum class BaselineAlgorithm { lucb, lingape };

struct BaselineConfig {
    BaselineAlgorithm algorithm = BaselineAlgorithm::lucb;
    // mode selects the exploration rate: heuristic shares the identification
    // threshold ln((1+ln(t+1))/delta); theoretical uses the union-bound rate
    // ln(5 K t^4 / (4 delta)). The grid gamma is ignored, both baselines test
    // stopping as a byproduct of every sampling round.
    algo::StoppingConfig stopping;
    // Stop once the critical pair is separated up to this slack; 0 demands
    // exact separation.
    double pac_epsilon = 0.0;
    long safety_cap = 10'000'000;
};

// The contested pair of a confidence-interval round: the empirical top-m
// member with the lowest LCB, the outsider with the highest UCB, and the
// width UCB(outsider) - LCB(member) the stopping rule compares to the slack.
struct CriticalPair {
    int weakest_member = -1;
    int strongest_outsider = -1;
    double gap_bound = 0.0;
};

// LUCB indices at radius sqrt(2 beta / N_k); ties resolve to the lowest arm.
CriticalPair lucb_critical_pair(const Vec& mu_hat, const Vec& counts,
                                double beta, int m);

// LinGapE's most ambiguous pair: maximizes the optimistic overtake
// mu[i] - mu[j] + width(i, j) over outsiders i and members j, with
// width(i, j) = sqrt(2 beta) |phi_i - phi_j| in the inverse-design norm.
CriticalPair lingape_critical_pair(const Vec& mu_hat, const model::Mat& vinv,
                                   const model::FeatureMatrix& features,
                                   double beta, int m);

// Classical LUCB: pull every arm once, then each round pull both ends of the
// critical pair until their intervals separate up to pac_epsilon.
algo::RunResult lucb_run(const Instance& env, const TopMQuery& query,
                         const BaselineConfig& config, std::uint64_t seed);

// LinGapE on the regularized least-squares estimate (no projection onto the
// misspecified model set): each round pulls the arm that most shrinks the
// critical pair's width.
algo::RunResult lingape_run(const Instance& env, const TopMQuery& query,
                            const BaselineConfig& config, std::uint64_t seed);

// Dispatch on config.algorithm.
algo::RunResult baseline_run(const Instance& env, const TopMQuery& query,
                             const BaselineConfig& config, std::uint64_t seed);

} // namespace mislid::baselines
