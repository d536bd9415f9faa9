// No-regret learners on the probability simplex, driving the weight sequence
// of the sampling rule: AdaHedge adapts its learning rate to the observed
// gain range; Follow-The-Leader plays the greedy corner.
#pragma once

#include <vector>

#include "model.hpp"

namespace mislid::learner {

using model::Vec;

enum class LearnerKind { adahedge, ftl };

// Single-owner mutable state. Gains are accumulated (maximized, never
// losses); proposals are derived from the cumulative gains.
class LearnerState {
public:
    LearnerState(LearnerKind kind, int num_arms);

    // Current proposal. AdaHedge: softmax of cumulative gains at rate
    // ln(K) / mixability gap, degenerating to uniform over the leaders while
    // the gap is zero. FTL: point mass on the lowest-index leader.
    model::Weights propose() const;

    // Feed one gain vector. AdaHedge also accrues the round's mixability gap
    // (mix gain minus expected gain) through a shifted log-sum-exp.
    void update(const Vec& gain);

    LearnerKind kind() const { return kind_; }
    int num_arms() const { return static_cast<int>(gains_.size()); }
    const Vec& cumulative_gains() const { return gains_; }
    double cumulative_mixability_gap() const { return gap_; }
    long rounds() const { return t_; }

private:
    void weights_into(Vec& w) const;

    LearnerKind kind_;
    Vec gains_;
    double gap_ = 0.0;
    long t_ = 0;
};

// Hindsight regret of the proposals this learner makes on the given history:
// best simplex corner's cumulative gain minus the realized cumulative gain,
// computed by replaying a fresh state of the same kind. The history length
// must match the state's round count.
double regret(const LearnerState& state, const std::vector<Vec>& gains_history);

} // namespace mislid::learner
