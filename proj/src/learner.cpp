#include "learner.hpp"

#include <cmath>
#include <limits>

namespace mislid::learner {

LearnerState::LearnerState(LearnerKind kind, int num_arms) : kind_(kind) {
    if (num_arms < 1) {
        throw parameter_error("learner needs at least one arm");
    }
    gains_ = Vec::Zero(num_arms);
}

void LearnerState::weights_into(Vec& w) const {
    const auto K = gains_.size();
    w.resize(K);
    if (kind_ == LearnerKind::ftl) {
        w.setZero();
        Eigen::Index best = 0;
        gains_.maxCoeff(&best);
        w[best] = 1.0;
        return;
    }
    const double top = gains_.maxCoeff();
    if (gap_ <= 0.0 || K == 1) {
        // zero gap means an infinite learning rate: uniform over the leaders
        w.setZero();
        int leaders = 0;
        for (Eigen::Index k = 0; k < K; ++k) {
            if (gains_[k] == top) {
                w[k] = 1.0;
                ++leaders;
            }
        }
        w /= static_cast<double>(leaders);
        return;
    }
    const double eta = std::log(static_cast<double>(K)) / gap_;
    w = ((gains_.array() - top) * eta).exp();
    w /= w.sum();
}

model::Weights LearnerState::propose() const {
    Vec w;
    weights_into(w);
    return model::Weights(std::move(w));
}

void LearnerState::update(const Vec& gain) {
    if (gain.size() != gains_.size()) {
        throw parameter_error("gain vector size must match the number of arms");
    }
    if (!gain.allFinite()) {
        throw numeric_error("gain vector must be finite");
    }
    if (kind_ == LearnerKind::adahedge) {
        const auto K = gains_.size();
        Vec w(K);
        weights_into(w);
        const double expected = w.dot(gain);

        // mix gain at the current rate, shifted by the best supported gain so
        // every exponent is non-positive
        double shift = -std::numeric_limits<double>::infinity();
        for (Eigen::Index k = 0; k < K; ++k) {
            if (w[k] > 0.0 && gain[k] > shift) shift = gain[k];
        }
        double mix;
        if (gap_ <= 0.0 || K == 1) {
            mix = shift;
        } else {
            const double eta = std::log(static_cast<double>(K)) / gap_;
            double sum = 0.0;
            for (Eigen::Index k = 0; k < K; ++k) {
                if (w[k] > 0.0) sum += w[k] * std::exp(eta * (gain[k] - shift));
            }
            mix = shift + std::log(sum) / eta;
        }
        const double delta = mix - expected;
        if (delta > 0.0) gap_ += delta;
    }
    gains_ += gain;
    ++t_;
}

double regret(const LearnerState& state, const std::vector<Vec>& gains_history) {
    if (static_cast<long>(gains_history.size()) != state.rounds()) {
        throw parameter_error("history length must match the rounds played");
    }
    LearnerState replay(state.kind(), state.num_arms());
    double realized = 0.0;
    for (const Vec& g : gains_history) {
        realized += replay.propose().w.dot(g);
        replay.update(g);
    }
    if (gains_history.empty()) return 0.0;
    return replay.cumulative_gains().maxCoeff() - realized;
}

} // namespace mislid::learner
