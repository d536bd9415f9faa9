#include "bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "geometry.hpp"

namespace mislid::bounds {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Floor applied to weights handed to the alternative solver, keeping the
// weighted design comfortably away from the singularity guard when the
// learner drives a coordinate toward zero. Small enough to move any value by
// far less than any usable tolerance.
constexpr double kWeightFloor = 1e-9;

std::vector<geometry::HalfSpacePair> boundary_pairs(const std::vector<int>& answer, int K) {
    std::vector<char> inside(static_cast<std::size_t>(K), 0);
    for (int j : answer) inside[static_cast<std::size_t>(j)] = 1;
    std::vector<geometry::HalfSpacePair> pairs;
    pairs.reserve(answer.size() * (static_cast<std::size_t>(K) - answer.size()));
    for (int i = 0; i < K; ++i) {
        if (inside[static_cast<std::size_t>(i)]) continue;
        for (int j : answer) pairs.push_back({i, j});
    }
    return pairs;
}

Vec floored(const Vec& w) {
    return w.cwiseMax(kWeightFloor);
}

// Inner minimum at a simplex point: half the squared weighted distance to
// the nearest half-space alternative.
double inner_value(geometry::AlternativeFinder& finder, const Vec& mu,
                   const std::vector<geometry::HalfSpacePair>& pairs, const Vec& omega) {
    finder.set_weights(floored(omega));
    return 0.5 * finder.closest(mu, pairs).value;
}

} // namespace

SaddleResult characteristic_value(const model::Instance& instance,
                                  const model::ModelSet& model_set, int m,
                                  double tol, long max_iter) {
    const Vec& mu = instance.mu;
    const int K = model_set.features.num_arms();
    if (mu.size() != K)
        throw parameter_error("characteristic_value: mean vector does not match the feature rows");
    if (!(tol > 0.0) || !std::isfinite(tol))
        throw parameter_error("characteristic_value: tolerance must be finite and positive");
    if (max_iter < 1) throw parameter_error("characteristic_value: max_iter must be positive");

    const std::vector<int> answer = model::top_m_answer(mu, m);
    const std::vector<geometry::HalfSpacePair> pairs = boundary_pairs(answer, K);

    // Separate solvers for the gain sweeps and the certificate sweeps so each
    // keeps a coherent warm-start cache for its own weight sequence.
    geometry::AlternativeFinder responder(model_set);
    geometry::AlternativeFinder certifier(model_set);
    learner::LearnerState state(learner::LearnerKind::adahedge, K);

    // Running averages over the whole run and over the current epoch (epochs
    // restart at powers of two). Both yield valid certificates; the epoch
    // one drops the early transient.
    Vec gain_sum = Vec::Zero(K);
    Vec omega_sum = Vec::Zero(K);
    Vec epoch_gain_sum = Vec::Zero(K);
    Vec epoch_omega_sum = Vec::Zero(K);
    long epoch_start = 1;

    double upper = kInf;
    double best_lower = -kInf;
    Vec best_omega = Vec::Constant(K, 1.0 / K);

    Vec gains(K);
    const auto certificate = [&](const Vec& sum, long rounds) {
        Vec omega = sum / static_cast<double>(rounds);
        omega = floored(omega);
        omega /= omega.sum();
        const double lower = std::max(0.0, inner_value(certifier, mu, pairs, omega));
        if (lower > best_lower) {
            best_lower = lower;
            best_omega = omega;
        }
    };

    long iter = 0;
    while (iter < max_iter) {
        ++iter;
        const Vec omega = state.propose().w;
        responder.set_weights(floored(omega));
        const geometry::AlternativeSolution& sol = responder.closest(mu, pairs);
        gains = (0.5 * (mu - sol.lambda).array().square()).matrix();

        upper = std::min(upper, gains.maxCoeff());
        gain_sum += gains;
        omega_sum += omega;
        epoch_gain_sum += gains;
        epoch_omega_sum += omega;
        state.update(gains);

        const long epoch_len = iter - epoch_start + 1;
        const bool check = iter <= 16 || iter % 16 == 0 || iter == max_iter;
        if (check) {
            // Averaged best-response cuts upper-bound the value; the inner
            // minimum at any simplex point lower-bounds it.
            upper = std::min(upper, gain_sum.maxCoeff() / static_cast<double>(iter));
            upper = std::min(upper, epoch_gain_sum.maxCoeff() / static_cast<double>(epoch_len));
            certificate(omega_sum, iter);
            certificate(epoch_omega_sum, epoch_len);
            if (upper - best_lower <= tol) break;
        }
        if (iter >= 4 && (iter & (iter - 1)) == 0) {
            epoch_start = iter + 1;
            epoch_gain_sum.setZero();
            epoch_omega_sum.setZero();
        }
    }

    const double gap = std::max(0.0, upper - best_lower);
    return SaddleResult{best_lower, model::Weights(best_omega), gap, iter};
}

SaddleResult unstructured_characteristic_value(const model::Instance& instance,
                                               int m, double tol, long max_iter) {
    const Eigen::Index K = instance.mu.size();
    const double range = instance.mu.maxCoeff() - instance.mu.minCoeff();
    const double bound = std::max(1.0, instance.mu.cwiseAbs().maxCoeff() + range + 1.0);
    model::ModelSet unstructured(model::FeatureMatrix(model::Mat::Identity(K, K)),
                                 range + 1.0, bound);
    return characteristic_value(instance, unstructured, m, tol, max_iter);
}

double sample_complexity_floor(double h_mu, double delta) {
    if (!(h_mu >= 0.0) || !std::isfinite(h_mu))
        throw parameter_error("sample_complexity_floor: h_mu must be finite and nonnegative");
    if (!(delta > 0.0) || !(delta <= 0.5))
        throw parameter_error("sample_complexity_floor: need 0 < delta <= 1/2");
    if (h_mu == 0.0) return kInf;
    return std::log(1.0 / (2.4 * delta)) / h_mu;
}

} // namespace mislid::bounds
