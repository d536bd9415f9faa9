#include "baselines.hpp"

#include <chrono>
#include <cmath>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"

namespace mislid::baselines {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

double exploration_rate(long t, double delta, int K, algo::StoppingMode mode) {
    if (mode == algo::StoppingMode::heuristic) {
        return std::log((1.0 + std::log(static_cast<double>(t) + 1.0)) / delta);
    }
    return std::log(5.0 * K * std::pow(static_cast<double>(t), 4) / (4.0 * delta));
}

void validate(const Instance& env, const TopMQuery& query,
              const BaselineConfig& config) {
    if (query.m >= env.mu.size()) {
        throw parameter_error("baseline run: m must leave at least one arm out");
    }
    if (!(config.pac_epsilon >= 0.0) || !std::isfinite(config.pac_epsilon)) {
        throw parameter_error("baseline run: pac_epsilon must be finite and nonnegative");
    }
    if (config.safety_cap < 1) {
        throw parameter_error("baseline run: safety cap must be positive");
    }
}

} // namespace

CriticalPair lucb_critical_pair(const Vec& mu_hat, const Vec& counts,
                                double beta, int m) {
    const int K = static_cast<int>(mu_hat.size());
    if (counts.size() != K) {
        throw parameter_error("lucb_critical_pair: size mismatch");
    }
    if (m < 1 || m >= K) {
        throw parameter_error("lucb_critical_pair: m out of range");
    }
    if ((counts.array() <= 0.0).any()) {
        throw precondition_error("lucb_critical_pair: every arm needs one pull");
    }

    const std::vector<int> members = model::top_m_answer(mu_hat, m);
    std::vector<char> inside(static_cast<std::size_t>(K), 0);
    for (int j : members) inside[static_cast<std::size_t>(j)] = 1;

    CriticalPair out;
    double worst_lcb = std::numeric_limits<double>::infinity();
    double best_ucb = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k) {
        const double radius = std::sqrt(2.0 * beta / counts[k]);
        if (inside[static_cast<std::size_t>(k)]) {
            const double lcb = mu_hat[k] - radius;
            if (lcb < worst_lcb) {
                worst_lcb = lcb;
                out.weakest_member = k;
            }
        } else {
            const double ucb = mu_hat[k] + radius;
            if (ucb > best_ucb) {
                best_ucb = ucb;
                out.strongest_outsider = k;
            }
        }
    }
    out.gap_bound = best_ucb - worst_lcb;
    return out;
}

CriticalPair lingape_critical_pair(const Vec& mu_hat, const model::Mat& vinv,
                                   const model::FeatureMatrix& features,
                                   double beta, int m) {
    const int K = features.num_arms();
    if (mu_hat.size() != K || vinv.rows() != features.dim() ||
        vinv.cols() != features.dim()) {
        throw parameter_error("lingape_critical_pair: size mismatch");
    }
    if (m < 1 || m >= K) {
        throw parameter_error("lingape_critical_pair: m out of range");
    }

    const std::vector<int> members = model::top_m_answer(mu_hat, m);
    std::vector<char> inside(static_cast<std::size_t>(K), 0);
    for (int j : members) inside[static_cast<std::size_t>(j)] = 1;

    CriticalPair out;
    out.gap_bound = -std::numeric_limits<double>::infinity();
    const auto& A = features.rows();
    for (int i = 0; i < K; ++i) {
        if (inside[static_cast<std::size_t>(i)]) continue;
        for (int j : members) {
            const Vec diff = (A.row(i) - A.row(j)).transpose();
            const double width =
                std::sqrt(2.0 * beta * std::max(0.0, diff.dot(vinv * diff)));
            const double overtake = mu_hat[i] - mu_hat[j] + width;
            if (overtake > out.gap_bound) {
                out.gap_bound = overtake;
                out.strongest_outsider = i;
                out.weakest_member = j;
            }
        }
    }
    return out;
}

algo::RunResult lucb_run(const Instance& env, const TopMQuery& query,
                         const BaselineConfig& config, std::uint64_t seed) {
    validate(env, query, config);
    const auto wall_start = Clock::now();
    const int K = static_cast<int>(env.mu.size());
    Rng rng(seed);

    Vec counts = Vec::Zero(K);
    Vec sums = Vec::Zero(K);
    long rounds = 0;
    const auto pull = [&](int arm) {
        sums[arm] += env.mu[arm] + rng.gaussian();
        counts[arm] += 1.0;
        ++rounds;
    };

    const auto init_start = Clock::now();
    for (int k = 0; k < K && rounds < config.safety_cap; ++k) pull(k);
    const double init_ms = ms_since(init_start);

    algo::RunResult result;
    result.seed = seed;
    result.init_ms = init_ms;
    const std::vector<int> truth = model::top_m_answer(env.mu, query.m);
    // Unpulled arms (possible only under a cap below K) report mean zero.
    const auto safe_means = [&]() -> Vec {
        return sums.cwiseQuotient(counts.cwiseMax(1.0));
    };

    bool stopped = false;
    Vec mu_hat(K);
    while (rounds >= K) {
        const auto check_start = Clock::now();
        mu_hat = sums.cwiseQuotient(counts);
        const double beta =
            exploration_rate(rounds, query.delta, K, config.stopping.mode);
        const CriticalPair pair = lucb_critical_pair(mu_hat, counts, beta, query.m);
        ++result.stopping_checks;
        result.stopping_ms += ms_since(check_start);
        if (pair.gap_bound <= config.pac_epsilon) {
            stopped = true;
            break;
        }
        if (rounds >= config.safety_cap) break;
        pull(pair.weakest_member);
        if (rounds >= config.safety_cap) break;
        pull(pair.strongest_outsider);
    }

    result.tau = rounds;
    result.complete = stopped;
    result.answer = model::top_m_answer(safe_means(), query.m);
    result.correct = result.answer == truth;
    result.wall_ms = ms_since(wall_start);
    return result;
}

algo::RunResult lingape_run(const Instance& env, const TopMQuery& query,
                            const BaselineConfig& config, std::uint64_t seed) {
    validate(env, query, config);
    const auto wall_start = Clock::now();
    const model::FeatureMatrix& features = env.set.features;
    const auto& A = features.rows();
    const int K = features.num_arms();
    const int d = features.dim();
    const double reg = 1.0;
    Rng rng(seed);

    model::Mat V = reg * model::Mat::Identity(d, d);
    Vec rhs = Vec::Zero(d);
    long rounds = 0;
    const auto pull = [&](int arm) {
        const double reward = env.mu[arm] + rng.gaussian();
        V.noalias() += A.row(arm).transpose() * A.row(arm);
        rhs.noalias() += reward * A.row(arm).transpose();
        ++rounds;
    };

    const auto init_start = Clock::now();
    for (int k = 0; k < K && rounds < config.safety_cap; ++k) pull(k);
    const double init_ms = ms_since(init_start);

    algo::RunResult result;
    result.seed = seed;
    result.init_ms = init_ms;
    const std::vector<int> truth = model::top_m_answer(env.mu, query.m);

    bool stopped = false;
    Vec mu_hat(K);
    model::Mat vinv(d, d);
    while (rounds >= K) {
        const auto est_start = Clock::now();
        const Eigen::LDLT<model::Mat> fact(V);
        vinv = fact.solve(model::Mat::Identity(d, d));
        mu_hat = A * fact.solve(rhs);
        result.estimation_ms += ms_since(est_start);

        const auto check_start = Clock::now();
        const double beta =
            exploration_rate(rounds, query.delta, K, config.stopping.mode);
        const CriticalPair pair =
            lingape_critical_pair(mu_hat, vinv, features, beta, query.m);
        ++result.stopping_checks;
        result.stopping_ms += ms_since(check_start);
        if (pair.gap_bound <= config.pac_epsilon) {
            stopped = true;
            break;
        }
        if (rounds >= config.safety_cap) break;

        // Pull the arm that most shrinks the critical direction's width,
        // evaluated by the rank-one inverse update.
        const auto pick_start = Clock::now();
        const Vec u =
            (A.row(pair.strongest_outsider) - A.row(pair.weakest_member)).transpose();
        const Vec vu = vinv * u;
        int best_arm = 0;
        double best_drop = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < K; ++k) {
            const Vec phi = A.row(k).transpose();
            const double cross = phi.dot(vu);
            const double drop = cross * cross / (1.0 + phi.dot(vinv * phi));
            if (drop > best_drop) {
                best_drop = drop;
                best_arm = k;
            }
        }
        result.sampling_ms += ms_since(pick_start);
        pull(best_arm);
    }

    result.tau = rounds;
    result.complete = stopped;
    result.answer = model::top_m_answer(Vec(A * V.ldlt().solve(rhs)), query.m);
    result.correct = result.answer == truth;
    result.wall_ms = ms_since(wall_start);
    return result;
}

algo::RunResult baseline_run(const Instance& env, const TopMQuery& query,
                             const BaselineConfig& config, std::uint64_t seed) {
    switch (config.algorithm) {
        case BaselineAlgorithm::lucb:
            return lucb_run(env, query, config, seed);
        case BaselineAlgorithm::lingape:
            return lingape_run(env, query, config, seed);
    }
    throw parameter_error("baseline_run: unknown algorithm");
}

} // namespace mislid::baselines
