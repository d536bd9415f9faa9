#include "mislid.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "errors.hpp"
#include "numeric.hpp"

namespace mislid::algo {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Unstructured concentration branch; also used for the bonus at confidence
// 1/(5 t^6) via log_two_e_over_delta = log(2e/delta).
double beta_unstructured(double log_two_e_over_delta, double t, int K) {
    const double arg = log_two_e_over_delta / (2.0 * K) +
                       0.5 * std::log(8.0 * std::exp(1.0) * K * std::log(t));
    return 2.0 * K * numeric::lambert_w_bar(std::max(1.0, arg));
}

double beta_linear(double t, double delta, double eps, int d) {
    const double log_inv = std::log(1.0 / delta);
    const double inner = 1.0 + log_inv +
                         (1.0 + 1.0 / log_inv) * (0.5 * d) *
                             std::log1p(t / (2.0 * d) * log_inv);
    const double root = 4.0 * std::sqrt(t) * eps + std::sqrt(2.0 * inner);
    return 0.5 * root * root;
}

// Fills c^k for every arm, sharing one factorization of the design.
void fill_bonuses(const SufficientStats& stats, const ModelSet& model, Vec& out) {
    const auto& A = model.features.rows();
    const int K = model.features.num_arms();
    const int d = model.features.dim();
    const double L = model.features.max_row_norm();
    const double eps = model.epsilon;
    const double t = static_cast<double>(stats.rounds());
    const double t2 = t * t;

    const double alpha_lin = std::log(5.0 * t2 * t2) + d * std::log1p(t2 / (2.0 * d));
    // beta^uns at time t^2 and confidence 1/(5 t^6).
    const double log_conf = std::log(10.0 * std::exp(1.0)) + 6.0 * std::log(t);
    const double alpha_uns = beta_unstructured(log_conf, t2, K);

    const double lin_const = 8.0 * (L * K + 1.0) * (L * K + 1.0) * eps * eps;
    const double cap = 4.0 * model.mean_bound * model.mean_bound;

    Eigen::LDLT<model::Mat> vfact(stats.design());
    if (vfact.info() != Eigen::Success) {
        throw precondition_error("bonus: design matrix is not positive definite");
    }

    out.resize(K);
    for (int k = 0; k < K; ++k) {
        const Vec phi = A.row(k).transpose();
        const double lever = phi.dot(vfact.solve(phi));
        double c = lin_const + 4.0 * alpha_lin * lever;
        const double n_k = stats.counts()[k];
        if (n_k > 0.0) c = std::min(c, 2.0 * alpha_uns / n_k);
        out[k] = std::min(c, cap);
    }
}

} // namespace

std::vector<int> init_sequence(const FeatureMatrix& features) {
    const auto& A = features.rows();
    const int d = features.dim();
    const double L = features.max_row_norm();
    const double target = 2.0 * L * L;

    std::vector<int> spanner = numeric::barycentric_spanner(A);
    model::Mat one_round = model::Mat::Zero(d, d);
    for (int arm : spanner) {
        one_round.noalias() += A.row(arm).transpose() * A.row(arm);
    }
    const double sigma = numeric::min_eigenvalue(one_round);
    if (!(sigma > 0.0)) {
        throw numeric_error("init_sequence: spanner design is singular");
    }
    // After r full rounds the design dominates r*sigma*I, so this many
    // pulls always reach the target.
    const long hard_cap =
        static_cast<long>(spanner.size()) *
        (static_cast<long>(std::ceil(target / sigma)) + 2);

    std::vector<int> order;
    model::Mat design = model::Mat::Zero(d, d);
    for (long step = 0; step < hard_cap; ++step) {
        const int arm = spanner[static_cast<std::size_t>(step) % spanner.size()];
        order.push_back(arm);
        design.noalias() += A.row(arm).transpose() * A.row(arm);
        if (step + 1 >= d &&
            numeric::min_eigenvalue(design) >= target * (1.0 - 1e-8)) {
            return order;
        }
    }
    throw numeric_error("init_sequence: design never reached the target eigenvalue");
}

double stopping_threshold(long t, const TopMQuery& query, const ModelSet& model,
                          StoppingMode mode) {
    if (t < 1) throw parameter_error("stopping_threshold: t must be at least 1");
    const double delta = query.delta;
    if (mode == StoppingMode::heuristic) {
        return std::log((1.0 + std::log(static_cast<double>(t) + 1.0)) / delta);
    }
    const int K = model.features.num_arms();
    const int d = model.features.dim();
    const double uns = beta_unstructured(std::log(2.0 * std::exp(1.0) / delta),
                                         static_cast<double>(t), K);
    const double lin = beta_linear(static_cast<double>(t), delta, model.epsilon, d);
    return std::min(uns, lin);
}

double bonus(int k, const SufficientStats& stats, const ModelSet& model) {
    if (k < 0 || k >= model.features.num_arms()) {
        throw parameter_error("bonus: arm index out of range");
    }
    if (stats.rounds() < 1) {
        throw precondition_error("bonus: requires at least one observation");
    }
    Vec all;
    fill_bonuses(stats, model, all);
    return all[k];
}

Vec gain_vector(const geometry::ProjectedEstimate& estimate,
                const geometry::AlternativeSolution& alt, const Vec& bonuses,
                GainMode mode) {
    const auto K = estimate.mu_tilde.size();
    if (alt.lambda.size() != K || bonuses.size() != K) {
        throw parameter_error("gain_vector: size mismatch");
    }
    if ((bonuses.array() < 0.0).any() || !bonuses.allFinite()) {
        throw parameter_error("gain_vector: bonuses must be finite and nonnegative");
    }
    const Vec diff = (estimate.mu_tilde - alt.lambda).cwiseAbs();
    switch (mode) {
        case GainMode::optimistic:
            return (diff + bonuses.cwiseSqrt()).cwiseAbs2();
        case GainMode::aggressive:
            return diff.cwiseAbs2() + bonuses;
        case GainMode::empirical:
            return diff.cwiseAbs2();
    }
    throw parameter_error("gain_vector: unknown mode");
}

AlgorithmState::AlgorithmState(const ModelSet& model, TopMQuery query,
                               AlgoConfig config, std::uint64_t seed)
    : model_(&model),
      query_(query),
      config_(config),
      rng_(seed),
      stats_(model.features),
      learner_(config.learner_kind, model.features.num_arms()),
      sampling_finder_(model),
      stopping_finder_(model) {
    const int K = model.features.num_arms();
    if (query_.m >= K) {
        throw parameter_error("AlgorithmState: m must leave at least one arm out");
    }
    const double gamma = config_.stopping.geometric_grid_gamma;
    if (!(gamma >= 1.0 && gamma <= 1.3)) {
        throw parameter_error("AlgorithmState: grid gamma must lie in [1, 1.3]");
    }
    if (config_.safety_cap < 1) {
        throw parameter_error("AlgorithmState: safety cap must be positive");
    }
    init_order_ = init_sequence(model.features);
}

const geometry::ProjectedEstimate& AlgorithmState::estimate() const {
    if (phase_ == Phase::initializing) {
        throw precondition_error("estimate: initialization still in progress");
    }
    return estimate_;
}

const std::vector<int>& AlgorithmState::answer() const {
    if (phase_ != Phase::stopped) {
        throw precondition_error("answer: the run has not stopped");
    }
    return answer_;
}

void AlgorithmState::observe(const Instance& env, int arm) {
    const double reward = env.mu[arm] + rng_.gaussian();
    stats_.record(arm, reward);
}

void AlgorithmState::reproject() {
    const auto start = Clock::now();
    estimate_ = geometry::project_onto_model(stats_.empirical_means(), stats_, *model_);
    estimation_ms += ms_since(start);
}

void AlgorithmState::initialization_pull(const Instance& env) {
    observe(env, init_order_[init_done_]);
    ++init_done_;
    if (init_done_ == init_order_.size()) {
        reproject();
        phase_ = Phase::running;
        grid_point_ = static_cast<double>(stats_.rounds() + 1);
        next_check_ = stats_.rounds() + 1;
    }
}

double AlgorithmState::stopping_statistic() {
    if (phase_ != Phase::running) {
        throw precondition_error("stopping_statistic: requires a running state");
    }
    stopping_finder_.set_weights(stats_.counts());
    const std::vector<int> ans = model::top_m_answer(estimate_.mu_tilde, query_.m);
    return stopping_finder_.closest(estimate_.mu_tilde, ans).value;
}

double AlgorithmState::stopping_threshold_now() const {
    return 2.0 * stopping_threshold(stats_.rounds(), query_, *model_,
                                    config_.stopping.mode);
}

std::vector<geometry::HalfSpacePair> AlgorithmState::sampling_pairs(
    const std::vector<int>& ans) {
    const int K = model_->features.num_arms();
    const int d = model_->features.dim();
    std::vector<char> inside(static_cast<std::size_t>(K), 0);
    for (int j : ans) inside[static_cast<std::size_t>(j)] = 1;

    std::vector<int> outsiders;
    std::vector<char> taken(static_cast<std::size_t>(K), 0);
    for (int arm : recent_arms_) {
        if (!inside[static_cast<std::size_t>(arm)] && !taken[static_cast<std::size_t>(arm)]) {
            outsiders.push_back(arm);
            taken[static_cast<std::size_t>(arm)] = 1;
        }
    }
    // Refresh with d arms drawn uniformly from the not-yet-chosen outsiders.
    std::vector<int> pool;
    for (int arm = 0; arm < K; ++arm) {
        if (!inside[static_cast<std::size_t>(arm)] && !taken[static_cast<std::size_t>(arm)]) {
            pool.push_back(arm);
        }
    }
    for (int draw = 0; draw < d && !pool.empty(); ++draw) {
        const int at = rng_.uniform_int(static_cast<int>(pool.size()));
        outsiders.push_back(pool[static_cast<std::size_t>(at)]);
        pool.erase(pool.begin() + at);
    }

    std::vector<geometry::HalfSpacePair> pairs;
    pairs.reserve(outsiders.size() * ans.size());
    for (int i : outsiders) {
        for (int j : ans) pairs.push_back({i, j});
    }
    return pairs;
}

void AlgorithmState::remember_pair(geometry::HalfSpacePair pair) {
    const std::size_t cap = static_cast<std::size_t>(query_.m + model_->features.dim());
    for (int arm : {pair.i, pair.j}) {
        auto it = std::find(recent_arms_.begin(), recent_arms_.end(), arm);
        if (it != recent_arms_.end()) recent_arms_.erase(it);
        recent_arms_.insert(recent_arms_.begin(), arm);
    }
    if (recent_arms_.size() > cap) recent_arms_.resize(cap);
}

void AlgorithmState::step(const Instance& env) {
    if (phase_ == Phase::stopped) {
        throw precondition_error("step: the run has already stopped");
    }
    if (env.mu.size() != model_->features.num_arms()) {
        throw parameter_error("step: environment size does not match the model");
    }
    if (phase_ == Phase::initializing) {
        initialization_pull(env);
        return;
    }

    // Stopping rule on the geometric grid, against the full alternative set.
    if (stats_.rounds() + 1 >= next_check_) {
        const auto start = Clock::now();
        const double statistic = stopping_statistic();
        const double threshold = stopping_threshold_now();
        ++stopping_checks;
        stopping_ms += ms_since(start);
        if (statistic > threshold) {
            answer_ = model::top_m_answer(estimate_.mu_tilde, query_.m);
            phase_ = Phase::stopped;
            return;
        }
        grid_point_ *= config_.stopping.geometric_grid_gamma;
        next_check_ = std::max(stats_.rounds() + 2,
                               static_cast<long>(std::ceil(grid_point_)));
    }

    const auto start = Clock::now();
    // Learner proposal, best response, gain update.
    const Vec omega = learner_.propose().w;
    sampling_finder_.set_weights(Vec(omega.cwiseMax(1e-9)));
    const std::vector<int> ans = model::top_m_answer(estimate_.mu_tilde, query_.m);
    geometry::AlternativeSolution alt;
    if (config_.restricted_arms) {
        alt = sampling_finder_.closest(estimate_.mu_tilde, sampling_pairs(ans));
    } else {
        alt = sampling_finder_.closest(estimate_.mu_tilde, ans);
    }
    remember_pair(alt.pair);

    fill_bonuses(stats_, *model_, bonuses_);
    gains_ = gain_vector(estimate_, alt, bonuses_, config_.gain_mode);
    learner_.update(gains_);

    // Sample the arm from the proposal actually played.
    const int arm = rng_.categorical(omega.data(), static_cast<int>(omega.size()));
    sampling_ms += ms_since(start);

    observe(env, arm);
    reproject();
}

RunResult run(const Instance& env, const TopMQuery& query, const ModelSet& model,
              const AlgoConfig& config, std::uint64_t seed) {
    if (env.mu.size() != model.features.num_arms()) {
        throw parameter_error("run: environment size does not match the model");
    }
    const auto wall_start = Clock::now();
    AlgorithmState state(model, query, config, seed);

    const auto init_start = Clock::now();
    while (state.phase() == Phase::initializing) state.step(env);
    const double init_ms = ms_since(init_start);

    while (state.phase() == Phase::running && state.rounds() < config.safety_cap) {
        state.step(env);
    }

    RunResult result;
    result.tau = state.rounds();
    result.complete = state.phase() == Phase::stopped;
    result.answer = result.complete
                        ? state.answer()
                        : model::top_m_answer(state.estimate().mu_tilde, query.m);
    result.correct = result.answer == model::top_m_answer(env.mu, query.m);
    result.seed = seed;
    result.wall_ms = ms_since(wall_start);
    result.init_ms = init_ms;
    result.stopping_ms = state.stopping_ms;
    result.sampling_ms = state.sampling_ms;
    result.estimation_ms = state.estimation_ms;
    result.stopping_checks = state.stopping_checks;
    return result;
}

} // namespace mislid::algo
