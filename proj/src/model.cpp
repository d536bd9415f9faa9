#include "model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace mislid::model {

namespace {

void require_finite(const Mat& m, const char* what) {
    if (!m.allFinite()) throw parameter_error(std::string(what) + ": non-finite entries");
}

void require_finite(const Vec& v, const char* what) {
    if (!v.allFinite()) throw parameter_error(std::string(what) + ": non-finite entries");
}

} // namespace

FeatureMatrix::FeatureMatrix(Mat rows) : rows_(std::move(rows)) {
    if (rows_.rows() < 1 || rows_.cols() < 1)
        throw parameter_error("FeatureMatrix: need at least one arm and one dimension");
    require_finite(rows_, "FeatureMatrix");
    max_row_norm_ = rows_.rowwise().norm().maxCoeff();
    if (max_row_norm_ <= 0.0)
        throw parameter_error("FeatureMatrix: all-zero feature rows");
}

ModelSet::ModelSet(FeatureMatrix features_, double epsilon_, double mean_bound_,
                   bool enforce_mean_bound_)
    : features(std::move(features_)),
      epsilon(epsilon_),
      mean_bound(mean_bound_),
      enforce_mean_bound(enforce_mean_bound_) {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
        throw parameter_error("ModelSet: epsilon must be finite and nonnegative");
    if (!(mean_bound > 0.0) || !std::isfinite(mean_bound))
        throw parameter_error("ModelSet: mean_bound must be finite and positive");
}

Instance::Instance(ModelSet set_, Vec mu_, std::optional<Vec> theta_, std::optional<Vec> eta_)
    : set(std::move(set_)), mu(std::move(mu_)), theta(std::move(theta_)), eta(std::move(eta_)) {
    const int K = set.features.num_arms();
    const int d = set.features.dim();
    if (mu.size() != K) throw parameter_error("Instance: mu size does not match arm count");
    require_finite(mu, "Instance mu");
    if (theta.has_value() != eta.has_value())
        throw parameter_error("Instance: witnesses must be given as a (theta, eta) pair");
    if (theta) {
        if (theta->size() != d) throw parameter_error("Instance: theta size does not match dim");
        if (eta->size() != K) throw parameter_error("Instance: eta size does not match arm count");
        require_finite(*theta, "Instance theta");
        require_finite(*eta, "Instance eta");
        const double scale = std::max(1.0, mu.cwiseAbs().maxCoeff());
        const Vec recon = set.features.rows() * (*theta) + *eta;
        if ((recon - mu).cwiseAbs().maxCoeff() > 1e-12 * scale)
            throw parameter_error("Instance: witnesses do not reproduce mu");
        if (eta->cwiseAbs().maxCoeff() > set.epsilon + 1e-12 * std::max(1.0, set.epsilon))
            throw parameter_error("Instance: witness eta exceeds the deviation budget");
    }
}

TopMQuery::TopMQuery(int m_, double delta_) : m(m_), delta(delta_) {
    if (m < 1) throw parameter_error("TopMQuery: m must be at least 1");
    if (!(delta > 0.0 && delta < 1.0)) throw parameter_error("TopMQuery: delta must lie in (0,1)");
}

SufficientStats::SufficientStats(const FeatureMatrix& features)
    : features_(&features),
      counts_(Vec::Zero(features.num_arms())),
      reward_sums_(Vec::Zero(features.num_arms())),
      design_(Mat::Zero(features.dim(), features.dim())) {}

void SufficientStats::record(int arm, double reward) {
    if (arm < 0 || arm >= features_->num_arms())
        throw parameter_error("SufficientStats::record: arm index out of range");
    if (!std::isfinite(reward))
        throw parameter_error("SufficientStats::record: non-finite reward");
    counts_[arm] += 1.0;
    reward_sums_[arm] += reward;
    design_.noalias() += features_->row(arm).transpose() * features_->row(arm);
    ++rounds_;
}

Vec SufficientStats::empirical_means() const {
    Vec out = Vec::Zero(counts_.size());
    for (Eigen::Index k = 0; k < counts_.size(); ++k)
        if (counts_[k] > 0.0) out[k] = reward_sums_[k] / counts_[k];
    return out;
}

Weights::Weights(Vec w_) : w(std::move(w_)) {
    if (w.size() < 1) throw parameter_error("Weights: empty vector");
    require_finite(w, "Weights");
    if (w.minCoeff() < 0.0) throw parameter_error("Weights: negative entry");
    if (std::abs(w.sum() - 1.0) > 1e-12) throw parameter_error("Weights: entries must sum to 1");
}

std::vector<int> top_m_answer(const Vec& mu, int m) {
    const int K = static_cast<int>(mu.size());
    if (m < 1 || m >= K) throw parameter_error("top_m_answer: need 1 <= m < K");
    std::vector<int> order(K);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return mu[a] > mu[b]; });
    std::vector<int> answer(order.begin(), order.begin() + m);
    std::sort(answer.begin(), answer.end());
    return answer;
}

bool is_alternative(const Vec& mu, const Vec& lambda, int m) {
    const int K = static_cast<int>(mu.size());
    if (lambda.size() != mu.size()) throw parameter_error("is_alternative: size mismatch");
    if (m < 1 || m >= K) throw parameter_error("is_alternative: need 1 <= m < K");
    std::vector<int> order(K);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return mu[a] > mu[b]; });
    if (mu[order[m - 1]] == mu[order[m]])
        throw precondition_error("is_alternative: mu is tied at position m");
    // Half-space characterization: lambda rules out mu's unique answer iff
    // some outside arm strictly beats some inside arm under lambda. Both
    // minima below range over the relevant side only.
    double min_inside = std::numeric_limits<double>::infinity();
    for (int r = 0; r < m; ++r) min_inside = std::min(min_inside, lambda[order[r]]);
    double max_outside = -std::numeric_limits<double>::infinity();
    for (int r = m; r < K; ++r) max_outside = std::max(max_outside, lambda[order[r]]);
    return max_outside > min_inside;
}

double sample_reward(const Instance& instance, int arm, Rng& rng) {
    if (arm < 0 || arm >= instance.set.features.num_arms())
        throw parameter_error("sample_reward: arm index out of range");
    return instance.mu[arm] + rng.gaussian();
}

namespace {

Vec vec_from_json(const nlohmann::json& j, const char* what) {
    if (!j.is_array()) throw parse_error(std::string(what) + ": expected an array");
    Vec v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw parse_error(std::string(what) + ": expected numbers");
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
}

} // namespace

Instance instance_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("instance: ") + e.what());
    }
    try {
        const int K = j.at("K").get<int>();
        const int d = j.at("d").get<int>();
        const auto& feats = j.at("features");
        if (!feats.is_array() || static_cast<int>(feats.size()) != K)
            throw parse_error("instance: features must be a K-row array");
        Mat rows(K, d);
        for (int k = 0; k < K; ++k) {
            const Vec r = vec_from_json(feats[k], "features row");
            if (r.size() != d) throw parse_error("instance: feature row length != d");
            rows.row(k) = r.transpose();
        }
        ModelSet set(FeatureMatrix(std::move(rows)), j.at("epsilon").get<double>(),
                     j.at("mean_bound").get<double>(),
                     j.value("enforce_mean_bound", false));
        Vec mu = vec_from_json(j.at("mu"), "mu");
        std::optional<Vec> theta, eta;
        if (j.contains("theta")) theta = vec_from_json(j["theta"], "theta");
        if (j.contains("eta")) eta = vec_from_json(j["eta"], "eta");
        return Instance(std::move(set), std::move(mu), std::move(theta), std::move(eta));
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("instance: ") + e.what());
    }
}

std::string instance_to_json(const Instance& instance) {
    nlohmann::json j;
    const auto& A = instance.set.features.rows();
    j["K"] = instance.set.features.num_arms();
    j["d"] = instance.set.features.dim();
    auto feats = nlohmann::json::array();
    for (Eigen::Index k = 0; k < A.rows(); ++k) {
        auto row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < A.cols(); ++c) row.push_back(A(k, c));
        feats.push_back(std::move(row));
    }
    j["features"] = std::move(feats);
    j["epsilon"] = instance.set.epsilon;
    j["mean_bound"] = instance.set.mean_bound;
    if (instance.set.enforce_mean_bound) j["enforce_mean_bound"] = true;
    j["mu"] = std::vector<double>(instance.mu.begin(), instance.mu.end());
    if (instance.theta)
        j["theta"] = std::vector<double>(instance.theta->begin(), instance.theta->end());
    if (instance.eta)
        j["eta"] = std::vector<double>(instance.eta->begin(), instance.eta->end());
    return j.dump();
}

Instance instance_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open instance file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return instance_from_json(buf.str());
}

void instance_to_file(const Instance& instance, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write instance file: " + path);
    out << instance_to_json(instance) << '\n';
    if (!out) throw io_error("failed writing instance file: " + path);
}

} // namespace mislid::model
