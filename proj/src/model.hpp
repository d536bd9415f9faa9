// Problem model: arm features, the misspecified linear mean-vector set,
// concrete instances, top-m queries, and the sufficient statistics a run
// accumulates. All types are immutable after construction except
// SufficientStats, which has a single writer.
#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"

namespace mislid::model {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// One row per arm, K x d. The largest row 2-norm L is cached because the
// initialization target (V >= 2 L^2 I) and the linear stopping threshold
// both depend on it.
class FeatureMatrix {
public:
    explicit FeatureMatrix(Mat rows);

    int num_arms() const { return static_cast<int>(rows_.rows()); }
    int dim() const { return static_cast<int>(rows_.cols()); }
    const Mat& rows() const { return rows_; }
    auto row(int k) const { return rows_.row(k); }
    double max_row_norm() const { return max_row_norm_; }

private:
    Mat rows_;
    double max_row_norm_;
};

// Means representable as A*theta + eta with ||eta||_inf <= epsilon. The
// bound ||mu||_inf <= mean_bound is part of the set definition but is only
// enforced inside projections/alternatives when enforce_mean_bound is set;
// by default it is dropped there (it still caps exploration bonuses).
struct ModelSet {
    ModelSet(FeatureMatrix features_, double epsilon_, double mean_bound_,
             bool enforce_mean_bound_ = false);

    FeatureMatrix features;
    double epsilon;
    double mean_bound;
    bool enforce_mean_bound;
};

// A concrete environment: the mean vector, plus optional (theta, eta)
// witnesses certifying membership in the model set.
struct Instance {
    Instance(ModelSet set_, Vec mu_,
             std::optional<Vec> theta_ = std::nullopt,
             std::optional<Vec> eta_ = std::nullopt);

    ModelSet set;
    Vec mu;
    std::optional<Vec> theta;
    std::optional<Vec> eta;
};

struct TopMQuery {
    TopMQuery(int m_, double delta_);
    int m;
    double delta;
};

// Pull counts, reward sums and the design matrix V_t = sum N^k phi_k phi_k^T.
// Counts are real-valued so weighted designs can reuse the type. V_t is
// maintained incrementally and stays within 1e-10 relative of a recompute.
class SufficientStats {
public:
    explicit SufficientStats(const FeatureMatrix& features);

    void record(int arm, double reward);

    const FeatureMatrix& features() const { return *features_; }
    const Vec& counts() const { return counts_; }
    const Vec& reward_sums() const { return reward_sums_; }
    const Mat& design() const { return design_; }
    long rounds() const { return rounds_; }

    // S_k / N_k; entries with N_k = 0 are reported as 0 and carry zero
    // weight everywhere they are consumed.
    Vec empirical_means() const;

private:
    const FeatureMatrix* features_;
    Vec counts_;
    Vec reward_sums_;
    Mat design_;
    long rounds_ = 0;
};

// Probability vector over arms; validates nonnegativity and sum 1 +- 1e-12.
struct Weights {
    explicit Weights(Vec w_);
    Vec w;
};

// Indices of the m largest entries, ascending; ties broken toward the lower
// index (exact float equality is the tie criterion).
std::vector<int> top_m_answer(const Vec& mu, int m);

// True iff no m-subset answer compatible with lambda is compatible with mu,
// i.e. some arm outside mu's top-m strictly beats some arm inside it under
// lambda. Precondition: mu has a strict gap at position m.
bool is_alternative(const Vec& mu, const Vec& lambda, int m);

// Gaussian unit-variance reward draw for one arm.
double sample_reward(const Instance& instance, int arm, Rng& rng);

// JSON round trip: {K, d, features, epsilon, mean_bound, mu, theta?, eta?}.
Instance instance_from_json(const std::string& text);
std::string instance_to_json(const Instance& instance);
Instance instance_from_file(const std::string& path);
void instance_to_file(const Instance& instance, const std::string& path);

} // namespace mislid::model
