// Weighted geometry of the model set: orthogonal parametrization of mean
// vectors against the feature rows, projection of empirical means onto the
// set of realizable models, and closest-alternative computation over the
// half-spaces that flip one answer arm with an outside arm.
#pragma once

#include <vector>

#include "model.hpp"
#include "numeric.hpp"

namespace mislid::geometry {

using model::FeatureMatrix;
using model::Mat;
using model::ModelSet;
using model::SufficientStats;
using model::Vec;

// mu = A theta_t + eta_t with the residual D_w-orthogonal to the features.
struct OrthogonalParam {
    Vec theta_t;
    Vec eta_t;
};

// Closest realizable model to an estimate: mu_tilde = A theta_tilde + eta_tilde.
struct ProjectedEstimate {
    Vec mu_tilde;
    Vec theta_tilde;
    Vec eta_tilde;
};

// Arm pair defining one half-space of alternatives: i sits outside the
// candidate answer, j inside, and the alternative must satisfy
// lambda^i >= lambda^j.
struct HalfSpacePair {
    int i = 0;
    int j = 0;
};

enum class KktCase { boundary_inactive, boundary_active };

struct AlternativeSolution {
    Vec lambda;
    double value = 0.0; // sum_k w^k (nu^k - lambda^k)^2, no 1/2 factor
    HalfSpacePair pair;
    KktCase kkt_case = KktCase::boundary_inactive;
};

// Split mu into theta_t = V_t^{-1} A' D_N mu and the residual eta_t, where
// V_t and the counts come from the sufficient statistics. Requires an
// invertible design matrix.
OrthogonalParam orthogonal_decompose(const Vec& mu, const SufficientStats& stats);

// Weighted projection of the empirical mean onto the realizable set:
// argmin over A theta + eta, |eta|_inf <= epsilon of ||lambda - mu_hat||^2
// under the count weights. Arms never pulled carry zero weight. When the
// model enforces its mean bound the slab constraints |mu^k| <= M are kept
// (joint QP); otherwise they are dropped.
ProjectedEstimate project_onto_model(const Vec& mu_hat, const SufficientStats& stats,
                                     const ModelSet& model);

// Internal shared state for one weighting w: the design V_w = A' D_w A, the
// hat matrix G = A V_w^{-1} A', and the complement W = D_w - D_w G D_w that
// scores residuals after the linear part is optimized out.
class WeightedGeometry {
public:
    void compute(const FeatureMatrix& features, const Vec& w);

    const Vec& weights() const { return w_; }
    const Mat& design() const { return V_; }
    const Mat& hat() const { return G_; }
    const Mat& complement() const { return W_; }
    double max_weight() const { return max_weight_; }

    // V_w^{-1} rhs via the cached spectral factorization.
    Vec design_solve(const Vec& rhs) const;

private:
    Vec w_;
    Mat V_;
    Mat G_;
    Mat W_;
    Mat eigvecs_;
    Vec eigvals_;
    double max_weight_ = 0.0;
};

// Stateful closest-alternative solver. Reuses the weighted factorizations
// across pairs and warm-starts each pair's QPs from the previous solution,
// which is what makes per-round use cheap. Not thread-safe.
class AlternativeFinder {
public:
    explicit AlternativeFinder(const ModelSet& model);

    // Install the weighting for subsequent solves. Throws precondition_error
    // if V_w is singular.
    void set_weights(const Vec& w);

    // Exact minimizer of ||nu - lambda||^2_{D_w} over realizable lambda with
    // lambda^i >= lambda^j.
    const AlternativeSolution& solve_pair(const Vec& nu, HalfSpacePair pair);

    // Minimum over all pairs (i outside the answer, j inside), ties broken
    // by lexicographic (i, j) order.
    AlternativeSolution closest(const Vec& nu, const std::vector<int>& answer);

    // Minimum over an explicit pair list, same tie-breaking.
    AlternativeSolution closest(const Vec& nu, const std::vector<HalfSpacePair>& pairs);

    // Value of the pair's stored feasible point under the current weights:
    // an upper bound on solve_pair(...).value, +inf before the first solve.
    // Lets callers rule out a stopping condition without exact solves.
    double pair_upper_bound(const Vec& nu, HalfSpacePair pair) const;

    const ModelSet& model() const { return *model_; }

private:
    struct PairQuantities {
        Vec Gu;   // G (e_j - e_i)
        Vec v;    // (I - D G)(e_j - e_i)
        double s = 0.0; // u' G u
        double b = 0.0; // u' G D nu
    };

    void pair_quantities(const Vec& nu, HalfSpacePair pair, PairQuantities& out) const;
    void validate_pair(HalfSpacePair pair) const;
    const AlternativeSolution& solve_pair_strict(const Vec& nu, HalfSpacePair pair);
    double boundary_value_at(const Vec& nu, const PairQuantities& pq, const Vec& eta) const;
    Vec solve_box_only(const Mat& Q, const Vec& q, double lipschitz, size_t idx,
                       bool boundary);
    void finish_solution(const Vec& nu, HalfSpacePair pair, const Vec& eta, double alpha,
                         KktCase kkt_case);

    const ModelSet* model_;
    int num_arms_;
    WeightedGeometry geom_;
    numeric::BoxQpSolver qp_;
    std::vector<Vec> warm_inactive_;
    std::vector<Vec> warm_boundary_;
    AlternativeSolution sol_;
    PairQuantities pq_;
    Mat Qb_;
    Vec qlin_, box_, eta0_, etab_, resid_, wres_, theta_, au_;
};

// One-shot wrappers over AlternativeFinder.
AlternativeSolution closest_alternative_halfspace(const Vec& nu, const Vec& w,
                                                  HalfSpacePair pair, const ModelSet& model);

AlternativeSolution closest_alternative(const Vec& nu, const Vec& w,
                                        const std::vector<int>& answer,
                                        const ModelSet& model);

} // namespace mislid::geometry
