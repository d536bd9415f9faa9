#include "geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mislid::geometry {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void validate_weights(const Vec& w, Eigen::Index K) {
    if (w.size() != K) {
        throw parameter_error("weights size must match the number of arms");
    }
    for (Eigen::Index k = 0; k < K; ++k) {
        if (!std::isfinite(w[k]) || w[k] < 0.0) {
            throw parameter_error("weights must be finite and non-negative");
        }
    }
}

} // namespace

void WeightedGeometry::compute(const FeatureMatrix& features, const Vec& w) {
    const Mat& A = features.rows();
    validate_weights(w, A.rows());
    w_ = w;
    max_weight_ = w.maxCoeff();

    V_.noalias() = A.transpose() * w.asDiagonal() * A;
    Eigen::SelfAdjointEigenSolver<Mat> es(V_);
    eigvals_ = es.eigenvalues();
    eigvecs_ = es.eigenvectors();
    double top = eigvals_.maxCoeff();
    if (eigvals_.minCoeff() <= 1e-12 * std::max(1.0, top)) {
        throw precondition_error("weighted design matrix is singular");
    }

    // G = A V^{-1} A' through the spectral factorization of V.
    Mat AU = A * eigvecs_;
    G_.noalias() = AU * eigvals_.cwiseInverse().asDiagonal() * AU.transpose();
    G_ = 0.5 * (G_ + G_.transpose()).eval();
    W_.noalias() = -(w_.asDiagonal() * G_ * w_.asDiagonal());
    W_.diagonal() += w_;
    W_ = 0.5 * (W_ + W_.transpose()).eval();
}

Vec WeightedGeometry::design_solve(const Vec& rhs) const {
    return eigvecs_ * (eigvecs_.transpose() * rhs).cwiseQuotient(eigvals_);
}

OrthogonalParam orthogonal_decompose(const Vec& mu, const SufficientStats& stats) {
    const FeatureMatrix& features = stats.features();
    if (mu.size() != features.num_arms()) {
        throw parameter_error("mean vector size must match the number of arms");
    }
    WeightedGeometry geom;
    geom.compute(features, stats.counts());

    OrthogonalParam out;
    out.theta_t = geom.design_solve(features.rows().transpose() *
                                    stats.counts().cwiseProduct(mu));
    out.eta_t = mu - features.rows() * out.theta_t;
    return out;
}

// --- projection onto the realizable set -------------------------------------

namespace {

ProjectedEstimate project_default(const Vec& mu_hat, const Vec& counts,
                                  const ModelSet& model, WeightedGeometry& geom,
                                  numeric::BoxQpSolver& solver) {
    const Mat& A = model.features.rows();
    const auto K = A.rows();
    geom.compute(model.features, counts);

    // Partial minimization over theta leaves a box QP in the residual:
    // min (mu_hat - eta)' W (mu_hat - eta) over |eta|_inf <= epsilon.
    const Vec qvec = -(geom.complement() * mu_hat);
    const Vec box = Vec::Constant(K, model.epsilon);
    ProjectedEstimate out;
    numeric::QpResult active = numeric::solve_box_qp_active_set(geom.complement(), qvec, box);
    if (active.status == numeric::QpStatus::ok) {
        out.eta_tilde = std::move(active.x);
    } else {
        numeric::BoxQP qp;
        qp.Q = geom.complement();
        qp.q = qvec;
        qp.box = box;
        numeric::QpOptions opts;
        opts.lipschitz = std::max(geom.max_weight(), 1e-12);
        const numeric::QpResult& res = solver.solve(qp, opts);
        if (res.status == numeric::QpStatus::iteration_limit && res.kkt_residual > 1e-6) {
            throw numeric_error("model projection failed to converge");
        }
        out.eta_tilde = res.x;
    }
    out.theta_tilde = geom.design_solve(
        A.transpose() * counts.cwiseProduct(mu_hat - out.eta_tilde));
    // Unpulled arms carry no weight; give them the residual closest to the
    // estimate so the returned model is deterministic.
    for (Eigen::Index k = 0; k < K; ++k) {
        if (counts[k] == 0.0) {
            double wanted = mu_hat[k] - A.row(k).dot(out.theta_tilde);
            out.eta_tilde[k] = std::clamp(wanted, -model.epsilon, model.epsilon);
        }
    }
    out.mu_tilde = A * out.theta_tilde + out.eta_tilde;
    return out;
}

ProjectedEstimate project_strict(const Vec& mu_hat, const Vec& counts,
                                 const ModelSet& model, WeightedGeometry& geom,
                                 numeric::BoxQpSolver& solver) {
    const Mat& A = model.features.rows();
    const auto K = A.rows();
    const auto d = A.cols();
    geom.compute(model.features, counts); // enforces the invertibility precondition

    // Joint variables z = (theta, eta); objective 0.5 z'Qz + q'z up to a
    // constant equals half the weighted distance to mu_hat.
    Mat B(K, d + K);
    B.leftCols(d) = A;
    B.rightCols(K) = Mat::Identity(K, K);
    Mat Q = B.transpose() * counts.asDiagonal() * B;
    Vec q = -(B.transpose() * counts.cwiseProduct(mu_hat));

    Vec box = Vec::Constant(d + K, kInf);
    box.tail(K).setConstant(model.epsilon);

    // Feasible set: the eta box intersected with one slab |phi_k'theta +
    // eta_k| <= M per arm, via Dykstra over exact projections.
    std::vector<std::function<void(Vec&)>> sets;
    sets.push_back([&box](Vec& z) { numeric::project_box(z, box); });
    for (Eigen::Index k = 0; k < K; ++k) {
        Vec a = B.row(k).transpose();
        double a2 = a.squaredNorm();
        double M = model.mean_bound;
        sets.push_back([a, a2, M](Vec& z) {
            double val = a.dot(z);
            if (val > M) z -= ((val - M) / a2) * a;
            else if (val < -M) z -= ((val + M) / a2) * a;
        });
    }
    auto project = [&sets](Vec& z) { numeric::dykstra(z, sets); };

    Eigen::SelfAdjointEigenSolver<Mat> es(Q, Eigen::EigenvaluesOnly);
    numeric::QpOptions opts;
    opts.lipschitz = std::max(es.eigenvalues().maxCoeff(), 1e-12);
    const numeric::QpResult& res = solver.solve_projected(Q, q, project, opts);
    if (res.status == numeric::QpStatus::iteration_limit && res.kkt_residual > 1e-6) {
        throw numeric_error("model projection failed to converge");
    }

    ProjectedEstimate out;
    out.theta_tilde = res.x.head(d);
    out.eta_tilde = res.x.tail(K);
    out.mu_tilde = A * out.theta_tilde + out.eta_tilde;
    return out;
}

} // namespace

ProjectedEstimate project_onto_model(const Vec& mu_hat, const SufficientStats& stats,
                                     const ModelSet& model) {
    if (mu_hat.size() != model.features.num_arms()) {
        throw parameter_error("estimate size must match the number of arms");
    }
    WeightedGeometry geom;
    numeric::BoxQpSolver solver;
    if (model.enforce_mean_bound) {
        return project_strict(mu_hat, stats.counts(), model, geom, solver);
    }
    return project_default(mu_hat, stats.counts(), model, geom, solver);
}

// --- closest alternative ------------------------------------------------------

AlternativeFinder::AlternativeFinder(const ModelSet& model)
    : model_(&model), num_arms_(model.features.num_arms()) {
    const auto K = num_arms_;
    warm_inactive_.resize(static_cast<size_t>(K) * K);
    warm_boundary_.resize(static_cast<size_t>(K) * K);
    box_ = Vec::Constant(K, model.epsilon);
    Qb_.resize(K, K);
    qlin_.resize(K);
    eta0_.resize(K);
    etab_.resize(K);
    resid_.resize(K);
    wres_.resize(K);
    au_.resize(model.features.dim());
}

void AlternativeFinder::set_weights(const Vec& w) {
    geom_.compute(model_->features, w);
}

void AlternativeFinder::validate_pair(HalfSpacePair pair) const {
    if (pair.i < 0 || pair.j < 0 || pair.i >= num_arms_ || pair.j >= num_arms_ ||
        pair.i == pair.j) {
        throw parameter_error("half-space pair must name two distinct arms");
    }
    if (geom_.weights().size() == 0) {
        throw precondition_error("set_weights must be called before solving");
    }
}

void AlternativeFinder::pair_quantities(const Vec& nu, HalfSpacePair pair,
                                        PairQuantities& out) const {
    const Mat& G = geom_.hat();
    const Vec& w = geom_.weights();
    out.Gu = G.col(pair.j) - G.col(pair.i);
    out.s = out.Gu[pair.j] - out.Gu[pair.i];
    out.v = -w.cwiseProduct(out.Gu);
    out.v[pair.j] += 1.0;
    out.v[pair.i] -= 1.0;
    out.b = out.Gu.dot(w.cwiseProduct(nu));
}

double AlternativeFinder::boundary_value_at(const Vec& nu, const PairQuantities& pq,
                                            const Vec& eta) const {
    Vec r = nu - eta;
    double quad = r.dot(geom_.complement() * r);
    double alpha = (pq.b + pq.v.dot(eta)) / pq.s;
    return quad + alpha * alpha * pq.s;
}

void AlternativeFinder::finish_solution(const Vec& nu, HalfSpacePair pair, const Vec& eta,
                                        double alpha, KktCase kkt_case) {
    const Mat& A = model_->features.rows();
    resid_ = nu - eta;
    au_ = (A.row(pair.j) - A.row(pair.i)).transpose();
    theta_ = geom_.design_solve(A.transpose() * geom_.weights().cwiseProduct(resid_) -
                                alpha * au_);
    sol_.lambda = A * theta_ + eta;
    wres_ = nu - sol_.lambda;
    sol_.value = geom_.weights().dot(wres_.cwiseAbs2());
    sol_.pair = pair;
    sol_.kkt_case = kkt_case;
}

const AlternativeSolution& AlternativeFinder::solve_pair(const Vec& nu, HalfSpacePair pair) {
    validate_pair(pair);
    if (nu.size() != num_arms_) {
        throw parameter_error("query vector size must match the number of arms");
    }
    if (nu[pair.i] >= nu[pair.j]) {
        sol_.lambda = nu;
        sol_.value = 0.0;
        sol_.pair = pair;
        sol_.kkt_case = KktCase::boundary_inactive;
        return sol_;
    }
    if (model_->enforce_mean_bound) {
        return solve_pair_strict(nu, pair);
    }

    pair_quantities(nu, pair, pq_);
    const size_t idx =
        static_cast<size_t>(pair.i) * static_cast<size_t>(num_arms_) + static_cast<size_t>(pair.j);
    const double s_scale = geom_.hat()(pair.i, pair.i) + geom_.hat()(pair.j, pair.j);

    if (pq_.s <= 1e-14 * std::max(1.0, s_scale)) {
        // Identical features for the pair: the half-space constraint reduces
        // to eta^j <= eta^i and the boundary case degenerates away.
        pq_.Gu.setZero();
        pq_.v.setZero();
        pq_.v[pair.j] = 1.0;
        pq_.v[pair.i] = -1.0;
        pq_.b = 0.0;
        numeric::BoxQP qp;
        qp.Q = geom_.complement();
        qp.q = -(geom_.complement() * nu);
        qp.box = box_;
        qp.has_lin = true;
        qp.a = pq_.v;
        qp.c = 0.0;
        numeric::QpOptions opts;
        opts.lipschitz = std::max(geom_.max_weight(), 1e-12);
        if (warm_inactive_[idx].size() == num_arms_) opts.warm_start = &warm_inactive_[idx];
        const numeric::QpResult& res = qp_.solve(qp, opts);
        if (res.status == numeric::QpStatus::infeasible) {
            throw numeric_error("no feasible KKT case for the half-space");
        }
        if (res.status == numeric::QpStatus::iteration_limit && res.kkt_residual > 1e-6) {
            throw numeric_error("alternative QP failed to converge");
        }
        warm_inactive_[idx] = res.x;
        finish_solution(nu, pair, res.x, 0.0, KktCase::boundary_inactive);
        return sol_;
    }

    // Relaxed problem first: drop the half-space, leaving the projection box
    // QP. If its optimum already satisfies v'eta <= -b (the theta-optimal
    // model respects the half-space), it solves the pair problem with an
    // inactive boundary; otherwise the optimum has the boundary active.
    qlin_ = -(geom_.complement() * nu);
    eta0_ = solve_box_only(geom_.complement(), qlin_, geom_.max_weight(), idx, false);
    warm_inactive_[idx] = eta0_;
    const double slack =
        1e-10 * (1.0 + std::abs(pq_.b) + pq_.v.lpNorm<1>() * model_->epsilon);
    if (pq_.b + pq_.v.dot(eta0_) <= slack) {
        finish_solution(nu, pair, eta0_, 0.0, KktCase::boundary_inactive);
        return sol_;
    }

    // Boundary-active case: substitute alpha = (b + v'eta)/s into the
    // Lagrangian, leaving a box QP with Q = W + vv'/s.
    Qb_ = geom_.complement();
    Qb_.noalias() += (pq_.v * pq_.v.transpose()) / pq_.s;
    qlin_ = (pq_.b / pq_.s) * pq_.v - geom_.complement() * nu;
    etab_ = solve_box_only(Qb_, qlin_, geom_.max_weight() + pq_.v.squaredNorm() / pq_.s,
                           idx, true);
    warm_boundary_[idx] = etab_;
    double alpha_b = (pq_.b + pq_.v.dot(etab_)) / pq_.s;
    finish_solution(nu, pair, etab_, alpha_b, KktCase::boundary_active);
    return sol_;
}

// Box-only solve used by both cases of the pair problem: the exact active-set
// method, with the projected-gradient solver as fallback on a blown pivot
// budget.
Vec AlternativeFinder::solve_box_only(const Mat& Q, const Vec& q, double lipschitz,
                                      size_t idx, bool boundary) {
    std::vector<Vec>& warm = boundary ? warm_boundary_ : warm_inactive_;
    const Vec* start = warm[idx].size() == num_arms_ ? &warm[idx] : nullptr;
    numeric::QpResult res = numeric::solve_box_qp_active_set(Q, q, box_, start);
    if (res.status == numeric::QpStatus::ok) return std::move(res.x);

    numeric::BoxQP qp;
    qp.Q = Q;
    qp.q = q;
    qp.box = box_;
    numeric::QpOptions opts;
    opts.lipschitz = std::max(lipschitz, 1e-12);
    opts.warm_start = start;
    const numeric::QpResult& fb = qp_.solve(qp, opts);
    if (fb.status == numeric::QpStatus::iteration_limit && fb.kkt_residual > 1e-6) {
        throw numeric_error("alternative QP failed to converge");
    }
    return fb.x;
}

const AlternativeSolution& AlternativeFinder::solve_pair_strict(const Vec& nu,
                                                                HalfSpacePair pair) {
    const Mat& A = model_->features.rows();
    const auto K = A.rows();
    const auto d = A.cols();
    const Vec& w = geom_.weights();

    // Joint variables z = (theta, eta) keep the slab constraints
    // |phi_k'theta + eta_k| <= M exact alongside the half-space.
    Mat B(K, d + K);
    B.leftCols(d) = A;
    B.rightCols(K) = Mat::Identity(K, K);
    Mat Q = B.transpose() * w.asDiagonal() * B;
    Vec q = -(B.transpose() * w.cwiseProduct(nu));

    Vec box = Vec::Constant(d + K, kInf);
    box.tail(K).setConstant(model_->epsilon);
    Vec a = Vec::Zero(d + K);
    a.head(d) = (A.row(pair.j) - A.row(pair.i)).transpose();
    a[d + pair.j] += 1.0;
    a[d + pair.i] -= 1.0;
    const double a2 = a.squaredNorm();
    const double M = model_->mean_bound;

    std::vector<std::function<void(Vec&)>> sets;
    sets.push_back([&box](Vec& z) { numeric::project_box(z, box); });
    for (Eigen::Index k = 0; k < K; ++k) {
        Vec row = B.row(k).transpose();
        double r2 = row.squaredNorm();
        sets.push_back([row, r2, M](Vec& z) {
            double val = row.dot(z);
            if (val > M) z -= ((val - M) / r2) * row;
            else if (val < -M) z -= ((val + M) / r2) * row;
        });
    }
    sets.push_back([&a, a2](Vec& z) {
        double val = a.dot(z);
        if (val > 0.0) z -= (val / a2) * a;
    });
    auto project = [&sets](Vec& z) { numeric::dykstra(z, sets); };

    Eigen::SelfAdjointEigenSolver<Mat> es(Q, Eigen::EigenvaluesOnly);
    numeric::QpOptions opts;
    opts.lipschitz = std::max(es.eigenvalues().maxCoeff(), 1e-12);
    const numeric::QpResult& res = qp_.solve_projected(Q, q, project, opts);
    if (res.status == numeric::QpStatus::iteration_limit && res.kkt_residual > 1e-6) {
        throw numeric_error("alternative QP failed to converge");
    }

    sol_.lambda = A * res.x.head(d) + res.x.tail(K);
    wres_ = nu - sol_.lambda;
    sol_.value = w.dot(wres_.cwiseAbs2());
    sol_.pair = pair;
    double gap = sol_.lambda[pair.i] - sol_.lambda[pair.j];
    sol_.kkt_case = (std::abs(gap) <= 1e-7 * (1.0 + sol_.lambda.cwiseAbs().maxCoeff()))
                        ? KktCase::boundary_active
                        : KktCase::boundary_inactive;
    return sol_;
}

double AlternativeFinder::pair_upper_bound(const Vec& nu, HalfSpacePair pair) const {
    if (geom_.weights().size() == 0) {
        throw precondition_error("set_weights must be called before solving");
    }
    if (pair.i < 0 || pair.j < 0 || pair.i >= num_arms_ || pair.j >= num_arms_ ||
        pair.i == pair.j) {
        throw parameter_error("half-space pair must name two distinct arms");
    }
    if (nu.size() != num_arms_) {
        throw parameter_error("query vector size must match the number of arms");
    }
    if (nu[pair.i] >= nu[pair.j]) return 0.0;

    const size_t idx =
        static_cast<size_t>(pair.i) * static_cast<size_t>(num_arms_) + static_cast<size_t>(pair.j);
    PairQuantities pq;
    pair_quantities(nu, pair, pq);
    const double s_scale = geom_.hat()(pair.i, pair.i) + geom_.hat()(pair.j, pair.j);
    double best = kInf;
    if (pq.s > 1e-14 * std::max(1.0, s_scale)) {
        const Vec& etab = warm_boundary_[idx];
        if (etab.size() == num_arms_) best = boundary_value_at(nu, pq, etab);
        const Vec& eta0 = warm_inactive_[idx];
        const double slack =
            1e-10 * (1.0 + std::abs(pq.b) + pq.v.lpNorm<1>() * model_->epsilon);
        if (eta0.size() == num_arms_ && pq.b + pq.v.dot(eta0) <= slack) {
            Vec r = nu - eta0;
            best = std::min(best, r.dot(geom_.complement() * r));
        }
    } else {
        const Vec& eta = warm_inactive_[idx];
        if (eta.size() == num_arms_ && eta[pair.j] <= eta[pair.i]) {
            Vec r = nu - eta;
            best = r.dot(geom_.complement() * r);
        }
    }
    return best;
}

AlternativeSolution AlternativeFinder::closest(const Vec& nu, const std::vector<int>& answer) {
    if (answer.empty() || static_cast<int>(answer.size()) >= num_arms_) {
        throw parameter_error("answer must include at least one arm and exclude another");
    }
    std::vector<bool> inside(static_cast<size_t>(num_arms_), false);
    for (int j : answer) {
        if (j < 0 || j >= num_arms_) throw parameter_error("answer arm out of range");
        if (inside[static_cast<size_t>(j)]) throw parameter_error("answer arms must be distinct");
        inside[static_cast<size_t>(j)] = true;
    }
    std::vector<HalfSpacePair> pairs;
    pairs.reserve(answer.size() * (static_cast<size_t>(num_arms_) - answer.size()));
    for (int i = 0; i < num_arms_; ++i) {
        if (inside[static_cast<size_t>(i)]) continue;
        for (int j = 0; j < num_arms_; ++j) {
            if (inside[static_cast<size_t>(j)]) pairs.push_back({i, j});
        }
    }
    return closest(nu, pairs);
}

AlternativeSolution AlternativeFinder::closest(const Vec& nu,
                                               const std::vector<HalfSpacePair>& pairs) {
    if (pairs.empty()) {
        throw parameter_error("closest alternative requires at least one pair");
    }
    AlternativeSolution best;
    bool have = false;
    for (const HalfSpacePair& pair : pairs) {
        const AlternativeSolution& cand = solve_pair(nu, pair);
        bool better = !have || cand.value < best.value ||
                      (cand.value == best.value &&
                       (cand.pair.i < best.pair.i ||
                        (cand.pair.i == best.pair.i && cand.pair.j < best.pair.j)));
        if (better) {
            best = cand;
            have = true;
        }
    }
    return best;
}

AlternativeSolution closest_alternative_halfspace(const Vec& nu, const Vec& w,
                                                  HalfSpacePair pair, const ModelSet& model) {
    AlternativeFinder finder(model);
    finder.set_weights(w);
    return finder.solve_pair(nu, pair);
}

AlternativeSolution closest_alternative(const Vec& nu, const Vec& w,
                                        const std::vector<int>& answer,
                                        const ModelSet& model) {
    AlternativeFinder finder(model);
    finder.set_weights(w);
    return finder.closest(nu, answer);
}

} // namespace mislid::geometry
