#include "numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mislid::numeric {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double clamp_abs(double v, double bound) {
    if (v > bound) return bound;
    if (v < -bound) return -bound;
    return v;
}

} // namespace

double lambert_w_bar(double x) {
    if (!std::isfinite(x) || x < 1.0) {
        throw parameter_error("lambert_w_bar requires x >= 1");
    }
    if (x == 1.0) return 1.0;
    // y - ln y is increasing and convex on y >= 1, and x + ln x lies below the
    // root, so one Newton step from there overshoots right and the remaining
    // iterates descend monotonically onto the root. The residual is evaluated
    // as (y - x) - ln y, which stays exact through the cancellation both for
    // large x and near the flat point y = 1; iteration stops when the step
    // falls below one ulp.
    double y = x + std::log(x);
    for (int iter = 0; iter < 300; ++iter) {
        double f = (y - x) - std::log(y);
        if (f == 0.0) break;
        double fp = 1.0 - 1.0 / y;
        if (fp <= 0.0) break;
        double next = y - f / fp;
        if (next < 1.0) next = 1.0;
        if (next == y) break;
        y = next;
    }
    return y;
}

double box_linear_min(const Vec& a, const Vec& box) {
    if (a.size() != box.size()) {
        throw parameter_error("box_linear_min: coefficient and box sizes differ");
    }
    double total = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a[i] == 0.0) continue;
        if (std::isinf(box[i])) return -kInf;
        total -= std::abs(a[i]) * box[i];
    }
    return total;
}

void project_box(Vec& x, const Vec& box) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        x[i] = clamp_abs(x[i], box[i]);
    }
}

void dykstra(Vec& x, const std::vector<std::function<void(Vec&)>>& projectors,
             double tol, int max_sweeps) {
    if (projectors.empty()) return;
    if (projectors.size() == 1) {
        projectors[0](x);
        return;
    }
    const auto n = x.size();
    const auto sets = static_cast<Eigen::Index>(projectors.size());
    Mat corrections = Mat::Zero(n, sets);
    Vec before(n);
    Vec sweep_start(n);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        sweep_start = x;
        // The iterate can sit still for a sweep while corrections reorganize,
        // so stalling is judged on the corrections as well.
        double corr_moved = 0.0;
        for (Eigen::Index s = 0; s < sets; ++s) {
            before = x + corrections.col(s);
            x = before;
            projectors[static_cast<size_t>(s)](x);
            corr_moved = std::max(
                corr_moved, (before - x - corrections.col(s)).cwiseAbs().maxCoeff());
            corrections.col(s) = before - x;
        }
        if (std::max(corr_moved, (x - sweep_start).cwiseAbs().maxCoeff()) > tol) continue;
        // The iterate has settled; accept once every projector fixes it.
        double infeasibility = 0.0;
        for (Eigen::Index s = 0; s < sets; ++s) {
            before = x;
            projectors[static_cast<size_t>(s)](before);
            infeasibility = std::max(infeasibility, (x - before).cwiseAbs().maxCoeff());
        }
        if (infeasibility <= tol) return;
    }
}

const QpResult& BoxQpSolver::solve(const BoxQP& problem, const QpOptions& options) {
    const auto n = problem.q.size();
    if (problem.Q.rows() != n || problem.Q.cols() != n) {
        throw parameter_error("solve_box_qp: Q must be square and match q");
    }
    if (problem.box.size() != n) {
        throw parameter_error("solve_box_qp: box size must match q");
    }
    if ((problem.box.array() < 0.0).any()) {
        throw parameter_error("solve_box_qp: box bounds must be nonnegative");
    }
    if (problem.has_lin && problem.a.size() != n) {
        throw parameter_error("solve_box_qp: linear constraint size must match q");
    }
    double scale = std::max(1.0, problem.Q.cwiseAbs().maxCoeff());
    if ((problem.Q - problem.Q.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
        throw numeric_error("solve_box_qp: Q must be symmetric");
    }

    QpOptions opts = options;
    if (opts.lipschitz <= 0.0) {
        Eigen::SelfAdjointEigenSolver<Mat> eig(problem.Q, Eigen::EigenvaluesOnly);
        double lo = eig.eigenvalues().minCoeff();
        double hi = eig.eigenvalues().maxCoeff();
        if (lo < -1e-9 * std::max(1.0, hi)) {
            throw numeric_error("solve_box_qp: Q must be positive semidefinite");
        }
        opts.lipschitz = std::max(hi, 1e-12);
    }

    if (problem.has_lin) {
        if (box_linear_min(problem.a, problem.box) > problem.c) {
            result_.x = Vec::Zero(n);
            result_.value = kInf;
            result_.status = QpStatus::infeasible;
            result_.iterations = 0;
            result_.kkt_residual = kInf;
            return result_;
        }
        const Vec& a = problem.a;
        const Vec& box = problem.box;
        double c = problem.c;
        double a2 = a.squaredNorm();
        if (dyk_p_.size() != n) dyk_p_ = Vec::Zero(n);
        if (dyk_q_.size() != n) dyk_q_ = Vec::Zero(n);
        auto project = [this, &a, &box, c, a2](Vec& v) {
            // Dykstra alternation between the box and the half-space; both
            // individual projections are exact. Stops once a full sweep no
            // longer moves the iterate and it satisfies both constraints.
            dyk_p_.setZero();
            dyk_q_.setZero();
            for (int sweep = 0; sweep < 20000; ++sweep) {
                dyk_start_ = v;
                work_ = v + dyk_p_;
                v = work_;
                project_box(v, box);
                double moved = (work_ - v - dyk_p_).cwiseAbs().maxCoeff();
                dyk_p_ = work_ - v;
                work_ = v + dyk_q_;
                v = work_;
                if (a2 > 0.0) {
                    double excess = a.dot(v) - c;
                    if (excess > 0.0) v -= (excess / a2) * a;
                }
                moved = std::max(moved, (work_ - v - dyk_q_).cwiseAbs().maxCoeff());
                dyk_q_ = work_ - v;
                moved = std::max(moved, (v - dyk_start_).cwiseAbs().maxCoeff());
                if (moved > 1e-13) continue;
                double box_violation = 0.0;
                for (Eigen::Index i = 0; i < v.size(); ++i) {
                    box_violation = std::max(box_violation, std::abs(v[i]) - box[i]);
                }
                double lin_violation = a2 > 0.0 ? a.dot(v) - c : 0.0;
                if (box_violation <= 1e-12 && lin_violation <= 1e-12 * std::max(1.0, std::abs(c))) {
                    return;
                }
            }
        };
        return run(problem.Q, problem.q, project, opts);
    }

    const Vec& box = problem.box;
    auto project = [&box](Vec& v) { project_box(v, box); };
    return run(problem.Q, problem.q, project, opts);
}

const QpResult& BoxQpSolver::solve_projected(const Mat& Q, const Vec& q,
                                             const std::function<void(Vec&)>& project,
                                             const QpOptions& options) {
    if (options.lipschitz <= 0.0) {
        throw parameter_error("solve_projected requires an explicit Lipschitz bound");
    }
    return run(Q, q, project, options);
}

const QpResult& BoxQpSolver::run(const Mat& Q, const Vec& q,
                                 const std::function<void(Vec&)>& project,
                                 const QpOptions& options) {
    const auto n = q.size();
    const double step = 1.0 / options.lipschitz;

    if (options.warm_start != nullptr && options.warm_start->size() == n) {
        x_ = *options.warm_start;
    } else {
        x_ = Vec::Zero(n);
    }
    project(x_);
    y_ = x_;
    x_prev_ = x_;
    double momentum = 1.0;

    int iter = 0;
    double residual = kInf;
    for (; iter < options.max_iter; ++iter) {
        grad_.noalias() = Q * y_;
        grad_ += q;
        x_ = y_ - step * grad_;
        project(x_);

        // Fixed-point residual at the new iterate.
        grad_.noalias() = Q * x_;
        grad_ += q;
        trial_ = x_ - step * grad_;
        project(trial_);
        residual = (x_ - trial_).cwiseAbs().maxCoeff() / step;
        if (residual <= options.tol) {
            ++iter;
            break;
        }

        double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
        double mix = (momentum - 1.0) / next_momentum;
        // Gradient restart: drop momentum when the extrapolated direction
        // opposes the latest progress.
        if ((y_ - x_).dot(x_ - x_prev_) > 0.0) {
            next_momentum = 1.0;
            mix = 0.0;
        }
        y_ = x_ + mix * (x_ - x_prev_);
        x_prev_ = x_;
        momentum = next_momentum;
    }

    result_.x = x_;
    result_.value = 0.5 * x_.dot(Q * x_) + q.dot(x_);
    result_.iterations = iter;
    result_.kkt_residual = residual;
    result_.status = residual <= options.tol ? QpStatus::ok : QpStatus::iteration_limit;
    return result_;
}

QpResult solve_box_qp(const BoxQP& problem, const QpOptions& options) {
    BoxQpSolver solver;
    return solver.solve(problem, options);
}

QpResult solve_box_qp_active_set(const Mat& Q, const Vec& q, const Vec& box,
                                 const Vec* warm_start) {
    const auto n = q.size();
    if (Q.rows() != n || Q.cols() != n) {
        throw parameter_error("solve_box_qp_active_set: Q must be square and match q");
    }
    if (box.size() != n) {
        throw parameter_error("solve_box_qp_active_set: box size must match q");
    }
    if ((box.array() < 0.0).any() || !box.allFinite()) {
        throw parameter_error("solve_box_qp_active_set: box bounds must be finite and nonnegative");
    }
    const double qscale = std::max(1.0, Q.cwiseAbs().maxCoeff());
    if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-10 * qscale) {
        throw numeric_error("solve_box_qp_active_set: Q must be symmetric");
    }

    Vec x;
    if (warm_start != nullptr && warm_start->size() == n) {
        x = *warm_start;
    } else {
        x = Vec::Zero(n);
    }
    project_box(x, box);

    // Coordinate states: -1 at the lower bound, +1 at the upper, 0 free;
    // zero-width coordinates are pinned for good.
    std::vector<int> state(static_cast<std::size_t>(n));
    std::vector<char> pinned(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto s = static_cast<std::size_t>(i);
        pinned[s] = box[i] == 0.0;
        if (x[i] >= box[i]) {
            x[i] = box[i];
            state[s] = 1;
        } else if (x[i] <= -box[i]) {
            x[i] = -box[i];
            state[s] = -1;
        } else {
            state[s] = 0;
        }
    }

    const double qmax = q.cwiseAbs().maxCoeff();
    std::vector<Eigen::Index> free_set;
    free_set.reserve(static_cast<std::size_t>(n));
    Mat qff;
    Vec rhs, target, grad(n);
    const int max_pivots = 30 * static_cast<int>(n) + 100;

    QpResult res;
    res.status = QpStatus::iteration_limit;
    int pivots = 0;
    while (pivots < max_pivots) {
        ++pivots;

        free_set.clear();
        for (Eigen::Index i = 0; i < n; ++i) {
            if (state[static_cast<std::size_t>(i)] == 0) free_set.push_back(i);
        }

        bool at_subspace_optimum = true;
        if (!free_set.empty()) {
            const auto f = static_cast<Eigen::Index>(free_set.size());
            qff.resize(f, f);
            rhs.resize(f);
            for (Eigen::Index a = 0; a < f; ++a) {
                rhs[a] = -q[free_set[static_cast<std::size_t>(a)]];
                for (Eigen::Index b = 0; b < f; ++b) {
                    qff(a, b) = Q(free_set[static_cast<std::size_t>(a)],
                                  free_set[static_cast<std::size_t>(b)]);
                }
            }
            for (Eigen::Index i = 0; i < n; ++i) {
                if (state[static_cast<std::size_t>(i)] == 0 || x[i] == 0.0) continue;
                for (Eigen::Index a = 0; a < f; ++a) {
                    rhs[a] -= Q(free_set[static_cast<std::size_t>(a)], i) * x[i];
                }
            }
            // A tiny ridge keeps the reduced solve defined along flat
            // directions of a singular block; it perturbs the stationarity
            // residual by far less than the acceptance tolerance.
            qff.diagonal().array() += 1e-12 * (1.0 + qff.trace());
            target = Eigen::LDLT<Mat>(qff).solve(rhs);

            double alpha = 1.0;
            Eigen::Index blocker = -1;
            for (Eigen::Index a = 0; a < f; ++a) {
                const auto i = free_set[static_cast<std::size_t>(a)];
                const double d = target[a] - x[i];
                double room = kInf;
                if (d > 0.0) {
                    room = (box[i] - x[i]) / d;
                } else if (d < 0.0) {
                    room = (-box[i] - x[i]) / d;
                }
                if (room < alpha) {
                    alpha = room;
                    blocker = a;
                }
            }
            if (blocker >= 0) {
                // Step to the first blocking bound; activate the blocker
                // unconditionally and everything else that reached a bound.
                at_subspace_optimum = false;
                alpha = std::max(alpha, 0.0);
                for (Eigen::Index a = 0; a < f; ++a) {
                    const auto i = free_set[static_cast<std::size_t>(a)];
                    const double d = target[a] - x[i];
                    x[i] += alpha * d;
                    const double slack = 1e-12 * (1.0 + box[i]);
                    if (a == blocker ? d > 0.0 : (d > 0.0 && x[i] >= box[i] - slack)) {
                        x[i] = box[i];
                        state[static_cast<std::size_t>(i)] = 1;
                    } else if (a == blocker ? d < 0.0
                                            : (d < 0.0 && x[i] <= -box[i] + slack)) {
                        x[i] = -box[i];
                        state[static_cast<std::size_t>(i)] = -1;
                    }
                }
            } else {
                for (Eigen::Index a = 0; a < f; ++a) {
                    x[free_set[static_cast<std::size_t>(a)]] = target[a];
                }
            }
        }
        if (!at_subspace_optimum) continue;

        // Free coordinates sit at their reduced optimum; release the worst
        // bound whose multiplier has the wrong sign, or stop.
        grad.noalias() = Q * x;
        grad += q;
        const double tol = 1e-10 * (1.0 + qmax + grad.cwiseAbs().maxCoeff());
        double worst = tol;
        Eigen::Index worst_i = -1;
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto s = static_cast<std::size_t>(i);
            if (pinned[s] || state[s] == 0) continue;
            const double violation = state[s] == 1 ? grad[i] : -grad[i];
            if (violation > worst) {
                worst = violation;
                worst_i = i;
            }
        }
        if (worst_i < 0) {
            res.status = QpStatus::ok;
            break;
        }
        state[static_cast<std::size_t>(worst_i)] = 0;
    }

    grad.noalias() = Q * x;
    grad += q;
    double resid = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto s = static_cast<std::size_t>(i);
        if (pinned[s]) continue;
        if (state[s] == 0) {
            resid = std::max(resid, std::abs(grad[i]));
        } else {
            resid = std::max(resid, state[s] == 1 ? grad[i] : -grad[i]);
        }
    }
    res.x = std::move(x);
    res.value = 0.5 * res.x.dot(Q * res.x) + q.dot(res.x);
    res.iterations = pivots;
    res.kkt_residual = std::max(resid, 0.0);
    return res;
}

std::vector<int> barycentric_spanner(const Mat& rows) {
    const auto K = rows.rows();
    const auto d = rows.cols();
    if (K < d || d == 0) {
        throw numeric_error("barycentric_spanner: need at least d spanning rows");
    }

    // Greedy volumetric start: repeatedly take the row with the largest
    // component orthogonal to the span of those already chosen.
    std::vector<int> chosen;
    chosen.reserve(static_cast<size_t>(d));
    Mat basis(d, d);
    double row_scale = std::max(1.0, rows.cwiseAbs().maxCoeff());
    for (Eigen::Index slot = 0; slot < d; ++slot) {
        double best_norm = -1.0;
        int best_row = -1;
        Vec best_residual(d);
        for (Eigen::Index k = 0; k < K; ++k) {
            Vec r = rows.row(k).transpose();
            for (Eigen::Index j = 0; j < slot; ++j) {
                r -= r.dot(basis.col(j)) * basis.col(j);
            }
            double nrm = r.norm();
            if (nrm > best_norm) {
                best_norm = nrm;
                best_row = static_cast<int>(k);
                best_residual = r;
            }
        }
        if (best_norm <= 1e-10 * row_scale) {
            throw numeric_error("barycentric_spanner: rows do not span the feature space");
        }
        basis.col(slot) = best_residual / best_norm;
        chosen.push_back(best_row);
    }

    // Best-swap ascent on |det|: with B the chosen rows, row k expands as
    // coefficients (rows * B^{-1})(k, :); a coefficient above 1 in absolute
    // value means swapping it in multiplies the volume by that factor.
    Mat B(d, d);
    for (int pass = 0; pass < 1000; ++pass) {
        for (Eigen::Index i = 0; i < d; ++i) {
            B.row(i) = rows.row(chosen[static_cast<size_t>(i)]);
        }
        Eigen::FullPivLU<Mat> lu(B.transpose());
        if (!lu.isInvertible()) {
            throw numeric_error("barycentric_spanner: chosen rows became singular");
        }
        Mat coeffs = lu.solve(rows.transpose()).transpose();
        double best = 1.0 + 1e-12;
        int best_k = -1;
        Eigen::Index best_slot = -1;
        for (Eigen::Index k = 0; k < K; ++k) {
            for (Eigen::Index i = 0; i < d; ++i) {
                double mag = std::abs(coeffs(k, i));
                if (mag > best) {
                    best = mag;
                    best_k = static_cast<int>(k);
                    best_slot = i;
                }
            }
        }
        if (best_k < 0) {
            std::sort(chosen.begin(), chosen.end());
            return chosen;
        }
        chosen[static_cast<size_t>(best_slot)] = best_k;
    }
    throw numeric_error("barycentric_spanner: swap ascent failed to terminate");
}

double min_eigenvalue(const Mat& sym) {
    if (sym.rows() != sym.cols() || sym.rows() == 0) {
        throw parameter_error("min_eigenvalue: matrix must be square and nonempty");
    }
    double scale = std::max(1.0, sym.cwiseAbs().maxCoeff());
    if ((sym - sym.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
        throw numeric_error("min_eigenvalue: matrix must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Mat> eig(sym, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff();
}

} // namespace mislid::numeric
