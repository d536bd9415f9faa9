// Numeric kernels: the inverse of y -> y - ln y, box-constrained quadratic
// programs with one optional linear inequality, barycentric spanners, and
// symmetric minimum eigenvalues. These are the only places in the library
// that iterate to a tolerance; everything above them consumes certified
// results.
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "errors.hpp"

namespace mislid::numeric {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Upper branch inverse of y - ln y on y >= 1: returns the y >= 1 with
// y - ln y = x, accurate to |y - ln y - x| <= 1e-10. Requires x >= 1.
double lambert_w_bar(double x);

// Quadratic program
//   min 0.5 x'Qx + q'x   s.t.  |x_i| <= box_i  (and  a'x <= c  if has_lin)
// Q must be symmetric PSD. box entries may be +inf (coordinate unbounded)
// or 0 (coordinate pinned).
struct BoxQP {
    Mat Q;
    Vec q;
    Vec box;
    bool has_lin = false;
    Vec a;
    double c = 0.0;
};

enum class QpStatus { ok, infeasible, iteration_limit };

struct QpResult {
    Vec x;
    double value = 0.0;
    QpStatus status = QpStatus::ok;
    int iterations = 0;
    double kkt_residual = 0.0;
};

struct QpOptions {
    double tol = 1e-10;      // projected-gradient fixed-point residual target
    int max_iter = 200000;
    const Vec* warm_start = nullptr;
    // Optional Lipschitz upper bound for the gradient (max eigenvalue of Q).
    // When positive, the spectral estimation and PSD verification are
    // skipped; callers passing this vouch for Q themselves.
    double lipschitz = 0.0;
};

// Reusable-workspace solver: accelerated projected gradient with gradient
// restarts; feasible-set projection is exact clamping, composed with a
// Dykstra alternation when the linear constraint is present. A solver
// instance may be reused across calls of the same dimension to avoid
// reallocation; it is not thread-safe.
class BoxQpSolver {
public:
    const QpResult& solve(const BoxQP& problem, const QpOptions& options = {});

    // Same algorithm with a caller-supplied feasible-set projector (used for
    // intersections richer than box + one half-space). The projector must be
    // an exact or Dykstra-converged projection applied in place.
    const QpResult& solve_projected(const Mat& Q, const Vec& q,
                                    const std::function<void(Vec&)>& project,
                                    const QpOptions& options);

private:
    const QpResult& run(const Mat& Q, const Vec& q, const std::function<void(Vec&)>& project,
                        const QpOptions& options);

    QpResult result_;
    Vec x_, y_, x_prev_, grad_, trial_, dyk_p_, dyk_q_, dyk_start_, work_;
};

// One-shot convenience wrapper around BoxQpSolver.
QpResult solve_box_qp(const BoxQP& problem, const QpOptions& options = {});

// Exact primal active-set solver for the box-only case: direct solves on the
// free coordinates, so runtime scales with the number of active-set changes
// rather than with the conditioning of Q. Q must be symmetric PSD; every box
// entry must be finite. kkt_residual reports the largest stationarity or
// multiplier-sign violation at the returned point. status iteration_limit
// means the pivot budget ran out; callers should fall back to BoxQpSolver.
QpResult solve_box_qp_active_set(const Mat& Q, const Vec& q, const Vec& box,
                                 const Vec* warm_start = nullptr);

// Minimum of a'x over the box |x_i| <= box_i (used for feasibility checks;
// -inf when an unbounded coordinate has a nonzero coefficient).
double box_linear_min(const Vec& a, const Vec& box);

// Exact projection onto {x : |x_i| <= box_i}.
void project_box(Vec& x, const Vec& box);

// Dykstra's alternating projection onto the intersection of convex sets,
// each given as an exact in-place projector. Converges for closed convex
// intersections with nonempty interior-ish overlap; iterates until the
// sweep displacement falls below tol.
void dykstra(Vec& x, const std::vector<std::function<void(Vec&)>>& projectors,
             double tol = 1e-12, int max_sweeps = 20000);

// Indices of d rows of `rows` forming a barycentric spanner: every row is a
// linear combination of the chosen ones with coefficients bounded by 2 in
// absolute value (the construction itself terminates at bound 1 + 1e-12).
// Throws numeric_error if the rows do not span d dimensions.
std::vector<int> barycentric_spanner(const Mat& rows);

// Smallest eigenvalue of a symmetric matrix, 1e-9 relative accuracy.
// Symmetry is required within 1e-10 relative.
double min_eigenvalue(const Mat& sym);

} // namespace mislid::numeric
