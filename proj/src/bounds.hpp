// Lower-bound oracle: the characteristic constant of an instance (the value
// of the weight-vs-alternative game), its unstructured counterpart, and the
// sample-complexity floor it implies at a given confidence level.
#pragma once

#include "learner.hpp"
#include "model.hpp"

namespace mislid::bounds {

using model::Vec;

// Saddle-point estimate of the inverse complexity. h_mu carries the 1/2
// Gaussian KL factor: it approximates
//   sup_omega min_pairs inf_lambda sum_k omega^k (mu^k - lambda^k)^2 / 2,
// certified from below by the inner minimum evaluated at omega_star and from
// above by the best-response cuts collected while solving; gap is the
// difference between the two certificates. gap <= the requested tolerance
// means the solver converged; a larger gap flags truncation at max_iter.
struct SaddleResult {
    double h_mu;
    model::Weights omega_star;
    double gap;
    long iterations;
};

// Solves the saddle by iterating AdaHedge over the simplex against exact
// best responses from the alternative projections, averaging the iterates.
// The mean vector comes from the instance; the geometry (features, epsilon)
// comes from model_set, so the same means can be priced under different
// amounts of misspecification. Ties at the m-th mean make the instance its
// own alternative and yield h_mu = 0 immediately.
SaddleResult characteristic_value(const model::Instance& instance,
                                  const model::ModelSet& model_set, int m,
                                  double tol, long max_iter);

// The same game with identity features (d = K) and epsilon above the range
// of the means, which removes all structure from the alternative set.
SaddleResult unstructured_characteristic_value(const model::Instance& instance,
                                               int m, double tol, long max_iter);

// Change-of-measure floor on the expected sample count at confidence delta:
// log(1/(2.4 delta)) / h_mu, +infinity when h_mu is zero.
double sample_complexity_floor(double h_mu, double delta);

} // namespace mislid::bounds
