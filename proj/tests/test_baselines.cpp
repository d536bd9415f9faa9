#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "baselines.hpp"
#include "errors.hpp"
#include "rng.hpp"

using mislid::Rng;
using mislid::model::FeatureMatrix;
using mislid::model::Instance;
using mislid::model::Mat;
using mislid::model::ModelSet;
using mislid::model::TopMQuery;
using mislid::model::Vec;
namespace baselines = mislid::baselines;
namespace algo = mislid::algo;

// ---------------------------------------------------------------------------
// Oracles, written before the tests that use them.
// ---------------------------------------------------------------------------
namespace oracles {

struct PairChoice {
    int member;
    int outsider;
    double bound;
};

// Exhaustive LUCB pair selection: scan the empirical top-m for the smallest
// lower bound, the rest for the largest upper bound, lowest index first.
PairChoice lucb_pair(const Vec& mu, const Vec& counts, double beta, int m) {
    const std::vector<int> members = mislid::model::top_m_answer(mu, m);
    const std::set<int> inside(members.begin(), members.end());
    PairChoice out{-1, -1, 0.0};
    double lcb = std::numeric_limits<double>::infinity();
    double ucb = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < mu.size(); ++k) {
        const double radius = std::sqrt(2.0 * beta / counts[k]);
        if (inside.count(k)) {
            if (mu[k] - radius < lcb) {
                lcb = mu[k] - radius;
                out.member = k;
            }
        } else if (mu[k] + radius > ucb) {
            ucb = mu[k] + radius;
            out.outsider = k;
        }
    }
    out.bound = ucb - lcb;
    return out;
}

// Exhaustive LinGapE ambiguity scan with widths computed through an explicit
// matrix inverse.
PairChoice lingape_pair(const Vec& mu, const Mat& v, const Mat& features,
                        double beta, int m) {
    const std::vector<int> members = mislid::model::top_m_answer(mu, m);
    const std::set<int> inside(members.begin(), members.end());
    const Mat vinv = v.inverse();
    PairChoice out{-1, -1, -std::numeric_limits<double>::infinity()};
    for (int i = 0; i < mu.size(); ++i) {
        if (inside.count(i)) continue;
        for (int j : members) {
            const Vec diff = (features.row(i) - features.row(j)).transpose();
            const double overtake =
                mu[i] - mu[j] + std::sqrt(2.0 * beta * diff.dot(vinv * diff));
            if (overtake > out.bound) {
                out.bound = overtake;
                out.outsider = i;
                out.member = j;
            }
        }
    }
    return out;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace oracles

namespace {

Instance unstructured_instance(const Vec& mu) {
    const int K = static_cast<int>(mu.size());
    const double range = mu.maxCoeff() - mu.minCoeff();
    const ModelSet set{FeatureMatrix(Mat::Identity(K, K)), range + 1.0,
                       std::max(1.0, mu.cwiseAbs().maxCoeff() + range + 1.0)};
    return Instance(set, mu);
}

// Ten arms with a clear three-arm top set, the shape used across the
// simulation studies.
Vec study_means() {
    Vec mu(10);
    mu << 1.0, 0.9, 0.8, 0.5, 0.45, 0.4, 0.35, 0.3, 0.25, 0.2;
    return mu;
}

} // namespace

// ---------------------------------------------------------------------------
// Pair selection.
// ---------------------------------------------------------------------------

TEST_CASE("lucb_critical_pair matches the exhaustive oracle") {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const int K = 3 + (int)rng.uniform_int(6);
        const int m = 1 + (int)rng.uniform_int(K - 1);
        const Vec mu = Vec::NullaryExpr(K, [&](int) { return rng.gaussian(); });
        const Vec counts =
            Vec::NullaryExpr(K, [&](int) { return 1.0 + rng.uniform_int(50); });
        const double beta = 0.2 + 3.0 * rng.uniform();

        const auto got = baselines::lucb_critical_pair(mu, counts, beta, m);
        const auto want = oracles::lucb_pair(mu, counts, beta, m);
        CAPTURE(trial);
        CHECK(got.weakest_member == want.member);
        CHECK(got.strongest_outsider == want.outsider);
        CHECK(got.gap_bound == doctest::Approx(want.bound).epsilon(1e-12));
    }
}

TEST_CASE("lucb_critical_pair validates its inputs") {
    const Vec mu = Vec::LinSpaced(4, 0.0, 1.0);
    const Vec counts = Vec::Constant(4, 2.0);
    CHECK_THROWS_AS(baselines::lucb_critical_pair(mu, Vec::Ones(3), 1.0, 1),
                    mislid::parameter_error);
    CHECK_THROWS_AS(baselines::lucb_critical_pair(mu, counts, 1.0, 4),
                    mislid::parameter_error);
    Vec unpulled = counts;
    unpulled[2] = 0.0;
    CHECK_THROWS_AS(baselines::lucb_critical_pair(mu, unpulled, 1.0, 1),
                    mislid::precondition_error);
}

TEST_CASE("lingape_critical_pair matches the exhaustive oracle") {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const int d = 2 + (int)rng.uniform_int(2);
        const int K = d + 1 + (int)rng.uniform_int(4);
        const int m = 1 + (int)rng.uniform_int(K - 1);
        Mat A(K, d);
        for (int i = 0; i < A.size(); ++i) A.data()[i] = rng.gaussian();
        Mat V = Mat::Identity(d, d);
        for (int r = 0; r < 3 * d; ++r) {
            const int arm = (int)rng.uniform_int(K);
            V += A.row(arm).transpose() * A.row(arm);
        }
        const Vec mu = Vec::NullaryExpr(K, [&](int) { return rng.gaussian(); });
        const double beta = 0.2 + 3.0 * rng.uniform();

        const auto got = baselines::lingape_critical_pair(
            mu, Mat(V.inverse()), FeatureMatrix(A), beta, m);
        const auto want = oracles::lingape_pair(mu, V, A, beta, m);
        CAPTURE(trial);
        CHECK(got.weakest_member == want.member);
        CHECK(got.strongest_outsider == want.outsider);
        CHECK(got.gap_bound == doctest::Approx(want.bound).epsilon(1e-10));
    }
}

// ---------------------------------------------------------------------------
// LUCB runs.
// ---------------------------------------------------------------------------

TEST_CASE("lucb solves a two-arm problem") {
    Vec mu(2);
    mu << 1.0, 0.0;
    const Instance env = unstructured_instance(mu);
    const TopMQuery q{1, 0.05};
    baselines::BaselineConfig cfg;
    const auto r = baselines::lucb_run(env, q, cfg, 11);
    CHECK(r.complete);
    CHECK(r.correct);
    CHECK(r.tau > 2);
    CHECK(r.answer == std::vector<int>{0});
}

TEST_CASE("lucb is delta-correct over 200 seeded runs") {
    const Instance env = unstructured_instance(study_means());
    const TopMQuery q{3, 0.05};
    baselines::BaselineConfig cfg;
    int errors = 0;
    long total_tau = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const auto r = baselines::lucb_run(env, q, cfg, seed);
        REQUIRE(r.complete);
        total_tau += r.tau;
        if (!r.correct) ++errors;
    }
    CHECK(errors <= 10);
    CHECK(total_tau / 200 > 100);
}

TEST_CASE("pac slack shortens lucb runs on paired seeds") {
    const Instance env = unstructured_instance(study_means());
    const TopMQuery q{3, 0.05};
    baselines::BaselineConfig exact;
    baselines::BaselineConfig slack = exact;
    slack.pac_epsilon = 0.04;

    std::vector<double> tau_exact, tau_slack;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        tau_exact.push_back((double)baselines::lucb_run(env, q, exact, seed).tau);
        tau_slack.push_back((double)baselines::lucb_run(env, q, slack, seed).tau);
    }
    CHECK(oracles::median(tau_slack) < oracles::median(tau_exact));
}

TEST_CASE("a generous pac slack stops lucb right after initialization") {
    Vec mu(3);
    mu << 0.3, 0.2, 0.1;
    const Instance env = unstructured_instance(mu);
    const TopMQuery q{1, 0.05};
    baselines::BaselineConfig cfg;
    cfg.pac_epsilon = 50.0;
    const auto r = baselines::lucb_run(env, q, cfg, 1);
    CHECK(r.complete);
    CHECK(r.tau == 3);
    CHECK(r.stopping_checks == 1);
}

TEST_CASE("lucb honors the safety cap") {
    Vec mu(3);
    mu << 0.02, 0.01, 0.0;
    const Instance env = unstructured_instance(mu);
    const TopMQuery q{1, 0.05};
    baselines::BaselineConfig cfg;
    cfg.safety_cap = 31;
    const auto r = baselines::lucb_run(env, q, cfg, 5);
    CHECK_FALSE(r.complete);
    CHECK(r.tau == 31);
    CHECK(r.answer.size() == 1);
}

TEST_CASE("lucb theoretical rate also stops and stays correct") {
    Vec mu(4);
    mu << 1.0, 0.5, 0.2, 0.0;
    const Instance env = unstructured_instance(mu);
    const TopMQuery q{2, 0.05};
    baselines::BaselineConfig cfg;
    cfg.stopping.mode = algo::StoppingMode::theoretical;
    const auto r = baselines::lucb_run(env, q, cfg, 17);
    CHECK(r.complete);
    CHECK(r.correct);

    baselines::BaselineConfig heur;
    const auto h = baselines::lucb_run(env, q, heur, 17);
    CHECK(r.tau >= h.tau);
}

// ---------------------------------------------------------------------------
// LinGapE runs.
// ---------------------------------------------------------------------------

TEST_CASE("lingape identifies a well-specified linear instance") {
    Mat A(5, 2);
    A << 1.0, 0.0, 0.0, 1.0, 0.8, 0.5, 0.4, 0.8, 0.6, 0.6;
    Vec theta(2);
    theta << 1.0, 0.2;
    const ModelSet set{FeatureMatrix(A), 0.0, 5.0};
    const Instance env(set, Vec(A * theta), theta, Vec::Zero(5));
    const TopMQuery q{2, 0.05};
    baselines::BaselineConfig cfg;
    cfg.algorithm = baselines::BaselineAlgorithm::lingape;

    int errors = 0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const auto r = baselines::baseline_run(env, q, cfg, seed);
        REQUIRE(r.complete);
        if (!r.correct) ++errors;
    }
    CHECK(errors <= 2);
}

TEST_CASE("lingape fails under gross misspecification") {
    // The linear fit sees mu proportional to the feature, so it always ranks
    // arm 0 first, while the misspecification term makes arm 1 the true best.
    Mat A(2, 1);
    A << 1.0, 0.5;
    Vec theta(1);
    theta << 2.0;
    Vec eta(2);
    eta << -1.8, 0.8;
    const Vec mu = A * theta + eta;
    REQUIRE(mu[1] > mu[0]);
    const ModelSet set{FeatureMatrix(A), 5.0, 10.0};
    const Instance env(set, mu, theta, eta);
    const TopMQuery q{1, 0.05};
    baselines::BaselineConfig cfg;
    cfg.algorithm = baselines::BaselineAlgorithm::lingape;

    int errors = 0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const auto r = baselines::baseline_run(env, q, cfg, seed);
        REQUIRE(r.complete);
        if (!r.correct) ++errors;
    }
    CHECK(errors >= 20);
}

TEST_CASE("lingape runs are reproducible by seed") {
    Mat A(4, 2);
    A << 1.0, 0.0, 0.0, 1.0, 0.7, 0.6, 0.5, 0.5;
    Vec theta(2);
    theta << 0.9, 0.3;
    const ModelSet set{FeatureMatrix(A), 0.0, 5.0};
    const Instance env(set, Vec(A * theta), theta, Vec::Zero(4));
    const TopMQuery q{1, 0.05};
    baselines::BaselineConfig cfg;
    cfg.algorithm = baselines::BaselineAlgorithm::lingape;

    const auto a = baselines::lingape_run(env, q, cfg, 23);
    const auto b = baselines::lingape_run(env, q, cfg, 23);
    CHECK(a.tau == b.tau);
    CHECK(a.answer == b.answer);
    CHECK(a.stopping_checks == b.stopping_checks);
}

// ---------------------------------------------------------------------------
// Shared plumbing.
// ---------------------------------------------------------------------------

TEST_CASE("baseline configs are validated") {
    Vec mu(3);
    mu << 1.0, 0.5, 0.0;
    const Instance env = unstructured_instance(mu);
    baselines::BaselineConfig cfg;

    CHECK_THROWS_AS(baselines::lucb_run(env, TopMQuery{3, 0.05}, cfg, 1),
                    mislid::parameter_error);

    baselines::BaselineConfig bad_pac = cfg;
    bad_pac.pac_epsilon = -0.1;
    CHECK_THROWS_AS(baselines::lucb_run(env, TopMQuery{1, 0.05}, bad_pac, 1),
                    mislid::parameter_error);
    bad_pac.pac_epsilon = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(baselines::lingape_run(env, TopMQuery{1, 0.05}, bad_pac, 1),
                    mislid::parameter_error);

    baselines::BaselineConfig bad_cap = cfg;
    bad_cap.safety_cap = 0;
    CHECK_THROWS_AS(baselines::lucb_run(env, TopMQuery{1, 0.05}, bad_cap, 1),
                    mislid::parameter_error);
}

TEST_CASE("baseline results fill the shared run-record schema") {
    Vec mu(3);
    mu << 1.0, 0.5, 0.0;
    const Instance env = unstructured_instance(mu);
    const TopMQuery q{1, 0.05};
    baselines::BaselineConfig cfg;
    const algo::RunResult r = baselines::baseline_run(env, q, cfg, 9);
    CHECK(r.seed == 9);
    CHECK(r.tau > 0);
    CHECK(r.stopping_checks > 0);
    CHECK(r.wall_ms >= 0.0);
    CHECK(r.answer.size() == 1);
}
