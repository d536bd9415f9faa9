#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "learner.hpp"
#include "rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

using namespace mislid;
using namespace mislid::learner;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Oracles. Written before the tests that use them; they recompute every
// expected quantity from the definitions, independently of the production
// code paths.
// ---------------------------------------------------------------------------
namespace oracle {

// Hindsight regret straight from the definition: the best simplex corner is
// the best single arm, realized gain is the sum of weighted gains actually
// proposed.
double regret(const std::vector<Vec>& weights, const std::vector<Vec>& gains) {
    REQUIRE(weights.size() == gains.size());
    if (gains.empty()) return 0.0;
    Vec total = Vec::Zero(gains.front().size());
    double realized = 0.0;
    for (std::size_t s = 0; s < gains.size(); ++s) {
        realized += weights[s].dot(gains[s]);
        total += gains[s];
    }
    return total.maxCoeff() - realized;
}

// Anytime regret guarantee for AdaHedge with per-round gain spread at most
// sigma: 2*sigma*sqrt(t*ln K) + 16*sigma*(2 + ln(K)/3).
double adahedge_bound(double sigma, long t, int K) {
    const double lk = std::log(static_cast<double>(K));
    return 2.0 * sigma * std::sqrt(static_cast<double>(t) * lk) +
           16.0 * sigma * (2.0 + lk / 3.0);
}

// Largest per-round spread max_k g_k - min_k g_k over a gain history.
double spread(const std::vector<Vec>& gains) {
    double sigma = 0.0;
    for (const Vec& g : gains) sigma = std::max(sigma, g.maxCoeff() - g.minCoeff());
    return sigma;
}

// Extended-precision AdaHedge replay, written directly from the recurrence:
// weights proportional to exp(eta * L) at rate eta = ln(K) / gap, uniform
// over the leaders while the gap is zero; the gap accrues the mix gain minus
// the expected gain each round.
struct AdaHedgeRef {
    std::vector<long double> L;
    long double gap = 0.0L;

    explicit AdaHedgeRef(int K) : L(static_cast<std::size_t>(K), 0.0L) {}

    std::vector<long double> weights() const {
        const std::size_t K = L.size();
        std::vector<long double> w(K, 0.0L);
        const long double top = *std::max_element(L.begin(), L.end());
        if (gap <= 0.0L || K == 1) {
            int leaders = 0;
            for (long double v : L)
                if (v == top) ++leaders;
            for (std::size_t k = 0; k < K; ++k)
                if (L[k] == top) w[k] = 1.0L / leaders;
            return w;
        }
        const long double eta = std::log(static_cast<long double>(K)) / gap;
        long double sum = 0.0L;
        for (std::size_t k = 0; k < K; ++k) {
            w[k] = std::exp(eta * (L[k] - top));
            sum += w[k];
        }
        for (long double& v : w) v /= sum;
        return w;
    }

    void update(const Vec& gain) {
        const std::size_t K = L.size();
        const std::vector<long double> w = weights();
        long double expected = 0.0L;
        long double shift = -std::numeric_limits<long double>::infinity();
        for (std::size_t k = 0; k < K; ++k) {
            expected += w[k] * static_cast<long double>(gain[static_cast<Eigen::Index>(k)]);
            if (w[k] > 0.0L && gain[static_cast<Eigen::Index>(k)] > shift)
                shift = gain[static_cast<Eigen::Index>(k)];
        }
        long double mix = shift;
        if (gap > 0.0L && K > 1) {
            const long double eta = std::log(static_cast<long double>(K)) / gap;
            long double sum = 0.0L;
            for (std::size_t k = 0; k < K; ++k)
                if (w[k] > 0.0L)
                    sum += w[k] * std::exp(eta * (static_cast<long double>(
                                                      gain[static_cast<Eigen::Index>(k)]) -
                                                  shift));
            mix = shift + std::log(sum) / eta;
        }
        if (mix > expected) gap += mix - expected;
        for (std::size_t k = 0; k < K; ++k)
            L[k] += static_cast<long double>(gain[static_cast<Eigen::Index>(k)]);
    }
};

} // namespace oracle

Vec make_vec(std::initializer_list<double> xs) {
    Vec v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

Vec random_gain(Rng& rng, int K, double lo, double hi) {
    Vec g(K);
    for (int k = 0; k < K; ++k) g[k] = lo + (hi - lo) * rng.uniform();
    return g;
}

void check_simplex(const Vec& w) {
    for (Eigen::Index k = 0; k < w.size(); ++k) CHECK(w[k] >= 0.0);
    CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

// Plays a gain history through a fresh learner, recording proposals, and
// checks every proposal is a valid simplex point.
std::vector<Vec> play(LearnerState& st, const std::vector<Vec>& gains) {
    std::vector<Vec> weights;
    weights.reserve(gains.size());
    for (const Vec& g : gains) {
        model::Weights w = st.propose();
        check_simplex(w.w);
        weights.push_back(w.w);
        st.update(g);
    }
    return weights;
}

} // namespace

// ---------------------------------------------------------------------------
// propose
// ---------------------------------------------------------------------------

TEST_CASE("fresh adahedge state proposes uniform weights") {
    for (int K : {1, 2, 5, 9}) {
        LearnerState st(LearnerKind::adahedge, K);
        const Vec w = st.propose().w;
        REQUIRE(w.size() == K);
        for (int k = 0; k < K; ++k) CHECK(w[k] == doctest::Approx(1.0 / K));
    }
}

TEST_CASE("ftl proposes the point mass on the leading arm") {
    LearnerState st(LearnerKind::ftl, 3);
    st.update(make_vec({1.0, 0.0, 0.0}));
    const Vec w = st.propose().w;
    CHECK(w[0] == 1.0);
    CHECK(w[1] == 0.0);
    CHECK(w[2] == 0.0);
}

TEST_CASE("ftl ties break toward the lowest index") {
    LearnerState st(LearnerKind::ftl, 3);
    st.update(make_vec({0.0, 1.0, 1.0}));
    const Vec w = st.propose().w;
    CHECK(w[0] == 0.0);
    CHECK(w[1] == 1.0);
    CHECK(w[2] == 0.0);
}

TEST_CASE("adahedge weights are invariant under a constant gain shift") {
    // Feeding gains shifted by a per-round constant moves every cumulative
    // gain by the same amount and leaves the mixability gap untouched, so the
    // proposals must coincide round for round.
    Rng rng(20240517);
    LearnerState plain(LearnerKind::adahedge, 4);
    LearnerState shifted(LearnerKind::adahedge, 4);
    for (int s = 0; s < 40; ++s) {
        const Vec g = random_gain(rng, 4, -1.0, 1.0);
        const double c = 3.0 * rng.gaussian();
        const Vec wp = plain.propose().w;
        const Vec ws = shifted.propose().w;
        for (int k = 0; k < 4; ++k) CHECK(ws[k] == doctest::Approx(wp[k]).epsilon(1e-12));
        plain.update(g);
        shifted.update(Vec(g.array() + c));
    }
    CHECK(shifted.cumulative_mixability_gap() ==
          doctest::Approx(plain.cumulative_mixability_gap()).epsilon(1e-10));
}

TEST_CASE("proposals stay on the simplex across random play") {
    Rng rng(77001);
    for (int trial = 0; trial < 20; ++trial) {
        const int K = 2 + rng.uniform_int(5);
        const auto kind = (trial % 2 == 0) ? LearnerKind::adahedge : LearnerKind::ftl;
        LearnerState st(kind, K);
        std::vector<Vec> gains;
        const int t = 30 + rng.uniform_int(50);
        for (int s = 0; s < t; ++s)
            gains.push_back(random_gain(rng, K, -5.0, 5.0));
        play(st, gains);
        CHECK(st.rounds() == t);
    }
}

// ---------------------------------------------------------------------------
// update
// ---------------------------------------------------------------------------

TEST_CASE("zero gain vector leaves the proposal unchanged") {
    LearnerState st(LearnerKind::adahedge, 3);
    st.update(make_vec({2.0, 1.0, 0.0}));
    const Vec before = st.propose().w;
    st.update(Vec::Zero(3));
    const Vec after = st.propose().w;
    for (int k = 0; k < 3; ++k) CHECK(after[k] == before[k]);
    CHECK(st.rounds() == 2);
}

TEST_CASE("constant gain vector leaves the next proposal unchanged") {
    LearnerState st(LearnerKind::adahedge, 3);
    st.update(make_vec({2.0, 1.0, 0.0}));
    const double gap_before = st.cumulative_mixability_gap();
    const Vec before = st.propose().w;
    st.update(Vec::Constant(3, -4.5));
    const Vec after = st.propose().w;
    for (int k = 0; k < 3; ++k) CHECK(after[k] == doctest::Approx(before[k]).epsilon(1e-13));
    CHECK(st.cumulative_mixability_gap() == doctest::Approx(gap_before).epsilon(1e-13));
}

TEST_CASE("two adahedge rounds match the hand-computed recurrence") {
    // Round 1 from the uniform proposal on gains (1,0): expected 1/2, mix
    // gain at infinite rate 1, so the gap becomes 1/2. Round 2 then runs at
    // rate eta = ln(2)/(1/2) = ln 4, giving weights (4,1)/5.
    LearnerState st(LearnerKind::adahedge, 2);
    st.update(make_vec({1.0, 0.0}));
    CHECK(st.cumulative_mixability_gap() == doctest::Approx(0.5));
    Vec w = st.propose().w;
    CHECK(w[0] == doctest::Approx(0.8));
    CHECK(w[1] == doctest::Approx(0.2));

    // Round 2 on gains (0,1): expected 0.2, mix gain 1 + ln(0.4)/ln(4).
    st.update(make_vec({0.0, 1.0}));
    const double mix = 1.0 + std::log(0.4) / std::log(4.0);
    CHECK(st.cumulative_mixability_gap() == doctest::Approx(0.5 + mix - 0.2));
    // Cumulative gains are now equal, so the proposal returns to uniform.
    w = st.propose().w;
    CHECK(w[0] == doctest::Approx(0.5));
    CHECK(w[1] == doctest::Approx(0.5));
}

TEST_CASE("adahedge replay matches an extended-precision reference") {
    Rng rng(424242);
    for (int trial = 0; trial < 10; ++trial) {
        const int K = 2 + rng.uniform_int(5);
        LearnerState st(LearnerKind::adahedge, K);
        oracle::AdaHedgeRef ref(K);
        for (int s = 0; s < 200; ++s) {
            const Vec g = random_gain(rng, K, -2.0, 2.0);
            const Vec w = st.propose().w;
            const std::vector<long double> wr = ref.weights();
            for (int k = 0; k < K; ++k)
                CHECK(w[k] == doctest::Approx(static_cast<double>(wr[static_cast<std::size_t>(k)]))
                                  .epsilon(1e-9));
            st.update(g);
            ref.update(g);
        }
        CHECK(st.cumulative_mixability_gap() ==
              doctest::Approx(static_cast<double>(ref.gap)).epsilon(1e-9));
    }
}

TEST_CASE("mixability gap is non-negative and non-decreasing") {
    Rng rng(9090);
    LearnerState st(LearnerKind::adahedge, 4);
    double last = 0.0;
    for (int s = 0; s < 300; ++s) {
        st.update(random_gain(rng, 4, -100.0, 100.0));
        const double gap = st.cumulative_mixability_gap();
        CHECK(gap >= last);
        last = gap;
    }
    CHECK(last > 0.0);
}

TEST_CASE("updates are deterministic") {
    Rng rng(5150);
    std::vector<Vec> gains;
    for (int s = 0; s < 60; ++s) gains.push_back(random_gain(rng, 3, -1.0, 1.0));
    LearnerState a(LearnerKind::adahedge, 3);
    LearnerState b(LearnerKind::adahedge, 3);
    for (const Vec& g : gains) {
        a.update(g);
        b.update(g);
    }
    CHECK(a.cumulative_gains() == b.cumulative_gains());
    CHECK(a.cumulative_mixability_gap() == b.cumulative_mixability_gap());
}

TEST_CASE("update rejects bad gain vectors") {
    LearnerState st(LearnerKind::adahedge, 3);
    CHECK_THROWS_AS(st.update(Vec{Vec::Zero(2)}), parameter_error);
    Vec bad = Vec::Zero(3);
    bad[1] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(st.update(bad), numeric_error);
    bad[1] = kInf;
    CHECK_THROWS_AS(st.update(bad), numeric_error);
    // The state is untouched by rejected updates.
    CHECK(st.rounds() == 0);
    CHECK(st.cumulative_gains() == Vec::Zero(3));
}

TEST_CASE("constructor rejects an empty arm set") {
    CHECK_THROWS_AS(LearnerState(LearnerKind::adahedge, 0), parameter_error);
    CHECK_THROWS_AS(LearnerState(LearnerKind::ftl, -3), parameter_error);
}

// ---------------------------------------------------------------------------
// regret
// ---------------------------------------------------------------------------

TEST_CASE("single round against a basis gain has regret one half") {
    LearnerState st(LearnerKind::adahedge, 2);
    const std::vector<Vec> history{make_vec({1.0, 0.0})};
    st.update(history[0]);
    CHECK(regret(st, history) == doctest::Approx(0.5));
}

TEST_CASE("all-equal gains give zero regret") {
    LearnerState st(LearnerKind::adahedge, 3);
    std::vector<Vec> history;
    for (double c : {1.0, -2.0, 0.25, 7.0}) {
        history.push_back(Vec::Constant(3, c));
        st.update(history.back());
    }
    CHECK(regret(st, history) == doctest::Approx(0.0));
}

TEST_CASE("regret insists on a complete history") {
    LearnerState st(LearnerKind::adahedge, 2);
    st.update(make_vec({1.0, 0.0}));
    st.update(make_vec({0.0, 1.0}));
    const std::vector<Vec> short_history{make_vec({1.0, 0.0})};
    CHECK_THROWS_AS(regret(st, short_history), parameter_error);
    CHECK(regret(LearnerState(LearnerKind::adahedge, 2), {}) == 0.0);
}

TEST_CASE("regret agrees with the definition on recorded play") {
    Rng rng(31337);
    for (int trial = 0; trial < 8; ++trial) {
        const int K = 2 + rng.uniform_int(4);
        std::vector<Vec> gains;
        const int t = 20 + rng.uniform_int(80);
        for (int s = 0; s < t; ++s) gains.push_back(random_gain(rng, K, -3.0, 3.0));
        LearnerState st(LearnerKind::adahedge, K);
        const std::vector<Vec> weights = play(st, gains);
        const double expect = oracle::regret(weights, gains);
        CHECK(regret(st, gains) == doctest::Approx(expect).epsilon(1e-10));
    }
}

TEST_CASE("adversarial alternating gains stay within the regret bound") {
    const int K = 5;
    const long t = 10000;
    LearnerState st(LearnerKind::adahedge, K);
    std::vector<Vec> gains;
    gains.reserve(static_cast<std::size_t>(t));
    for (long s = 0; s < t; ++s) {
        Vec g = Vec::Zero(K);
        g[s % 2] = 1.0;
        gains.push_back(g);
        st.update(g);
    }
    const double r = regret(st, gains);
    CHECK(r <= oracle::adahedge_bound(1.0, t, K));
    CHECK(r > 0.0);
}

TEST_CASE("adahedge meets its regret bound on random gain sequences") {
    // Spreads across three orders of magnitude; the learner takes no scale
    // parameter, the guarantee adapts to the realized spread.
    Rng rng(161803);
    const double scales[] = {0.1, 1.0, 100.0};
    for (int trial = 0; trial < 50; ++trial) {
        const double sigma = scales[trial % 3];
        const int K = 2 + rng.uniform_int(5);
        const int t = 50 + rng.uniform_int(350);
        std::vector<Vec> gains;
        const double lo = sigma * (2.0 * rng.uniform() - 1.0);
        for (int s = 0; s < t; ++s) gains.push_back(random_gain(rng, K, lo, lo + sigma));
        LearnerState st(LearnerKind::adahedge, K);
        play(st, gains);
        const double r = regret(st, gains);
        CHECK(r <= oracle::adahedge_bound(oracle::spread(gains), t, K));
    }
}

// ---------------------------------------------------------------------------
// ftl properties
// ---------------------------------------------------------------------------

TEST_CASE("ftl proposals are invariant under positive gain rescaling") {
    Rng rng(271828);
    for (double c : {0.01, 3.7, 250.0}) {
        LearnerState plain(LearnerKind::ftl, 4);
        LearnerState scaled(LearnerKind::ftl, 4);
        for (int s = 0; s < 50; ++s) {
            const Vec g = random_gain(rng, 4, -1.0, 1.0);
            const Vec wp = plain.propose().w;
            const Vec ws = scaled.propose().w;
            CHECK(wp == ws);
            plain.update(g);
            scaled.update(c * g);
        }
    }
}

TEST_CASE("single-arm learners always propose the whole mass") {
    for (auto kind : {LearnerKind::adahedge, LearnerKind::ftl}) {
        LearnerState st(kind, 1);
        std::vector<Vec> history;
        for (int s = 0; s < 5; ++s) {
            CHECK(st.propose().w[0] == 1.0);
            history.push_back(Vec::Constant(1, static_cast<double>(s)));
            st.update(history.back());
        }
        CHECK(regret(st, history) == doctest::Approx(0.0));
    }
}
