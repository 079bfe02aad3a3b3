#include <doctest.h>

#include <cmath>
#include <vector>

#include "selfmi/errors.hpp"
#include "selfmi/metrics.hpp"
#include "selfmi/rng.hpp"

using namespace selfmi;

namespace {

// Brute-force references, written from the definitions with plain loops.
double oracle_mae(const std::vector<double>& p, const std::vector<double>& t) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::fabs(p[i] - t[i]);
    return s / static_cast<double>(p.size());
}

double oracle_pearson(const std::vector<double>& a, const std::vector<double>& b) {
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(a.size());
    mb /= static_cast<double>(b.size());
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cov += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    return cov / std::sqrt(va * vb);
}

struct OracleBinary {
    double acc2;
    double f1;
    std::size_t n;
};

OracleBinary oracle_binary(const std::vector<double>& p,
                           const std::vector<double>& t, bool exclude_zero) {
    std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (exclude_zero && t[i] == 0.0) continue;
        const bool pp = p[i] >= 0.0;
        const bool tt = t[i] >= 0.0;
        if (pp && tt) ++tp;
        if (!pp && !tt) ++tn;
        if (pp && !tt) ++fp;
        if (!pp && tt) ++fn;
    }
    OracleBinary o{};
    o.n = tp + tn + fp + fn;
    o.acc2 = static_cast<double>(tp + tn) / static_cast<double>(o.n);
    if (tp == 0) {
        o.f1 = 0.0;
    } else {
        const double pr = double(tp) / double(tp + fp);
        const double rc = double(tp) / double(tp + fn);
        o.f1 = 2.0 * pr * rc / (pr + rc);
    }
    return o;
}

std::vector<double> random_vec(Rng& rng, std::size_t n, double zero_prob = 0.0) {
    std::vector<double> v(n);
    for (double& x : v)
        x = (zero_prob > 0.0 && rng.uniform() < zero_prob)
                ? 0.0
                : rng.uniform(-3.0, 3.0);
    return v;
}

}  // namespace

TEST_CASE("mae basics and contract") {
    std::vector<double> y{1.0, -2.0, 0.5};
    CHECK(mae(y, y) == 0.0);
    std::vector<double> shifted{1.7, -1.3, 1.2};
    CHECK(mae(shifted, y) == doctest::Approx(0.7).epsilon(1e-12));
    CHECK_THROWS_AS(mae({}, {}), ContractError);
    std::vector<double> shorter{1.0};
    CHECK_THROWS_AS(mae(shorter, y), ContractError);
}

TEST_CASE("mae matches the scalar oracle on random data") {
    Rng rng(301);
    for (int rep = 0; rep < 100; ++rep) {
        auto p = random_vec(rng, 1 + rng.bounded(50));
        auto t = random_vec(rng, p.size());
        CHECK(std::fabs(mae(p, t) - oracle_mae(p, t)) <= 1e-12);
    }
}

TEST_CASE("pearson basics, symmetry, and affine invariance") {
    std::vector<double> y{0.3, -1.2, 2.0, 0.9, -0.4};
    CHECK(pearson(y, y) == doctest::Approx(1.0).epsilon(1e-12));
    std::vector<double> neg(y);
    for (double& v : neg) v = -v;
    CHECK(pearson(neg, y) == doctest::Approx(-1.0).epsilon(1e-12));

    std::vector<double> affine(y);
    for (double& v : affine) v = 2.5 * v + 7.0;
    CHECK(std::fabs(pearson(affine, y) - 1.0) <= 1e-12);

    Rng rng(302);
    auto a = random_vec(rng, 40);
    auto b = random_vec(rng, 40);
    CHECK(pearson(a, b) == pearson(b, a));  // bitwise
    std::vector<double> b2(b);
    for (double& v : b2) v = 0.3 * v - 1.0;
    CHECK(std::fabs(pearson(a, b2) - pearson(a, b)) <= 1e-12);

    std::vector<double> constant{2.0, 2.0, 2.0, 2.0, 2.0};
    CHECK_THROWS_AS(pearson(constant, y), ValueError);
    CHECK_THROWS_AS(pearson(y, constant), ValueError);
    std::vector<double> one{1.0};
    CHECK_THROWS_AS(pearson(one, one), ContractError);
}

TEST_CASE("pearson matches the scalar oracle on random data") {
    Rng rng(303);
    for (int rep = 0; rep < 100; ++rep) {
        auto a = random_vec(rng, 2 + rng.bounded(60));
        auto b = random_vec(rng, a.size());
        CHECK(std::fabs(pearson(a, b) - oracle_pearson(a, b)) <= 1e-10);
        CHECK(std::fabs(pearson(a, b)) <= 1.0 + 1e-12);
    }
}

TEST_CASE("binary scores: agreement, disagreement, zero exclusion") {
    std::vector<double> p{1.0, -1.0, 0.5, -0.2};
    CHECK(binary_scores(p, p, Binarization::nonneg).acc2 == 1.0);
    CHECK(binary_scores(p, p, Binarization::nonneg).f1 == 1.0);

    std::vector<double> flip{1.0, -1.0};
    std::vector<double> anti{-1.0, 1.0};
    auto disagree = binary_scores(flip, anti, Binarization::nonneg);
    CHECK(disagree.acc2 == 0.0);
    CHECK(disagree.f1 == 0.0);

    // Prediction 0 is positive-side in both conventions.
    std::vector<double> zpred{0.0};
    std::vector<double> ypos{1.0};
    CHECK(binary_scores(zpred, ypos, Binarization::nonneg).acc2 == 1.0);

    // posneg drops zero labels.
    std::vector<double> pr{1.0, -1.0, 1.0};
    std::vector<double> ta{0.0, -1.0, 1.0};
    auto pn = binary_scores(pr, ta, Binarization::posneg);
    CHECK(pn.n == 2);
    CHECK(pn.acc2 == 1.0);
    auto nn = binary_scores(pr, ta, Binarization::nonneg);
    CHECK(nn.n == 3);

    std::vector<double> zeros{0.0, 0.0};
    CHECK_THROWS_AS(binary_scores(pr, zeros, Binarization::posneg)
                    , ContractError);
}

TEST_CASE("binary scores match the confusion-matrix oracle on random data") {
    Rng rng(304);
    for (int rep = 0; rep < 100; ++rep) {
        auto p = random_vec(rng, 100);
        auto t = random_vec(rng, 100, /*zero_prob=*/0.12);
        bool any_nonzero = false;
        for (double v : t) any_nonzero = any_nonzero || v != 0.0;
        if (!any_nonzero) t[0] = 1.0;

        auto got_nn = binary_scores(p, t, Binarization::nonneg);
        auto want_nn = oracle_binary(p, t, false);
        CHECK(got_nn.n == want_nn.n);
        CHECK(std::fabs(got_nn.acc2 - want_nn.acc2) <= 1e-10);
        CHECK(std::fabs(got_nn.f1 - want_nn.f1) <= 1e-10);

        auto got_pn = binary_scores(p, t, Binarization::posneg);
        auto want_pn = oracle_binary(p, t, true);
        CHECK(got_pn.n == want_pn.n);
        CHECK(std::fabs(got_pn.acc2 - want_pn.acc2) <= 1e-10);
        CHECK(std::fabs(got_pn.f1 - want_pn.f1) <= 1e-10);

        std::size_t zeros = 0;
        for (double v : t) zeros += v == 0.0;
        CHECK(got_pn.n == t.size() - zeros);
    }
}

TEST_CASE("evaluate assembles a consistent report") {
    Rng rng(305);
    auto p = random_vec(rng, 64);
    auto t = random_vec(rng, 64, 0.1);
    MetricsReport r = evaluate(p, t);
    CHECK(r.n_eval == 64);
    CHECK(r.mae >= 0.0);
    CHECK(r.corr >= -1.0);
    CHECK(r.corr <= 1.0);
    for (double v : {r.acc2_nonneg, r.acc2_posneg, r.f1_nonneg, r.f1_posneg}) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    CHECK(r.mae == doctest::Approx(oracle_mae(p, t)).epsilon(1e-12));
}
