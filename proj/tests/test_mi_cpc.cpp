#include <doctest.h>

#include <cmath>
#include <vector>

#include "selfmi/errors.hpp"
#include "selfmi/mi_cpc.hpp"
#include "selfmi/tensor.hpp"
#include "testutil.hpp"

using namespace selfmi;

namespace {

// Identity-behaving critic for d-dimensional nonnegative inputs.
CpcCritic identity_critic(std::size_t d) {
    CpcCritic c;
    c.W1 = Tensor::eye(d);
    c.b1 = Tensor::zeros({d});
    c.W2 = Tensor::eye(d);
    c.b2 = Tensor::zeros({d});
    return c;
}

double infonce_oracle(const Tensor& score) {
    // Direct translation of −(1/N) Σ_i [s_ii − ln Σ_j exp(s_ij)], naive exp.
    const std::size_t n = score.rows();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double denom = 0.0;
        for (std::size_t j = 0; j < n; ++j) denom += std::exp(score.at(i, j));
        acc += score.at(i, i) - std::log(denom);
    }
    return -acc / static_cast<double>(n);
}

}  // namespace

TEST_CASE("unit normalization: triangle, idempotence, random norms") {
    Tensor x = Tensor::from_values({1, 2}, {3.0, 4.0});
    Tensor y = unit_normalize_rows(x);
    CHECK(y.at(0, 0) == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(y.at(0, 1) == doctest::Approx(0.8).epsilon(1e-12));

    Tensor yy = unit_normalize_rows(y);
    for (std::size_t i = 0; i < 2; ++i)
        CHECK(std::fabs(yy.values()[i] - y.values()[i]) <= 1e-12);

    Rng rng(100);
    Tensor r = Tensor::uniform({16, 8}, -2.0, 2.0, rng);
    Tensor u = unit_normalize_rows(r);
    for (std::size_t i = 0; i < 16; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < 8; ++j) s += u.at(i, j) * u.at(i, j);
        CHECK(std::fabs(std::sqrt(s) - 1.0) <= 1e-12);
    }

    Tensor zero_row = Tensor::from_values({2, 2}, {1.0, 0.0, 0.0, 0.0});
    CHECK_THROWS_AS(unit_normalize_rows(zero_row), ValueError);
}

TEST_CASE("unit normalization gradient matches finite differences") {
    Rng rng(101);
    Tensor x0 = Tensor::uniform({4, 5}, 0.3, 2.0, rng);
    Tensor w = Tensor::uniform({4, 5}, -1.0, 1.0, rng);
    auto f = [&](const Tensor& t) { return sum(mul(unit_normalize_rows(t), w)); };
    GradCheckReport rep = grad_check(f, x0, 1e-5, 1e-4);
    CHECK(rep.pass);
}

TEST_CASE("scores: self-similarity diagonal and orthogonality") {
    Rng rng(102);
    Tensor Z = Tensor::uniform({4, 3}, 0.2, 1.5, rng);  // nonneg → relu no-op
    CpcCritic c = identity_critic(3);
    Tensor s = cpc_scores(c, Z, Z, Modality::text);
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(std::fabs(s.at(i, i) - 1.0) <= 1e-12);
    for (double v : s.values()) {
        CHECK(v <= 1.0 + 1e-12);
        CHECK(v >= -1.0 - 1e-12);
    }

    Tensor a = Tensor::from_values({2, 2}, {1.0, 0.0, 0.0, 1.0});
    Tensor sc = cpc_scores(identity_critic(2), a, a, Modality::audio);
    CHECK(std::fabs(sc.at(0, 1)) <= 1e-12);
    CHECK(std::fabs(sc.at(1, 0)) <= 1e-12);
}

TEST_CASE("scores match the brute-force pairwise oracle") {
    Rng rng(103);
    Tensor Z_m = Tensor::uniform({4, 6}, -1.0, 1.0, rng);
    Tensor Z_s = Tensor::uniform({4, 3}, -1.0, 1.0, rng);
    CpcCritic c = CpcCritic::init(6, 5, 3, rng);
    Tensor s = cpc_scores(c, Z_m, Z_s, Modality::visual);

    // Reference: explicit projection, normalization, pairwise dots.
    auto proj = c.forward(Z_m);
    auto unit = [](std::vector<double> v) {
        double r = 0.0;
        for (double x : v) r += x * x;
        r = std::sqrt(r);
        for (double& x : v) x /= r;
        return v;
    };
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) {
            std::vector<double> zi, gj;
            for (std::size_t k = 0; k < 3; ++k) {
                zi.push_back(Z_s.at(i, k));
                gj.push_back(proj.at(j, k));
            }
            zi = unit(zi);
            gj = unit(gj);
            double dot = 0.0;
            for (std::size_t k = 0; k < 3; ++k) dot += zi[k] * gj[k];
            CHECK(std::fabs(s.at(i, j) - dot) <= 1e-12);
        }
}

TEST_CASE("infonce: exact zero at N=1, ln N on constants, saturation") {
    CHECK(infonce_loss(Tensor::from_values({1, 1}, {0.37})).item() == 0.0);
    CHECK(infonce_loss(Tensor::from_values({1, 1}, {-55.0})).item() == 0.0);

    for (std::size_t n : {2u, 8u, 64u}) {
        Tensor constant = Tensor::full({n, n}, 0.42);
        CHECK(std::fabs(infonce_loss(constant).item() - std::log(double(n))) <=
              1e-12);
    }

    // Strongly separated diagonal drives the loss to ~0.
    Tensor sep = Tensor::full({8, 8}, -50.0);
    for (std::size_t i = 0; i < 8; ++i) sep.values_mut()[i * 8 + i] = 50.0;
    CHECK(infonce_loss(sep).item() <= 1e-12);
    CHECK(infonce_loss(sep).item() >= 0.0);

    CHECK_THROWS_AS(infonce_loss(Tensor::zeros({3, 4})), ShapeError);
}

TEST_CASE("infonce matches the naive-exp oracle and is shift invariant") {
    Rng rng(104);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t n = 2 + rng.bounded(6);
        Tensor s = Tensor::uniform({n, n}, -1.0, 1.0, rng);
        const double got = infonce_loss(s).item();
        CHECK(std::fabs(got - infonce_oracle(s)) <= 1e-12);
        CHECK(got >= 0.0);

        Tensor shifted = s.detached();
        for (double& v : shifted.values_mut()) v += 7.25;
        CHECK(std::fabs(infonce_loss(shifted).item() - got) <= 1e-9);
    }
}

TEST_CASE("infonce gradient through the critic passes finite differences") {
    Rng rng(105);
    Tensor Z_m = Tensor::uniform({4, 5}, -1.0, 1.0, rng);
    Tensor Z_s = Tensor::uniform({4, 3}, -1.0, 1.0, rng);
    CpcCritic base = CpcCritic::init(5, 4, 3, rng);

    auto with_W1 = [&](const Tensor& w) {
        CpcCritic c;
        c.W1 = w;
        c.b1 = base.b1.detached();
        c.W2 = base.W2.detached();
        c.b2 = base.b2.detached();
        return infonce_loss(cpc_scores(c, Z_m, Z_s, Modality::text));
    };
    CHECK(grad_check(with_W1, base.W1.detached(), 1e-5, 1e-4).pass);

    // ...and through the representations themselves.
    auto with_Zs = [&](const Tensor& z) {
        return infonce_loss(cpc_scores(base, Z_m, z, Modality::text));
    };
    CHECK(grad_check(with_Zs, Z_s.detached(), 1e-5, 1e-4).pass);
}

TEST_CASE("cpc_total: batch of one, additivity, ablation structure") {
    Rng rng(106);
    std::array<CpcCritic, 3> critics{CpcCritic::init(4, 4, 3, rng),
                                     CpcCritic::init(4, 4, 3, rng),
                                     CpcCritic::init(4, 4, 3, rng)};
    Representations reps;
    reps.Z_m = Tensor::uniform({1, 4}, -1.0, 1.0, rng);
    reps.Z_t = Tensor::uniform({1, 3}, -1.0, 1.0, rng);
    reps.Z_a = Tensor::uniform({1, 3}, -1.0, 1.0, rng);
    reps.Z_v = Tensor::uniform({1, 3}, -1.0, 1.0, rng);
    CHECK(cpc_total(critics, reps).total.item() == 0.0);

    Representations batch;
    batch.Z_m = Tensor::uniform({5, 4}, -1.0, 1.0, rng);
    batch.Z_t = Tensor::uniform({5, 3}, -1.0, 1.0, rng);
    batch.Z_a = batch.Z_t.detached();
    batch.Z_v = batch.Z_t.detached();
    std::array<CpcCritic, 3> same{critics[0], critics[0], critics[0]};
    CpcOutputs eq = cpc_total(same, batch);
    const double single = eq.loss_per_pair[0].item();
    CHECK(std::fabs(eq.total.item() - 3.0 * single) <= 1e-12);

    // The four ablation variants: full and one pair dropped at a time.
    CpcOutputs full = cpc_total(critics, batch);
    for (std::size_t drop = 0; drop < 3; ++drop) {
        std::array<bool, 3> mask{true, true, true};
        mask[drop] = false;
        CpcOutputs part = cpc_total(critics, batch, mask);
        CHECK(part.loss_per_pair[drop].item() == 0.0);
        CHECK(std::fabs(part.total.item() -
                        (full.total.item() - full.loss_per_pair[drop].item())) <=
              1e-12);
    }
}

TEST_CASE("mi lower bound never exceeds ln N") {
    CHECK(mi_lower_bound(0.0, 1) == 0.0);
    CHECK(std::fabs(mi_lower_bound(std::log(2.0), 2)) <= 1e-15);

    Rng rng(107);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 1 + rng.bounded(32);
        Tensor s = Tensor::uniform({n, n}, -3.0, 3.0, rng);
        const double bound = mi_lower_bound(infonce_loss(s).item(), n);
        CHECK(bound <= std::log(double(n)) + 1e-9);
    }
    CHECK_THROWS_AS(mi_lower_bound(0.1, 0), ContractError);
}
