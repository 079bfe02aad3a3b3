#include "selfmi/mi_estimate.hpp"

#include <cmath>

#include "selfmi/errors.hpp"
#include "selfmi/mi_cpc.hpp"
#include "selfmi/rng.hpp"
#include "selfmi/training.hpp"

namespace selfmi {

void MiEstimateConfig::validate() const {
    if (rho < 0.0 || rho > 0.99)
        throw ConfigError("estimate-mi: rho must be in [0, 0.99]");
    if (dim < 1) throw ConfigError("estimate-mi: dim must be >= 1");
    if (batch < 2) throw ConfigError("estimate-mi: batch must be >= 2");
    if (steps < 1) throw ConfigError("estimate-mi: steps must be >= 1");
    if (embed_dim < 1 || hidden < 1)
        throw ConfigError("estimate-mi: embedding dims must be >= 1");
    if (!(lr > 0.0)) throw ConfigError("estimate-mi: lr must be > 0");
}

double analytic_gaussian_mi(double rho, std::size_t dim) {
    return -0.5 * double(dim) * std::log(1.0 - rho * rho);
}

namespace {

struct Embedder {
    Tensor W1, b1, W2, b2;

    static Embedder init(std::size_t in, std::size_t hidden, std::size_t out,
                         Rng& rng) {
        Embedder e;
        const double s1 = 1.0 / std::sqrt(double(in));
        const double s2 = 1.0 / std::sqrt(double(hidden));
        e.W1 = Tensor::uniform({in, hidden}, -s1, s1, rng);
        e.b1 = Tensor::zeros({hidden});
        e.W2 = Tensor::uniform({hidden, out}, -s2, s2, rng);
        e.b2 = Tensor::zeros({out});
        for (Tensor* t : {&e.W1, &e.b1, &e.W2, &e.b2})
            t->set_requires_grad(true);
        return e;
    }

    Tensor forward(const Tensor& X) const {
        return add_rowwise(
            matmul(relu(add_rowwise(matmul(X, W1), b1)), W2), b2);
    }

    std::vector<Tensor> params() { return {W1, b1, W2, b2}; }
};

}  // namespace

MiEstimateReport estimate_mi(const MiEstimateConfig& cfg) {
    cfg.validate();
    Rng init_rng(Rng::mix(cfg.seed, 1));
    Rng data_rng(Rng::mix(cfg.seed, 2));

    Embedder f = Embedder::init(cfg.dim, cfg.hidden, cfg.embed_dim, init_rng);
    Embedder g = Embedder::init(cfg.dim, cfg.hidden, cfg.embed_dim, init_rng);

    std::vector<Tensor> params = f.params();
    for (Tensor& t : g.params()) params.push_back(t);
    Adam opt({{params, cfg.lr}});

    MiEstimateReport rep;
    rep.analytic = analytic_gaussian_mi(cfg.rho, cfg.dim);
    rep.ln_n = std::log(double(cfg.batch));
    rep.loss.reserve(cfg.steps);
    rep.bound.reserve(cfg.steps);

    const double mix = std::sqrt(1.0 - cfg.rho * cfg.rho);
    std::vector<double> xv(cfg.batch * cfg.dim), yv(cfg.batch * cfg.dim);

    for (std::size_t step = 0; step < cfg.steps; ++step) {
        for (std::size_t i = 0; i < xv.size(); ++i) {
            xv[i] = data_rng.normal();
            yv[i] = cfg.rho * xv[i] + mix * data_rng.normal();
        }
        Tape::active().clear();
        opt.zero_grad();
        Tensor X = Tensor::from_values({cfg.batch, cfg.dim},
                                       std::vector<double>(xv));
        Tensor Y = Tensor::from_values({cfg.batch, cfg.dim},
                                       std::vector<double>(yv));
        Tensor score = matmul(unit_normalize_rows(f.forward(X)),
                              transpose(unit_normalize_rows(g.forward(Y))));
        Tensor loss = infonce_loss(score);
        const double l = loss.item();
        if (!std::isfinite(l))
            throw ValueError("estimate-mi: contrastive loss diverged at step " +
                             std::to_string(step));
        rep.loss.push_back(l);
        rep.bound.push_back(rep.ln_n - l);
        backward(loss);
        opt.step();
    }

    const std::size_t tail = std::max<std::size_t>(1, cfg.steps / 10);
    double acc = 0.0;
    for (std::size_t i = cfg.steps - tail; i < cfg.steps; ++i)
        acc += rep.bound[i];
    rep.final_bound = acc / double(tail);
    return rep;
}

}  // namespace selfmi
