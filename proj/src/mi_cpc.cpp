#include "selfmi/mi_cpc.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "selfmi/errors.hpp"

namespace selfmi {

CpcCritic CpcCritic::init(std::size_t d_m, std::size_t d_h, std::size_t d_out,
                          Rng& rng) {
    if (d_m == 0 || d_h == 0 || d_out == 0)
        throw ContractError("cpc critic init: dimensions must be positive");
    const double r1 = 1.0 / std::sqrt(static_cast<double>(d_m));
    const double r2 = 1.0 / std::sqrt(static_cast<double>(d_h));
    CpcCritic c;
    c.W1 = Tensor::uniform({d_m, d_h}, -r1, r1, rng, true);
    c.b1 = Tensor::uniform({d_h}, -r1, r1, rng, true);
    c.W2 = Tensor::uniform({d_h, d_out}, -r2, r2, rng, true);
    c.b2 = Tensor::uniform({d_out}, -r2, r2, rng, true);
    return c;
}

Tensor CpcCritic::forward(const Tensor& Z_m) const {
    if (Z_m.rank() != 2 || Z_m.cols() != W1.rows())
        throw ShapeError("cpc critic: input " + shape_str(Z_m.shape()) +
                         " vs W1 " + shape_str(W1.shape()));
    Tensor h = relu(add_rowwise(matmul(Z_m, W1), b1));
    return add_rowwise(matmul(h, W2), b2);
}

Tensor unit_normalize_rows(const Tensor& x) {
    if (x.rank() != 2)
        throw ShapeError("unit_normalize_rows: expected matrix, got " +
                         shape_str(x.shape()));
    const std::size_t n = x.rows(), d = x.cols();
    auto xv = x.values();
    std::vector<double> norms(n);
    std::vector<double> out(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += xv[i * d + j] * xv[i * d + j];
        const double r = std::sqrt(s);
        if (r < 1e-8)
            throw ValueError("unit_normalize_rows: degenerate row " +
                             std::to_string(i) + " with norm " +
                             std::to_string(r));
        norms[i] = r;
        for (std::size_t j = 0; j < d; ++j) out[i * d + j] = xv[i * d + j] / r;
    }
    Tensor y = Tensor::from_values(x.shape(), std::move(out));
    if (detail::op_needs_tape({&x})) {
        // Per row: dx = (g − y·(g·y)) / r.
        detail::record_op(
            "unit_normalize_rows", {&x}, y,
            [xd = x.data(), yd = y.data(), norms = std::move(norms), n, d]() {
                for (std::size_t i = 0; i < n; ++i) {
                    double gy = 0.0;
                    for (std::size_t j = 0; j < d; ++j)
                        gy += yd->grad[i * d + j] * yd->values[i * d + j];
                    for (std::size_t j = 0; j < d; ++j)
                        xd->grad[i * d + j] +=
                            (yd->grad[i * d + j] -
                             yd->values[i * d + j] * gy) /
                            norms[i];
                }
            });
    }
    return y;
}

Tensor cpc_scores(const CpcCritic& critic, const Tensor& Z_m,
                  const Tensor& Z_s, Modality s) {
    if (Z_m.rows() != Z_s.rows())
        throw ShapeError(std::string("cpc_scores(") + modality_name(s) +
                         "): batch mismatch " + std::to_string(Z_m.rows()) +
                         " vs " + std::to_string(Z_s.rows()));
    Tensor proj = critic.forward(Z_m);
    if (proj.cols() != Z_s.cols())
        throw ShapeError(std::string("cpc_scores(") + modality_name(s) +
                         "): critic output dim " + std::to_string(proj.cols()) +
                         " != representation dim " + std::to_string(Z_s.cols()));
    return matmul(unit_normalize_rows(Z_s),
                  transpose(unit_normalize_rows(proj)));
}

Tensor infonce_loss(const Tensor& score) {
    if (score.rank() != 2 || score.rows() != score.cols())
        throw ShapeError("infonce_loss: score must be square, got " +
                         shape_str(score.shape()));
    const std::size_t n = score.rows();
    Tensor diag = mul(log_softmax_rows(score), Tensor::eye(n));
    return scale(sum(diag), -1.0 / static_cast<double>(n));
}

CpcOutputs cpc_total(const std::array<CpcCritic, 3>& critics,
                     const Representations& reps,
                     const std::array<bool, 3>& active) {
    CpcOutputs out;
    for (Modality m : kModalities) {
        const std::size_t k = static_cast<std::size_t>(m);
        if (!active[k]) {
            out.loss_per_pair[k] = Tensor::scalar(0.0);
            continue;
        }
        const Tensor& Z_s = reps.unimodal(m);
        if (!Z_s.defined())
            throw ContractError(std::string("cpc_total: no representation for ") +
                                modality_name(m));
        out.score[k] = cpc_scores(critics[k], reps.Z_m, Z_s, m);
        out.loss_per_pair[k] = infonce_loss(out.score[k]);
    }
    out.total = add(add(out.loss_per_pair[0], out.loss_per_pair[1]),
                    out.loss_per_pair[2]);
    return out;
}

double mi_lower_bound(double loss, std::size_t n) {
    if (n < 1) throw ContractError("mi_lower_bound: empty batch");
    return std::log(static_cast<double>(n)) - loss;
}

}  // namespace selfmi
