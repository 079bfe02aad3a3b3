#include "selfmi/ulg_mi.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "selfmi/errors.hpp"

namespace selfmi {

LabelGenParams LabelGenParams::init(std::size_t in_dim, std::size_t hidden,
                                    Rng& rng) {
    if (in_dim == 0 || hidden == 0)
        throw ContractError("label generator init: dimensions must be positive");
    const double r1 = 1.0 / std::sqrt(static_cast<double>(in_dim));
    const double r2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    LabelGenParams g;
    g.W1 = Tensor::uniform({in_dim, hidden}, -r1, r1, rng, true);
    g.b1 = Tensor::uniform({hidden}, -r1, r1, rng, true);
    g.W2 = Tensor::uniform({hidden, 1}, -r2, r2, rng, true);
    g.b2 = Tensor::uniform({1}, -r2, r2, rng, true);
    return g;
}

Tensor LabelGenParams::forward(const Tensor& X) const {
    if (X.rank() != 2 || X.cols() != W1.rows())
        throw ShapeError("label generator: input " + shape_str(X.shape()) +
                         " vs W1 " + shape_str(W1.shape()));
    Tensor h = relu(add_rowwise(matmul(X, W1), b1));
    return add_rowwise(matmul(h, W2), b2);
}

ULabelState ULabelState::init(std::span<const double> y_m,
                              const std::array<std::size_t, 4>& rep_dims,
                              double lo, double hi) {
    if (y_m.empty()) throw ContractError("u-label init: empty label set");
    if (!(lo < hi)) throw ContractError("u-label init: empty sentiment range");
    ULabelState st;
    st.lo = lo;
    st.hi = hi;
    st.epoch = 1;
    for (auto& l : st.labels) l.assign(y_m.begin(), y_m.end());
    for (std::size_t s = 0; s < 4; ++s)
        st.global_reps[s].assign(rep_dims[s], 0.0);
    return st;
}

std::array<Tensor, 3> generator_outputs(
    const std::array<LabelGenParams, 3>& gen,
    const std::array<CpcCritic, 3>& critics, const Representations& reps,
    const std::array<bool, 3>& active) {
    std::array<Tensor, 3> out;
    for (Modality m : kModalities) {
        const std::size_t k = static_cast<std::size_t>(m);
        if (!active[k]) continue;
        const Tensor& Z_s = reps.unimodal(m);
        if (!Z_s.defined())
            throw ContractError(std::string("generator_outputs: missing ") +
                                modality_name(m) + " representation");
        Tensor proj = unit_normalize_rows(critics[k].forward(reps.Z_m));
        Tensor zs = unit_normalize_rows(Z_s);
        std::vector<Tensor> parts{proj, zs};
        out[k] = gen[k].forward(concat_cols(parts));
    }
    return out;
}

Tensor label_task_loss(const std::array<Tensor, 3>& outputs,
                       const Tensor& y_m, const std::array<bool, 3>& active) {
    if (y_m.rank() != 2 || y_m.cols() != 1)
        throw ShapeError("label_task_loss: y_m must be [N x 1], got " +
                         shape_str(y_m.shape()));
    const std::size_t n = y_m.rows();
    if (n == 0) throw ContractError("label_task_loss: empty batch");

    Tensor acc;
    std::size_t n_active = 0;
    for (Modality m : kModalities) {
        const std::size_t k = static_cast<std::size_t>(m);
        if (!active[k]) continue;
        if (!outputs[k].defined())
            throw ContractError(std::string("label_task_loss: no output for ") +
                                modality_name(m));
        if (outputs[k].rows() != n)
            throw ShapeError("label_task_loss: batch mismatch");
        ++n_active;
        Tensor term = sum(abs(sub(outputs[k], y_m)));
        acc = acc.defined() ? add(acc, term) : term;
    }
    if (n_active == 0) return Tensor::scalar(0.0);
    return scale(acc, 1.0 / static_cast<double>(n * n_active));
}

void generate_labels(ULabelState& state,
                     const std::array<LabelGenParams, 3>& gen,
                     const std::array<CpcCritic, 3>& critics,
                     const Representations& reps,
                     const std::vector<std::size_t>& ids,
                     const std::array<bool, 3>& active) {
    if (state.epoch < 2)
        throw ContractError(
            "generate_labels: u-labels are fixed to y_m during epoch 1");
    NoGradGuard ng;  // stored labels are constants, keep the tape clean
    std::array<Tensor, 3> outs = generator_outputs(gen, critics, reps, active);
    for (Modality m : kModalities) {
        const std::size_t k = static_cast<std::size_t>(m);
        if (!active[k]) continue;
        const Tensor& y = outs[k];
        if (y.rows() != ids.size())
            throw ContractError("generate_labels: batch/id count mismatch");
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const std::size_t id = ids[i];
            if (id >= state.labels[k].size())
                throw ContractError("generate_labels: sample index " +
                                    std::to_string(id) + " out of range");
            state.labels[k][id] = std::clamp(y.at(i, 0), state.lo, state.hi);
        }
    }
}

void update_global_reps(ULabelState& state, const Representations& reps,
                        const std::array<bool, 3>& active) {
    auto ema = [&](std::vector<double>& f, const Tensor& Z) {
        if (!Z.defined()) return;
        if (f.size() != Z.cols())
            throw ContractError("update_global_reps: dim mismatch (" +
                                std::to_string(f.size()) + " vs " +
                                std::to_string(Z.cols()) + ")");
        const std::size_t n = Z.rows();
        for (std::size_t j = 0; j < f.size(); ++j) {
            double mean = 0.0;
            for (std::size_t i = 0; i < n; ++i) mean += Z.at(i, j);
            mean /= static_cast<double>(n);
            f[j] = (1.0 - ULabelState::momentum) * f[j] +
                   ULabelState::momentum * mean;
        }
    };
    for (Modality m : kModalities) {
        const std::size_t k = static_cast<std::size_t>(m);
        if (active[k]) ema(state.global_reps[k], reps.unimodal(m));
    }
    ema(state.global_reps[ULabelState::fused_index], reps.Z_m);
}

}  // namespace selfmi
