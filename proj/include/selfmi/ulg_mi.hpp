#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "selfmi/fusion.hpp"
#include "selfmi/mi_cpc.hpp"
#include "selfmi/modality.hpp"
#include "selfmi/rng.hpp"
#include "selfmi/tensor.hpp"

namespace selfmi {

// One-hidden-layer regression MLP that turns the contrastive pair
// (unit(G(Z_m)), unit(Z_s)) into a scalar unimodal label.
struct LabelGenParams {
    Tensor W1;  // [in_dim × hidden]
    Tensor b1;  // [hidden]
    Tensor W2;  // [hidden × 1]
    Tensor b2;  // [1]

    static LabelGenParams init(std::size_t in_dim, std::size_t hidden,
                               Rng& rng);
    Tensor forward(const Tensor& X) const;  // [N × in_dim] → [N × 1]
};

// Mutable training-loop state: per-modality u-labels (one scalar per train
// sample) and the exponentially averaged global representations F_s.
// Single-writer: only the training loop mutates it.
struct ULabelState {
    static constexpr std::size_t fused_index = 3;
    static constexpr double momentum = 0.1;

    std::array<std::vector<double>, 3> labels;  // [modality][sample index]
    std::size_t epoch = 1;
    // Indices 0..2 follow Modality order, 3 is the fused representation.
    std::array<std::vector<double>, 4> global_reps;
    double lo = -3.0, hi = 3.0;

    // u-labels start as exact copies of the multimodal labels; F vectors
    // start at zero.
    static ULabelState init(std::span<const double> y_m,
                            const std::array<std::size_t, 4>& rep_dims,
                            double lo, double hi);
};

// Generator forward passes for the active modalities, on the current tape.
// Feed detached representations here when the caller wants gradients
// confined to the generators and critics.
std::array<Tensor, 3> generator_outputs(
    const std::array<LabelGenParams, 3>& gen,
    const std::array<CpcCritic, 3>& critics, const Representations& reps,
    const std::array<bool, 3>& active);

// Mean over samples and active modalities of |y_s − y_m|; zero scalar when
// no unimodal task is active.
Tensor label_task_loss(const std::array<Tensor, 3>& outputs,
                       const Tensor& y_m, const std::array<bool, 3>& active);

// Recompute and store this batch's u-labels (clamped to [lo, hi], plain
// doubles — never tape tensors). Only legal from epoch 2 on; epoch 1 keeps
// the y_m initialization untouched.
void generate_labels(ULabelState& state,
                     const std::array<LabelGenParams, 3>& gen,
                     const std::array<CpcCritic, 3>& critics,
                     const Representations& reps,
                     const std::vector<std::size_t>& ids,
                     const std::array<bool, 3>& active);

// F_s ← (1−μ)·F_s + μ·column-mean(Z_s) for the fused and each active
// unimodal representation.
void update_global_reps(ULabelState& state, const Representations& reps,
                        const std::array<bool, 3>& active);

}  // namespace selfmi
