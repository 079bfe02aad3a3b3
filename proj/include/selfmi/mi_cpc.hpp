#pragma once

#include <array>
#include <cstddef>

#include "selfmi/fusion.hpp"
#include "selfmi/modality.hpp"
#include "selfmi/rng.hpp"
#include "selfmi/tensor.hpp"

namespace selfmi {

// One-hidden-layer projection G mapping the fused representation into a
// modality's representation space; the trainable half of the contrastive
// score.
struct CpcCritic {
    Tensor W1;  // [d_m × d_h]
    Tensor b1;  // [d_h]
    Tensor W2;  // [d_h × d_out]
    Tensor b2;  // [d_out]

    static CpcCritic init(std::size_t d_m, std::size_t d_h, std::size_t d_out,
                          Rng& rng);

    // relu(Z_m·W1 + b1)·W2 + b2 → [N × d_out]
    Tensor forward(const Tensor& Z_m) const;
};

// Scores and losses of one contrastive pass. Indices follow Modality order;
// entries for inactive pairs hold an undefined score and a constant-zero
// loss so `total` is always the fixed-order sum l_t + l_a + l_v.
struct CpcOutputs {
    std::array<Tensor, 3> score;
    std::array<Tensor, 3> loss_per_pair;
    Tensor total;
};

// Rescale every row to unit L2 norm. Rows with norm < 1e-8 are refused
// (ValueError) rather than divided by ~0.
Tensor unit_normalize_rows(const Tensor& x);

// score[i][j] = ⟨unit(Z_s row i), unit(G(Z_m) row j)⟩ ∈ [−1, 1]. The
// exponential of the similarity is deferred into the softmax of
// infonce_loss, which is mathematically identical and cannot overflow.
Tensor cpc_scores(const CpcCritic& critic, const Tensor& Z_m,
                  const Tensor& Z_s, Modality s);

// loss = −(1/N) Σ_i [score_ii − logsumexp_j score_ij]. Non-negative by
// construction (mean negative log-softmax of the diagonal); exactly 0 for
// N = 1; equals ln N for a constant matrix.
Tensor infonce_loss(const Tensor& score);

// Sum of the per-modality InfoNCE losses over the active pairs, in fixed
// (text, audio, visual) order.
CpcOutputs cpc_total(const std::array<CpcCritic, 3>& critics,
                     const Representations& reps,
                     const std::array<bool, 3>& active = {true, true, true});

// I(Z_m; Z_s) ≥ ln(n) − loss; the estimator can never claim more than ln n.
double mi_lower_bound(double loss, std::size_t n);

}  // namespace selfmi
