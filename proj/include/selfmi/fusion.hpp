#pragma once

#include <cstddef>
#include <utility>

#include "selfmi/modality.hpp"
#include "selfmi/rng.hpp"
#include "selfmi/tensor.hpp"

namespace selfmi {

// Two-layer multimodal head: concat -> affine -> relu (the fused
// representation), then affine -> scalar prediction.
struct FusionParams {
    Tensor W_l1;  // [(d_t+d_a+d_v) × d_m]
    Tensor b_l1;  // [d_m]
    Tensor W_l2;  // [d_m × 1]
    Tensor b_l2;  // [1]

    static FusionParams init(std::size_t concat_dim, std::size_t d_m, Rng& rng);
};

// Per-modality projection + regression head; no weight sharing across
// modalities.
struct UnimodalHeadParams {
    Tensor W_l1;  // [d_s × d_proj]
    Tensor b_l1;  // [d_proj]
    Tensor W_l2;  // [d_proj × 1]
    Tensor b_l2;  // [1]

    static UnimodalHeadParams init(std::size_t d_in, std::size_t d_proj,
                                   Rng& rng);
};

// Batched representations produced by one forward pass. Unimodal entries may
// be left undefined when the corresponding task is inactive.
struct Representations {
    Tensor Z_t;
    Tensor Z_a;
    Tensor Z_v;
    Tensor Z_m;

    const Tensor& unimodal(Modality m) const;
    Tensor& unimodal(Modality m);
};

// Z_m = relu([x_t, x_a, x_v] · W_l1 + b_l1); every entry ≥ 0.
Tensor fuse(const FusionParams& f, const Tensor& x_t, const Tensor& x_a,
            const Tensor& x_v);

// ŷ = Z · W2 + b2, shape [N × 1]; raw unbounded regression output.
Tensor predict(const Tensor& W2, const Tensor& b2, const Tensor& Z);

// Z_s = relu(X_s · W_l1 + b_l1); ŷ_s = Z_s · W_l2 + b_l2.
std::pair<Tensor, Tensor> unimodal_forward(const UnimodalHeadParams& h,
                                           const Tensor& X_s, Modality s);

}  // namespace selfmi
