#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "selfmi/data_io.hpp"
#include "selfmi/encoders.hpp"
#include "selfmi/fusion.hpp"
#include "selfmi/mi_cpc.hpp"
#include "selfmi/modality.hpp"
#include "selfmi/ulg_mi.hpp"

namespace selfmi {

// Static architecture description. Zero means "use the documented default"
// for the optional dims.
struct ModelConfig {
    std::array<ModalityEncoderConfig, 3> encoders;  // Modality order
    std::size_t d_m = 32;           // fused dimension
    std::size_t unimodal_proj = 0;  // default: d_m
    std::size_t critic_hidden = 0;  // default: d_m
    std::size_t gen_hidden = 0;     // default: the modality projection dim
    std::array<double, 3> dropout_modality{0.0, 0.0, 0.0};  // on X_s
    double dropout_fusion = 0.0;                            // on Z_m
    std::array<bool, 3> tasks{true, true, true};      // active unimodal tasks
    std::array<bool, 3> cpc_pairs{true, true, true};  // requested CPC pairs

    std::size_t proj_dim(Modality m) const;  // d_s' for modality m
    // Pairs actually contrasted: requested ∩ active tasks.
    std::array<bool, 3> effective_cpc() const;
    void validate() const;
};

// All trainable parameters plus the forward pass. Parameter tensors are
// shared handles: the optimizer mutates them in place.
struct SelfMiModel {
    ModelConfig cfg;
    std::array<std::optional<LstmParams>, 3> lstm;
    FusionParams fusion;
    std::array<UnimodalHeadParams, 3> heads;  // built only for active tasks
    std::array<CpcCritic, 3> critics;
    std::array<LabelGenParams, 3> gens;

    static SelfMiModel init(const ModelConfig& cfg, std::uint64_t seed);

    // Stable (name, tensor) listing; iteration order is the serialization
    // and optimizer-group order.
    std::vector<std::pair<std::string, Tensor>> named_params() const;

    struct Forward {
        std::array<Tensor, 3> X;     // encoded modality batches [N × d_s]
        Representations reps;        // Z_t/Z_a/Z_v for active tasks, Z_m
        Tensor y_m_hat;              // [N × 1]
        std::array<Tensor, 3> y_s_hat;
    };

    // Encode, fuse, and predict one batch. train_mode enables dropout, which
    // draws its masks from dropout_rng.
    Forward forward(const std::vector<ModalitySample>& samples,
                    const std::vector<std::size_t>& idx, bool train_mode,
                    Rng& dropout_rng) const;

    // Deep-copy / restore of all parameter values (for best-epoch retention).
    std::vector<std::vector<double>> snapshot_values() const;
    void restore_values(const std::vector<std::vector<double>>& snap);
};

}  // namespace selfmi
