#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "selfmi/data_io.hpp"
#include "selfmi/metrics.hpp"
#include "selfmi/model.hpp"
#include "selfmi/ulg_mi.hpp"

namespace selfmi {

struct TrainConfig {
    std::size_t epochs = 50;
    std::size_t batch_size = 32;
    std::uint64_t seed = 1;
    double lr_text = 5e-4;
    double lr_audio = 5e-3;
    double lr_visual = 5e-3;
    double lr_fusion = 1e-3;  // also critics and label generators
    double cpc_weight = 0.1;  // β; 0 recovers the bare weighted-L1 objective
    ModelConfig model;

    void validate() const;
};

// One row per epoch; everything the run reports or plots.
struct EpochRecord {
    std::size_t epoch = 0;
    double total = 0.0;
    double l1_multimodal = 0.0;
    std::array<double, 3> weighted_unimodal{};  // Modality order
    double cpc_total = 0.0;
    std::array<double, 3> cpc_pair{};
    double task_loss = 0.0;
    std::array<double, 3> mean_label_gap{};  // mean |y_s − y_m| over train set
    double valid_mae = 0.0;
    double valid_corr = 0.0;
};
using TrainLog = std::vector<EpochRecord>;

// Adam with per-group learning rates and a shared step counter
// (β₁ = 0.9, β₂ = 0.999, ε = 1e-8). A parameter whose gradient stays zero
// from the start never moves, bit for bit.
class Adam {
  public:
    struct Group {
        std::vector<Tensor> params;
        double lr = 1e-3;
    };

    explicit Adam(std::vector<Group> groups);
    void zero_grad();
    void step();
    std::size_t steps_taken() const { return t_; }

  private:
    struct Slot {
        std::vector<double> m, v;
    };
    std::vector<Group> groups_;
    std::vector<std::vector<Slot>> slots_;
    std::size_t t_ = 0;
};

// Logged decomposition of one batch objective; `total` carries the tape.
struct LossParts {
    Tensor total;
    double l1_multimodal = 0.0;
    std::array<double, 3> weighted_unimodal{};
    double cpc = 0.0;
    std::array<double, 3> cpc_pair{};
    double task = 0.0;
};

// L = mean|ŷ_m − y_m|
//   + Σ_{s active} mean( tanh(|y_s − y_m|) ⊙ |ŷ_s − y_s| )
//   + β·L_CPC + L_task.
// u_targets are per-sample stored u-labels (constants: both the target and
// the tanh weight are detached from the tape). cpc_total / task may be
// undefined tensors when a term is absent (epoch 1 or task subset {M}).
LossParts total_loss(const Tensor& y_m_hat, const Tensor& y_m,
                     const std::array<Tensor, 3>& y_s_hat,
                     const std::array<std::vector<double>, 3>& u_targets,
                     const CpcOutputs* cpc, double beta, const Tensor& task,
                     const std::array<bool, 3>& active);

struct TrainResult {
    SelfMiModel model;  // best-validation-MAE parameters
    TrainLog log;
    ULabelState state;
    MetricsReport test_metrics;
    std::size_t best_epoch = 0;
    std::vector<std::string> notices;  // e.g. degenerate validation corr
};

// Full optimization: epoch 1 trains on the plain multimodal L1 with u-labels
// pinned to y_m; later epochs add the contrastive and label-generation terms
// and refresh u-labels every batch. Aborts with ValueError naming the term
// if the loss leaves the reals.
TrainResult run_training(const TrainConfig& cfg, const DatasetSplits& data,
                         const std::function<void(const EpochRecord&)>&
                             on_epoch = nullptr);

// Eval-mode predictions over a whole split, batched.
std::vector<double> predict_split(const SelfMiModel& model,
                                  const std::vector<ModalitySample>& split);

// pearson, except constant inputs yield 0.0 plus a notice instead of a
// thrown error (training reports should survive a collapsed predictor).
double lenient_corr(std::span<const double> a, std::span<const double> b,
                    std::vector<std::string>* notices);

}  // namespace selfmi
