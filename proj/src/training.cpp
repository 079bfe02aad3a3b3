#include "selfmi/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "selfmi/errors.hpp"

namespace selfmi {

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    for (double lr : {lr_text, lr_audio, lr_visual, lr_fusion})
        if (!(lr > 0.0)) throw ConfigError("train: learning rates must be > 0");
    if (cpc_weight < 0.0) throw ConfigError("train: cpc_weight must be >= 0");
    model.validate();
}

Adam::Adam(std::vector<Group> groups) : groups_(std::move(groups)) {
    slots_.resize(groups_.size());
    for (std::size_t g = 0; g < groups_.size(); ++g) {
        if (!(groups_[g].lr > 0.0))
            throw ContractError("adam: learning rate must be positive");
        slots_[g].resize(groups_[g].params.size());
        for (std::size_t p = 0; p < groups_[g].params.size(); ++p) {
            Tensor& t = groups_[g].params[p];
            if (!t.requires_grad())
                throw ContractError("adam: parameter without gradient buffer");
            slots_[g][p].m.assign(t.size(), 0.0);
            slots_[g][p].v.assign(t.size(), 0.0);
        }
    }
}

void Adam::zero_grad() {
    for (auto& g : groups_)
        for (Tensor& t : g.params) t.zero_grad();
}

void Adam::step() {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
    for (std::size_t g = 0; g < groups_.size(); ++g) {
        const double lr = groups_[g].lr;
        for (std::size_t p = 0; p < groups_[g].params.size(); ++p) {
            Tensor& t = groups_[g].params[p];
            // A parameter that never joined a backward pass has no gradient
            // buffer; that is a zero gradient, not an error (epoch 1 leaves
            // whole branches of the model out of the objective).
            if (!t.has_grad()) continue;
            auto grad = t.grad();
            auto vals = t.values_mut();
            Slot& s = slots_[g][p];
            for (std::size_t i = 0; i < vals.size(); ++i) {
                const double gi = grad[i];
                if (gi == 0.0 && s.m[i] == 0.0 && s.v[i] == 0.0)
                    continue;  // untouched parameters stay bit-identical
                s.m[i] = beta1 * s.m[i] + (1.0 - beta1) * gi;
                s.v[i] = beta2 * s.v[i] + (1.0 - beta2) * gi * gi;
                const double mhat = s.m[i] / bc1;
                const double vhat = s.v[i] / bc2;
                vals[i] -= lr * mhat / (std::sqrt(vhat) + eps);
            }
        }
    }
}

LossParts total_loss(const Tensor& y_m_hat, const Tensor& y_m,
                     const std::array<Tensor, 3>& y_s_hat,
                     const std::array<std::vector<double>, 3>& u_targets,
                     const CpcOutputs* cpc, double beta, const Tensor& task,
                     const std::array<bool, 3>& active) {
    if (y_m_hat.shape() != y_m.shape() || y_m.rank() != 2 || y_m.cols() != 1)
        throw ShapeError("total_loss: predictions and labels must be [N x 1]");
    const std::size_t n = y_m.rows();

    LossParts parts;
    Tensor acc = mean(abs(sub(y_m_hat, y_m)));
    parts.l1_multimodal = acc.item();

    for (Modality mod : kModalities) {
        const std::size_t k = static_cast<std::size_t>(mod);
        if (!active[k]) continue;
        if (!y_s_hat[k].defined())
            throw ContractError(std::string("total_loss: missing prediction for ") +
                                modality_name(mod));
        if (u_targets[k].size() != n || y_s_hat[k].rows() != n)
            throw ShapeError("total_loss: batch length mismatch for " +
                             std::string(modality_name(mod)));
        // Both the target and its tanh weight are constants on the tape.
        std::vector<double> w(n), tgt(u_targets[k]);
        for (std::size_t i = 0; i < n; ++i)
            w[i] = std::tanh(std::fabs(tgt[i] - y_m.at(i, 0)));
        Tensor weight = Tensor::from_values({n, 1}, std::move(w));
        Tensor target = Tensor::from_values({n, 1}, std::move(tgt));
        Tensor term = mean(mul(weight, abs(sub(y_s_hat[k], target))));
        parts.weighted_unimodal[k] = term.item();
        acc = add(acc, term);
    }

    if (cpc) {
        parts.cpc = cpc->total.item();
        for (std::size_t k = 0; k < 3; ++k)
            parts.cpc_pair[k] = cpc->loss_per_pair[k].defined()
                                    ? cpc->loss_per_pair[k].item()
                                    : 0.0;
        acc = add(acc, scale(cpc->total, beta));
    }
    if (task.defined()) {
        parts.task = task.item();
        acc = add(acc, task);
    }
    parts.total = acc;
    return parts;
}

double lenient_corr(std::span<const double> a, std::span<const double> b,
                    std::vector<std::string>* notices) {
    try {
        return pearson(a, b);
    } catch (const ValueError&) {
        if (notices)
            notices->push_back(
                "correlation undefined (constant vector); reported as 0");
        return 0.0;
    }
}

namespace {

Tensor batch_labels(const std::vector<ModalitySample>& samples,
                    const std::vector<std::size_t>& idx) {
    std::vector<double> y(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) y[i] = samples[idx[i]].label;
    return Tensor::from_values({idx.size(), 1}, std::move(y));
}

Representations detach_reps(const Representations& reps,
                            const std::array<bool, 3>& active) {
    Representations d;
    d.Z_m = reps.Z_m.detached();
    for (Modality m : kModalities) {
        const std::size_t k = static_cast<std::size_t>(m);
        if (active[k]) d.unimodal(m) = reps.unimodal(m).detached();
    }
    return d;
}

void check_finite(const LossParts& parts) {
    struct Named {
        const char* name;
        double v;
    };
    const Named checks[] = {
        {"total objective", parts.total.item()},
        {"multimodal L1", parts.l1_multimodal},
        {"weighted text term", parts.weighted_unimodal[0]},
        {"weighted audio term", parts.weighted_unimodal[1]},
        {"weighted visual term", parts.weighted_unimodal[2]},
        {"contrastive loss", parts.cpc},
        {"label task loss", parts.task},
    };
    for (const auto& c : checks)
        if (!std::isfinite(c.v))
            throw ValueError(std::string("training diverged: ") + c.name +
                             " is " + std::to_string(c.v));
}

}  // namespace

std::vector<double> predict_split(const SelfMiModel& model,
                                  const std::vector<ModalitySample>& split) {
    NoGradGuard ng;
    Rng unused(0);
    std::vector<double> preds;
    preds.reserve(split.size());
    constexpr std::size_t kEvalBatch = 256;
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < split.size(); start += kEvalBatch) {
        idx.clear();
        for (std::size_t i = start; i < std::min(split.size(), start + kEvalBatch);
             ++i)
            idx.push_back(i);
        auto f = model.forward(split, idx, /*train_mode=*/false, unused);
        for (std::size_t i = 0; i < idx.size(); ++i)
            preds.push_back(f.y_m_hat.at(i, 0));
    }
    return preds;
}

TrainResult run_training(const TrainConfig& cfg, const DatasetSplits& data,
                         const std::function<void(const EpochRecord&)>& on_epoch) {
    cfg.validate();
    data.validate();
    if (data.train.empty()) throw ContractError("train: empty training split");

    TrainResult result;
    result.model = SelfMiModel::init(cfg.model, cfg.seed);
    SelfMiModel& model = result.model;
    const std::array<bool, 3> tasks = cfg.model.tasks;
    const std::array<bool, 3> cpc_active = cfg.model.effective_cpc();

    std::vector<double> y_train(data.train.size());
    for (std::size_t i = 0; i < data.train.size(); ++i)
        y_train[i] = data.train[i].label;
    result.state = ULabelState::init(
        y_train,
        {cfg.model.proj_dim(Modality::text), cfg.model.proj_dim(Modality::audio),
         cfg.model.proj_dim(Modality::visual), cfg.model.d_m},
        data.lo, data.hi);
    ULabelState& state = result.state;

    // Optimizer groups: each modality's encoder+head under its own rate; the
    // fusion block, critics, and generators under the fusion rate.
    {
        std::vector<Adam::Group> groups(4);
        groups[0].lr = cfg.lr_text;
        groups[1].lr = cfg.lr_audio;
        groups[2].lr = cfg.lr_visual;
        groups[3].lr = cfg.lr_fusion;
        for (const auto& [name, t] : model.named_params()) {
            std::size_t g = 3;
            if (name.rfind("text.", 0) == 0) g = 0;
            else if (name.rfind("audio.", 0) == 0) g = 1;
            else if (name.rfind("visual.", 0) == 0) g = 2;
            groups[g].params.push_back(t);
        }
        Adam opt(std::move(groups));

        Rng dropout_rng(Rng::mix(cfg.seed, 0x9e3779b97f4a7c15ull));

        std::vector<double> y_valid(data.valid.size());
        for (std::size_t i = 0; i < data.valid.size(); ++i)
            y_valid[i] = data.valid[i].label;

        double best_mae = std::numeric_limits<double>::infinity();
        std::vector<std::vector<double>> best_snapshot = model.snapshot_values();
        result.best_epoch = 0;

        for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
            state.epoch = epoch;
            EpochRecord rec;
            rec.epoch = epoch;
            double weight_total = 0.0;

            for (const auto& batch :
                 batches(data.train.size(), cfg.batch_size, cfg.seed, epoch)) {
                Tape::active().clear();
                opt.zero_grad();

                auto fwd = model.forward(data.train, batch, /*train_mode=*/true,
                                         dropout_rng);
                Tensor y_m = batch_labels(data.train, batch);

                // Eq-17 targets come from the labels as they stood at the
                // start of this batch; regeneration below must not leak into
                // the objective being differentiated.
                std::array<std::vector<double>, 3> targets;
                for (std::size_t k = 0; k < 3; ++k) {
                    if (!tasks[k]) continue;
                    targets[k].resize(batch.size());
                    for (std::size_t i = 0; i < batch.size(); ++i)
                        targets[k][i] = state.labels[k][batch[i]];
                }

                CpcOutputs cpc;
                bool have_cpc = false;
                Tensor task_term;
                if (epoch >= 2) {
                    cpc = cpc_total(model.critics, fwd.reps, cpc_active);
                    have_cpc = true;
                    Representations frozen = detach_reps(fwd.reps, tasks);
                    auto gen_out = generator_outputs(model.gens, model.critics,
                                                     frozen, tasks);
                    task_term =
                        label_task_loss(gen_out, y_m.detached(), tasks);
                    generate_labels(state, model.gens, model.critics, frozen,
                                    batch, tasks);
                }

                LossParts parts = total_loss(
                    fwd.y_m_hat, y_m, fwd.y_s_hat, targets,
                    have_cpc ? &cpc : nullptr, cfg.cpc_weight, task_term,
                    tasks);
                check_finite(parts);

                backward(parts.total);
                opt.step();
                update_global_reps(state, fwd.reps, tasks);

                const double w = static_cast<double>(batch.size());
                weight_total += w;
                rec.total += w * parts.total.item();
                rec.l1_multimodal += w * parts.l1_multimodal;
                for (std::size_t k = 0; k < 3; ++k) {
                    rec.weighted_unimodal[k] += w * parts.weighted_unimodal[k];
                    rec.cpc_pair[k] += w * parts.cpc_pair[k];
                }
                rec.cpc_total += w * parts.cpc;
                rec.task_loss += w * parts.task;
            }

            rec.total /= weight_total;
            rec.l1_multimodal /= weight_total;
            rec.cpc_total /= weight_total;
            rec.task_loss /= weight_total;
            for (std::size_t k = 0; k < 3; ++k) {
                rec.weighted_unimodal[k] /= weight_total;
                rec.cpc_pair[k] /= weight_total;
                if (tasks[k]) {
                    double gap = 0.0;
                    for (std::size_t i = 0; i < y_train.size(); ++i)
                        gap += std::fabs(state.labels[k][i] - y_train[i]);
                    rec.mean_label_gap[k] = gap / double(y_train.size());
                }
            }

            std::vector<double> valid_pred = predict_split(model, data.valid);
            rec.valid_mae = mae(valid_pred, y_valid);
            rec.valid_corr = lenient_corr(valid_pred, y_valid, &result.notices);

            result.log.push_back(rec);
            if (on_epoch) on_epoch(rec);

            if (rec.valid_mae < best_mae) {
                best_mae = rec.valid_mae;
                best_snapshot = model.snapshot_values();
                result.best_epoch = epoch;
            }
        }

        model.restore_values(best_snapshot);
    }

    std::vector<double> y_test(data.test.size());
    for (std::size_t i = 0; i < data.test.size(); ++i)
        y_test[i] = data.test[i].label;
    std::vector<double> test_pred = predict_split(model, data.test);
    MetricsReport tm;
    tm.mae = mae(test_pred, y_test);
    tm.corr = lenient_corr(test_pred, y_test, &result.notices);
    const BinaryScores nn = binary_scores(test_pred, y_test, Binarization::nonneg);
    tm.acc2_nonneg = nn.acc2;
    tm.f1_nonneg = nn.f1;
    const BinaryScores pn = binary_scores(test_pred, y_test, Binarization::posneg);
    tm.acc2_posneg = pn.acc2;
    tm.f1_posneg = pn.f1;
    tm.n_eval = y_test.size();
    result.test_metrics = tm;
    return result;
}

}  // namespace selfmi
