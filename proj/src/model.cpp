#include "selfmi/model.hpp"

#include <string>

#include "selfmi/errors.hpp"

namespace selfmi {

std::size_t ModelConfig::proj_dim(Modality) const {
    return unimodal_proj ? unimodal_proj : d_m;
}

std::array<bool, 3> ModelConfig::effective_cpc() const {
    std::array<bool, 3> out{};
    for (std::size_t s = 0; s < 3; ++s) out[s] = cpc_pairs[s] && tasks[s];
    return out;
}

void ModelConfig::validate() const {
    for (const auto& e : encoders) e.validate();
    if (d_m == 0) throw ConfigError("model: d_m must be positive");
    for (double r : dropout_modality)
        if (r < 0.0 || r >= 1.0)
            throw ConfigError("model: modality dropout must lie in [0, 1)");
    if (dropout_fusion < 0.0 || dropout_fusion >= 1.0)
        throw ConfigError("model: fusion dropout must lie in [0, 1)");
}

SelfMiModel SelfMiModel::init(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    SelfMiModel m;
    m.cfg = cfg;
    // One stream per component family so adding parameters to one block
    // never shifts another block's initialization.
    std::size_t stream = 0;
    auto next_rng = [&]() { return Rng(Rng::mix(seed, stream++)); };

    std::size_t concat = 0;
    for (Modality mod : kModalities) {
        const std::size_t k = static_cast<std::size_t>(mod);
        const auto& enc = cfg.encoders[k];
        Rng rng = next_rng();
        if (enc.kind == EncoderKind::lstm_final_state)
            m.lstm[k] = LstmParams::init(enc.input_dim, enc.hidden_dim, rng);
        concat += enc.output_dim();
    }
    {
        Rng rng = next_rng();
        m.fusion = FusionParams::init(concat, cfg.d_m, rng);
    }
    for (Modality mod : kModalities) {
        const std::size_t k = static_cast<std::size_t>(mod);
        Rng rng = next_rng();
        if (!cfg.tasks[k]) continue;
        const std::size_t d_in = cfg.encoders[k].output_dim();
        m.heads[k] = UnimodalHeadParams::init(d_in, cfg.proj_dim(mod), rng);
    }
    // The label generator reads the critic projection, so a critic exists
    // for every active task even when its CPC loss term is switched off.
    const std::size_t d_h = cfg.critic_hidden ? cfg.critic_hidden : cfg.d_m;
    for (Modality mod : kModalities) {
        const std::size_t k = static_cast<std::size_t>(mod);
        Rng rng = next_rng();
        if (!cfg.tasks[k]) continue;
        m.critics[k] = CpcCritic::init(cfg.d_m, d_h, cfg.proj_dim(mod), rng);
    }
    for (Modality mod : kModalities) {
        const std::size_t k = static_cast<std::size_t>(mod);
        Rng rng = next_rng();
        if (!cfg.tasks[k]) continue;
        const std::size_t d_p = cfg.proj_dim(mod);
        const std::size_t hidden = cfg.gen_hidden ? cfg.gen_hidden : d_p;
        m.gens[k] = LabelGenParams::init(2 * d_p, hidden, rng);
    }
    return m;
}

std::vector<std::pair<std::string, Tensor>> SelfMiModel::named_params() const {
    std::vector<std::pair<std::string, Tensor>> out;
    auto push = [&](const std::string& name, const Tensor& t) {
        if (t.defined()) out.emplace_back(name, t);
    };
    for (Modality mod : kModalities) {
        const std::size_t k = static_cast<std::size_t>(mod);
        const std::string p = modality_name(mod);
        if (lstm[k]) {
            push(p + ".lstm.W_ih", lstm[k]->W_ih);
            push(p + ".lstm.W_hh", lstm[k]->W_hh);
            push(p + ".lstm.b", lstm[k]->b);
        }
        push(p + ".head.W_l1", heads[k].W_l1);
        push(p + ".head.b_l1", heads[k].b_l1);
        push(p + ".head.W_l2", heads[k].W_l2);
        push(p + ".head.b_l2", heads[k].b_l2);
    }
    push("fusion.W_l1", fusion.W_l1);
    push("fusion.b_l1", fusion.b_l1);
    push("fusion.W_l2", fusion.W_l2);
    push("fusion.b_l2", fusion.b_l2);
    for (Modality mod : kModalities) {
        const std::size_t k = static_cast<std::size_t>(mod);
        const std::string p = std::string("critic.") + modality_name(mod);
        push(p + ".W1", critics[k].W1);
        push(p + ".b1", critics[k].b1);
        push(p + ".W2", critics[k].W2);
        push(p + ".b2", critics[k].b2);
    }
    for (Modality mod : kModalities) {
        const std::size_t k = static_cast<std::size_t>(mod);
        const std::string p = std::string("gen.") + modality_name(mod);
        push(p + ".W1", gens[k].W1);
        push(p + ".b1", gens[k].b1);
        push(p + ".W2", gens[k].W2);
        push(p + ".b2", gens[k].b2);
    }
    return out;
}

SelfMiModel::Forward SelfMiModel::forward(
    const std::vector<ModalitySample>& samples,
    const std::vector<std::size_t>& idx, bool train_mode,
    Rng& dropout_rng) const {
    if (idx.empty()) throw ContractError("forward: empty batch");
    Forward f;

    for (Modality mod : kModalities) {
        const std::size_t k = static_cast<std::size_t>(mod);
        const auto& enc = cfg.encoders[k];
        std::vector<Tensor> rows_v;
        rows_v.reserve(idx.size());
        for (std::size_t i : idx) {
            if (i >= samples.size())
                throw ContractError("forward: sample index out of range");
            rows_v.push_back(
                encode_sequence(enc, lstm[k], samples[i].sequence(mod)));
        }
        Tensor X = stack_rows(rows_v);
        if (train_mode && cfg.dropout_modality[k] > 0.0)
            X = dropout(X, cfg.dropout_modality[k], dropout_rng);
        f.X[k] = X;
    }

    for (Modality mod : kModalities) {
        const std::size_t k = static_cast<std::size_t>(mod);
        if (!cfg.tasks[k]) continue;
        auto [Z_s, y_s] = unimodal_forward(heads[k], f.X[k], mod);
        f.reps.unimodal(mod) = Z_s;
        f.y_s_hat[k] = y_s;
    }

    Tensor Z_m = fuse(fusion, f.X[0], f.X[1], f.X[2]);
    if (train_mode && cfg.dropout_fusion > 0.0)
        Z_m = dropout(Z_m, cfg.dropout_fusion, dropout_rng);
    f.reps.Z_m = Z_m;
    f.y_m_hat = predict(fusion.W_l2, fusion.b_l2, Z_m);
    return f;
}

std::vector<std::vector<double>> SelfMiModel::snapshot_values() const {
    std::vector<std::vector<double>> snap;
    for (const auto& [name, t] : named_params())
        snap.emplace_back(t.values().begin(), t.values().end());
    return snap;
}

void SelfMiModel::restore_values(const std::vector<std::vector<double>>& snap) {
    auto params = named_params();
    if (snap.size() != params.size())
        throw ContractError("restore: snapshot shape mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto dst = params[i].second.values_mut();
        if (dst.size() != snap[i].size())
            throw ContractError("restore: parameter size mismatch at " +
                                params[i].first);
        std::copy(snap[i].begin(), snap[i].end(), dst.begin());
    }
}

}  // namespace selfmi
