#include "selfmi/run_config.hpp"

#include <cstdlib>
#include <set>

#include <json.hpp>

#include "selfmi/errors.hpp"
#include "selfmi/report.hpp"

namespace selfmi {

namespace {

using nlohmann::json;

std::string qual(const std::string& scope, const std::string& key) {
    return scope == "top level" ? key : scope + "." + key;
}

void reject_unknown(const json& obj, const std::string& scope,
                    const std::set<std::string>& allowed) {
    for (const auto& item : obj.items())
        if (!allowed.count(item.key()))
            throw ConfigError("config: unknown key \"" + item.key() + "\" in " +
                              scope);
}

double get_number(const json& obj, const std::string& scope,
                  const std::string& key, double fallback,
                  std::vector<std::string>& notices) {
    if (!obj.contains(key)) {
        notices.push_back("config: " + qual(scope, key) + " defaulted to " +
                          format_double(fallback));
        return fallback;
    }
    const json& v = obj.at(key);
    if (!v.is_number())
        throw ConfigError("config: " + qual(scope, key) + " must be a number");
    return v.get<double>();
}

std::size_t get_count(const json& obj, const std::string& scope,
                      const std::string& key, std::size_t fallback,
                      std::vector<std::string>& notices) {
    if (!obj.contains(key)) {
        notices.push_back("config: " + qual(scope, key) + " defaulted to " +
                          std::to_string(fallback));
        return fallback;
    }
    const json& v = obj.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw ConfigError("config: " + qual(scope, key) +
                          " must be a non-negative integer");
    return v.get<std::size_t>();
}

std::uint64_t get_seed(const json& obj, const std::string& scope,
                       const std::string& key, std::uint64_t fallback,
                       std::vector<std::string>& notices) {
    if (!obj.contains(key)) {
        notices.push_back("config: " + qual(scope, key) + " defaulted to " +
                          std::to_string(fallback));
        return fallback;
    }
    const json& v = obj.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw ConfigError("config: " + qual(scope, key) +
                          " must be a non-negative integer");
    return v.get<std::uint64_t>();
}

std::array<bool, 3> get_modality_set(const json& obj, const std::string& scope,
                                     const std::string& key,
                                     std::vector<std::string>& notices) {
    if (!obj.contains(key)) {
        notices.push_back("config: " + qual(scope, key) +
                          " defaulted to [\"text\",\"audio\",\"visual\"]");
        return {true, true, true};
    }
    const json& v = obj.at(key);
    if (!v.is_array())
        throw ConfigError("config: " + qual(scope, key) +
                          " must be an array of modality names");
    std::array<bool, 3> out{false, false, false};
    for (const json& e : v) {
        if (!e.is_string())
            throw ConfigError("config: " + qual(scope, key) +
                              " entries must be strings");
        const std::string name = e.get<std::string>();
        if (name == "text") out[0] = true;
        else if (name == "audio") out[1] = true;
        else if (name == "visual") out[2] = true;
        else
            throw ConfigError("config: " + qual(scope, key) +
                              " has unknown modality \"" + name + "\"");
    }
    return out;
}

EncoderKind get_encoder_kind(const json& obj, const std::string& scope,
                             const std::string& key, EncoderKind fallback,
                             std::vector<std::string>& notices) {
    if (!obj.contains(key)) {
        notices.push_back(
            "config: " + qual(scope, key) + " defaulted to " +
            std::string(fallback == EncoderKind::first_position
                            ? "\"first_position\""
                            : "\"lstm\""));
        return fallback;
    }
    const json& v = obj.at(key);
    if (!v.is_string())
        throw ConfigError("config: " + qual(scope, key) + " must be a string");
    const std::string name = v.get<std::string>();
    if (name == "lstm") return EncoderKind::lstm_final_state;
    if (name == "first_position") return EncoderKind::first_position;
    throw ConfigError("config: " + qual(scope, key) +
                      " must be \"lstm\" or \"first_position\", got \"" + name +
                      "\"");
}

SyntheticSpec parse_synthetic(const json& obj,
                              std::vector<std::string>& notices) {
    reject_unknown(obj, "data.synthetic",
                   {"n_samples", "l_t", "d_t", "l_a", "d_a", "l_v", "d_v",
                    "latent_dim", "rho", "sigma", "lo", "hi", "seed"});
    SyntheticSpec s;
    const std::string sc = "data.synthetic";
    s.n_samples = get_count(obj, sc, "n_samples", 2000, notices);
    s.dims.l_t = get_count(obj, sc, "l_t", 8, notices);
    s.dims.d_t = get_count(obj, sc, "d_t", 16, notices);
    s.dims.l_a = get_count(obj, sc, "l_a", 12, notices);
    s.dims.d_a = get_count(obj, sc, "d_a", 8, notices);
    s.dims.l_v = get_count(obj, sc, "l_v", 12, notices);
    s.dims.d_v = get_count(obj, sc, "d_v", 8, notices);
    s.latent_dim = get_count(obj, sc, "latent_dim", 4, notices);
    s.rho = get_number(obj, sc, "rho", 0.8, notices);
    s.sigma = get_number(obj, sc, "sigma", 0.3, notices);
    s.lo = get_number(obj, sc, "lo", -3.0, notices);
    s.hi = get_number(obj, sc, "hi", 3.0, notices);
    s.seed = get_seed(obj, sc, "seed", 7, notices);
    return s;
}

ModelConfig parse_model(const json& obj, std::vector<std::string>& notices) {
    reject_unknown(obj, "model",
                   {"d_m", "unimodal_proj", "critic_hidden", "gen_hidden",
                    "text_encoder", "audio_encoder", "visual_encoder",
                    "text_hidden", "audio_hidden", "visual_hidden",
                    "dropout_text", "dropout_audio", "dropout_visual",
                    "dropout_fusion", "tasks", "cpc_pairs"});
    ModelConfig m;
    const std::string sc = "model";
    m.d_m = get_count(obj, sc, "d_m", 32, notices);
    m.unimodal_proj = get_count(obj, sc, "unimodal_proj", 0, notices);
    m.critic_hidden = get_count(obj, sc, "critic_hidden", 0, notices);
    m.gen_hidden = get_count(obj, sc, "gen_hidden", 0, notices);
    m.encoders[0].kind = get_encoder_kind(obj, sc, "text_encoder",
                                          EncoderKind::first_position, notices);
    m.encoders[1].kind = get_encoder_kind(
        obj, sc, "audio_encoder", EncoderKind::lstm_final_state, notices);
    m.encoders[2].kind = get_encoder_kind(
        obj, sc, "visual_encoder", EncoderKind::lstm_final_state, notices);
    m.encoders[0].hidden_dim = get_count(obj, sc, "text_hidden", 16, notices);
    m.encoders[1].hidden_dim = get_count(obj, sc, "audio_hidden", 16, notices);
    m.encoders[2].hidden_dim = get_count(obj, sc, "visual_hidden", 16, notices);
    m.dropout_modality[0] = get_number(obj, sc, "dropout_text", 0.0, notices);
    m.dropout_modality[1] = get_number(obj, sc, "dropout_audio", 0.1, notices);
    m.dropout_modality[2] = get_number(obj, sc, "dropout_visual", 0.1, notices);
    m.dropout_fusion = get_number(obj, sc, "dropout_fusion", 0.1, notices);
    m.tasks = get_modality_set(obj, sc, "tasks", notices);
    m.cpc_pairs = get_modality_set(obj, sc, "cpc_pairs", notices);
    return m;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text,
                           const std::string& source_name) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        // broken file syntax, not a wrong setting
        throw ParseError("config: " + source_name + " is not valid JSON: " +
                         e.what());
    }
    if (!root.is_object())
        throw ConfigError("config: " + source_name + " must be a JSON object");

    reject_unknown(root, "top level",
                   {"data", "out_dir", "epochs", "batch_size", "seed",
                    "lr_text", "lr_audio", "lr_visual", "lr_fusion",
                    "cpc_weight", "model"});

    RunConfig cfg;
    if (!root.contains("data"))
        throw ConfigError("config: missing required key \"data\"");
    const json& data = root.at("data");
    if (!data.is_object())
        throw ConfigError("config: \"data\" must be an object");
    reject_unknown(data, "data", {"synthetic", "features"});
    const bool has_syn = data.contains("synthetic");
    const bool has_feat = data.contains("features");
    if (has_syn == has_feat)
        throw ConfigError(
            "config: \"data\" needs exactly one of \"synthetic\" or "
            "\"features\"");
    if (has_syn) {
        if (!data.at("synthetic").is_object())
            throw ConfigError("config: data.synthetic must be an object");
        cfg.synthetic = parse_synthetic(data.at("synthetic"), cfg.notices);
    } else {
        if (!data.at("features").is_string())
            throw ConfigError("config: data.features must be a file path");
        cfg.features_path = data.at("features").get<std::string>();
    }

    if (root.contains("out_dir")) {
        if (!root.at("out_dir").is_string())
            throw ConfigError("config: out_dir must be a string");
        cfg.out_dir = root.at("out_dir").get<std::string>();
    } else {
        cfg.notices.push_back("config: out_dir defaulted to \"out\"");
    }

    TrainConfig& t = cfg.train;
    t.epochs = get_count(root, "top level", "epochs", 50, cfg.notices);
    t.batch_size = get_count(root, "top level", "batch_size", 32, cfg.notices);
    t.seed = get_seed(root, "top level", "seed", 1, cfg.notices);
    t.lr_text = get_number(root, "top level", "lr_text", 5e-4, cfg.notices);
    t.lr_audio = get_number(root, "top level", "lr_audio", 5e-3, cfg.notices);
    t.lr_visual = get_number(root, "top level", "lr_visual", 5e-3, cfg.notices);
    t.lr_fusion = get_number(root, "top level", "lr_fusion", 1e-3, cfg.notices);
    t.cpc_weight = get_number(root, "top level", "cpc_weight", 0.1, cfg.notices);

    if (root.contains("model")) {
        if (!root.at("model").is_object())
            throw ConfigError("config: \"model\" must be an object");
        t.model = parse_model(root.at("model"), cfg.notices);
    } else {
        json empty = json::object();
        t.model = parse_model(empty, cfg.notices);
        cfg.notices.push_back("config: model block absent, using all defaults");
    }
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    RunConfig cfg = parse_run_config(read_text_file(path), path);
    if (const char* env = std::getenv("SELFMI_OUT_DIR"); env && *env) {
        cfg.out_dir = env;
        cfg.notices.push_back(
            std::string("config: out_dir overridden by SELFMI_OUT_DIR = ") +
            env);
    }
    return cfg;
}

void resolve_input_dims(ModelConfig& model, const SeqDims& dims) {
    for (Modality m : kModalities)
        model.encoders[static_cast<std::size_t>(m)].input_dim = dims.dim(m);
}

DatasetSplits load_run_data(const RunConfig& cfg) {
    if (cfg.synthetic) return gen_synthetic(*cfg.synthetic);
    return load_features(cfg.features_path);
}

}  // namespace selfmi
