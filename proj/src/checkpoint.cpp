#include "selfmi/checkpoint.hpp"

#include <map>
#include <sstream>

#include <json.hpp>

#include "selfmi/data_io.hpp"
#include "selfmi/errors.hpp"
#include "selfmi/report.hpp"

namespace selfmi {

namespace {

using nlohmann::json;

constexpr const char* kMagic = "selfmi-checkpoint 1";

const char* kind_name(EncoderKind k) {
    return k == EncoderKind::lstm_final_state ? "lstm" : "first_position";
}

EncoderKind kind_from(const std::string& name) {
    if (name == "lstm") return EncoderKind::lstm_final_state;
    if (name == "first_position") return EncoderKind::first_position;
    throw ParseError("checkpoint: unknown encoder kind \"" + name + "\"");
}

json modalities_json(const std::array<bool, 3>& set) {
    json arr = json::array();
    for (Modality m : kModalities)
        if (set[static_cast<std::size_t>(m)]) arr.push_back(modality_name(m));
    return arr;
}

std::array<bool, 3> modalities_from(const json& arr) {
    std::array<bool, 3> out{false, false, false};
    for (const json& e : arr) {
        const std::string name = e.get<std::string>();
        bool known = false;
        for (Modality m : kModalities)
            if (name == modality_name(m)) {
                out[static_cast<std::size_t>(m)] = true;
                known = true;
            }
        if (!known)
            throw ParseError("checkpoint: unknown modality \"" + name + "\"");
    }
    return out;
}

// FNV-1a, enough to catch a hand-edited or mismatched architecture line.
std::uint64_t config_hash(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

std::string encode_model_config(const ModelConfig& cfg) {
    json j;
    for (Modality m : kModalities) {
        const auto& e = cfg.encoders[static_cast<std::size_t>(m)];
        json je;
        je["kind"] = kind_name(e.kind);
        je["input_dim"] = e.input_dim;
        je["hidden_dim"] = e.hidden_dim;
        j["encoders"][modality_name(m)] = je;
    }
    j["d_m"] = cfg.d_m;
    j["unimodal_proj"] = cfg.unimodal_proj;
    j["critic_hidden"] = cfg.critic_hidden;
    j["gen_hidden"] = cfg.gen_hidden;
    j["dropout_modality"] = cfg.dropout_modality;
    j["dropout_fusion"] = cfg.dropout_fusion;
    j["tasks"] = modalities_json(cfg.tasks);
    j["cpc_pairs"] = modalities_json(cfg.cpc_pairs);
    return j.dump();
}

ModelConfig decode_model_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("checkpoint: bad architecture line: ") +
                         e.what());
    }
    try {
        ModelConfig cfg;
        for (Modality m : kModalities) {
            const json& je = j.at("encoders").at(modality_name(m));
            auto& e = cfg.encoders[static_cast<std::size_t>(m)];
            e.kind = kind_from(je.at("kind").get<std::string>());
            e.input_dim = je.at("input_dim").get<std::size_t>();
            e.hidden_dim = je.at("hidden_dim").get<std::size_t>();
        }
        cfg.d_m = j.at("d_m").get<std::size_t>();
        cfg.unimodal_proj = j.at("unimodal_proj").get<std::size_t>();
        cfg.critic_hidden = j.at("critic_hidden").get<std::size_t>();
        cfg.gen_hidden = j.at("gen_hidden").get<std::size_t>();
        cfg.dropout_modality =
            j.at("dropout_modality").get<std::array<double, 3>>();
        cfg.dropout_fusion = j.at("dropout_fusion").get<double>();
        cfg.tasks = modalities_from(j.at("tasks"));
        cfg.cpc_pairs = modalities_from(j.at("cpc_pairs"));
        return cfg;
    } catch (const json::exception& e) {
        throw ParseError(std::string("checkpoint: architecture line: ") +
                         e.what());
    }
}

void save_checkpoint(const SelfMiModel& model, const std::string& path) {
    std::ostringstream out;
    out << kMagic << '\n';
    const std::string arch = encode_model_config(model.cfg);
    out << "model " << arch << '\n';
    out << "confighash " << std::hex << config_hash(arch) << std::dec << '\n';
    for (const auto& [name, t] : model.named_params()) {
        out << "param " << name << ' ' << t.rank();
        for (std::size_t d : t.shape()) out << ' ' << d;
        out << '\n';
        auto vals = t.values();
        for (std::size_t i = 0; i < vals.size(); ++i) {
            if (i) out << ' ';
            out << format_double(vals[i]);
        }
        out << '\n';
    }
    out << "end\n";
    write_text_file(path, out.str());
}

SelfMiModel load_checkpoint(const std::string& path) {
    std::istringstream in(read_text_file(path));
    std::string line;
    if (!std::getline(in, line) || line != kMagic)
        throw ParseError("checkpoint: bad or missing header in " + path);
    if (!std::getline(in, line) || line.rfind("model ", 0) != 0)
        throw ParseError("checkpoint: missing architecture line in " + path);
    const std::string arch = line.substr(6);
    ModelConfig cfg = decode_model_config(arch);
    cfg.validate();
    if (!std::getline(in, line) || line.rfind("confighash ", 0) != 0)
        throw ParseError("checkpoint: missing confighash line in " + path);
    {
        std::uint64_t stored_hash = 0;
        std::istringstream hs(line.substr(11));
        hs >> std::hex >> stored_hash;
        if (hs.fail() || stored_hash != config_hash(arch))
            throw ParseError(
                "checkpoint: architecture line does not match its hash in " +
                path);
    }

    std::map<std::string, std::vector<double>> stored;
    std::map<std::string, std::vector<std::size_t>> shapes;
    while (std::getline(in, line)) {
        if (line == "end") break;
        std::istringstream head(line);
        std::string tag, name;
        std::size_t rank = 0;
        head >> tag >> name >> rank;
        if (tag != "param" || name.empty() || head.fail() || rank < 1 ||
            rank > 2)
            throw ParseError("checkpoint: malformed parameter header: " + line);
        std::vector<std::size_t> shape(rank);
        std::size_t count = 1;
        for (std::size_t i = 0; i < rank; ++i) {
            head >> shape[i];
            count *= shape[i];
        }
        if (head.fail())
            throw ParseError("checkpoint: malformed shape for " + name);
        std::string values_line;
        if (!std::getline(in, values_line))
            throw ParseError("checkpoint: missing values for " + name);
        std::vector<double> vals;
        vals.reserve(count);
        std::size_t pos = 0;
        while (pos < values_line.size()) {
            std::size_t end = values_line.find(' ', pos);
            if (end == std::string::npos) end = values_line.size();
            if (end > pos)
                vals.push_back(parse_double(
                    values_line.substr(pos, end - pos), "checkpoint " + name));
            pos = end + 1;
        }
        if (vals.size() != count)
            throw ParseError("checkpoint: " + name + " expects " +
                             std::to_string(count) + " values, found " +
                             std::to_string(vals.size()));
        if (stored.count(name))
            throw ParseError("checkpoint: duplicate parameter " + name);
        stored[name] = std::move(vals);
        shapes[name] = std::move(shape);
    }
    if (line != "end") throw ParseError("checkpoint: truncated file " + path);

    SelfMiModel model = SelfMiModel::init(cfg, /*seed=*/0);
    for (auto& [name, t] : model.named_params()) {
        auto it = stored.find(name);
        if (it == stored.end())
            throw ParseError("checkpoint: missing parameter " + name);
        const auto& want_shape = shapes[name];
        if (std::vector<std::size_t>(t.shape().begin(), t.shape().end()) !=
            want_shape)
            throw ParseError("checkpoint: shape mismatch for " + name);
        auto vals = t.values_mut();
        std::copy(it->second.begin(), it->second.end(), vals.begin());
        stored.erase(it);
    }
    if (!stored.empty())
        throw ParseError("checkpoint: unknown parameter " +
                         stored.begin()->first);
    return model;
}

}  // namespace selfmi
