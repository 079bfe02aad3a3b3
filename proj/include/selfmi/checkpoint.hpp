#pragma once

#include <string>

#include "selfmi/model.hpp"

namespace selfmi {

// Plain-text model snapshot: a JSON line for the architecture, then one
// shape + value block per named parameter. Values use shortest-round-trip
// decimals, so save → load reproduces every weight bit for bit.
void save_checkpoint(const SelfMiModel& model, const std::string& path);
SelfMiModel load_checkpoint(const std::string& path);

// The architecture line alone (used by both directions).
std::string encode_model_config(const ModelConfig& cfg);
ModelConfig decode_model_config(const std::string& text);

}  // namespace selfmi
