#pragma once

#include <optional>
#include <string>
#include <vector>

#include "selfmi/data_io.hpp"
#include "selfmi/training.hpp"

namespace selfmi {

// Everything a train/ablate run needs, read from one JSON file. Unknown keys
// are rejected outright; absent keys fall back to the documented defaults and
// each fallback is recorded in `notices` so a run's effective configuration
// is always auditable.
struct RunConfig {
    std::optional<SyntheticSpec> synthetic;  // exactly one data source is set
    std::string features_path;
    std::string out_dir = "out";
    TrainConfig train;  // encoder input dims stay 0 until data is seen
    std::vector<std::string> notices;
};

RunConfig parse_run_config(const std::string& json_text,
                           const std::string& source_name);
RunConfig load_run_config(const std::string& path);  // honors SELFMI_OUT_DIR

// Encoder input widths come from the dataset, not the config file.
void resolve_input_dims(ModelConfig& model, const SeqDims& dims);

DatasetSplits load_run_data(const RunConfig& cfg);

}  // namespace selfmi
