#pragma once

#include <array>
#include <string>
#include <vector>

#include "selfmi/report.hpp"
#include "selfmi/run_config.hpp"

namespace selfmi {

// One grid cell: a task subset (multimodal always included) paired with the
// contrastive pairs left enabled.
struct AblationRow {
    std::string setting;
    std::array<bool, 3> tasks;
    std::array<bool, 3> cpc_pairs;
};

// The two published grids: every task subset under the full contrastive
// objective, and every leave-one-pair-out variant on the full task set.
std::vector<AblationRow> task_subset_rows();  // 8 rows, fixed order
std::vector<AblationRow> cpc_variant_rows();  // 4 rows, fixed order

struct AblationResult {
    AblationRow row;
    bool ok = false;
    std::string error;  // set when !ok
    MetricsReport metrics;
};

// Trains one model per row on the shared dataset. Row i runs with seed
// base_seed + i (numbered across the combined grid, task rows first), so the
// grid is reproducible row by row. A row that throws is marked failed and
// the grid carries on.
std::vector<AblationResult> run_ablation(
    const TrainConfig& base, const DatasetSplits& data,
    const std::function<void(const AblationResult&)>& on_row = nullptr);

// setting, MAE, Corr, Acc2_nonneg, Acc2_posneg, F1_nonneg, F1_posneg;
// failed rows carry "nan" metric cells.
CsvTable ablation_table(const std::vector<AblationResult>& results,
                        std::size_t first, std::size_t count);

}  // namespace selfmi
