#include "selfmi/ablation.hpp"

#include <stdexcept>

#include "selfmi/errors.hpp"
#include "selfmi/report.hpp"

namespace selfmi {

std::vector<AblationRow> task_subset_rows() {
    const std::array<bool, 3> full{true, true, true};
    return {
        {"M", {false, false, false}, full},
        {"M,T", {true, false, false}, full},
        {"M,A", {false, true, false}, full},
        {"M,V", {false, false, true}, full},
        {"M,T,A", {true, true, false}, full},
        {"M,T,V", {true, false, true}, full},
        {"M,V,A", {false, true, true}, full},
        {"M,T,V,A", {true, true, true}, full},
    };
}

std::vector<AblationRow> cpc_variant_rows() {
    const std::array<bool, 3> all_tasks{true, true, true};
    return {
        {"full", all_tasks, {true, true, true}},
        {"w/o mt", all_tasks, {false, true, true}},
        {"w/o ma", all_tasks, {true, false, true}},
        {"w/o mv", all_tasks, {true, true, false}},
    };
}

std::vector<AblationResult> run_ablation(
    const TrainConfig& base, const DatasetSplits& data,
    const std::function<void(const AblationResult&)>& on_row) {
    std::vector<AblationRow> grid = task_subset_rows();
    for (const AblationRow& row : cpc_variant_rows()) grid.push_back(row);

    std::vector<AblationResult> results;
    results.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        AblationResult r;
        r.row = grid[i];
        TrainConfig cfg = base;
        cfg.seed = base.seed + i;
        cfg.model.tasks = grid[i].tasks;
        cfg.model.cpc_pairs = grid[i].cpc_pairs;
        try {
            TrainResult trained = run_training(cfg, data);
            r.metrics = trained.test_metrics;
            r.ok = true;
        } catch (const std::exception& e) {
            r.ok = false;
            r.error = e.what();
        }
        if (on_row) on_row(r);
        results.push_back(std::move(r));
    }
    return results;
}

CsvTable ablation_table(const std::vector<AblationResult>& results,
                        std::size_t first, std::size_t count) {
    if (first + count > results.size())
        throw ContractError("ablation_table: slice out of range");
    CsvTable t;
    t.header = {"setting",     "MAE",         "Corr",     "Acc2_nonneg",
                "Acc2_posneg", "F1_nonneg", "F1_posneg"};
    for (std::size_t i = first; i < first + count; ++i) {
        const AblationResult& r = results[i];
        std::vector<std::string> row{r.row.setting};
        if (r.ok) {
            const MetricsReport& m = r.metrics;
            for (double v : {m.mae, m.corr, m.acc2_nonneg, m.acc2_posneg,
                             m.f1_nonneg, m.f1_posneg})
                row.push_back(format_double(v));
        } else {
            for (int k = 0; k < 6; ++k) row.push_back("nan");
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

}  // namespace selfmi
