#pragma once

#include <string>
#include <vector>

#include "selfmi/metrics.hpp"
#include "selfmi/training.hpp"

namespace selfmi {

// Minimal CSV with quoting only where needed; every file this repo emits
// must survive a write → read round trip through this pair.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

std::string csv_encode(const CsvTable& table);
CsvTable csv_decode(const std::string& text);
void write_csv(const CsvTable& table, const std::string& path);
CsvTable read_csv(const std::string& path);

// Fixed column schemas shared by the trainer, the ablation runner, and eval.
CsvTable train_log_table(const TrainLog& log);
CsvTable metrics_table(const MetricsReport& m);

// One named series of y-values drawn against 1-based x indices.
struct Series {
    std::string name;
    std::vector<double> y;
};

// Self-contained SVG line chart; no external references, safe to open
// directly in a browser.
std::string svg_line_chart(const std::string& title,
                           const std::string& x_label,
                           const std::string& y_label,
                           const std::vector<Series>& series);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace selfmi
