#include "selfmi/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "selfmi/data_io.hpp"
#include "selfmi/errors.hpp"

namespace selfmi {

namespace {

bool needs_quoting(const std::string& cell) {
    return cell.find_first_of(",\"\n") != std::string::npos;
}

std::string quote(const std::string& cell) {
    if (!needs_quoting(cell)) return cell;
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void append_row(std::string& out, const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ',';
        out += quote(row[i]);
    }
    out += '\n';
}

}  // namespace

std::string csv_encode(const CsvTable& table) {
    if (table.header.empty()) throw ContractError("csv: empty header");
    for (const auto& row : table.rows)
        if (row.size() != table.header.size())
            throw ContractError("csv: row width " + std::to_string(row.size()) +
                                " != header width " +
                                std::to_string(table.header.size()));
    std::string out;
    append_row(out, table.header);
    for (const auto& row : table.rows) append_row(out, row);
    return out;
}

CsvTable csv_decode(const std::string& text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> row;
    std::string cell;
    bool in_quotes = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    cell += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                cell += c;
            }
        } else if (c == '"') {
            in_quotes = true;
            any = true;
        } else if (c == ',') {
            row.push_back(std::move(cell));
            cell.clear();
            any = true;
        } else if (c == '\n') {
            if (any || !cell.empty()) {
                row.push_back(std::move(cell));
                records.push_back(std::move(row));
            }
            cell.clear();
            row.clear();
            any = false;
        } else if (c != '\r') {
            cell += c;
            any = true;
        }
    }
    if (in_quotes) throw ParseError("csv: unterminated quoted cell");
    if (any || !cell.empty()) {
        row.push_back(std::move(cell));
        records.push_back(std::move(row));
    }
    if (records.empty()) throw ParseError("csv: no header row");

    CsvTable table;
    table.header = std::move(records.front());
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != table.header.size())
            throw ParseError("csv: row " + std::to_string(r) + " has " +
                             std::to_string(records[r].size()) +
                             " cells, header has " +
                             std::to_string(table.header.size()));
        table.rows.push_back(std::move(records[r]));
    }
    return table;
}

void write_csv(const CsvTable& table, const std::string& path) {
    write_text_file(path, csv_encode(table));
}

CsvTable read_csv(const std::string& path) {
    return csv_decode(read_text_file(path));
}

CsvTable train_log_table(const TrainLog& log) {
    CsvTable t;
    t.header = {"epoch",         "total",       "l1_multimodal",
                "w_text",        "w_audio",     "w_visual",
                "cpc_total",     "cpc_mt",      "cpc_ma",
                "cpc_mv",        "task_loss",   "label_gap_text",
                "label_gap_audio", "label_gap_visual", "valid_mae",
                "valid_corr"};
    for (const EpochRecord& r : log) {
        std::vector<std::string> row;
        row.push_back(std::to_string(r.epoch));
        for (double v :
             {r.total, r.l1_multimodal, r.weighted_unimodal[0],
              r.weighted_unimodal[1], r.weighted_unimodal[2], r.cpc_total,
              r.cpc_pair[0], r.cpc_pair[1], r.cpc_pair[2], r.task_loss,
              r.mean_label_gap[0], r.mean_label_gap[1], r.mean_label_gap[2],
              r.valid_mae, r.valid_corr})
            row.push_back(format_double(v));
        t.rows.push_back(std::move(row));
    }
    return t;
}

CsvTable metrics_table(const MetricsReport& m) {
    CsvTable t;
    t.header = {"mae",       "corr",      "acc2_nonneg", "acc2_posneg",
                "f1_nonneg", "f1_posneg", "n_eval"};
    t.rows.push_back({format_double(m.mae), format_double(m.corr),
                      format_double(m.acc2_nonneg), format_double(m.acc2_posneg),
                      format_double(m.f1_nonneg), format_double(m.f1_posneg),
                      std::to_string(m.n_eval)});
    return t;
}

namespace {

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

}  // namespace

std::string svg_line_chart(const std::string& title,
                           const std::string& x_label,
                           const std::string& y_label,
                           const std::vector<Series>& series) {
    constexpr double W = 720, H = 440;
    constexpr double L = 70, R = 20, T = 40, B = 50;  // margins
    const double plot_w = W - L - R, plot_h = H - T - B;

    std::size_t n_max = 0;
    double lo = 0.0, hi = 1.0;
    bool seen = false;
    for (const Series& s : series) {
        n_max = std::max(n_max, s.y.size());
        for (double v : s.y) {
            if (!std::isfinite(v)) continue;
            if (!seen) {
                lo = hi = v;
                seen = true;
            } else {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
    }
    if (hi - lo < 1e-12) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;

    auto sx = [&](double i) {
        const double span = n_max > 1 ? double(n_max - 1) : 1.0;
        return L + plot_w * (i / span);
    };
    auto sy = [&](double v) { return T + plot_h * (1.0 - (v - lo) / (hi - lo)); };

    static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                    "#9467bd", "#ff7f0e", "#8c564b"};

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
        << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << " " << H
        << "\">\n"
        << "<rect width=\"" << W << "\" height=\"" << H
        << "\" fill=\"white\"/>\n"
        << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"16\">"
        << xml_escape(title) << "</text>\n";

    // axes with a handful of ticks
    svg << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L
        << "\" y2=\"" << T + plot_h << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << L << "\" y1=\"" << T + plot_h << "\" x2=\""
        << L + plot_w << "\" y2=\"" << T + plot_h << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double v = lo + (hi - lo) * k / 4.0;
        const double y = sy(v);
        svg << "<line x1=\"" << L - 4 << "\" y1=\"" << y << "\" x2=\"" << L
            << "\" y2=\"" << y << "\" stroke=\"black\"/>\n"
            << "<text x=\"" << L - 8 << "\" y=\"" << y + 4
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
               "font-size=\"11\">"
            << fmt(v) << "</text>\n";
        const std::size_t span = n_max > 1 ? n_max - 1 : 1;
        const double xi = double(span) * k / 4.0;
        const double x = sx(xi);
        svg << "<line x1=\"" << x << "\" y1=\"" << T + plot_h << "\" x2=\""
            << x << "\" y2=\"" << T + plot_h + 4 << "\" stroke=\"black\"/>\n"
            << "<text x=\"" << x << "\" y=\"" << T + plot_h + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
               "font-size=\"11\">"
            << fmt(xi + 1) << "</text>\n";
    }
    svg << "<text x=\"" << L + plot_w / 2 << "\" y=\"" << H - 12
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"13\">"
        << xml_escape(x_label) << "</text>\n"
        << "<text x=\"18\" y=\"" << T + plot_h / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"13\" transform=\"rotate(-90 18 "
        << T + plot_h / 2 << ")\">" << xml_escape(y_label) << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const auto& ys = series[s].y;
        if (ys.empty()) continue;
        const char* color = kColors[s % 6];
        svg << "<polyline fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < ys.size(); ++i) {
            if (!std::isfinite(ys[i])) continue;
            svg << fmt(sx(double(i))) << "," << fmt(sy(ys[i])) << " ";
        }
        svg << "\"/>\n";
        const double ly = T + 16.0 * double(s);
        svg << "<line x1=\"" << L + plot_w - 130 << "\" y1=\"" << ly
            << "\" x2=\"" << L + plot_w - 110 << "\" y2=\"" << ly
            << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
            << "<text x=\"" << L + plot_w - 104 << "\" y=\"" << ly + 4
            << "\" font-family=\"sans-serif\" font-size=\"11\">"
            << xml_escape(series[s].name) << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    f.write(content.data(), std::streamsize(content.size()));
    if (!f) throw IoError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for reading: " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

}  // namespace selfmi
