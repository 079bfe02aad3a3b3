// Acceptance gate: every shipping criterion, one PASS/FAIL line each.
// Independent oracles are computed in this file (brute-force metric loops,
// constant-predictor baselines); library results are then held to them.
// Exits nonzero if any criterion fails.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "selfmi/data_io.hpp"
#include "selfmi/errors.hpp"
#include "selfmi/metrics.hpp"
#include "selfmi/mi_cpc.hpp"
#include "selfmi/report.hpp"
#include "selfmi/rng.hpp"
#include "selfmi/run_config.hpp"
#include "selfmi/training.hpp"

using namespace selfmi;
namespace fs = std::filesystem;

namespace {

fs::path g_scratch;

struct CliRun {
    int exit_code = -1;
    std::string output;
    double seconds = 0.0;
};

CliRun run_cli(const std::string& args) {
    const std::string cmd =
        std::string(SELFMI_CLI_PATH) + " " + args + " 2>&1";
    const auto t0 = std::chrono::steady_clock::now();
    FILE* pipe = popen(cmd.c_str(), "r");
    CliRun r;
    if (!pipe) return r;
    char buf[4096];
    while (std::size_t n = fread(buf, 1, sizeof buf, pipe))
        r.output.append(buf, n);
    const int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              t0)
                    .count();
    return r;
}

std::string path_of(const std::string& name) {
    return (g_scratch / name).string();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

// The benchmark dataset every end-to-end criterion runs on.
const char* kStandardData =
    "{\"synthetic\": {\"n_samples\": 2000, \"l_t\": 8, \"d_t\": 16, "
    "\"l_a\": 12, \"d_a\": 8, \"l_v\": 12, \"d_v\": 8, \"latent_dim\": 4, "
    "\"rho\": 0.8, \"sigma\": 0.3, \"lo\": -3, \"hi\": 3, \"seed\": 7}}";

std::string standard_config(const std::string& out_dir, int epochs,
                            int batch, int seed) {
    std::ostringstream s;
    s << "{\"data\": " << kStandardData << ", \"out_dir\": \"" << out_dir
      << "\", \"epochs\": " << epochs << ", \"batch_size\": " << batch
      << ", \"seed\": " << seed << "}";
    return s.str();
}

// Constant-mean predictor: train-split mean label scored on the test split.
double baseline_mae(const DatasetSplits& data) {
    double mean = 0.0;
    for (const auto& s : data.train) mean += s.label;
    mean /= double(data.train.size());
    double err = 0.0;
    for (const auto& s : data.test) err += std::abs(s.label - mean);
    return err / double(data.test.size());
}

double parse_stdout_value(const std::string& output, const std::string& key) {
    std::istringstream lines(output);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.rfind(key + " ", 0) == 0)
            return parse_double(line.substr(key.size() + 1), key);
    }
    throw ParseError("no \"" + key + "\" line in command output");
}

// ---------------------------------------------------------------------------

std::string criterion_gradcheck() {
    CliRun r = run_cli("gradcheck --seed 1");
    if (r.exit_code != 0)
        return "gradcheck exited " + std::to_string(r.exit_code);
    if (r.output.find("FAIL") != std::string::npos)
        return "gradcheck output contains failures";
    if (r.seconds >= 30.0)
        return "runtime " + std::to_string(r.seconds) + " s exceeds 30 s";
    return {};
}

std::string criterion_infonce_identities() {
    // N = 1: the only candidate is the match, loss exactly 0.
    const double l1 = infonce_loss(Tensor::full({1, 1}, -2.3)).item();
    if (std::abs(l1) > 1e-12)
        return "N=1 loss " + std::to_string(l1) + " not 0";

    // Constant score matrix: uniform softmax, loss = ln N.
    for (std::size_t n : {std::size_t(2), std::size_t(8), std::size_t(64)}) {
        const double l = infonce_loss(Tensor::full({n, n}, 0.37)).item();
        if (std::abs(l - std::log(double(n))) > 1e-12)
            return "constant N=" + std::to_string(n) + " loss " +
                   std::to_string(l) + " differs from ln N";
    }

    // Adding one constant to every score cancels inside the row softmax.
    Rng rng(99);
    Tensor s = Tensor::uniform({8, 8}, -1.0, 1.0, rng);
    Tensor shifted = add(s, Tensor::full({8, 8}, 3.7));
    const double d =
        std::abs(infonce_loss(s).item() - infonce_loss(shifted).item());
    if (d > 1e-9) return "shift changed the loss by " + std::to_string(d);
    return {};
}

std::string criterion_mi_estimator() {
    CliRun hi = run_cli(
        "estimate-mi --rho 0.9 --dim 1 --batch 128 --steps 500 --seed 1 "
        "--out-dir " +
        path_of("mi_hi"));
    if (hi.exit_code != 0)
        return "rho=0.9 run exited " + std::to_string(hi.exit_code);
    if (hi.seconds >= 60.0) return "rho=0.9 run exceeded 1 min";
    const double bound = parse_stdout_value(hi.output, "final_bound");
    const double ln_n = std::log(128.0);
    if (bound < 0.415 || bound > ln_n)
        return "rho=0.9 bound " + std::to_string(bound) +
               " outside [0.415, ln 128]";

    CsvTable t = read_csv(path_of("mi_hi") + "/mi_estimate.csv");
    if (t.rows.size() != 500)
        return "trajectory has " + std::to_string(t.rows.size()) + " rows";
    for (const auto& row : t.rows)
        if (parse_double(row.at(2), "bound") > ln_n + 1e-9)
            return "step bound exceeded ln N";

    CliRun lo = run_cli(
        "estimate-mi --rho 0 --dim 1 --batch 128 --steps 500 --seed 1 "
        "--out-dir " +
        path_of("mi_lo"));
    if (lo.exit_code != 0)
        return "rho=0 run exited " + std::to_string(lo.exit_code);
    if (lo.seconds >= 60.0) return "rho=0 run exceeded 1 min";
    const double zero_bound = parse_stdout_value(lo.output, "final_bound");
    if (std::abs(zero_bound) > 0.15)
        return "rho=0 bound " + std::to_string(zero_bound) +
               " not within 0.15 of 0";
    return {};
}

std::string criterion_epoch1_invariant() {
    RunConfig cfg = parse_run_config(
        "{\"data\": {\"synthetic\": {\"n_samples\": 200, \"l_t\": 4, "
        "\"d_t\": 6, \"l_a\": 5, \"d_a\": 4, \"l_v\": 5, \"d_v\": 4, "
        "\"latent_dim\": 3, \"seed\": 21}}, \"epochs\": 1, "
        "\"batch_size\": 16, \"seed\": 5}",
        "inline");
    DatasetSplits data = load_run_data(cfg);
    resolve_input_dims(cfg.train.model, data.dims);
    TrainResult r = run_training(cfg.train, data);

    for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t i = 0; i < data.train.size(); ++i)
            if (r.state.labels[k][i] != data.train[i].label)
                return "u-label differs from m-label after epoch 1";
    const EpochRecord& e1 = r.log.at(0);
    if (std::abs(e1.total - e1.l1_multimodal) > 1e-9)
        return "epoch-1 objective is not the pure multimodal L1 term";
    return {};
}

std::string criterion_end_to_end_training() {
    const auto t0 = std::chrono::steady_clock::now();
    RunConfig cfg =
        parse_run_config(standard_config(path_of("e2e"), 50, 32, 42),
                         "inline");
    DatasetSplits data = load_run_data(cfg);
    resolve_input_dims(cfg.train.model, data.dims);
    TrainResult r = run_training(cfg.train, data);
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t0)
                            .count();

    const double base = baseline_mae(data);
    std::ostringstream detail;
    detail << "test MAE " << r.test_metrics.mae << " vs bound "
           << 0.5 * base << ", corr " << r.test_metrics.corr << ", " << secs
           << " s";
    if (r.test_metrics.mae > 0.5 * base) return detail.str();
    if (r.test_metrics.corr < 0.5) return detail.str();
    if (secs >= 300.0) return detail.str() + " (over 5 min)";
    std::cerr << "  [" << detail.str() << "]\n";
    return {};
}

std::string criterion_ablation_grid() {
    const std::string out = path_of("grid");
    write_file(path_of("ablate.json"), standard_config(out, 4, 32, 7));
    CliRun r = run_cli("ablate --config " + path_of("ablate.json"));
    if (r.exit_code != 0)
        return "ablate exited " + std::to_string(r.exit_code);

    CsvTable tasks = read_csv(out + "/task_subsets.csv");
    CsvTable cpc = read_csv(out + "/cpc_variants.csv");
    const std::vector<std::string> want_tasks{"M",     "M,T",   "M,A",
                                              "M,V",   "M,T,A", "M,T,V",
                                              "M,V,A", "M,T,V,A"};
    const std::vector<std::string> want_cpc{"full", "w/o mt", "w/o ma",
                                            "w/o mv"};
    if (tasks.rows.size() != want_tasks.size())
        return "task table has " + std::to_string(tasks.rows.size()) +
               " rows";
    if (cpc.rows.size() != want_cpc.size())
        return "contrastive table has " + std::to_string(cpc.rows.size()) +
               " rows";
    for (std::size_t i = 0; i < want_tasks.size(); ++i)
        if (tasks.rows[i].at(0) != want_tasks[i])
            return "unexpected task row \"" + tasks.rows[i].at(0) + "\"";
    for (std::size_t i = 0; i < want_cpc.size(); ++i)
        if (cpc.rows[i].at(0) != want_cpc[i])
            return "unexpected contrastive row \"" + cpc.rows[i].at(0) + "\"";

    RunConfig cfg = parse_run_config(standard_config(out, 4, 32, 7), "inline");
    const double base = baseline_mae(load_run_data(cfg));
    for (const CsvTable* t : {&tasks, &cpc})
        for (const auto& row : t->rows) {
            const double mae = parse_double(row.at(1), "MAE cell");
            if (!(mae < base))
                return "row " + row.at(0) + " MAE " + std::to_string(mae) +
                       " does not beat baseline " + std::to_string(base);
        }
    return {};
}

std::string criterion_metric_oracles() {
    Rng rng(2026);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 3 + rng.bounded(38);
        std::vector<double> pred(n), target(n);
        for (std::size_t i = 0; i < n; ++i) {
            pred[i] = rng.uniform(-3.0, 3.0);
            target[i] = rng.bounded(5) == 0 ? 0.0 : rng.uniform(-3.0, 3.0);
        }

        // Brute-force references, written independently of the library.
        double ref_mae = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            ref_mae += std::abs(pred[i] - target[i]);
        ref_mae /= double(n);

        double mp = 0.0, mt = 0.0;
        for (std::size_t i = 0; i < n; ++i) { mp += pred[i]; mt += target[i]; }
        mp /= double(n);
        mt /= double(n);
        double sxy = 0.0, sxx = 0.0, syy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sxy += (pred[i] - mp) * (target[i] - mt);
            sxx += (pred[i] - mp) * (pred[i] - mp);
            syy += (target[i] - mt) * (target[i] - mt);
        }
        const double ref_corr = sxy / std::sqrt(sxx * syy);

        auto ref_binary = [&](bool drop_zero_targets) {
            std::size_t tp = 0, fp = 0, fn = 0, correct = 0, kept = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (drop_zero_targets && target[i] == 0.0) continue;
                ++kept;
                const bool p = pred[i] >= 0.0, t = target[i] >= 0.0;
                correct += p == t;
                tp += p && t;
                fp += p && !t;
                fn += !p && t;
            }
            double acc = kept ? double(correct) / double(kept) : 0.0;
            double f1 = 0.0;
            if (tp > 0) {
                const double prec = double(tp) / double(tp + fp);
                const double rec = double(tp) / double(tp + fn);
                f1 = 2.0 * prec * rec / (prec + rec);
            }
            return std::pair<double, double>(acc, f1);
        };

        const MetricsReport m = evaluate(pred, target);
        const auto [acc_nn, f1_nn] = ref_binary(false);
        const auto [acc_pn, f1_pn] = ref_binary(true);
        const double errs[] = {
            std::abs(m.mae - ref_mae),         std::abs(m.corr - ref_corr),
            std::abs(m.acc2_nonneg - acc_nn),  std::abs(m.f1_nonneg - f1_nn),
            std::abs(m.acc2_posneg - acc_pn),  std::abs(m.f1_posneg - f1_pn)};
        for (double e : errs)
            if (e > 1e-10)
                return "trial " + std::to_string(trial) +
                       " disagrees with brute force by " + std::to_string(e);
    }
    return {};
}

std::string criterion_determinism() {
    const std::string cfg_text =
        "{\"data\": {\"synthetic\": {\"n_samples\": 120, \"l_t\": 4, "
        "\"d_t\": 6, \"l_a\": 5, \"d_a\": 4, \"l_v\": 5, \"d_v\": 4, "
        "\"latent_dim\": 3, \"seed\": 13}}, \"epochs\": 3, "
        "\"batch_size\": 16, \"seed\": 11}";
    auto run_once = [&] {
        RunConfig cfg = parse_run_config(cfg_text, "inline");
        DatasetSplits data = load_run_data(cfg);
        resolve_input_dims(cfg.train.model, data.dims);
        return run_training(cfg.train, data);
    };
    TrainResult a = run_once();
    TrainResult b = run_once();

    if (csv_encode(train_log_table(a.log)) !=
        csv_encode(train_log_table(b.log)))
        return "train logs differ between identical runs";

    const auto pa = a.model.snapshot_values();
    const auto pb = b.model.snapshot_values();
    if (pa.size() != pb.size()) return "parameter counts differ";
    for (std::size_t i = 0; i < pa.size(); ++i)
        if (pa[i] != pb[i]) return "final parameters differ bitwise";
    return {};
}

std::string criterion_scope_documented() {
    std::ifstream in(std::string(SELFMI_SOURCE_DIR) + "/README.md");
    if (!in.good()) return "README.md missing";
    std::ostringstream s;
    s << in.rdbuf();
    const std::string readme = s.str();
    for (const char* needle :
         {"out of scope", "load_features", "eval", "checkpoint"})
        if (readme.find(needle) == std::string::npos)
            return std::string("README does not mention \"") + needle + "\"";
    return {};
}

std::string criterion_data_round_trip() {
    RunConfig cfg = parse_run_config(
        std::string("{\"data\": ") + kStandardData + "}", "inline");
    DatasetSplits a = load_run_data(cfg);
    save_features(a, path_of("roundtrip.txt"));
    DatasetSplits b = load_features(path_of("roundtrip.txt"));

    auto same = [](const std::vector<ModalitySample>& x,
                   const std::vector<ModalitySample>& y) {
        if (x.size() != y.size()) return false;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i].id != y[i].id || x[i].label != y[i].label) return false;
            for (Modality m : kModalities) {
                auto va = x[i].sequence(m).values();
                auto vb = y[i].sequence(m).values();
                if (va.size() != vb.size()) return false;
                for (std::size_t j = 0; j < va.size(); ++j)
                    if (va[j] != vb[j]) return false;
            }
        }
        return true;
    };
    if (a.lo != b.lo || a.hi != b.hi) return "range differs";
    if (!same(a.train, b.train)) return "train split differs";
    if (!same(a.valid, b.valid)) return "valid split differs";
    if (!same(a.test, b.test)) return "test split differs";
    return {};
}

}  // namespace

int main() {
    g_scratch = fs::temp_directory_path() /
                ("selfmi_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(g_scratch);
    fs::create_directories(g_scratch);

    struct Criterion {
        int id;
        const char* label;
        std::function<std::string()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "gradient correctness across ops and the full objective",
         criterion_gradcheck},
        {2, "InfoNCE loss identities", criterion_infonce_identities},
        {3, "mutual-information estimator oracle", criterion_mi_estimator},
        {4, "first-epoch label and objective invariants",
         criterion_epoch1_invariant},
        {5, "end-to-end synthetic training quality",
         criterion_end_to_end_training},
        {6, "ablation grid structure and baselines",
         criterion_ablation_grid},
        {7, "metrics match brute-force references",
         criterion_metric_oracles},
        {8, "seeded runs are bit-for-bit reproducible",
         criterion_determinism},
        {9, "scope and evaluation path documented",
         criterion_scope_documented},
        {10, "feature serialization round-trips exactly",
         criterion_data_round_trip},
    };

    int failures = 0;
    for (const Criterion& c : criteria) {
        std::string err;
        try {
            err = c.run();
        } catch (const std::exception& e) {
            err = std::string("threw: ") + e.what();
        }
        if (err.empty()) {
            std::cout << "PASS criterion " << c.id << ": " << c.label << "\n";
        } else {
            std::cout << "FAIL criterion " << c.id << ": " << c.label
                      << " — " << err << "\n";
            ++failures;
        }
        std::cout.flush();
    }

    fs::remove_all(g_scratch);
    if (failures) {
        std::cout << failures << " criterion(s) failed\n";
        return 1;
    }
    std::cout << "all criteria passed\n";
    return 0;
}
