// Command-line front end: train, ablate, estimate-mi, gradcheck, eval.
//
// Exit codes: 0 success, 1 configuration error, 2 numerical failure,
// 3 I/O or parse failure. Progress and notices go to stderr; results and
// summaries go to stdout.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "selfmi/ablation.hpp"
#include "selfmi/checkpoint.hpp"
#include "selfmi/errors.hpp"
#include "selfmi/gradcheck_suite.hpp"
#include "selfmi/mi_estimate.hpp"
#include "selfmi/report.hpp"
#include "selfmi/run_config.hpp"

namespace {

using namespace selfmi;

void print_notices(const std::vector<std::string>& notices) {
    for (const auto& n : notices) std::cerr << "note: " << n << "\n";
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir + ": " +
                          ec.message());
}

std::string join(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

// Encoder widths are pinned by the checkpoint; refuse data that cannot fit
// before the shape machinery produces a less helpful message.
void check_dims(const ModelConfig& model, const SeqDims& dims) {
    for (Modality m : kModalities) {
        const std::size_t want =
            model.encoders[static_cast<std::size_t>(m)].input_dim;
        const std::size_t have = dims.dim(m);
        if (want != have)
            throw ConfigError("checkpoint expects " + std::to_string(want) +
                              "-dim " + modality_name(m) +
                              " features, data has " + std::to_string(have));
    }
}

int cmd_train(const std::string& config_path) {
    RunConfig cfg = load_run_config(config_path);
    print_notices(cfg.notices);
    DatasetSplits data = load_run_data(cfg);
    resolve_input_dims(cfg.train.model, data.dims);
    ensure_dir(cfg.out_dir);

    TrainResult result =
        run_training(cfg.train, data, [](const EpochRecord& r) {
            std::cerr << "epoch " << r.epoch << " total=" << r.total
                      << " valid_mae=" << r.valid_mae
                      << " valid_corr=" << r.valid_corr << "\n";
        });
    print_notices(result.notices);

    write_csv(train_log_table(result.log), join(cfg.out_dir, "train_log.csv"));
    write_csv(metrics_table(result.test_metrics),
              join(cfg.out_dir, "metrics.csv"));
    save_checkpoint(result.model, join(cfg.out_dir, "checkpoint.txt"));

    std::vector<Series> curves(4);
    curves[0].name = "total";
    curves[1].name = "multimodal L1";
    curves[2].name = "contrastive";
    curves[3].name = "label task";
    for (const EpochRecord& r : result.log) {
        curves[0].y.push_back(r.total);
        curves[1].y.push_back(r.l1_multimodal);
        curves[2].y.push_back(r.cpc_total);
        curves[3].y.push_back(r.task_loss);
    }
    write_text_file(join(cfg.out_dir, "loss_curve.svg"),
                    svg_line_chart("training loss", "epoch", "loss", curves));

    const MetricsReport& m = result.test_metrics;
    std::cout << "best_epoch " << result.best_epoch << "\n"
              << "test mae=" << format_double(m.mae)
              << " corr=" << format_double(m.corr)
              << " acc2_nonneg=" << format_double(m.acc2_nonneg)
              << " acc2_posneg=" << format_double(m.acc2_posneg) << "\n"
              << "artifacts " << cfg.out_dir << "\n";
    return 0;
}

int cmd_ablate(const std::string& config_path) {
    RunConfig cfg = load_run_config(config_path);
    print_notices(cfg.notices);
    DatasetSplits data = load_run_data(cfg);
    resolve_input_dims(cfg.train.model, data.dims);
    ensure_dir(cfg.out_dir);

    std::vector<AblationResult> results =
        run_ablation(cfg.train, data, [](const AblationResult& r) {
            if (r.ok)
                std::cerr << "row " << r.row.setting
                          << " mae=" << r.metrics.mae << "\n";
            else
                std::cerr << "row " << r.row.setting << " FAILED: " << r.error
                          << "\n";
        });

    const std::size_t n_tasks = task_subset_rows().size();
    const std::size_t n_cpc = cpc_variant_rows().size();
    write_csv(ablation_table(results, 0, n_tasks),
              join(cfg.out_dir, "task_subsets.csv"));
    write_csv(ablation_table(results, n_tasks, n_cpc),
              join(cfg.out_dir, "cpc_variants.csv"));

    std::size_t failed = 0;
    for (const auto& r : results) failed += !r.ok;
    std::cout << "rows " << results.size() << " failed " << failed << "\n"
              << "artifacts " << cfg.out_dir << "\n";
    return failed == 0 ? 0 : 2;
}

int cmd_estimate_mi(const MiEstimateConfig& mi, std::string out_dir) {
    mi.validate();
    if (const char* env = std::getenv("SELFMI_OUT_DIR");
        env != nullptr && *env != '\0') {
        std::cerr << "note: output directory overridden by SELFMI_OUT_DIR\n";
        out_dir = env;
    }
    ensure_dir(out_dir);

    MiEstimateReport rep = estimate_mi(mi);

    CsvTable t;
    t.header = {"step", "loss", "bound", "analytic"};
    for (std::size_t i = 0; i < rep.loss.size(); ++i)
        t.rows.push_back({std::to_string(i + 1), format_double(rep.loss[i]),
                          format_double(rep.bound[i]),
                          format_double(rep.analytic)});
    write_csv(t, join(out_dir, "mi_estimate.csv"));

    std::vector<Series> curves(2);
    curves[0].name = "InfoNCE bound";
    curves[0].y = rep.bound;
    curves[1].name = "analytic MI";
    curves[1].y.assign(rep.bound.size(), rep.analytic);
    write_text_file(
        join(out_dir, "mi_estimate.svg"),
        svg_line_chart("mutual-information lower bound", "step", "nats",
                       curves));

    std::cout << "final_bound " << format_double(rep.final_bound) << "\n"
              << "analytic " << format_double(rep.analytic) << "\n"
              << "ln_n " << format_double(rep.ln_n) << "\n"
              << "artifacts " << out_dir << "\n";
    return 0;
}

int cmd_gradcheck(std::uint64_t seed, const std::string& corrupt_op,
                  double corrupt_eps) {
    GradCheckSummary s =
        run_gradcheck_suite(seed, std::cout, corrupt_op, corrupt_eps);
    return s.all_pass ? 0 : 2;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& data_path,
             const std::string& split) {
    SelfMiModel model = load_checkpoint(checkpoint_path);
    DatasetSplits data = load_features(data_path);
    check_dims(model.cfg, data.dims);

    const std::vector<ModalitySample>* samples = nullptr;
    if (split == "train") samples = &data.train;
    else if (split == "valid") samples = &data.valid;
    else if (split == "test") samples = &data.test;
    else throw ConfigError("unknown split \"" + split + "\"");

    std::vector<double> pred = predict_split(model, *samples);
    std::vector<double> target(samples->size());
    for (std::size_t i = 0; i < samples->size(); ++i)
        target[i] = (*samples)[i].label;

    std::cout << csv_encode(metrics_table(evaluate(pred, target)));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Self-supervised multimodal multi-task sentiment trainer"};
    app.require_subcommand(1);

    std::string config_path;
    auto* train = app.add_subcommand("train", "train one model from a config");
    train->add_option("--config", config_path, "JSON run configuration")
        ->required();

    auto* ablate =
        app.add_subcommand("ablate", "run the task-subset and contrastive-"
                                     "variant grids from a config");
    ablate->add_option("--config", config_path, "JSON run configuration")
        ->required();

    MiEstimateConfig mi;
    std::string mi_out = "out";
    auto* emi = app.add_subcommand(
        "estimate-mi", "train a standalone InfoNCE bound on correlated "
                       "Gaussians with known mutual information");
    emi->add_option("--rho", mi.rho, "per-coordinate correlation in [0,0.99]");
    emi->add_option("--dim", mi.dim, "coordinates per variable");
    emi->add_option("--batch", mi.batch, "contrastive batch size");
    emi->add_option("--steps", mi.steps, "gradient steps");
    emi->add_option("--seed", mi.seed, "rng seed");
    emi->add_option("--out-dir", mi_out, "artifact directory");

    std::uint64_t gc_seed = 1;
    std::string corrupt_op;
    double corrupt_eps = 0.0;
    auto* gc = app.add_subcommand(
        "gradcheck", "finite-difference check of every op and the whole "
                     "training objective");
    gc->add_option("--seed", gc_seed, "rng seed");
    gc->add_option("--corrupt-op", corrupt_op,
                   "scale this op's backward rule (test fixture)")
        ->group("");
    gc->add_option("--corrupt-eps", corrupt_eps,
                   "relative size of the injected fault")
        ->group("");

    std::string ckpt_path, data_path, eval_split = "test";
    auto* ev = app.add_subcommand("eval",
                                  "score a saved checkpoint on a feature file");
    ev->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
    ev->add_option("--data", data_path, "feature file")->required();
    ev->add_option("--split", eval_split, "train|valid|test (default test)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;  // bad usage is a configuration error
    }

    try {
        if (app.got_subcommand(train)) return cmd_train(config_path);
        if (app.got_subcommand(ablate)) return cmd_ablate(config_path);
        if (app.got_subcommand(emi)) return cmd_estimate_mi(mi, mi_out);
        if (app.got_subcommand(gc))
            return cmd_gradcheck(gc_seed, corrupt_op, corrupt_eps);
        if (app.got_subcommand(ev))
            return cmd_eval(ckpt_path, data_path, eval_split);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {  // shape/value/contract: numerical failures
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
