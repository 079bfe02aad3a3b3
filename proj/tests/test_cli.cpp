// Drives the built binary end to end: exit-code classes, artifact emission,
// determinism, and round-trips through the repo's own readers.

#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "selfmi/checkpoint.hpp"
#include "selfmi/data_io.hpp"
#include "selfmi/report.hpp"

using namespace selfmi;

namespace {

namespace fs = std::filesystem;

struct RunResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr interleaved
};

// Shell out to the binary; SELFMI_CLI_PATH is baked in by the build.
RunResult run_cli(const std::string& args) {
    const std::string cmd = std::string(SELFMI_CLI_PATH) + " " + args +
                            " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    RunResult r;
    char buf[4096];
    while (std::size_t n = fread(buf, 1, sizeof buf, pipe))
        r.output.append(buf, n);
    const int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

// Fresh scratch directory per test, removed on destruction.
struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() /
               ("selfmi_cli_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const {
        return (path / name).string();
    }
};

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    REQUIRE(out.good());
    out << text;
}

// 40 synthetic samples, 2 epochs: enough to touch every code path quickly.
std::string tiny_config(const std::string& out_dir, int epochs = 2,
                        int seed = 3) {
    std::ostringstream s;
    s << "{\n"
      << "  \"data\": {\"synthetic\": {\"n_samples\": 40, \"l_t\": 2, "
         "\"d_t\": 3, \"l_a\": 3, \"d_a\": 2, \"l_v\": 3, \"d_v\": 2, "
         "\"latent_dim\": 3, \"rho\": 0.8, \"seed\": 5}},\n"
      << "  \"out_dir\": \"" << out_dir << "\",\n"
      << "  \"epochs\": " << epochs << ",\n"
      << "  \"batch_size\": 8,\n"
      << "  \"seed\": " << seed << ",\n"
      << "  \"model\": {\"d_m\": 16, \"unimodal_proj\": 16, "
         "\"audio_hidden\": 4, \"visual_hidden\": 4}\n"
      << "}\n";
    return s.str();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_CASE("missing config file exits with the I/O code") {
    RunResult r = run_cli("train --config /nonexistent/nowhere.json");
    CHECK(r.exit_code == 3);
}

TEST_CASE("config without a data source exits with the config code") {
    TempDir tmp("nodata");
    write_file(tmp.file("cfg.json"), "{\"out_dir\": \"x\"}");
    RunResult r = run_cli("train --config " + tmp.file("cfg.json"));
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("data") != std::string::npos);
}

TEST_CASE("unknown config key exits with the config code and names the key") {
    TempDir tmp("unknown");
    write_file(tmp.file("cfg.json"),
               "{\"data\": {\"synthetic\": {\"n_samples\": 10, \"l_t\": 2, "
               "\"d_t\": 3, \"l_a\": 3, \"d_a\": 2, \"l_v\": 3, \"d_v\": 2}}, "
               "\"learning_rate\": 0.1}");
    RunResult r = run_cli("train --config " + tmp.file("cfg.json"));
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("learning_rate") != std::string::npos);
}

TEST_CASE("malformed JSON exits with the I/O code") {
    TempDir tmp("badjson");
    write_file(tmp.file("cfg.json"), "{\"data\": ");
    RunResult r = run_cli("train --config " + tmp.file("cfg.json"));
    CHECK(r.exit_code == 3);
}

TEST_CASE("bad command-line usage exits with the config code") {
    CHECK(run_cli("no-such-subcommand").exit_code == 1);
    CHECK(run_cli("train").exit_code == 1);  // --config is required
    CHECK(run_cli("--help").exit_code == 0);
}

TEST_CASE("one-epoch train run emits every artifact") {
    TempDir tmp("train1");
    const std::string out = tmp.file("run");
    write_file(tmp.file("cfg.json"), tiny_config(out, 1));
    RunResult r = run_cli("train --config " + tmp.file("cfg.json"));
    REQUIRE(r.exit_code == 0);

    CsvTable log = read_csv(out + "/train_log.csv");
    CHECK(log.rows.size() == 1);
    CHECK(log.header.at(0) == "epoch");

    CsvTable metrics = read_csv(out + "/metrics.csv");
    REQUIRE(metrics.rows.size() == 1);
    const double mae = parse_double(metrics.rows[0][0], "mae cell");
    CHECK(mae >= 0.0);

    // the checkpoint reloads through the library
    SelfMiModel model = load_checkpoint(out + "/checkpoint.txt");
    CHECK(model.cfg.d_m == 16);

    // defaulted keys are logged for audit
    CHECK(r.output.find("defaulted") != std::string::npos);
}

TEST_CASE("identical config and seed give byte-identical logs") {
    TempDir tmp("determinism");
    const std::string out_a = tmp.file("a");
    const std::string out_b = tmp.file("b");
    write_file(tmp.file("a.json"), tiny_config(out_a));
    write_file(tmp.file("b.json"), tiny_config(out_b));
    REQUIRE(run_cli("train --config " + tmp.file("a.json")).exit_code == 0);
    REQUIRE(run_cli("train --config " + tmp.file("b.json")).exit_code == 0);
    CHECK(slurp(out_a + "/train_log.csv") == slurp(out_b + "/train_log.csv"));
    CHECK(slurp(out_a + "/metrics.csv") == slurp(out_b + "/metrics.csv"));
    CHECK(slurp(out_a + "/checkpoint.txt") ==
          slurp(out_b + "/checkpoint.txt"));
}

TEST_CASE("environment variable overrides the configured output directory") {
    TempDir tmp("envdir");
    const std::string override_dir = tmp.file("forced");
    write_file(tmp.file("cfg.json"), tiny_config(tmp.file("ignored"), 1));
    const std::string cmd = "SELFMI_OUT_DIR=" + override_dir + " " +
                            std::string(SELFMI_CLI_PATH) + " train --config " +
                            tmp.file("cfg.json") + " > /dev/null 2>&1";
    REQUIRE(std::system(cmd.c_str()) == 0);
    CHECK(fs::exists(override_dir + "/train_log.csv"));
    CHECK(!fs::exists(tmp.file("ignored")));
}

TEST_CASE("eval scores a saved checkpoint on a feature file") {
    TempDir tmp("eval");
    const std::string out = tmp.file("run");
    write_file(tmp.file("cfg.json"), tiny_config(out));
    REQUIRE(run_cli("train --config " + tmp.file("cfg.json")).exit_code == 0);

    SyntheticSpec spec;
    spec.n_samples = 40;
    spec.dims = {2, 3, 3, 2, 3, 2};
    spec.latent_dim = 3;
    spec.rho = 0.8;
    spec.seed = 5;
    save_features(gen_synthetic(spec), tmp.file("feat.txt"));

    RunResult r = run_cli("eval --checkpoint " + out + "/checkpoint.txt" +
                          " --data " + tmp.file("feat.txt"));
    REQUIRE(r.exit_code == 0);
    CsvTable t = csv_decode(r.output);
    REQUIRE(t.rows.size() == 1);
    // same data, same weights: eval reproduces the training-run test metrics
    CsvTable train_metrics = read_csv(out + "/metrics.csv");
    CHECK(t.rows[0] == train_metrics.rows[0]);

    // wrong feature width is refused as a config error
    SyntheticSpec wide = spec;
    wide.dims = {2, 4, 3, 2, 3, 2};
    save_features(gen_synthetic(wide), tmp.file("wide.txt"));
    RunResult bad = run_cli("eval --checkpoint " + out + "/checkpoint.txt" +
                            " --data " + tmp.file("wide.txt"));
    CHECK(bad.exit_code == 1);
}

TEST_CASE("ablation emits the full grid across two tables") {
    TempDir tmp("ablate");
    const std::string out = tmp.file("grid");
    write_file(tmp.file("cfg.json"), tiny_config(out, 1));
    RunResult r = run_cli("ablate --config " + tmp.file("cfg.json"));
    REQUIRE(r.exit_code == 0);

    CsvTable tasks = read_csv(out + "/task_subsets.csv");
    CHECK(tasks.rows.size() == 8);
    CHECK(tasks.rows.front().at(0) == "M");
    CHECK(tasks.rows.back().at(0) == "M,T,V,A");

    CsvTable cpc = read_csv(out + "/cpc_variants.csv");
    CHECK(cpc.rows.size() == 4);
    CHECK(cpc.rows.front().at(0) == "full");

    const std::vector<std::string> want{"setting",     "MAE",
                                        "Corr",        "Acc2_nonneg",
                                        "Acc2_posneg", "F1_nonneg",
                                        "F1_posneg"};
    CHECK(tasks.header == want);
    CHECK(cpc.header == want);
}

TEST_CASE("mi estimation writes a parseable trajectory that respects ln N") {
    TempDir tmp("mi");
    RunResult r = run_cli("estimate-mi --rho 0.8 --dim 1 --batch 32 "
                          "--steps 40 --seed 9 --out-dir " +
                          tmp.file("mi"));
    REQUIRE(r.exit_code == 0);

    CsvTable t = read_csv(tmp.file("mi") + "/mi_estimate.csv");
    REQUIRE(t.rows.size() == 40);
    const double ln_n = std::log(32.0);
    for (const auto& row : t.rows) {
        const double bound = parse_double(row.at(2), "bound cell");
        CHECK(bound <= ln_n + 1e-9);
    }

    CHECK(run_cli("estimate-mi --rho 1.2 --steps 5 --out-dir " +
                  tmp.file("bad"))
              .exit_code == 1);
}

TEST_CASE("gradcheck passes clean and catches an injected backward fault") {
    RunResult good = run_cli("gradcheck --seed 4");
    CHECK(good.exit_code == 0);
    CHECK(good.output.find("FAIL") == std::string::npos);

    RunResult same = run_cli("gradcheck --seed 4");
    CHECK(same.output == good.output);  // stable across same-seed runs

    RunResult bad =
        run_cli("gradcheck --seed 4 --corrupt-op tanh --corrupt-eps 0.02");
    CHECK(bad.exit_code != 0);
    CHECK(bad.output.find("FAIL op tanh") != std::string::npos);
}

TEST_CASE("emitted plot files are self-contained SVG documents") {
    TempDir tmp("svg");
    const std::string out = tmp.file("run");
    write_file(tmp.file("cfg.json"), tiny_config(out, 1));
    REQUIRE(run_cli("train --config " + tmp.file("cfg.json")).exit_code == 0);

    std::string svg = slurp(out + "/loss_curve.svg");
    CHECK(svg.rfind("<?xml", 0) == 0);
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("xmlns=\"http://www.w3.org/2000/svg\"") !=
          std::string::npos);
    while (!svg.empty() && std::isspace(static_cast<unsigned char>(svg.back())))
        svg.pop_back();
    CHECK(svg.size() >= 6);
    CHECK(svg.substr(svg.size() - 6) == "</svg>");
    CHECK(svg.find("href") == std::string::npos);  // no external references
}
