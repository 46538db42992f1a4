#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "signest/cli.hpp"
#include "signest/config.hpp"
#include "signest/csv.hpp"

using namespace signest;
using Catch::Approx;

namespace {

const char* kMinimalMse = R"(
[model]
w0 = 0.7, 0.5, -0.6
sigma_e2 = 0.3
sigma_n2 = 1.0
[experiment]
kind = mse_vs_n
n_list = 100, 200
)";

std::filesystem::path temp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("minimal config picks up the documented defaults") {
    const ParsedConfig pc = parse_config_text(kMinimalMse);
    REQUIRE(pc.config.kind == ExperimentKind::MseVsN);
    REQUIRE(pc.config.r_w_factor == 4.0);
    REQUIRE(pc.config.trials == 500);
    REQUIRE(pc.config.p == 3);
    REQUIRE(pc.config.w0 == Vector{0.7, 0.5, -0.6});
    REQUIRE(pc.warnings.empty());
}

TEST_CASE("invariant violations name the offending key") {
    const std::string zero_trials = std::string(kMinimalMse) + "trials = 0\n";
    try {
        parse_config_text(zero_trials);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        REQUIRE(std::string(e.what()).find("trials") != std::string::npos);
    }

    try {
        parse_config_text("[experiment]\nkind = mse_vs_n\nn_list = 10\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        REQUIRE(std::string(e.what()).find("w0") != std::string::npos);
    }

    try {
        parse_config_text("[model]\nw0 = 1.0\nsigma_n2 = 1\n[experiment]\nn_list = 10\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        REQUIRE(std::string(e.what()).find("kind") != std::string::npos);
    }
}

TEST_CASE("unknown keys become warnings, not errors") {
    const std::string cfg_text = std::string(kMinimalMse) + "plot_color = blue\n";
    const ParsedConfig pc = parse_config_text(cfg_text);
    REQUIRE(pc.warnings.size() == 1);
    REQUIRE(pc.warnings[0].find("plot_color") != std::string::npos);
}

TEST_CASE("malformed lines are rejected with line numbers") {
    REQUIRE_THROWS_AS(parse_config_text("[model\nw0 = 1\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text("[model]\njust a line\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text("[model]\nw0 = abc\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text("[experiment]\ntrials = -3\n"), ConfigError);
}

TEST_CASE("parse -> serialize -> parse is the identity on configs") {
    const char* texts[] = {
        kMinimalMse,
        "[model]\nw0 = 1.0\nsigma_e2 = 0.3\n[experiment]\nkind = crlb_scan_sigma_n\n",
        "[model]\nw0 = random-normal\np = 4\n[experiment]\nkind = gap_bounds_sweep\n"
        "master_seed = 99\n",
        "[model]\nw0 = 1.0\nsigma_n2 = 0.3\n[experiment]\nkind = probability_vs_n\n"
        "n_list = 100\nsigma_e2_list = 0.5, 1.0\nmc_trials = 5000\n",
    };
    for (const char* text : texts) {
        const ParsedConfig once = parse_config_text(text);
        const ParsedConfig twice = parse_config_text(serialize_config(once));
        REQUIRE(once.config == twice.config);
    }
}

TEST_CASE("csv doubles round-trip exactly at 17 significant digits") {
    for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, 1e-300, -0.0306,
                     0.8830189103430823}) {
        const double back = std::stod(format_double(v));
        REQUIRE(back == v);
    }
}

TEST_CASE("simulate then estimate round-trips through the dataset file") {
    const auto dir = temp_dir("signest_cli_sim");
    const auto cfg_path = dir / "sim.ini";
    {
        std::ofstream out(cfg_path);
        out << "[model]\nw0 = 0.7, 0.5, -0.6\nsigma_e2 = 0.3\nsigma_n2 = 1.0\n"
               "[experiment]\nkind = mse_vs_n\nn_list = 400\nmaster_seed = 5\n";
    }
    REQUIRE(cli::cmd_simulate(cfg_path.string(), dir.string()) == 0);
    REQUIRE(std::filesystem::exists(dir / "dataset.csv"));
    REQUIRE(std::filesystem::exists(dir / "manifest.json"));

    const std::string manifest = slurp(dir / "manifest.json");
    REQUIRE(manifest.find("artifact_version") != std::string::npos);
    REQUIRE(manifest.find("config_echo") != std::string::npos);

    const cli::Dataset ds = cli::read_dataset_csv((dir / "dataset.csv").string());
    REQUIRE(ds.h.rows == 3);
    REQUIRE(ds.h.cols == 400);

    REQUIRE(cli::cmd_estimate((dir / "dataset.csv").string(), 0.3, 1.0, 4.0,
                              dir.string()) == 0);
    const std::string est = slurp(dir / "estimate.csv");
    REQUIRE(est.find("status,iterations,final_grad_norm,neg_log_likelihood,"
                     "w_hat_1,w_hat_2,w_hat_3") == 0);
    REQUIRE((est.find("Interior") != std::string::npos ||
             est.find("Projected") != std::string::npos ||
             est.find("Separated") != std::string::npos));
}

TEST_CASE("identical configs produce byte-identical outputs") {
    const auto dir_a = temp_dir("signest_cli_rep_a");
    const auto dir_b = temp_dir("signest_cli_rep_b");
    const char* text =
        "[model]\nw0 = 1.0\nsigma_n2 = 0.3\n[experiment]\nkind = probability_vs_n\n"
        "n_list = 50, 100\nsigma_e2_list = 0.5\nmc_trials = 500\nmaster_seed = 3\n";
    for (const auto& dir : {dir_a, dir_b}) {
        const auto cfg_path = dir / "p.ini";
        std::ofstream(cfg_path) << text;
        REQUIRE(cli::cmd_experiment(cfg_path.string(), dir.string(), 0, false) == 0);
    }
    REQUIRE(slurp(dir_a / "probability.csv") == slurp(dir_b / "probability.csv"));
    const std::string csv = slurp(dir_a / "probability.csv");
    REQUIRE(csv.rfind("N,sigma_e2,p_exact,p_approx,p_mc,p_mc_stderr", 0) == 0);
}

TEST_CASE("crlb scan command writes the pinned schema and summary") {
    const auto dir = temp_dir("signest_cli_crlb");
    REQUIRE(cli::cmd_crlb_scan("sigma_n", 1.0, 0.3, 0.0, 1, 0.05, 50.0, 400,
                               dir.string()) == 0);
    const std::string csv = slurp(dir / "crlb_scan.csv");
    REQUIRE(csv.rfind("axis,crlb,chernoff", 0) == 0);
    REQUIRE(cli::cmd_crlb_scan("bogus_axis", 1.0, 0.3, 0.0, 1, 0.0, 0.0, 0,
                               dir.string()) == 1);
}

TEST_CASE("mse csv uses the pinned column order") {
    const auto dir = temp_dir("signest_cli_mse");
    const auto cfg_path = dir / "m.ini";
    std::ofstream(cfg_path)
        << "[model]\nw0 = 0.7, 0.5, -0.6\nsigma_e2 = 0.3\nsigma_n2 = 1.0\n"
           "[experiment]\nkind = mse_vs_n\nn_list = 120\ntrials = 10\nmaster_seed = 4\n";
    REQUIRE(cli::cmd_experiment(cfg_path.string(), dir.string(), 0, false) == 0);
    const std::string csv = slurp(dir / "mse_vs_n.csv");
    REQUIRE(csv.rfind("N,mse_ml,mse_ignored,mse_known,crlb_trace,"
                      "separated_fraction,trials", 0) == 0);
}

TEST_CASE("config and io failures exit 1, numerical failures exit 2") {
    const auto dir = temp_dir("signest_cli_fail");
    REQUIRE(cli::cmd_simulate((dir / "missing.ini").string(), dir.string()) == 1);
    REQUIRE(cli::cmd_estimate((dir / "missing.csv").string(), 0.3, 1.0, 4.0,
                              dir.string()) == 1);

    // Rank-deficient dataset: duplicate h rows -> numerical failure, but the
    // manifest still lands with the failure recorded.
    const auto data_path = dir / "bad.csv";
    {
        std::ofstream out(data_path);
        out << "y,h_1,h_2\n";
        for (int i = 0; i < 20; ++i)
            out << (i % 2 ? 1 : -1) << "," << 1.0 + i << "," << 1.0 + i << "\n";
    }
    REQUIRE(cli::cmd_estimate(data_path.string(), 0.3, 1.0, 4.0, dir.string()) == 2);
    const std::string manifest = slurp(dir / "manifest.json");
    REQUIRE(manifest.find("numerical failure") != std::string::npos);
}

TEST_CASE("output directory resolution prefers flag, then env, then cwd") {
    REQUIRE(cli::resolve_output_dir("explicit", "cfgdir") == "explicit");
    REQUIRE(cli::resolve_output_dir("", "cfgdir") == "cfgdir");
    setenv("SIGNEST_OUTPUT_DIR", "/tmp/envdir", 1);
    REQUIRE(cli::resolve_output_dir("", "") == "/tmp/envdir");
    unsetenv("SIGNEST_OUTPUT_DIR");
    REQUIRE(cli::resolve_output_dir("", "") == ".");
}
