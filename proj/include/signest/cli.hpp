#pragma once

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "signest/config.hpp"
#include "signest/csv.hpp"
#include "signest/errors.hpp"
#include "signest/experiments.hpp"
#include "signest/version.hpp"

// Command layer behind the `signest` binary. Each command writes its CSV
// table(s) plus a manifest.json into the output directory and returns a
// process exit code:
//
//   0  success
//   1  configuration or I/O failure
//   2  numerical failure (singular FIM, rank-deficient H, ...)
//
// The output directory resolves as: explicit --out flag, then the
// SIGNEST_OUTPUT_DIR environment variable, then the current directory.

namespace signest::cli {

struct RunManifest {
    std::string config_echo;
    std::uint64_t master_seed = 0;
    std::string artifact_version = kVersion;
    double wall_time_seconds = 0.0;
    std::vector<std::string> warnings;
};

inline void write_manifest(const std::string& dir, const RunManifest& m) {
    nlohmann::json j;
    j["config_echo"] = m.config_echo;
    j["master_seed"] = m.master_seed;
    j["artifact_version"] = m.artifact_version;
    j["wall_time_seconds"] = m.wall_time_seconds;
    j["warnings"] = m.warnings;
    std::ofstream out(std::filesystem::path(dir) / "manifest.json", std::ios::trunc);
    if (!out) throw IoError("manifest: cannot write to '" + dir + "'");
    out << j.dump(2) << "\n";
}

inline std::string resolve_output_dir(const std::string& flag_dir,
                                      const std::string& config_dir = "") {
    if (!flag_dir.empty()) return flag_dir;
    if (!config_dir.empty()) return config_dir;
    if (const char* env = std::getenv("SIGNEST_OUTPUT_DIR"); env && *env) return env;
    return ".";
}

namespace detail {

class WallClock {
  public:
    double seconds() const {
        return std::chrono::duration<double>(clock::now() - start_).count();
    }

  private:
    using clock = std::chrono::steady_clock;
    clock::time_point start_ = clock::now();
};

inline void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("output: cannot create directory '" + dir + "'");
}

inline std::string csv_path(const std::string& dir, const std::string& prefix,
                            const std::string& name) {
    const std::string file = prefix.empty() ? name : prefix + "_" + name;
    return (std::filesystem::path(dir) / file).string();
}

/// Maps thrown errors onto exit codes; numerical failures still produce a
/// manifest with the failure recorded in the warnings.
template <typename Body>
inline int run_guarded(const std::string& out_dir, RunManifest manifest, Body&& body) {
    WallClock clock;
    try {
        body(manifest);
        manifest.wall_time_seconds = clock.seconds();
        ensure_dir(out_dir);
        write_manifest(out_dir, manifest);
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        manifest.warnings.push_back(std::string("numerical failure: ") + e.what());
        manifest.wall_time_seconds = clock.seconds();
        try {
            ensure_dir(out_dir);
            write_manifest(out_dir, manifest);
        } catch (const Error&) {
            // manifest is best effort once the run has already failed
        }
        return 2;
    }
}

}  // namespace detail

/// A simulated dataset on disk: header y,h_1,...,h_p and one row per
/// measurement.
struct Dataset {
    Matrix h;       // p x N
    SignVector y;
};

inline void write_dataset_csv(const std::string& path, const Dataset& ds) {
    CsvWriter csv(path);
    std::vector<std::string> header{"y"};
    for (std::size_t r = 0; r < ds.h.rows; ++r)
        header.push_back("h_" + std::to_string(r + 1));
    csv.header(header);
    for (std::size_t i = 0; i < ds.h.cols; ++i) {
        std::vector<std::string> cells{std::to_string(static_cast<int>(ds.y[i]))};
        for (std::size_t r = 0; r < ds.h.rows; ++r)
            cells.push_back(format_double(ds.h(r, i)));
        csv.row(cells);
    }
}

inline Dataset read_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("dataset: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw IoError("dataset: empty file '" + path + "'");
    std::size_t p = 0;
    {
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cols;
        while (std::getline(ss, cell, ',')) cols.push_back(signest::detail::trim(cell));
        if (cols.empty() || cols[0] != "y")
            throw IoError("dataset: expected header starting with 'y' in '" + path + "'");
        p = cols.size() - 1;
        if (p == 0) throw IoError("dataset: no h columns in '" + path + "'");
    }
    std::vector<std::int8_t> ys;
    std::vector<double> hcols;  // measurement-major, transposed later
    while (std::getline(in, line)) {
        line = signest::detail::trim(line);
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(signest::detail::trim(cell));
        if (cells.size() != p + 1)
            throw IoError("dataset: row with wrong column count in '" + path + "'");
        const int yv = static_cast<int>(signest::detail::parse_double("y", cells[0]));
        if (yv != 1 && yv != -1)
            throw IoError("dataset: y entries must be +1 or -1 in '" + path + "'");
        ys.push_back(static_cast<std::int8_t>(yv));
        for (std::size_t r = 0; r < p; ++r)
            hcols.push_back(signest::detail::parse_double("h", cells[r + 1]));
    }
    const std::size_t n = ys.size();
    if (n == 0) throw IoError("dataset: no data rows in '" + path + "'");
    Dataset ds;
    ds.h = Matrix(p, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t r = 0; r < p; ++r) ds.h(r, i) = hcols[i * p + r];
    ds.y.entries = std::move(ys);
    return ds;
}

/// `simulate`: draw a dataset from the configured model and write it out.
inline int cmd_simulate(const std::string& config_path, const std::string& out_flag) {
    ParsedConfig pc;
    try {
        pc = parse_config(config_path);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    const std::string out_dir = resolve_output_dir(out_flag, pc.output_dir);
    RunManifest manifest;
    manifest.config_echo = serialize_config(pc);
    manifest.master_seed = pc.config.master_seed;
    manifest.warnings = pc.warnings;
    return detail::run_guarded(out_dir, manifest, [&](RunManifest&) {
        const ExperimentConfig& cfg = pc.config;
        if (cfg.n_list.empty()) throw ConfigError("simulate: 'experiment.n_list' required");
        if (!(cfg.sigma_n2 > 0.0)) throw ConfigError("simulate: 'model.sigma_n2' required");
        const Vector w0 = signest::detail::resolve_w0(cfg);
        const std::size_t n = cfg.n_list[0];
        const Matrix h = make_gaussian_matrix(
            w0.size(), n,
            {cfg.master_seed, signest::detail::grid_stream(0, signest::detail::kStreamHDraw)});
        const PerturbedSignModel model(h, cfg.sigma_e2, cfg.sigma_n2);
        const SignVector y = simulate_measurements(
            model, w0, {cfg.master_seed, signest::detail::grid_stream(0, 0)});
        detail::ensure_dir(out_dir);
        write_dataset_csv(detail::csv_path(out_dir, pc.output_prefix, "dataset.csv"),
                          {model.h, y});
    });
}

/// `estimate`: ML estimate from a dataset file; one-row CSV.
inline int cmd_estimate(const std::string& data_path, double sigma_e2, double sigma_n2,
                        double r_w, const std::string& out_flag) {
    const std::string out_dir = resolve_output_dir(out_flag);
    RunManifest manifest;
    manifest.config_echo = "estimate --data " + data_path;
    return detail::run_guarded(out_dir, manifest, [&](RunManifest&) {
        const Dataset ds = read_dataset_csv(data_path);
        const PerturbedSignModel model(ds.h, sigma_e2, sigma_n2);
        const EstimateReport rep = ml_estimate(model, ds.y, r_w);
        detail::ensure_dir(out_dir);
        CsvWriter csv(detail::csv_path(out_dir, "", "estimate.csv"));
        std::vector<std::string> header{"status", "iterations", "final_grad_norm",
                                        "neg_log_likelihood"};
        for (std::size_t i = 0; i < rep.w_hat.size(); ++i)
            header.push_back("w_hat_" + std::to_string(i + 1));
        csv.header(header);
        std::vector<std::string> cells{to_string(rep.status), std::to_string(rep.iterations),
                                       format_double(rep.final_grad_norm),
                                       format_double(rep.neg_log_likelihood)};
        for (double w : rep.w_hat) cells.push_back(format_double(w));
        csv.row(cells);
    });
}

inline void write_crlb_scan_csv(const std::string& path, const CrlbScanResult& res) {
    CsvWriter csv(path);
    csv.header({"axis", "crlb", "chernoff"});
    for (const CrlbScanRow& r : res.rows)
        csv.row({format_double(r.axis), format_double(r.crlb), format_double(r.chernoff)});
}

inline void write_mse_csv(const std::string& path, const std::vector<MseCurvePoint>& pts) {
    CsvWriter csv(path);
    csv.header({"N", "mse_ml", "mse_ignored", "mse_known", "crlb_trace",
                "separated_fraction", "trials"});
    for (const MseCurvePoint& p : pts)
        csv.row({std::to_string(p.n), format_double(p.mse_ml), format_double(p.mse_ignored),
                 format_double(p.mse_known ? *p.mse_known
                                           : std::numeric_limits<double>::quiet_NaN()),
                 format_double(p.crlb_trace), format_double(p.separated_fraction),
                 std::to_string(p.trials_used)});
}

inline void write_gap_csv(const std::string& path, const std::vector<GapSweepRow>& rows) {
    CsvWriter csv(path);
    csv.header({"gamma", "lower", "gap", "upper"});
    for (const GapSweepRow& r : rows)
        csv.row({format_double(r.gamma), format_double(r.lower), format_double(r.gap),
                 format_double(r.upper)});
}

inline void write_probability_csv(const std::string& path,
                                  const std::vector<ProbabilityRow>& rows) {
    CsvWriter csv(path);
    csv.header({"N", "sigma_e2", "p_exact", "p_approx", "p_mc", "p_mc_stderr"});
    for (const ProbabilityRow& r : rows)
        csv.row({std::to_string(r.n), format_double(r.sigma_e2), format_double(r.p_exact),
                 format_double(r.p_approx), format_double(r.p_mc),
                 format_double(r.p_mc_stderr)});
}

/// Dispatch an experiment config onto the matching run_* operation and write
/// its CSV. `summary` prints headline values to standard output.
inline int run_experiment_config(const ParsedConfig& pc, const std::string& out_flag,
                                 std::size_t workers_flag, bool summary) {
    const std::string out_dir = resolve_output_dir(out_flag, pc.output_dir);
    RunManifest manifest;
    manifest.config_echo = serialize_config(pc);
    manifest.master_seed = pc.config.master_seed;
    manifest.warnings = pc.warnings;
    return detail::run_guarded(out_dir, manifest, [&](RunManifest&) {
        ExperimentConfig cfg = pc.config;
        if (workers_flag > 0) cfg.workers = workers_flag;
        detail::ensure_dir(out_dir);
        const auto path = [&](const char* name) {
            return detail::csv_path(out_dir, pc.output_prefix, name);
        };
        switch (cfg.kind) {
            case ExperimentKind::MseVsN: {
                const auto pts = run_mse_vs_n(cfg);
                write_mse_csv(path("mse_vs_n.csv"), pts);
                if (summary)
                    for (const auto& p : pts)
                        std::cout << "N=" << p.n << " mse_ml=" << p.mse_ml
                                  << " mse_ignored=" << p.mse_ignored
                                  << " crlb=" << p.crlb_trace << "\n";
                break;
            }
            case ExperimentKind::EstimatorComparison: {
                const auto pts = run_estimator_comparison(cfg);
                write_mse_csv(path("estimator_comparison.csv"), pts);
                if (summary)
                    for (const auto& p : pts)
                        std::cout << "N=" << p.n << " mse_ml=" << p.mse_ml
                                  << " mse_ignored=" << p.mse_ignored
                                  << " mse_known=" << (p.mse_known ? *p.mse_known : 0.0)
                                  << " crlb=" << p.crlb_trace << "\n";
                break;
            }
            case ExperimentKind::CrlbScanSigmaN:
            case ExperimentKind::CrlbScanSigmaE: {
                const CrlbScanResult res = run_crlb_scan(cfg);
                write_crlb_scan_csv(path("crlb_scan.csv"), res);
                std::cout << "argmin_crlb=" << format_double(res.argmin_crlb)
                          << " argmin_chernoff=" << format_double(res.argmin_chernoff)
                          << " approx_formula=" << format_double(res.approx_formula)
                          << "\n";
                break;
            }
            case ExperimentKind::GapBoundsSweep: {
                const auto rows = run_gap_bounds_sweep(cfg);
                write_gap_csv(path("gap_bounds.csv"), rows);
                if (summary && !rows.empty())
                    std::cout << "gamma range [" << rows.front().gamma << ", "
                              << rows.back().gamma << "], " << rows.size() << " points\n";
                break;
            }
            case ExperimentKind::ProbabilityVsN: {
                const auto rows = run_probability_vs_n(cfg);
                write_probability_csv(path("probability.csv"), rows);
                if (summary)
                    for (const auto& r : rows)
                        std::cout << "N=" << r.n << " sigma_e2=" << r.sigma_e2
                                  << " p_exact=" << r.p_exact << " p_mc=" << r.p_mc << "\n";
                break;
            }
        }
    });
}

/// `experiment` / `probability`: run a config file. `expected_kind` lets a
/// subcommand insist on a matching config.
inline int cmd_experiment(const std::string& config_path, const std::string& out_flag,
                          std::size_t workers, bool summary,
                          std::optional<ExperimentKind> expected_kind = std::nullopt) {
    ParsedConfig pc;
    try {
        pc = parse_config(config_path);
        if (expected_kind && pc.config.kind != *expected_kind)
            throw ConfigError(std::string("config: expected kind ") +
                              to_string(*expected_kind) + ", got " +
                              to_string(pc.config.kind));
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return run_experiment_config(pc, out_flag, workers, summary);
}

/// `crlb --scan ...`: a scan assembled from flags instead of a config file.
inline int cmd_crlb_scan(const std::string& axis, double w0, double sigma_e2,
                         double sigma_n2, std::size_t n, double grid_lo, double grid_hi,
                         std::size_t grid_points, const std::string& out_flag) {
    ParsedConfig pc;
    ExperimentConfig& cfg = pc.config;
    if (axis == "sigma_n") {
        cfg.kind = ExperimentKind::CrlbScanSigmaN;
        cfg.scan = {grid_lo > 0 ? grid_lo : 0.05, grid_hi > 0 ? grid_hi : 50.0,
                    grid_points > 0 ? grid_points : 2000, true};
    } else if (axis == "sigma_e") {
        cfg.kind = ExperimentKind::CrlbScanSigmaE;
        cfg.scan = {grid_lo > 0 ? grid_lo : 1e-4, grid_hi > 0 ? grid_hi : 10.0,
                    grid_points > 0 ? grid_points : 2000, true};
    } else {
        std::cerr << "error: --scan must be sigma_n or sigma_e\n";
        return 1;
    }
    cfg.w0 = {w0};
    cfg.p = 1;
    cfg.sigma_e2 = sigma_e2;
    cfg.sigma_n2 = sigma_n2;
    cfg.n_list = {n > 0 ? n : 1};
    return run_experiment_config(pc, out_flag, 0, true);
}

}  // namespace signest::cli
