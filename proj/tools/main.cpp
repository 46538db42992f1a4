#include <string>

#include <CLI11.hpp>

#include "signest/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"signest: parameter estimation from perturbed sign measurements"};
    app.require_subcommand(1);

    std::string config_path, out_dir, data_path, scan_axis;
    double sigma_e2 = 0.0, sigma_n2 = 1.0, r_w = 1.0, w0 = 1.0;
    double grid_lo = 0.0, grid_hi = 0.0;
    std::size_t grid_points = 0, n = 1, workers = 0;
    bool summary = false;

    auto* sim = app.add_subcommand("simulate", "draw a dataset from a configured model");
    sim->add_option("--config", config_path, "configuration file")->required();
    sim->add_option("--out", out_dir, "output directory");

    auto* est = app.add_subcommand("estimate", "ML estimate from a dataset file");
    est->add_option("--data", data_path, "dataset CSV from `simulate`")->required();
    est->add_option("--sigma-e2", sigma_e2, "perturbation variance")->required();
    est->add_option("--sigma-n2", sigma_n2, "additive-noise variance")->required();
    est->add_option("--rw", r_w, "norm-limit radius R_w")->required();
    est->add_option("--out", out_dir, "output directory");

    auto* crlb = app.add_subcommand("crlb", "scalar CRLB scan over a noise variance");
    crlb->add_option("--scan", scan_axis, "scan axis: sigma_n or sigma_e")->required();
    crlb->add_option("--w0", w0, "true scalar parameter");
    crlb->add_option("--sigma-e2", sigma_e2, "fixed perturbation variance (sigma_n scan)");
    crlb->add_option("--sigma-n2", sigma_n2, "fixed additive variance (sigma_e scan)");
    crlb->add_option("--n", n, "number of measurements");
    crlb->add_option("--grid-lo", grid_lo, "scan grid lower end");
    crlb->add_option("--grid-hi", grid_hi, "scan grid upper end");
    crlb->add_option("--grid-points", grid_points, "scan grid size");
    crlb->add_option("--out", out_dir, "output directory");

    auto* prob = app.add_subcommand("probability", "unimodality probability scan");
    prob->add_option("--config", config_path, "configuration file")->required();
    prob->add_option("--out", out_dir, "output directory");
    prob->add_option("--workers", workers, "worker pool size");
    prob->add_flag("--summary", summary, "print headline values");

    auto* exp = app.add_subcommand("experiment", "run a configured experiment");
    exp->add_option("--config", config_path, "configuration file")->required();
    exp->add_option("--out", out_dir, "output directory");
    exp->add_option("--workers", workers, "worker pool size");
    exp->add_flag("--summary", summary, "print headline values");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    if (sim->parsed()) return signest::cli::cmd_simulate(config_path, out_dir);
    if (est->parsed())
        return signest::cli::cmd_estimate(data_path, sigma_e2, sigma_n2, r_w, out_dir);
    if (crlb->parsed())
        return signest::cli::cmd_crlb_scan(scan_axis, w0, sigma_e2, sigma_n2, n, grid_lo,
                                           grid_hi, grid_points, out_dir);
    if (prob->parsed())
        return signest::cli::cmd_experiment(config_path, out_dir, workers, summary,
                                            signest::ExperimentKind::ProbabilityVsN);
    if (exp->parsed())
        return signest::cli::cmd_experiment(config_path, out_dir, workers, summary);
    return 1;
}
