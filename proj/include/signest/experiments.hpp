#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "signest/crlb.hpp"
#include "signest/errors.hpp"
#include "signest/estimator.hpp"
#include "signest/model.hpp"
#include "signest/probability.hpp"

// Monte Carlo harness at desk scale: MSE-vs-N curves against the CRLB,
// the three-estimator comparison, CRLB scans over the noise variances,
// trace-gap sweeps, and unimodality-probability scans.
//
// Seeding layout (all streams keyed by the config master seed):
//   grid point gi, trial t   -> stream gi * 2^32 + t
//   grid point gi, H draw    -> stream gi * 2^32 + 0xFFFFFFFF
//   random w0 draw           -> stream 0xFFFFFFFF00000000
// Trials are independent given their stream, results are gathered into
// per-trial slots and reduced in trial order, so output is bit-identical
// for any worker count.

namespace signest {

enum class ExperimentKind {
    MseVsN,
    EstimatorComparison,
    CrlbScanSigmaN,
    CrlbScanSigmaE,
    GapBoundsSweep,
    ProbabilityVsN,
};

inline const char* to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::MseVsN: return "mse_vs_n";
        case ExperimentKind::EstimatorComparison: return "estimator_comparison";
        case ExperimentKind::CrlbScanSigmaN: return "crlb_scan_sigma_n";
        case ExperimentKind::CrlbScanSigmaE: return "crlb_scan_sigma_e";
        case ExperimentKind::GapBoundsSweep: return "gap_bounds_sweep";
        default: return "probability_vs_n";
    }
}

struct ScanGrid {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t points = 0;
    bool log_spaced = true;

    bool operator==(const ScanGrid&) const = default;

    std::vector<double> values() const {
        std::vector<double> v(points);
        if (points == 1) {
            v[0] = lo;
            return v;
        }
        for (std::size_t i = 0; i < points; ++i) {
            const double f = static_cast<double>(i) / static_cast<double>(points - 1);
            v[i] = log_spaced ? std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo)))
                              : lo + f * (hi - lo);
        }
        return v;
    }
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::MseVsN;
    std::size_t p = 0;                    // parameter dimension
    std::vector<std::size_t> n_list;      // measurement counts
    double sigma_e2 = 0.0;
    double sigma_n2 = 0.0;
    std::optional<double> sigma_z2;       // fixed equivalent noise, when set
    bool sigma_z2_fixed = false;
    std::vector<double> w0;               // explicit true parameter...
    bool w0_random = false;               // ...or drawn from N(0, I_p)
    double r_w_factor = 4.0;              // R_w = factor * |w0|
    std::size_t trials = 500;
    std::size_t mc_trials = 100000;
    std::uint64_t master_seed = 1;
    bool redraw_h_per_trial = false;
    ScanGrid scan;                        // scan axis for crlb/gap kinds
    std::vector<double> sigma_e2_list;    // probability scans
    std::size_t workers = 0;              // 0 = hardware concurrency

    bool operator==(const ExperimentConfig&) const = default;
};

struct MseCurvePoint {
    std::size_t n = 0;
    double mse_ml = 0.0;
    double mse_ignored = 0.0;
    std::optional<double> mse_known;      // only for the estimator comparison
    double median_mse_ml = 0.0;           // heavy-tail diagnostics at small N
    double median_mse_ignored = 0.0;
    double crlb_trace = 0.0;
    std::size_t trials_used = 0;
    double separated_fraction = 0.0;      // ML trials that hit the norm limit
};

struct CrlbScanRow {
    double axis = 0.0;
    double crlb = 0.0;
    double chernoff = 0.0;
};

struct CrlbScanResult {
    std::vector<CrlbScanRow> rows;
    double argmin_crlb = 0.0;       // grid + golden-section refined
    double argmin_chernoff = 0.0;   // ditto for the Chernoff bound
    double approx_formula = 0.0;    // closed-form approximate optimum
};

struct GapSweepRow {
    double gamma = 0.0;
    double lower = 0.0;
    double gap = 0.0;
    double upper = 0.0;
};

struct ProbabilityRow {
    std::size_t n = 0;
    double sigma_e2 = 0.0;
    double p_exact = 0.0;
    double p_approx = 0.0;
    double p_mc = 0.0;
    double p_mc_stderr = 0.0;
};

namespace detail {

inline constexpr std::uint64_t kStreamHDraw = 0xFFFFFFFFull;
inline constexpr std::uint64_t kStreamW0Draw = 0xFFFFFFFF00000000ull;

inline std::uint64_t grid_stream(std::size_t gi, std::size_t trial) {
    return (static_cast<std::uint64_t>(gi) << 32) + trial;
}

/// Run fn(i) for i in [0, total) across a fixed worker pool. Results must be
/// written to per-index slots by fn; this only provides the scheduling.
template <typename Fn>
inline void parallel_for(std::size_t total, std::size_t workers, Fn&& fn) {
    if (workers == 0) workers = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    workers = std::min(workers, std::max<std::size_t>(total, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < total; ++i) fn(i);
        return;
    }
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t wkr = 0; wkr < workers; ++wkr) {
        const std::size_t i0 = total * wkr / workers;
        const std::size_t i1 = total * (wkr + 1) / workers;
        pool.emplace_back([&, i0, i1] {
            try {
                for (std::size_t i = i0; i < i1; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline Vector resolve_w0(const ExperimentConfig& cfg) {
    if (!cfg.w0_random) {
        if (cfg.w0.empty()) throw ConfigError("experiment: w0 is empty");
        return cfg.w0;
    }
    if (cfg.p == 0) throw ConfigError("experiment: p required for random w0");
    CounterRng rng({cfg.master_seed, kStreamW0Draw});
    Vector w0(cfg.p);
    for (double& x : w0) x = rng.next_gaussian();
    return w0;
}

inline void require_kind(const ExperimentConfig& cfg, ExperimentKind a,
                         ExperimentKind b = ExperimentKind::MseVsN, bool two = false) {
    if (cfg.kind == a) return;
    if (two && cfg.kind == b) return;
    throw ConfigError(std::string("experiment: config kind is ") + to_string(cfg.kind));
}

struct MseAccumulator {
    std::vector<double> err_ml, err_ignored, err_known;
    std::vector<char> limited;
};

}  // namespace detail

/// Shared trial loop for the MSE experiments. `with_known` adds the
/// perturbation-known baseline: probit ML on the realized H + E with noise
/// sigma_n, i.e. the estimator that sees the true sensing matrix.
inline std::vector<MseCurvePoint> run_mse_experiment(const ExperimentConfig& cfg,
                                                     bool with_known) {
    if (cfg.trials < 1) throw ConfigError("experiment: trials must be >= 1");
    if (cfg.n_list.empty()) throw ConfigError("experiment: n_list is empty");
    const Vector w0 = detail::resolve_w0(cfg);
    const double r_w = cfg.r_w_factor * norm2(w0);
    const std::size_t p = w0.size();

    std::vector<MseCurvePoint> out;
    out.reserve(cfg.n_list.size());
    for (std::size_t gi = 0; gi < cfg.n_list.size(); ++gi) {
        const std::size_t n = cfg.n_list[gi];
        const Matrix h_ref = make_gaussian_matrix(
            p, n, {cfg.master_seed, detail::grid_stream(gi, detail::kStreamHDraw)});
        const PerturbedSignModel model_ref(h_ref, cfg.sigma_e2, cfg.sigma_n2);

        detail::MseAccumulator acc;
        acc.err_ml.resize(cfg.trials);
        acc.err_ignored.resize(cfg.trials);
        if (with_known) acc.err_known.resize(cfg.trials);
        acc.limited.resize(cfg.trials);

        detail::parallel_for(cfg.trials, cfg.workers, [&](std::size_t t) {
            const RngSeed trial_seed{cfg.master_seed, detail::grid_stream(gi, t)};
            // Per-trial H redraw keys off a perturbed master seed so the
            // matrix draws stay decoupled from the measurement draws.
            std::optional<PerturbedSignModel> model_local;
            if (cfg.redraw_h_per_trial)
                model_local.emplace(
                    make_gaussian_matrix(p, n,
                                         {cfg.master_seed ^ 0x5eed5eed5eed5eedull,
                                          detail::grid_stream(gi, t)}),
                    cfg.sigma_e2, cfg.sigma_n2);
            const PerturbedSignModel& model = model_local ? *model_local : model_ref;

            auto sq_err = [&](const Vector& w_hat) {
                double s = 0.0;
                for (std::size_t i = 0; i < p; ++i) {
                    const double d = w_hat[i] - w0[i];
                    s += d * d;
                }
                return s;
            };

            if (with_known) {
                const RealizedSimulation sim = simulate_with_perturbation(model, w0, trial_seed);
                const EstimateReport ml = ml_estimate(model, sim.y, r_w);
                const EstimateReport ig =
                    perturbation_ignored_estimate(model.h, sim.y, cfg.sigma_n2, r_w);
                const EstimateReport known =
                    perturbation_ignored_estimate(sim.h_realized, sim.y, cfg.sigma_n2, r_w);
                acc.err_ml[t] = sq_err(ml.w_hat);
                acc.err_ignored[t] = sq_err(ig.w_hat);
                acc.err_known[t] = sq_err(known.w_hat);
                acc.limited[t] = ml.status != SolveStatus::Interior;
            } else {
                const SignVector y = simulate_measurements(model, w0, trial_seed);
                const EstimateReport ml = ml_estimate(model, y, r_w);
                const EstimateReport ig =
                    perturbation_ignored_estimate(model.h, y, cfg.sigma_n2, r_w);
                acc.err_ml[t] = sq_err(ml.w_hat);
                acc.err_ignored[t] = sq_err(ig.w_hat);
                acc.limited[t] = ml.status != SolveStatus::Interior;
            }
        });

        MseCurvePoint pt;
        pt.n = n;
        pt.mse_ml = detail::mean_of(acc.err_ml);
        pt.mse_ignored = detail::mean_of(acc.err_ignored);
        if (with_known) pt.mse_known = detail::mean_of(acc.err_known);
        pt.median_mse_ml = detail::median_of(acc.err_ml);
        pt.median_mse_ignored = detail::median_of(acc.err_ignored);
        pt.crlb_trace = fim_and_crlb(model_ref, w0).crlb_trace;
        pt.trials_used = cfg.trials;
        std::size_t limited = 0;
        for (char c : acc.limited) limited += static_cast<std::size_t>(c);
        pt.separated_fraction =
            static_cast<double>(limited) / static_cast<double>(cfg.trials);
        out.push_back(std::move(pt));
    }
    return out;
}

/// MSE of the ML and perturbation-ignored estimators versus N, with the
/// CRLB trace at the true parameter.
inline std::vector<MseCurvePoint> run_mse_vs_n(const ExperimentConfig& cfg) {
    detail::require_kind(cfg, ExperimentKind::MseVsN);
    return run_mse_experiment(cfg, /*with_known=*/false);
}

/// Three-estimator comparison: ML, perturbation-ignored, perturbation-known.
inline std::vector<MseCurvePoint> run_estimator_comparison(const ExperimentConfig& cfg) {
    detail::require_kind(cfg, ExperimentKind::EstimatorComparison);
    return run_mse_experiment(cfg, /*with_known=*/true);
}

/// Scalar CRLB and Chernoff bound over a noise-variance grid, plus the
/// refined argmin and the closed-form approximation to the optimum.
inline CrlbScanResult run_crlb_scan(const ExperimentConfig& cfg) {
    detail::require_kind(cfg, ExperimentKind::CrlbScanSigmaN, ExperimentKind::CrlbScanSigmaE,
                         true);
    if (cfg.scan.points < 3) throw ConfigError("experiment: scan grid needs >= 3 points");
    if (cfg.w0.size() != 1) throw ConfigError("experiment: crlb scan needs scalar w0");
    const double w0 = cfg.w0[0];
    const std::size_t n = cfg.n_list.empty() ? 1 : cfg.n_list[0];
    const bool scan_sigma_n = cfg.kind == ExperimentKind::CrlbScanSigmaN;

    CrlbScanResult res;
    res.rows.reserve(cfg.scan.points);
    for (double x : cfg.scan.values()) {
        CrlbScanRow row;
        row.axis = x;
        if (scan_sigma_n) {
            row.crlb = scalar_crlb(w0, cfg.sigma_e2, x, n);
            row.chernoff = scalar_crlb_chernoff(w0, cfg.sigma_e2, x, n);
        } else {
            row.crlb = scalar_crlb(w0, x, cfg.sigma_n2, n);
            row.chernoff = scalar_crlb_chernoff(w0, x, cfg.sigma_n2, n);
        }
        res.rows.push_back(row);
    }
    if (scan_sigma_n) {
        res.argmin_crlb =
            argmin_scalar_crlb_sigma_n2(w0, cfg.sigma_e2, cfg.scan.lo, cfg.scan.hi,
                                        cfg.scan.points);
        res.argmin_chernoff = signest::detail::grid_then_golden_argmin(
            [&](double sn2) { return scalar_crlb_chernoff(w0, cfg.sigma_e2, sn2, n); },
            cfg.scan.lo, cfg.scan.hi, cfg.scan.points);
        res.approx_formula = approx_opt_sigma_n2(w0, cfg.sigma_e2);
    } else {
        res.argmin_crlb = argmin_scalar_crlb_sigma_e2(w0, cfg.sigma_n2, cfg.scan.lo,
                                                      cfg.scan.hi, cfg.scan.points);
        res.argmin_chernoff = signest::detail::grid_then_golden_argmin(
            [&](double se2) { return scalar_crlb_chernoff(w0, se2, cfg.sigma_n2, n); },
            cfg.scan.lo, cfg.scan.hi, cfg.scan.points);
        res.approx_formula = approx_opt_sigma_e2(w0, cfg.sigma_n2);
    }
    return res;
}

/// Trace-gap bounds swept over gamma at fixed equivalent noise
/// sigma_z2 (default 4 |w0|^2): each gamma splits sigma_z2 into
/// sigma_n2 = sigma_z2/(1+gamma) and the matching sigma_e2.
inline std::vector<GapSweepRow> run_gap_bounds_sweep(const ExperimentConfig& cfg) {
    detail::require_kind(cfg, ExperimentKind::GapBoundsSweep);
    if (cfg.scan.points < 2) throw ConfigError("experiment: gamma grid needs >= 2 points");
    const Vector w0 = detail::resolve_w0(cfg);
    const std::size_t p = w0.size();
    const std::size_t n = cfg.n_list.empty() ? 300 : cfg.n_list[0];
    const double nw2 = dot(w0, w0);
    const double sigma_z2 = cfg.sigma_z2.value_or(4.0 * nw2);
    const Matrix h = make_gaussian_matrix(
        p, n, {cfg.master_seed, detail::grid_stream(0, detail::kStreamHDraw)});

    std::vector<GapSweepRow> rows;
    rows.reserve(cfg.scan.points);
    for (double gamma : cfg.scan.values()) {
        const double sigma_n2 = sigma_z2 / (1.0 + gamma);
        const double sigma_e2 = sigma_z2 * gamma / ((1.0 + gamma) * nw2);
        const PerturbedSignModel model(h, sigma_e2, sigma_n2);
        const GapBounds gb = crlb_gap_bounds(model, w0);
        rows.push_back({gamma, gb.lower, gb.gap, gb.upper});
    }
    return rows;
}

/// Exact, normal-approximate, and Monte Carlo unimodality probabilities over
/// the (N, sigma_e2) grid. With sigma_z2 fixed, sigma_n2 is derived per cell.
inline std::vector<ProbabilityRow> run_probability_vs_n(const ExperimentConfig& cfg) {
    detail::require_kind(cfg, ExperimentKind::ProbabilityVsN);
    if (cfg.n_list.empty()) throw ConfigError("experiment: n_list is empty");
    if (cfg.sigma_e2_list.empty()) throw ConfigError("experiment: sigma_e2_list is empty");
    if (cfg.w0.size() != 1) throw ConfigError("experiment: probability scan needs scalar w0");
    if (cfg.mc_trials < 100) throw ConfigError("experiment: mc_trials must be >= 100");
    const double w0 = cfg.w0[0];

    std::vector<ProbabilityRow> rows;
    std::size_t cell = 0;
    for (std::size_t n : cfg.n_list) {
        for (double se2 : cfg.sigma_e2_list) {
            double sn2 = cfg.sigma_n2;
            if (cfg.sigma_z2_fixed) {
                if (!cfg.sigma_z2) throw ConfigError("experiment: sigma_z2 missing");
                sn2 = *cfg.sigma_z2 - se2 * w0 * w0;
                if (!(sn2 > 0.0))
                    throw ConfigError("experiment: sigma_z2 too small for sigma_e2 grid");
            }
            const UnimodalityQuery q(n, w0, se2, sn2);
            ProbabilityRow row;
            row.n = n;
            row.sigma_e2 = se2;
            row.p_exact = p_unimodal_exact(q);
            row.p_approx = p_unimodal_normal_approx(q);
            const McProbability mc = p_unimodal_mc(
                q, cfg.mc_trials, {cfg.master_seed, detail::grid_stream(cell, 0)},
                cfg.workers);
            row.p_mc = mc.estimate;
            row.p_mc_stderr = mc.stderr_estimate;
            rows.push_back(row);
            ++cell;
        }
    }
    return rows;
}

}  // namespace signest
