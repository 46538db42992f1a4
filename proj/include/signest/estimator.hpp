#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "signest/errors.hpp"
#include "signest/likelihood.hpp"
#include "signest/matrix.hpp"
#include "signest/model.hpp"

// Maximum-likelihood estimation via the convex v-space reformulation:
// a damped Newton method with Armijo backtracking solves the unconstrained
// v-problem; the result is checked against the norm-limit ball of radius
// R_v = R_w / sqrt(R_w^2 sigma_e2 + sigma_n2), projected onto it when
// outside, and mapped back to w-space.

namespace signest {

struct SolverOptions {
    double grad_tol = 1e-10;
    std::size_t max_iters = 100;
    double divergence_norm_factor = 1e3;
    double armijo_c = 1e-4;
    double backtrack_ratio = 0.5;
};

enum class SolveStatus { Interior, Projected, Separated };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Interior: return "Interior";
        case SolveStatus::Projected: return "Projected";
        default: return "Separated";
    }
}

struct EstimateReport {
    Vector w_hat;
    Vector v_solution;
    SolveStatus status = SolveStatus::Interior;
    std::size_t iterations = 0;
    double final_grad_norm = 0.0;
    double neg_log_likelihood = 0.0;
};

struct UnconstrainedSolve {
    Vector v;
    bool converged = false;
    std::size_t iterations = 0;
    double grad_norm = 0.0;
};

namespace detail {

/// Newton with Armijo backtracking on the strictly convex v-objective.
///
/// Convergence means the gradient norm dropped below grad_tol at a point
/// that is not a separating direction. Separable data make the objective
/// decrease forever along some direction; the iterates then creep outward
/// and the gradient underflows below any tolerance, so a gradient test
/// alone would accept a bogus "optimum". The certificate is exact: if
/// min_i y_i h_i^T v >= 0 at a nonzero v, full row rank of H implies no
/// finite minimizer exists, and the solve reports non-convergence.
inline UnconstrainedSolve newton_solve(const Matrix& h, const SignVector& y,
                                       const SolverOptions& opts, double radius_hint,
                                       const Vector* start,
                                       std::vector<double>* objective_trace) {
    if (h.cols < h.rows || !check_identifiability(h))
        throw RankDeficient("newton_solve: H must have full row rank with N >= p");
    const std::size_t p = h.rows;
    const double diverged_norm =
        opts.divergence_norm_factor * std::max(radius_hint, 1.0);

    UnconstrainedSolve out;
    out.v = start ? *start : Vector(p, 0.0);

    for (std::size_t iter = 0; iter <= opts.max_iters; ++iter) {
        const ObjectiveEvaluation eval = neg_log_likelihood_v(h, y, {out.v});
        if (objective_trace) objective_trace->push_back(eval.value);
        out.iterations = iter;
        out.grad_norm = norm2(eval.gradient);

        if (out.grad_norm <= opts.grad_tol) {
            const Vector x = matvec_t(h, out.v);
            bool separating = norm2(out.v) > 0.0;
            for (std::size_t i = 0; separating && i < y.size(); ++i)
                if (static_cast<double>(y[i]) * x[i] < 0.0) separating = false;
            out.converged = !separating;
            return out;
        }
        if (norm2(out.v) > diverged_norm) return out;  // diverged: separable data
        if (iter == opts.max_iters) return out;        // cap hit without convergence

        Vector step = eval.gradient;
        for (double& g : step) g = -g;
        step = solve_spd(eval.hessian, step);  // NotPositiveDefinite propagates

        double gd = dot(eval.gradient, step);
        // Backtracking cannot certify decreases below the rounding noise of
        // the objective; at that scale the full Newton step is the right move.
        const double noise_floor = 1e-12 * (1.0 + std::abs(eval.value));
        double t = 1.0;
        if (std::abs(gd) > noise_floor) {
            while (t > 0x1p-60) {
                Vector trial(p);
                for (std::size_t i = 0; i < p; ++i) trial[i] = out.v[i] + t * step[i];
                const double f_trial = neg_log_likelihood_v_value(h, y, trial);
                if (f_trial <= eval.value + opts.armijo_c * t * gd) break;
                t *= opts.backtrack_ratio;
            }
            if (t <= 0x1p-60) t = 1.0;
        }
        for (std::size_t i = 0; i < p; ++i) out.v[i] += t * step[i];
    }
    return out;  // unreachable
}

/// Shared estimation pipeline for a given (sigma_e2, sigma_n2) treatment.
inline EstimateReport estimate_with(const Matrix& h, const SignVector& y, double sigma_e2,
                                    double sigma_n2, double r_w, const SolverOptions& opts) {
    if (!(r_w > 0.0)) throw InvalidRadius("estimate: R_w must be positive");
    if (y.size() != h.cols) throw DimensionMismatch("estimate: len(y) != N");
    const double r_v = r_w / std::sqrt(r_w * r_w * sigma_e2 + sigma_n2);

    UnconstrainedSolve us = newton_solve(h, y, opts, r_v, nullptr, nullptr);

    EstimateReport rep;
    rep.iterations = us.iterations;
    rep.final_grad_norm = us.grad_norm;
    const double vnorm = norm2(us.v);
    if (us.converged && vnorm <= r_v) {
        rep.status = SolveStatus::Interior;
        rep.v_solution = us.v;
    } else {
        rep.status = us.converged ? SolveStatus::Projected : SolveStatus::Separated;
        // Euclidean projection of the (last) iterate onto the closed R_v ball.
        rep.v_solution.resize(us.v.size());
        for (std::size_t i = 0; i < us.v.size(); ++i)
            rep.v_solution[i] = us.v[i] * (r_v / vnorm);
    }
    rep.w_hat = v_to_w({rep.v_solution}, sigma_e2, sigma_n2);
    rep.neg_log_likelihood = neg_log_likelihood_v_value(h, y, rep.v_solution);
    return rep;
}

}  // namespace detail

/// Minimize the unconstrained convex v-objective. `converged` is false when
/// no finite minimizer exists (separable data). The optional start point and
/// objective trace exist for diagnostics; the default start is v = 0.
inline UnconstrainedSolve solve_unconstrained_v(const Matrix& h, const SignVector& y,
                                                const SolverOptions& opts = {},
                                                const Vector* start = nullptr,
                                                std::vector<double>* objective_trace = nullptr) {
    return detail::newton_solve(h, y, opts, 1.0, start, objective_trace);
}

/// Full ML estimate with the norm-limit operation at radius R_w.
inline EstimateReport ml_estimate(const PerturbedSignModel& model, const SignVector& y,
                                  double r_w, const SolverOptions& opts = {}) {
    return detail::estimate_with(model.h, y, model.sigma_e2, model.sigma_n2, r_w, opts);
}

/// The perturbation-ignored estimator: the same pipeline with sigma_e2
/// treated as zero, i.e. plain probit ML scaled by sigma_n.
inline EstimateReport perturbation_ignored_estimate(const Matrix& h, const SignVector& y,
                                                    double sigma_n2, double r_w,
                                                    const SolverOptions& opts = {}) {
    if (!(sigma_n2 > 0.0))
        throw DomainError("perturbation_ignored_estimate: sigma_n2 must be positive");
    return detail::estimate_with(h, y, 0.0, sigma_n2, r_w, opts);
}

/// Map a perturbation-aware estimate to the perturbation-ignored one:
/// w_t / sqrt(1 + (sigma_e2/sigma_n2) |w_t|^2). Same direction, shrunk
/// magnitude.
inline Vector relate_ignored_to_ml(const Vector& w_t, double sigma_e2, double sigma_n2) {
    if (!(sigma_n2 > 0.0))
        throw DomainError("relate_ignored_to_ml: sigma_n2 must be positive");
    const double scale = 1.0 / std::sqrt(1.0 + (sigma_e2 / sigma_n2) * dot(w_t, w_t));
    Vector out(w_t.size());
    for (std::size_t i = 0; i < w_t.size(); ++i) out[i] = scale * w_t[i];
    return out;
}

/// Limiting squared error of the perturbation-ignored estimator:
/// |w0|^2 (1 - (1 + (sigma_e2/sigma_n2)|w0|^2)^{-1/2})^2.
inline double mismodel_limit_mse(const Vector& w0, double sigma_e2, double sigma_n2) {
    if (!(sigma_n2 > 0.0))
        throw DomainError("mismodel_limit_mse: sigma_n2 must be positive");
    const double nw2 = dot(w0, w0);
    const double shrink = 1.0 - 1.0 / std::sqrt(1.0 + (sigma_e2 / sigma_n2) * nw2);
    return nw2 * shrink * shrink;
}

}  // namespace signest
