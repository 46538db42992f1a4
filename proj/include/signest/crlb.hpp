#pragma once

#include <cmath>
#include <cstddef>

#include "signest/errors.hpp"
#include "signest/matrix.hpp"
#include "signest/model.hpp"
#include "signest/normal.hpp"

// Fisher information and Cramer-Rao machinery for the perturbed sign model.
//
// The FIM factors as J = M Lambda M^T with a positive diagonal Lambda and a
// shrink matrix M = (I - (sigma_e2/sigma_z2) w w^T) H that contracts the
// information along w. The scalar all-ones specialization admits a closed
// form, a Chernoff-bound surrogate, and approximate noise-variance optima.

namespace signest {

struct FisherReport {
    Vector lambda_diag;   // N positive diagonal weights
    Matrix shrink_m;      // p x N
    Matrix fim;           // p x p, symmetric positive definite when nonsingular
    Matrix crlb_matrix;   // fim^{-1}
    double crlb_trace = 0.0;
};

/// Diagonal Fisher weights
///   lambda_ii = phi(t_i)^2 / (sigma_z2 Phi(t_i) Phi(-t_i)),  t_i = h_i^T w / sigma_z,
/// assembled in log space so arguments out to |t| ~ 35 survive. The quotient
/// form is algebraically the (1/Phi + 1/Phi(-.)) e^{-t^2} expression with the
/// complement identity folded in.
inline Vector lambda_diag(const PerturbedSignModel& model, const Vector& w) {
    const double sigma_z2 = equivalent_noise_variance(model, w);
    const double sigma_z = std::sqrt(sigma_z2);
    const Vector proj = matvec_t(model.h, w);
    Vector lam(model.n());
    const double log_2pi = 2.0 * kLogSqrt2Pi;
    for (std::size_t i = 0; i < lam.size(); ++i) {
        const double t = proj[i] / sigma_z;
        lam[i] = std::exp(-t * t - log_2pi - std_normal_log_cdf(t) -
                          std_normal_log_cdf(-t)) /
                 sigma_z2;
    }
    return lam;
}

/// M = (I - (sigma_e2/sigma_z2) w w^T) H, via a rank-1 update of H.
inline Matrix shrink_matrix(const PerturbedSignModel& model, const Vector& w) {
    const double sigma_z2 = equivalent_noise_variance(model, w);
    const double c = model.sigma_e2 / sigma_z2;
    Matrix m = model.h;
    // M = H - c * w (w^T H)
    Vector wth(model.n(), 0.0);
    for (std::size_t r = 0; r < model.p(); ++r)
        for (std::size_t j = 0; j < model.n(); ++j) wth[j] += w[r] * model.h(r, j);
    for (std::size_t r = 0; r < model.p(); ++r)
        for (std::size_t j = 0; j < model.n(); ++j) m(r, j) -= c * w[r] * wth[j];
    return m;
}

/// FIM J = M diag(lambda) M^T, its inverse and the CRLB trace. Throws
/// SingularFim when the smallest eigenvalue of J falls below the
/// dimension-aware threshold, which signals that no finite-variance unbiased
/// estimator exists (e.g. the vanishing-additive-noise limit).
inline FisherReport fim_and_crlb(const PerturbedSignModel& model, const Vector& w) {
    if (model.p() > model.n())
        throw RankDeficient("fim_and_crlb: need p <= N");
    FisherReport rep;
    rep.lambda_diag = lambda_diag(model, w);
    rep.shrink_m = shrink_matrix(model, w);
    rep.fim = weighted_gram(rep.shrink_m, rep.lambda_diag);
    const Vector eig = sym_eigenvalues(rep.fim);
    if (!(eig.back() > 1e-12 * trace(rep.fim) / static_cast<double>(model.p())))
        throw SingularFim("fim_and_crlb: Fisher information matrix is singular");
    try {
        rep.crlb_matrix = spd_inverse(rep.fim);
    } catch (const NotPositiveDefinite&) {
        throw SingularFim("fim_and_crlb: Fisher information matrix is singular");
    }
    rep.crlb_trace = trace(rep.crlb_matrix);
    return rep;
}

/// Closed-form scalar CRLB for the all-ones mean sensing matrix:
///   (2 pi sigma_z2 / N) (1 + sigma_e2 w^2/sigma_n2)^2 Phi(-w/sz) Phi(w/sz) e^{w^2/sz^2}.
inline double scalar_crlb(double w, double sigma_e2, double sigma_n2, std::size_t n) {
    if (!(sigma_n2 > 0.0)) throw DomainError("scalar_crlb: sigma_n2 must be positive");
    if (n < 1) throw DomainError("scalar_crlb: N must be >= 1");
    const double sigma_z2 = w * w * sigma_e2 + sigma_n2;
    const double t = w / std::sqrt(sigma_z2);
    const double amp = 1.0 + sigma_e2 * w * w / sigma_n2;
    // Log-space product keeps the Phi Phi(-.) e^{t^2} factor finite for large |t|.
    const double phis = std::exp(std_normal_log_cdf(-t) + std_normal_log_cdf(t) + t * t);
    return (2.0 * M_PI * sigma_z2 / static_cast<double>(n)) * amp * amp * phis;
}

/// Chernoff upper bound on the scalar CRLB:
///   (pi sigma_z2 / 2N) (1 + sigma_e2 w^2/sigma_n2)^2 e^{w^2/(2 sigma_z2)}.
inline double scalar_crlb_chernoff(double w, double sigma_e2, double sigma_n2,
                                   std::size_t n) {
    if (!(sigma_n2 > 0.0))
        throw DomainError("scalar_crlb_chernoff: sigma_n2 must be positive");
    if (n < 1) throw DomainError("scalar_crlb_chernoff: N must be >= 1");
    const double sigma_z2 = w * w * sigma_e2 + sigma_n2;
    const double amp = 1.0 + sigma_e2 * w * w / sigma_n2;
    return (M_PI * sigma_z2 / (2.0 * static_cast<double>(n))) * amp * amp *
           std::exp(w * w / (2.0 * sigma_z2));
}

/// Log of the Chernoff bound with constant terms dropped:
///   f(sigma_n2, sigma_e2) = 3 log(sigma_z2) + w^2/(2 sigma_z2) - 2 log(sigma_n2).
inline double chernoff_log_objective(double sigma_n2, double sigma_e2, double w) {
    if (!(sigma_n2 > 0.0))
        throw DomainError("chernoff_log_objective: sigma_n2 must be positive");
    const double sigma_z2 = sigma_n2 + sigma_e2 * w * w;
    return 3.0 * std::log(sigma_z2) + w * w / (2.0 * sigma_z2) -
           2.0 * std::log(sigma_n2);
}

/// Stationary point of the Chernoff log objective over sigma_n2:
///   (w^2/2) (sqrt(9 sigma_e^4 + sigma_e2 + 1/4) + 1/2 + sigma_e2).
inline double approx_opt_sigma_n2(double w, double sigma_e2) {
    if (w == 0.0) throw DomainError("approx_opt_sigma_n2: w must be nonzero");
    if (!(sigma_e2 >= 0.0))
        throw DomainError("approx_opt_sigma_n2: sigma_e2 must be nonnegative");
    return 0.5 * w * w *
           (std::sqrt(9.0 * sigma_e2 * sigma_e2 + sigma_e2 + 0.25) + 0.5 + sigma_e2);
}

/// Approximate optimal perturbation strength at fixed additive noise:
/// 1/6 - sigma_n2/w^2 when that is nonnegative, else 0.
inline double approx_opt_sigma_e2(double w, double sigma_n2) {
    if (w == 0.0) throw DomainError("approx_opt_sigma_e2: w must be nonzero");
    if (!(sigma_n2 > 0.0))
        throw DomainError("approx_opt_sigma_e2: sigma_n2 must be positive");
    const double ratio = sigma_n2 / (w * w);
    return ratio <= 1.0 / 6.0 ? 1.0 / 6.0 - ratio : 0.0;
}

struct GapBounds {
    double lower = 0.0;
    double upper = 0.0;
    double gap = 0.0;
};

/// Trace-gap bounds at fixed equivalent noise: compares the model against
/// its perturbation-free counterpart with sigma_n2 = sigma_z2. With
/// gamma = sigma_e2 |w|^2 / sigma_n2 and eigenvalues lt_1 >= ... >= lt_p of
/// the perturbation-free FIM Jt = H Lambda H^T,
///
///   (gamma^2 + 2 gamma)/lt_1  <=  tr(J^-1) - tr(Jt^-1)  <=  (gamma^2 + 2 gamma)/lt_p,
///
/// where J = N Jt N with N = I - (sigma_e2/sigma_z2) w w^T.
inline GapBounds crlb_gap_bounds(const PerturbedSignModel& model, const Vector& w) {
    const double sigma_z2 = equivalent_noise_variance(model, w);
    const double gamma = model.sigma_e2 * dot(w, w) / model.sigma_n2;
    const Vector lam = lambda_diag(model, w);  // depends only on sigma_z and H^T w
    const Matrix j_tilde = weighted_gram(model.h, lam);
    const Vector eig = sym_eigenvalues(j_tilde);
    if (!(eig.back() > 1e-12 * trace(j_tilde) / static_cast<double>(model.p())))
        throw SingularFim("crlb_gap_bounds: perturbation-free FIM is singular");

    const std::size_t p = model.p();
    const double c = model.sigma_e2 / sigma_z2;
    Matrix n_mat = Matrix::identity(p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) n_mat(i, j) -= c * w[i] * w[j];
    const Matrix j_full = matmul(matmul(n_mat, j_tilde), n_mat);

    GapBounds out;
    const double num = gamma * gamma + 2.0 * gamma;
    out.lower = num / eig.front();
    out.upper = num / eig.back();
    try {
        out.gap = trace(spd_inverse(j_full)) - trace(spd_inverse(j_tilde));
    } catch (const NotPositiveDefinite&) {
        throw SingularFim("crlb_gap_bounds: perturbed FIM is singular");
    }
    return out;
}

namespace detail {

template <typename F>
inline double golden_section_min(F&& f, double lo, double hi, int iters = 80) {
    const double invphi = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - invphi * (b - a), x2 = a + invphi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < iters; ++i) {
        if (f1 < f2) {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - invphi * (b - a); f1 = f(x1);
        } else {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + invphi * (b - a); f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

template <typename F>
inline double grid_then_golden_argmin(F&& f, double lo, double hi, std::size_t points) {
    if (!(lo > 0.0 && hi > lo) || points < 3)
        throw DomainError("grid argmin: need 0 < lo < hi and >= 3 points");
    const double llo = std::log(lo), lhi = std::log(hi);
    std::size_t best = 0;
    double best_val = f(lo);
    Vector grid(points);
    grid[0] = lo;
    for (std::size_t i = 1; i < points; ++i) {
        grid[i] = std::exp(llo + (lhi - llo) * static_cast<double>(i) /
                                     static_cast<double>(points - 1));
        const double v = f(grid[i]);
        if (v < best_val) { best_val = v; best = i; }
    }
    const double a = grid[best == 0 ? 0 : best - 1];
    const double b = grid[best + 1 < points ? best + 1 : points - 1];
    return golden_section_min(f, a, b);
}

}  // namespace detail

/// Numerically locate the additive-noise variance minimizing the scalar CRLB
/// (log-spaced grid scan refined by golden-section search).
inline double argmin_scalar_crlb_sigma_n2(double w, double sigma_e2, double lo, double hi,
                                          std::size_t points = 2000) {
    return detail::grid_then_golden_argmin(
        [&](double sn2) { return scalar_crlb(w, sigma_e2, sn2, 1); }, lo, hi, points);
}

/// Same scan over the perturbation strength at fixed additive noise.
inline double argmin_scalar_crlb_sigma_e2(double w, double sigma_n2, double lo, double hi,
                                          std::size_t points = 2000) {
    return detail::grid_then_golden_argmin(
        [&](double se2) { return scalar_crlb(w, se2, sigma_n2, 1); }, lo, hi, points);
}

}  // namespace signest
