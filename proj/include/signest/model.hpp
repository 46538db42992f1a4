#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "signest/errors.hpp"
#include "signest/matrix.hpp"
#include "signest/rng.hpp"

// The sign-measurement model with a Gaussian-perturbed sensing matrix:
//
//   y = sign((H + E)^T w + n),   e_ij ~ N(0, sigma_e2),  n_i ~ N(0, sigma_n2),
//
// with sign(x) = +1 for x > 0 and -1 otherwise. The perturbation acts as a
// multiplicative noise: z = E^T w + n is Gaussian with per-measurement
// variance sigma_z2 = |w|^2 sigma_e2 + sigma_n2.

namespace signest {

/// Observed sign vector; every entry is exactly +1 or -1.
struct SignVector {
    std::vector<std::int8_t> entries;

    std::size_t size() const { return entries.size(); }
    int operator[](std::size_t i) const { return entries[i]; }
};

/// The mean sensing matrix plus the two noise variances. The additive-noise
/// variance must be positive: without it the sign measurements lose all
/// magnitude information and no finite-variance unbiased estimator exists.
struct PerturbedSignModel {
    Matrix h;          // p x N, columns are the per-measurement vectors h_i
    double sigma_e2;   // perturbation variance, >= 0
    double sigma_n2;   // additive-noise variance, > 0

    PerturbedSignModel(Matrix h_in, double se2, double sn2)
        : h(std::move(h_in)), sigma_e2(se2), sigma_n2(sn2) {
        if (!(sigma_n2 > 0.0))
            throw DomainError("PerturbedSignModel: sigma_n2 must be positive");
        if (!(sigma_e2 >= 0.0))
            throw DomainError("PerturbedSignModel: sigma_e2 must be nonnegative");
        if (!h.is_finite())
            throw DomainError("PerturbedSignModel: H has non-finite entries");
    }

    std::size_t p() const { return h.rows; }
    std::size_t n() const { return h.cols; }
};

/// sigma_z2 = |w|^2 sigma_e2 + sigma_n2, the variance of the equivalent
/// noise z = E^T w + n. Depends on w only through its norm.
inline double equivalent_noise_variance(const PerturbedSignModel& model, const Vector& w) {
    if (w.size() != model.p())
        throw DimensionMismatch("equivalent_noise_variance: len(w) != p");
    return dot(w, w) * model.sigma_e2 + model.sigma_n2;
}

namespace detail {

inline std::int8_t sign_of(double x) { return x > 0.0 ? std::int8_t{1} : std::int8_t{-1}; }

}  // namespace detail

/// Noiseless signs y_i = sign(h_i^T w0). Test hook for the zero-noise limit.
inline SignVector sign_measurements(const Matrix& h, const Vector& w0) {
    if (w0.size() != h.rows) throw DimensionMismatch("sign_measurements: len(w0) != p");
    SignVector y;
    y.entries.resize(h.cols);
    const Vector t = matvec_t(h, w0);
    for (std::size_t i = 0; i < h.cols; ++i) y.entries[i] = detail::sign_of(t[i]);
    return y;
}

/// Draw y_i = sign(h_i^T w0 + z_i) with z_i ~ N(0, sigma_z2), the equivalent
/// noise of the perturbed model. E is never materialized: E^T w0 + n is a
/// Gaussian vector with i.i.d. N(0, sigma_z2) entries, so one draw per
/// measurement realizes the model exactly. Deterministic given the seed;
/// measurement i consumes counter i of the stream.
inline SignVector simulate_measurements(const PerturbedSignModel& model, const Vector& w0,
                                        RngSeed seed) {
    if (w0.size() != model.p())
        throw DimensionMismatch("simulate_measurements: len(w0) != p");
    const double sigma_z = std::sqrt(equivalent_noise_variance(model, w0));
    const Vector mean = matvec_t(model.h, w0);
    CounterRng rng(seed);
    SignVector y;
    y.entries.resize(model.n());
    for (std::size_t i = 0; i < model.n(); ++i)
        y.entries[i] = detail::sign_of(mean[i] + sigma_z * rng.next_gaussian());
    return y;
}

/// Result of a simulation that materializes the full perturbation matrix.
struct RealizedSimulation {
    SignVector y;
    Matrix h_realized;  // H + E
};

/// Full-E simulation path: draws the p x N perturbation matrix explicitly and
/// returns the realized sensing matrix alongside the signs. Used by the
/// perturbation-known baseline and as a cross-check of the reduced draw.
/// Counter layout: E entry (r, i) uses counter i*p + r, n_i uses p*N + i.
inline RealizedSimulation simulate_with_perturbation(const PerturbedSignModel& model,
                                                     const Vector& w0, RngSeed seed) {
    if (w0.size() != model.p())
        throw DimensionMismatch("simulate_with_perturbation: len(w0) != p");
    const std::size_t p = model.p(), n = model.n();
    const double sigma_e = std::sqrt(model.sigma_e2);
    const double sigma_n = std::sqrt(model.sigma_n2);
    CounterRng rng(seed);
    Matrix realized = model.h;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t r = 0; r < p; ++r)
            realized(r, i) += sigma_e * rng.next_gaussian();
    SignVector y;
    y.entries.resize(n);
    const Vector mean = matvec_t(realized, w0);
    for (std::size_t i = 0; i < n; ++i)
        y.entries[i] = detail::sign_of(mean[i] + sigma_n * rng.next_gaussian());
    return {std::move(y), std::move(realized)};
}

/// 1 x N all-ones mean sensing matrix (the scalar-parameter setup).
inline Matrix make_ones_row(std::size_t n) {
    if (n < 1) throw DomainError("make_ones_row: N must be >= 1");
    Matrix m(1, n);
    for (std::size_t j = 0; j < n; ++j) m(0, j) = 1.0;
    return m;
}

/// p x N matrix with i.i.d. standard normal entries, deterministic given the
/// seed. Entry (r, c) uses counter r*N + c.
inline Matrix make_gaussian_matrix(std::size_t p, std::size_t n, RngSeed seed) {
    if (p < 1 || n < 1) throw DomainError("make_gaussian_matrix: p, N must be >= 1");
    CounterRng rng(seed);
    Matrix m(p, n);
    for (std::size_t i = 0; i < p * n; ++i) m.data[i] = rng.next_gaussian();
    return m;
}

/// True iff H has full row rank, i.e. the model is statistically
/// identifiable. Tested through the spectrum of H H^T.
inline bool check_identifiability(const Matrix& h) {
    if (h.rows > h.cols) return false;
    const Matrix gram = weighted_gram(h);
    Vector eig;
    try {
        eig = sym_eigenvalues(gram);
    } catch (const ConvergenceFailure&) {
        return false;
    }
    const double tol = 1e-10 * trace(gram) / static_cast<double>(h.rows);
    return eig.back() > tol;
}

}  // namespace signest
