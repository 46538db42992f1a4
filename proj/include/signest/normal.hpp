#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "signest/errors.hpp"

// =============================================================================
// Standard-normal special functions.
//
// Every likelihood, bound, and probability in this library funnels through
// these four primitives, so they are written to survive arguments far into
// the tails without intermediate under/overflow:
//
//   std_normal_cdf       Phi(x)                via erfc
//   std_normal_log_cdf   log Phi(x)            scaled-erfc route for x < -1
//   inverse_mills        phi(x)/Phi(x)         log-space route for x < -5
//   std_normal_quantile  Phi^{-1}(p)           rational seed + Newton polish
//
// plus log-binomial coefficients for the binomial tail sums.
// =============================================================================

namespace signest {

inline constexpr double kInvSqrt2 = 0.7071067811865475244008443621;
inline constexpr double kInvSqrt2Pi = 0.3989422804014326779399460600;
inline constexpr double kLogSqrt2Pi = 0.9189385332046727417803297364;

/// Standard normal density phi(x).
inline double std_normal_pdf(double x) {
    return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

/// Standard normal CDF Phi(x).
inline double std_normal_cdf(double x) {
    return 0.5 * std::erfc(-x * kInvSqrt2);
}

namespace detail {

/// Scaled complementary error function e^{z^2} erfc(z) for z >= 0.
inline double erfcx_positive(double z) {
    if (z < 26.0) {
        // exp(z^2) stays below overflow and erfc(z) above underflow here.
        return std::exp(z * z) * std::erfc(z);
    }
    // Asymptotic series: erfcx(z) = 1/(z sqrt(pi)) sum_k (-1)^k (2k-1)!! / (2z^2)^k.
    const double inv2z2 = 1.0 / (2.0 * z * z);
    double term = 1.0, sum = 1.0;
    for (int k = 1; k <= 8; ++k) {
        term *= -static_cast<double>(2 * k - 1) * inv2z2;
        sum += term;
    }
    return sum / (z * 1.7724538509055160273);  // sqrt(pi)
}

}  // namespace detail

/// log Phi(x), accurate across [-40, 40].
///
/// For x >= -1 the erfc value itself is well scaled; the deep-negative
/// branch factors out e^{-x^2/2} so nothing underflows.
inline double std_normal_log_cdf(double x) {
    if (x >= 0.0) return std::log1p(-0.5 * std::erfc(x * kInvSqrt2));
    if (x >= -1.0) return std::log(0.5 * std::erfc(-x * kInvSqrt2));
    return -0.5 * x * x + std::log(0.5 * detail::erfcx_positive(-x * kInvSqrt2));
}

/// Inverse Mills ratio k(x) = phi(x)/Phi(x). Strictly positive, strictly
/// decreasing, k(x) ~ -x as x -> -inf.
inline double inverse_mills(double x) {
    if (x >= -5.0) return std_normal_pdf(x) / std_normal_cdf(x);
    return std::exp(-0.5 * x * x - kLogSqrt2Pi - std_normal_log_cdf(x));
}

namespace detail {

template <std::size_t N>
inline double polyval(double x, const std::array<double, N>& c) {
    double r = 0.0;
    for (double ci : c) r = r * x + ci;
    return r;
}

// Acklam's rational approximation to the normal quantile (~1.15e-9 relative).
inline double quantile_seed(double p) {
    static constexpr std::array<double, 6> a = {
        -3.969683028665376e+01, 2.209460984245205e+02,  -2.759285104469687e+02,
        1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr std::array<double, 6> b = {
        -5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
        6.680131188771972e+01,  -1.328068155288572e+01, 1.0};
    static constexpr std::array<double, 6> c = {
        -7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
        -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr std::array<double, 5> d = {
        7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
        3.754408661907416e+00, 1.0};
    constexpr double p_low = 0.02425;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return polyval(q, c) / polyval(q, d);
    }
    if (p > 1.0 - p_low) {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -polyval(q, c) / polyval(q, d);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return q * polyval(r, a) / polyval(r, b);
}

}  // namespace detail

/// Quantile Phi^{-1}(p) for 0 < p < 1.
///
/// Rational seed refined with two Newton steps: in probability space for
/// central p, in log space via the complementary tail otherwise (the tail
/// iteration never forms Phi(x) - p, which would cancel).
inline double std_normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw DomainError("std_normal_quantile: p must lie strictly in (0,1)");
    constexpr double p_low = 0.02425;
    double x = detail::quantile_seed(p);
    if (p >= p_low && p <= 1.0 - p_low) {
        for (int i = 0; i < 2; ++i) x -= (std_normal_cdf(x) - p) / std_normal_pdf(x);
        return x;
    }
    const bool upper = p > 0.5;
    const double q = upper ? 1.0 - p : p;  // exact subtraction for p in [0.5, 1)
    const double log_q = std::log(q);
    double t = upper ? -x : x;
    for (int i = 0; i < 2; ++i) t -= (std_normal_log_cdf(t) - log_q) / inverse_mills(t);
    return upper ? -t : t;
}

/// log C(n, k) via explicit log sums for small k and log-gamma otherwise,
/// so coefficients with n up to 1e6 keep ~1e-12 relative accuracy.
inline double log_binomial(std::uint64_t n, std::uint64_t k) {
    if (k > n) throw DomainError("log_binomial: k > n");
    k = std::min(k, n - k);
    if (k == 0) return 0.0;
    if (k <= 32) {
        double s = 0.0;
        for (std::uint64_t i = 0; i < k; ++i)
            s += std::log(static_cast<double>(n - i)) -
                 std::log(static_cast<double>(i + 1));
        return s;
    }
    return std::lgamma(static_cast<double>(n) + 1.0) -
           std::lgamma(static_cast<double>(k) + 1.0) -
           std::lgamma(static_cast<double>(n - k) + 1.0);
}

}  // namespace signest
