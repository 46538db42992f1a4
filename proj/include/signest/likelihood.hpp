#pragma once

#include <cmath>

#include "signest/errors.hpp"
#include "signest/matrix.hpp"
#include "signest/model.hpp"
#include "signest/normal.hpp"

// Negative log-likelihood of the perturbed sign model, in two
// parameterizations:
//
//   w-space:  -sum_i log Phi(y_i h_i^T w / sigma_z(w)),  non-convex in w;
//   v-space:  -sum_i log Phi(y_i h_i^T v)  with  v = w / sigma_z(w),
//             strictly convex, which is where all optimization happens.
//
// The change of variables is one-to-one on the open ball |v| < 1/sigma_e.

namespace signest {

/// The transformed variable v = w / sqrt(|w|^2 sigma_e2 + sigma_n2).
struct VParameter {
    Vector v;
};

/// Value, gradient and Hessian of the v-space negative log-likelihood.
struct ObjectiveEvaluation {
    double value = 0.0;
    Vector gradient;
    Matrix hessian;
};

inline VParameter w_to_v(const Vector& w, double sigma_e2, double sigma_n2) {
    if (!(sigma_n2 > 0.0)) throw DomainError("w_to_v: sigma_n2 must be positive");
    const double sigma_z = std::sqrt(dot(w, w) * sigma_e2 + sigma_n2);
    VParameter out;
    out.v.resize(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) out.v[i] = w[i] / sigma_z;
    return out;
}

/// Back-transform w = sigma_n v / sqrt(1 - sigma_e2 |v|^2); the inverse of
/// w_to_v on the feasible ball.
inline Vector v_to_w(const VParameter& vp, double sigma_e2, double sigma_n2) {
    const double denom = 1.0 - sigma_e2 * dot(vp.v, vp.v);
    if (!(denom > 0.0))
        throw InfeasibleV("v_to_w: |v|^2 >= 1/sigma_e2, back-transform undefined");
    const double scale = std::sqrt(sigma_n2) / std::sqrt(denom);
    Vector w(vp.v.size());
    for (std::size_t i = 0; i < vp.v.size(); ++i) w[i] = scale * vp.v[i];
    return w;
}

/// w-space negative log-likelihood (value only; optimization uses v-space).
inline double neg_log_likelihood_w(const PerturbedSignModel& model, const SignVector& y,
                                   const Vector& w) {
    if (y.size() != model.n())
        throw DimensionMismatch("neg_log_likelihood_w: len(y) != N");
    const double sigma_z = std::sqrt(equivalent_noise_variance(model, w));
    const Vector t = matvec_t(model.h, w);
    double value = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
        value -= std_normal_log_cdf(y[i] * t[i] / sigma_z);
    return value;
}

/// v-space negative log-likelihood value only (cheap line-search evaluation).
inline double neg_log_likelihood_v_value(const Matrix& h, const SignVector& y,
                                         const Vector& v) {
    if (y.size() != h.cols)
        throw DimensionMismatch("neg_log_likelihood_v_value: len(y) != N");
    if (v.size() != h.rows)
        throw DimensionMismatch("neg_log_likelihood_v_value: len(v) != p");
    const Vector x = matvec_t(h, v);
    double value = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
        value -= std_normal_log_cdf(y[i] * x[i]);
    return value;
}

/// v-space negative log-likelihood with gradient and Hessian:
///
///   value    = -sum_i log Phi(t_i),            t_i = y_i h_i^T v
///   gradient = -sum_i y_i k(t_i) h_i
///   hessian  =  sum_i beta_i h_i h_i^T,        beta_i = k(t_i) (k(t_i) + t_i)
///
/// beta_i is the curvature weight in the factored form k(k + t), which equals
/// the literal (phi^2 + t phi Phi)/Phi^2 expression without squaring tiny Phi
/// values; it is strictly positive, so the Hessian is positive semidefinite
/// and positive definite whenever H has full row rank.
inline ObjectiveEvaluation neg_log_likelihood_v(const Matrix& h, const SignVector& y,
                                                const VParameter& vp) {
    const Vector& v = vp.v;
    if (y.size() != h.cols) throw DimensionMismatch("neg_log_likelihood_v: len(y) != N");
    if (v.size() != h.rows) throw DimensionMismatch("neg_log_likelihood_v: len(v) != p");
    const std::size_t p = h.rows, n = h.cols;
    ObjectiveEvaluation out;
    out.gradient.assign(p, 0.0);
    out.hessian = Matrix(p, p);
    const Vector x = matvec_t(h, v);
    for (std::size_t i = 0; i < n; ++i) {
        const double yi = static_cast<double>(y[i]);
        const double t = yi * x[i];
        out.value -= std_normal_log_cdf(t);
        const double k = inverse_mills(t);
        const double gw = yi * k;
        const double beta = k * (k + t);
        for (std::size_t r = 0; r < p; ++r) {
            const double hr = h(r, i);
            out.gradient[r] -= gw * hr;
            const double bhr = beta * hr;
            for (std::size_t c = r; c < p; ++c) out.hessian(r, c) += bhr * h(c, i);
        }
    }
    for (std::size_t r = 0; r < p; ++r)
        for (std::size_t c = 0; c < r; ++c) out.hessian(r, c) = out.hessian(c, r);
    return out;
}

}  // namespace signest
