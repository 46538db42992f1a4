#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <thread>
#include <vector>

#include "signest/errors.hpp"
#include "signest/model.hpp"
#include "signest/normal.hpp"

// Probability that the unconstrained v-optimum satisfies |v| < 1/sigma_e,
// i.e. that the ML optimum exists and the w-space likelihood is unimodal.
// For the scalar all-ones model the optimum is Phi^{-1}(k/N) with k the
// count of +1 observations, so the probability is a binomial window sum.

namespace signest {

/// Scalar all-ones unimodality query.
struct UnimodalityQuery {
    std::size_t n;
    double w0;
    double sigma_e2;
    double sigma_n2;

    UnimodalityQuery(std::size_t n_in, double w0_in, double se2, double sn2)
        : n(n_in), w0(w0_in), sigma_e2(se2), sigma_n2(sn2) {
        if (n < 1) throw DomainError("UnimodalityQuery: N must be >= 1");
        if (!(sigma_e2 > 0.0))
            throw DomainError("UnimodalityQuery: sigma_e2 must be positive");
        if (!(sigma_n2 > 0.0))
            throw DomainError("UnimodalityQuery: sigma_n2 must be positive");
    }

    double sigma_z2() const { return w0 * w0 * sigma_e2 + sigma_n2; }
    double success_prob() const { return std_normal_cdf(w0 / std::sqrt(sigma_z2())); }
};

/// The window of +1 counts for which |Phi^{-1}(k/N)| < 1/sigma_e:
/// k_minus = floor(N Phi(-1/sigma_e)) + 1, k_plus = ceil(N Phi(1/sigma_e)) - 1.
/// Empty (k_minus > k_plus) means the optimum never exists, e.g. N = 1.
struct KWindow {
    std::int64_t k_minus;
    std::int64_t k_plus;

    bool contains(std::int64_t k) const { return k >= k_minus && k <= k_plus; }
    bool empty() const { return k_minus > k_plus; }
};

inline KWindow unimodal_k_window(std::size_t n, double sigma_e2) {
    const double inv_se = 1.0 / std::sqrt(sigma_e2);
    const double nd = static_cast<double>(n);
    return {static_cast<std::int64_t>(std::floor(nd * std_normal_cdf(-inv_se))) + 1,
            static_cast<std::int64_t>(std::ceil(nd * std_normal_cdf(inv_se))) - 1};
}

namespace detail {

/// sum_{k=k1}^{k2} C(n,k) q^k (1-q)^{n-k}, accumulated in log space with a
/// streaming max shift. log_q / log_1mq come in already in log scale so q
/// arbitrarily close to 0 or 1 is safe.
inline double binomial_window_prob(std::size_t n, double log_q, double log_1mq,
                                   std::int64_t k1, std::int64_t k2) {
    k1 = std::max<std::int64_t>(k1, 0);
    k2 = std::min<std::int64_t>(k2, static_cast<std::int64_t>(n));
    if (k1 > k2) return 0.0;
    double max_term = -std::numeric_limits<double>::infinity();
    double scaled_sum = 0.0;
    for (std::int64_t k = k1; k <= k2; ++k) {
        const double lt = log_binomial(n, static_cast<std::uint64_t>(k)) +
                          static_cast<double>(k) * log_q +
                          static_cast<double>(n - k) * log_1mq;
        if (lt > max_term) {
            scaled_sum = scaled_sum * std::exp(max_term - lt) + 1.0;
            max_term = lt;
        } else {
            scaled_sum += std::exp(lt - max_term);
        }
    }
    const double log_sum = max_term + std::log(scaled_sum);
    return std::clamp(std::exp(log_sum), 0.0, 1.0);
}

}  // namespace detail

/// Exact unimodality probability: the binomial window sum with success
/// probability Phi(w0/sigma_z). Returns 0 for an empty window.
inline double p_unimodal_exact(const UnimodalityQuery& q) {
    const KWindow win = unimodal_k_window(q.n, q.sigma_e2);
    if (win.empty()) return 0.0;
    const double t = q.w0 / std::sqrt(q.sigma_z2());
    return detail::binomial_window_prob(q.n, std_normal_log_cdf(t),
                                        std_normal_log_cdf(-t), win.k_minus, win.k_plus);
}

/// Normal approximation Phi(eta+) - Phi(eta-) with
/// eta+- = sqrt(N) (Phi(+-1/sigma_e) - q*) / sqrt(q*(1-q*)), q* = Phi(w0/sigma_z).
/// Intended for large N; clamped to [0, 1].
inline double p_unimodal_normal_approx(const UnimodalityQuery& q) {
    const double inv_se = 1.0 / std::sqrt(q.sigma_e2);
    const double qs = q.success_prob();
    const double sd = std::sqrt(qs * (1.0 - qs));
    const double root_n = std::sqrt(static_cast<double>(q.n));
    const double eta_p = root_n * (std_normal_cdf(inv_se) - qs) / sd;
    const double eta_m = root_n * (std_normal_cdf(-inv_se) - qs) / sd;
    return std::clamp(std_normal_cdf(eta_p) - std_normal_cdf(eta_m), 0.0, 1.0);
}

struct McProbability {
    double estimate = 0.0;
    double stderr_estimate = 0.0;
};

/// Monte Carlo estimate of the unimodality probability: simulates sign
/// vectors under the scalar all-ones model and counts the trials whose +1
/// count falls inside the window. Trial t uses stream seed.stream_index + t;
/// aggregation is an integer count, so any worker split reproduces exactly.
inline McProbability p_unimodal_mc(const UnimodalityQuery& q, std::size_t trials,
                                   RngSeed seed, std::size_t workers = 0) {
    const KWindow win = unimodal_k_window(q.n, q.sigma_e2);
    const PerturbedSignModel model(make_ones_row(q.n), q.sigma_e2, q.sigma_n2);
    const Vector w0{q.w0};

    auto count_range = [&](std::size_t t0, std::size_t t1) {
        std::size_t hits = 0;
        for (std::size_t t = t0; t < t1; ++t) {
            const SignVector y = simulate_measurements(
                model, w0, {seed.master_seed, seed.stream_index + t});
            std::int64_t k = 0;
            for (std::size_t i = 0; i < y.size(); ++i)
                if (y[i] > 0) ++k;
            if (win.contains(k)) ++hits;
        }
        return hits;
    };

    if (workers == 0) workers = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    workers = std::min(workers, std::max<std::size_t>(trials, 1));
    std::size_t hits = 0;
    if (workers <= 1) {
        hits = count_range(0, trials);
    } else {
        std::vector<std::size_t> partial(workers, 0);
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t wkr = 0; wkr < workers; ++wkr) {
            const std::size_t t0 = trials * wkr / workers;
            const std::size_t t1 = trials * (wkr + 1) / workers;
            pool.emplace_back([&, wkr, t0, t1] { partial[wkr] = count_range(t0, t1); });
        }
        for (auto& th : pool) th.join();
        for (std::size_t c : partial) hits += c;
    }
    McProbability out;
    out.estimate = static_cast<double>(hits) / static_cast<double>(trials);
    out.stderr_estimate =
        std::sqrt(out.estimate * (1.0 - out.estimate) / static_cast<double>(trials));
    return out;
}

}  // namespace signest
