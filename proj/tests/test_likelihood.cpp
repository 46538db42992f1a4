#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oracle_helpers.hpp"
#include "signest/likelihood.hpp"
#include "signest/matrix.hpp"
#include "signest/model.hpp"

using namespace signest;
using Catch::Approx;

namespace {

struct Instance {
    Matrix h;
    SignVector y;
    PerturbedSignModel model;
};

Instance make_instance(std::size_t p, std::size_t n, double se2, double sn2,
                       std::uint64_t seed) {
    Matrix h = make_gaussian_matrix(p, n, {seed, 0});
    CounterRng rng({seed, 1});
    Vector w0(p);
    for (double& x : w0) x = rng.next_gaussian();
    PerturbedSignModel model(h, se2, sn2);
    SignVector y = simulate_measurements(model, w0, {seed, 2});
    return {std::move(h), std::move(y), std::move(model)};
}

Vector random_v(std::size_t p, std::uint64_t seed, double scale = 0.5) {
    CounterRng rng({seed, 77});
    Vector v(p);
    for (double& x : v) x = scale * rng.next_gaussian();
    return v;
}

}  // namespace

TEST_CASE("w_to_v and v_to_w match the closed forms") {
    REQUIRE(w_to_v({0.0, 0.0}, 0.5, 1.0).v == Vector{0.0, 0.0});

    const VParameter v0 = w_to_v({2.0, -1.0}, 0.0, 4.0);
    REQUIRE(v0.v[0] == Approx(1.0).epsilon(1e-15));
    REQUIRE(v0.v[1] == Approx(-0.5).epsilon(1e-15));

    const VParameter v1 = w_to_v({1.0}, 0.5, 1.0);
    REQUIRE(v1.v[0] == Approx(1.0 / std::sqrt(1.5)).epsilon(1e-15));
    REQUIRE(norm2(v1.v) < 1.0 / std::sqrt(0.5));

    const Vector w_back = v_to_w(v1, 0.5, 1.0);
    REQUIRE(w_back[0] == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("v_to_w round trip and feasibility") {
    const Vector w{0.3, -1.1, 0.8, 0.05};
    const Vector back = v_to_w(w_to_v(w, 0.3, 2.0), 0.3, 2.0);
    for (std::size_t i = 0; i < w.size(); ++i)
        REQUIRE(back[i] == Approx(w[i]).epsilon(1e-10));

    REQUIRE(v_to_w({{0.0, 0.0}}, 0.5, 1.0) == Vector{0.0, 0.0});
    REQUIRE_THROWS_AS(v_to_w({{2.0}}, 0.5, 1.0), InfeasibleV);
}

TEST_CASE("w-space value at zero and the scalar anchor") {
    const auto inst = make_instance(3, 40, 0.3, 1.0, 100);
    const double at_zero = neg_log_likelihood_w(inst.model, inst.y, {0.0, 0.0, 0.0});
    REQUIRE(at_zero == Approx(40.0 * std::log(2.0)).epsilon(1e-12));
    REQUIRE(at_zero > 0.0);

    // One measurement, H = [[1]], y = +1, w = 1, probit reduction.
    const PerturbedSignModel scalar(make_ones_row(1), 0.0, 1.0);
    SignVector y1;
    y1.entries = {1};
    REQUIRE(neg_log_likelihood_w(scalar, y1, {1.0}) ==
            Approx(0.17275377902344989).epsilon(1e-12));
}

TEST_CASE("w- and v-parameterizations agree through the transform") {
    const auto inst = make_instance(3, 60, 0.4, 1.3, 200);
    for (std::uint64_t s = 0; s < 5; ++s) {
        const Vector w = random_v(3, s, 1.0);
        const VParameter v = w_to_v(w, 0.4, 1.3);
        const double fw = neg_log_likelihood_w(inst.model, inst.y, w);
        const double fv = neg_log_likelihood_v(inst.h, inst.y, v).value;
        REQUIRE(fw == Approx(fv).epsilon(1e-10));
    }
}

TEST_CASE("v-space value and gradient at zero match the expansion") {
    const auto inst = make_instance(4, 50, 0.2, 1.0, 300);
    const auto eval = neg_log_likelihood_v(inst.h, inst.y, {Vector(4, 0.0)});
    REQUIRE(eval.value == Approx(50.0 * std::log(2.0)).epsilon(1e-13));
    const double k0 = std::sqrt(2.0 / M_PI);
    Vector expect(4, 0.0);
    for (std::size_t i = 0; i < 50; ++i)
        for (std::size_t r = 0; r < 4; ++r)
            expect[r] -= k0 * static_cast<double>(inst.y[i]) * inst.h(r, i);
    for (std::size_t r = 0; r < 4; ++r)
        REQUIRE(eval.gradient[r] == Approx(expect[r]).margin(1e-12));
}

TEST_CASE("gradient matches central finite differences") {
    const auto inst = make_instance(3, 50, 0.3, 1.0, 400);
    for (std::uint64_t s = 0; s < 3; ++s) {
        const Vector v = random_v(3, 400 + s);
        const auto eval = neg_log_likelihood_v(inst.h, inst.y, {v});
        const Vector fd = oracle::fd_gradient(
            [&](const Vector& vv) { return neg_log_likelihood_v_value(inst.h, inst.y, vv); },
            v);
        for (std::size_t i = 0; i < 3; ++i)
            REQUIRE(std::abs(eval.gradient[i] - fd[i]) <= 1e-6);
    }
}

TEST_CASE("hessian matches finite differences of the gradient") {
    const auto inst = make_instance(3, 50, 0.3, 1.0, 500);
    const Vector v = random_v(3, 501);
    const auto eval = neg_log_likelihood_v(inst.h, inst.y, {v});
    const Matrix fd = oracle::fd_jacobian(
        [&](const Vector& vv) {
            return neg_log_likelihood_v(inst.h, inst.y, {vv}).gradient;
        },
        v);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < fd.data.size(); ++i) {
        num += (eval.hessian.data[i] - fd.data[i]) * (eval.hessian.data[i] - fd.data[i]);
        den += fd.data[i] * fd.data[i];
    }
    REQUIRE(std::sqrt(num / den) <= 1e-5);
}

TEST_CASE("curvature weights are positive and match the literal form") {
    // beta = k(t)(k(t) + t) must equal phi(t)(phi(t) + t Phi(t))/Phi(t)^2.
    for (double t = -5.0; t <= 5.0 + 1e-12; t += 0.25) {
        const double k = inverse_mills(t);
        const double beta = k * (k + t);
        REQUIRE(beta > 0.0);
        const double phi = std_normal_pdf(t), cdf = std_normal_cdf(t);
        const double literal = phi * (phi + t * cdf) / (cdf * cdf);
        REQUIRE(beta == Approx(literal).epsilon(1e-12));
    }
}

TEST_CASE("hessian is positive definite on full-rank instances") {
    for (std::uint64_t s = 0; s < 3; ++s) {
        const auto inst = make_instance(3, 80, 0.25, 1.0, 600 + s);
        const Vector v = random_v(3, 600 + s);
        const auto eval = neg_log_likelihood_v(inst.h, inst.y, {v});
        const Vector eig = sym_eigenvalues(eval.hessian);
        REQUIRE(eig.back() > 0.0);
        // symmetry within 1e-10 by construction
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j)
                REQUIRE(eval.hessian(i, j) == eval.hessian(j, i));
    }
}

TEST_CASE("flipping every sign and negating v leaves the value unchanged") {
    const auto inst = make_instance(3, 40, 0.3, 1.0, 700);
    const Vector v = random_v(3, 700);
    SignVector flipped;
    flipped.entries.resize(inst.y.size());
    for (std::size_t i = 0; i < inst.y.size(); ++i)
        flipped.entries[i] = static_cast<std::int8_t>(-inst.y[i]);
    Vector neg_v = v;
    for (double& x : neg_v) x = -x;
    REQUIRE(neg_log_likelihood_v_value(inst.h, inst.y, v) ==
            neg_log_likelihood_v_value(inst.h, flipped, neg_v));
}

TEST_CASE("value is invariant under simultaneous column permutation") {
    const auto inst = make_instance(3, 30, 0.3, 1.0, 800);
    const Vector v = random_v(3, 800);
    std::vector<std::size_t> perm(30);
    std::iota(perm.begin(), perm.end(), 0);
    std::reverse(perm.begin(), perm.end());
    std::swap(perm[3], perm[17]);
    Matrix hp(3, 30);
    SignVector yp;
    yp.entries.resize(30);
    for (std::size_t j = 0; j < 30; ++j) {
        yp.entries[j] = inst.y.entries[perm[j]];
        for (std::size_t r = 0; r < 3; ++r) hp(r, j) = inst.h(r, perm[j]);
    }
    REQUIRE(neg_log_likelihood_v_value(inst.h, inst.y, v) ==
            Approx(neg_log_likelihood_v_value(hp, yp, v)).epsilon(1e-12));
}
