#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "signest/crlb.hpp"
#include "signest/model.hpp"
#include "signest/normal.hpp"
#include "signest/rng.hpp"

using namespace signest;
using Catch::Approx;

namespace {

struct RandomTuple {
    double w, se2, sn2;
};

RandomTuple random_tuple(CounterRng& rng) {
    return {0.2 + 2.0 * rng.next_uniform(), 0.05 + rng.next_uniform(),
            0.2 + 2.0 * rng.next_uniform()};
}

}  // namespace

TEST_CASE("lambda_diag anchors and the literal diagonal form") {
    // Column with h_i^T w = 0 gives lambda = 2/(pi sigma_z2).
    Matrix h(1, 3);
    h(0, 0) = 0.0;
    h(0, 1) = 1.0;
    h(0, 2) = -2.0;
    const PerturbedSignModel m(h, 0.5, 1.0);
    const Vector w{0.8};
    const double sz2 = equivalent_noise_variance(m, w);
    const Vector lam = lambda_diag(m, w);
    REQUIRE(lam[0] == Approx(2.0 / (M_PI * sz2)).epsilon(1e-12));

    // Literal form (1/(2 pi sz2)) (1/Phi + 1/Phi(-.)) e^{-t^2} at moderate t.
    for (std::size_t i = 0; i < 3; ++i) {
        const double t = h(0, i) * w[0] / std::sqrt(sz2);
        const double literal = (1.0 / (2.0 * M_PI * sz2)) *
                               (1.0 / std_normal_cdf(t) + 1.0 / std_normal_cdf(-t)) *
                               std::exp(-t * t);
        REQUIRE(lam[i] == Approx(literal).epsilon(1e-10));
        REQUIRE(lam[i] > 0.0);
    }
}

TEST_CASE("lambda_diag decays as the additive noise grows") {
    Matrix h(1, 1);
    h(0, 0) = 1.0;
    const Vector w{1.0};
    double prev = std::numeric_limits<double>::infinity();
    for (double sn2 : {1.0, 10.0, 100.0, 1000.0}) {
        const PerturbedSignModel m(h, 0.2, sn2);
        const double lam = lambda_diag(m, w)[0];
        REQUIRE(lam < prev);
        prev = lam;
    }
}

TEST_CASE("lambda_diag survives extreme standardized arguments") {
    Matrix h(1, 1);
    h(0, 0) = 35.0;
    const PerturbedSignModel m(h, 0.0, 1.0);
    const double lam = lambda_diag(m, {1.0})[0];
    REQUIRE(std::isfinite(lam));
    REQUIRE(lam > 0.0);
}

TEST_CASE("shrink_matrix reductions and the rank-one inverse identity") {
    const Matrix h = make_gaussian_matrix(3, 20, {61, 0});

    const PerturbedSignModel free_model(h, 0.0, 1.0);
    const Matrix m_free = shrink_matrix(free_model, {0.4, -0.2, 0.9});
    REQUIRE(m_free.data == h.data);

    // (I - (se2/sz2) w w^T)(I + (se2/sn2) w w^T) = I.
    const double se2 = 0.45, sn2 = 0.8;
    const Vector w{0.7, 0.5, -0.6};
    const PerturbedSignModel model(h, se2, sn2);
    const double sz2 = equivalent_noise_variance(model, w);
    Matrix a = Matrix::identity(3), b = Matrix::identity(3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            a(i, j) -= se2 / sz2 * w[i] * w[j];
            b(i, j) += se2 / sn2 * w[i] * w[j];
        }
    const Matrix prod = matmul(a, b);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            REQUIRE(prod(i, j) == Approx(i == j ? 1.0 : 0.0).margin(1e-12));
}

TEST_CASE("vanishing additive noise collapses the shrink matrix along w") {
    const Matrix h = make_gaussian_matrix(3, 30, {62, 0});
    const Vector w{0.7, 0.5, -0.6};
    const PerturbedSignModel model(h, 0.5, 1e-12);
    const Matrix m = shrink_matrix(model, w);
    const Vector wtm = matvec_t(m, w);
    for (double v : wtm) REQUIRE(std::abs(v) <= 1e-10);
    // Rank drop shows as a near-zero eigenvalue of M M^T.
    const Vector eig = sym_eigenvalues(weighted_gram(m));
    REQUIRE(eig.back() <= 1e-12 * eig.front());
}

TEST_CASE("matrix CRLB specializes to the scalar closed form on the ones row") {
    CounterRng rng({63, 0});
    for (int rep = 0; rep < 100; ++rep) {
        const auto [w, se2, sn2] = random_tuple(rng);
        const std::size_t n = 10 + static_cast<std::size_t>(rng.next_uniform() * 200);
        const PerturbedSignModel model(make_ones_row(n), se2, sn2);
        const FisherReport rep_f = fim_and_crlb(model, {w});
        REQUIRE(rep_f.crlb_trace == Approx(scalar_crlb(w, se2, sn2, n)).epsilon(1e-9));
    }
}

TEST_CASE("perturbation-free FIM reduces to H Lambda H^T") {
    const Matrix h = make_gaussian_matrix(3, 40, {64, 0});
    const PerturbedSignModel model(h, 0.0, 1.2);
    const Vector w{0.3, -0.5, 0.8};
    const FisherReport rep = fim_and_crlb(model, w);
    const Matrix expect = weighted_gram(h, lambda_diag(model, w));
    for (std::size_t i = 0; i < expect.data.size(); ++i)
        REQUIRE(rep.fim.data[i] == Approx(expect.data[i]).epsilon(1e-12));
}

TEST_CASE("fisher report invariants hold on random models") {
    const Matrix h = make_gaussian_matrix(4, 100, {65, 0});
    const PerturbedSignModel model(h, 0.35, 0.9);
    const Vector w{0.7, 0.5, -0.6, 0.2};
    const FisherReport rep = fim_and_crlb(model, w);
    for (double lam : rep.lambda_diag) REQUIRE(lam > 0.0);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            REQUIRE(std::abs(rep.fim(i, j) - rep.fim(j, i)) <= 1e-10);
    const Matrix prod = matmul(rep.crlb_matrix, rep.fim);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            REQUIRE(prod(i, j) == Approx(i == j ? 1.0 : 0.0).margin(1e-6));
    const Vector eig = sym_eigenvalues(rep.crlb_matrix);
    REQUIRE(eig.back() > 0.0);
}

TEST_CASE("near-zero additive noise makes the FIM singular") {
    const Matrix h = make_gaussian_matrix(3, 50, {66, 0});
    const PerturbedSignModel model(h, 0.5, 1e-12);
    REQUIRE_THROWS_AS(fim_and_crlb(model, {0.7, 0.5, -0.6}), SingularFim);
}

TEST_CASE("scalar CRLB anchors") {
    REQUIRE(scalar_crlb(0.0, 0.0, 1.0, 1) == Approx(M_PI / 2.0).epsilon(1e-12));

    // Chernoff bound is exact at w = 0 and dominates elsewhere.
    REQUIRE(scalar_crlb_chernoff(0.0, 0.2, 0.7, 3) ==
            Approx(scalar_crlb(0.0, 0.2, 0.7, 3)).epsilon(1e-12));
    CounterRng rng({67, 0});
    for (int rep = 0; rep < 200; ++rep) {
        const auto [w, se2, sn2] = random_tuple(rng);
        REQUIRE(scalar_crlb_chernoff(w, se2, sn2, 5) >= scalar_crlb(w, se2, sn2, 5));
    }

    const double direct = scalar_crlb_chernoff(1.0, 0.3, 1.0, 1);
    const double sz2 = 1.3;
    REQUIRE(direct == Approx(M_PI * sz2 / 2.0 * std::pow(1.3, 2.0) *
                             std::exp(1.0 / (2.0 * sz2)))
                          .epsilon(1e-12));
}

TEST_CASE("scalar CRLB grows without bound in the perturbation strength") {
    double prev = scalar_crlb(1.0, 0.5, 0.1, 1);
    for (double se2 : {2.0, 8.0, 32.0, 128.0}) {
        const double v = scalar_crlb(1.0, se2, 0.1, 1);
        REQUIRE(v > prev);
        prev = v;
    }
}

TEST_CASE("chernoff log objective is the log bound up to a sigma_n2-free constant") {
    const double w = 1.0, se2 = 0.3;
    const std::size_t n = 7;
    double first_diff = 0.0;
    bool first = true;
    for (double sn2 : {0.2, 0.5, 1.0, 2.0, 5.0}) {
        const double diff =
            std::log(scalar_crlb_chernoff(w, se2, sn2, n)) - chernoff_log_objective(sn2, se2, w);
        if (first) {
            first_diff = diff;
            first = false;
        } else {
            REQUIRE(diff == Approx(first_diff).epsilon(1e-12));
        }
    }
    REQUIRE(chernoff_log_objective(1.0, 0.0, 1.0) == Approx(0.5).epsilon(1e-14));
}

TEST_CASE("grid minimizers match the closed-form approximations where expected") {
    // The Chernoff log objective's minimizer equals the approximation formula.
    const double opt = detail::grid_then_golden_argmin(
        [](double sn2) { return chernoff_log_objective(sn2, 0.3, 1.0); }, 0.05, 50.0, 2000);
    REQUIRE(opt == Approx(approx_opt_sigma_n2(1.0, 0.3)).epsilon(1e-4));

    // Anchors for the direct CRLB optima.
    REQUIRE(argmin_scalar_crlb_sigma_n2(1.0, 0.3, 0.05, 50.0, 2000) ==
            Approx(0.88).margin(0.02));
    REQUIRE(argmin_scalar_crlb_sigma_e2(1.0, 0.1, 1e-4, 10.0, 2000) ==
            Approx(0.0475).margin(0.005));
}

TEST_CASE("approximate noise optima anchors") {
    REQUIRE(approx_opt_sigma_n2(1.0, 0.0) == Approx(0.5).epsilon(1e-14));
    REQUIRE(approx_opt_sigma_n2(1.0, 0.3) == Approx(0.983).margin(5e-4));
    REQUIRE(approx_opt_sigma_n2(2.0, 0.3) ==
            Approx(4.0 * approx_opt_sigma_n2(1.0, 0.3)).epsilon(1e-14));
    REQUIRE_THROWS_AS(approx_opt_sigma_n2(0.0, 0.3), DomainError);

    REQUIRE(approx_opt_sigma_e2(1.0, 0.1) == Approx(1.0 / 6.0 - 0.1).epsilon(1e-14));
    REQUIRE(approx_opt_sigma_e2(1.0, 1.0 / 6.0) == 0.0);
    REQUIRE(approx_opt_sigma_e2(1.0, 1.0) == 0.0);
    REQUIRE_THROWS_AS(approx_opt_sigma_e2(0.0, 0.1), DomainError);
}

TEST_CASE("trace-gap bounds vanish without perturbation") {
    const Matrix h = make_gaussian_matrix(3, 80, {68, 0});
    const PerturbedSignModel model(h, 0.0, 1.5);
    const GapBounds gb = crlb_gap_bounds(model, {0.5, -0.2, 0.3});
    REQUIRE(gb.lower == 0.0);
    REQUIRE(gb.upper == 0.0);
    REQUIRE(gb.gap == 0.0);
}

TEST_CASE("trace-gap bounds collapse to equality in one dimension") {
    const Matrix h = make_gaussian_matrix(1, 100, {69, 0});
    const PerturbedSignModel model(h, 0.4, 0.9);
    const GapBounds gb = crlb_gap_bounds(model, {0.8});
    REQUIRE(gb.lower == Approx(gb.upper).epsilon(1e-12));
    REQUIRE(gb.gap == Approx(gb.lower).epsilon(1e-10));
}

TEST_CASE("trace-gap sandwich holds across a gamma sweep") {
    CounterRng rng({70, 0});
    Vector w0(4);
    for (double& x : w0) x = rng.next_gaussian();
    const double nw2 = dot(w0, w0);
    const double sigma_z2 = 4.0 * nw2;
    const Matrix h = make_gaussian_matrix(4, 300, {70, 1});
    for (double lg = -2.0; lg <= 2.0 + 1e-9; lg += 0.25) {
        const double gamma = std::pow(10.0, lg);
        const double sn2 = sigma_z2 / (1.0 + gamma);
        const double se2 = sigma_z2 * gamma / ((1.0 + gamma) * nw2);
        const PerturbedSignModel model(h, se2, sn2);
        const GapBounds gb = crlb_gap_bounds(model, w0);
        REQUIRE(gb.lower <= gb.gap * (1.0 + 1e-9) + 1e-12);
        REQUIRE(gb.gap <= gb.upper * (1.0 + 1e-9) + 1e-12);
        REQUIRE(gb.lower > 0.0);
    }
}
