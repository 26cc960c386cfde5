#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "ryno/error.hpp"
#include "ryno/stats.hpp"

using namespace ryno;
using namespace ryno::stats;

TEST_CASE("doubled ranks give tied values the average position") {
    std::vector<double> v{10, 20, 20, 30, 20};
    CHECK(doubled_ranks(v) == std::vector<std::int64_t>{2, 6, 6, 10, 6});
    CHECK(average_ranks(v) == std::vector<double>{1, 3, 3, 5, 3});
}

TEST_CASE("spearman input validation") {
    std::vector<double> a{1, 2, 3}, b{1, 2};
    CHECK_THROWS_WITH_AS(spearman(a, b), "length mismatch: 3 vs 2", ValidationError);
    CHECK_THROWS_WITH_AS(spearman(b, b), "spearman needs n >= 3, got 2", ValidationError);
    std::vector<double> nan{1, NAN, 3};
    CHECK_THROWS_WITH_AS(spearman(a, nan), "non-finite value at index 1", ValidationError);
    std::vector<double> flat{2, 2, 2};
    CHECK_THROWS_WITH_AS(spearman(flat, a), "x has zero variance", UndefinedCorrelation);
    CHECK_THROWS_WITH_AS(spearman(a, flat), "y has zero variance", UndefinedCorrelation);
    std::vector<double> nine(9);
    for (int i = 0; i < 9; ++i) nine[i] = i;
    CHECK_THROWS_AS(spearman(nine, nine, CorrelationMethod::ExactPermutation), ValidationError);
    CHECK(spearman(nine, nine).rho == 1.0);
}

TEST_CASE("spearman is symmetric and agrees with the rank-Pearson oracle on larger tied samples") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> len(3, 40), val(1, 5);
    for (int c = 0; c < 500; ++c) {
        const int n = len(rng);
        std::vector<double> x(n), y(n);
        for (int i = 0; i < n; ++i) {
            x[i] = val(rng);
            y[i] = val(rng);
        }
        const double want = oracle::rank_pearson(x, y);
        if (std::isnan(want)) continue;
        const auto r = spearman(x, y);
        CHECK(r.rho == doctest::Approx(want).epsilon(1e-12));
        CHECK(spearman(y, x).rho == r.rho);
        CHECK(r.p_value >= 0.0);
        CHECK(r.p_value <= 1.0);
    }
}

TEST_CASE("t approximation p-values") {
    CHECK(t_approx_p(0.0, 10) == doctest::Approx(1.0));
    CHECK(t_approx_p(1.0, 10) == 0.0);
    CHECK(t_approx_p(-1.0, 10) == 0.0);
    // t = 0.5 * sqrt(8 / 0.75) = 1.63299 on 8 df; scipy: 2*t.sf(t, 8) = 0.1411133
    CHECK(t_approx_p(0.5, 10) == doctest::Approx(0.1411133).epsilon(1e-6));
    CHECK(t_approx_p(-0.5, 10) == t_approx_p(0.5, 10));
    CHECK_THROWS_AS(t_approx_p(0.3, 2), ValidationError);
}

TEST_CASE("exact permutation p on tiny samples") {
    std::vector<double> x{1, 2, 3};
    // only the identity and the reversal reach |rho| = 1
    CHECK(exact_permutation_p(x, x) == doctest::Approx(2.0 / 6.0));
    std::vector<double> y{2, 1, 3};
    CHECK(exact_permutation_p(x, y) == 1.0);
    const auto r = spearman(x, x, CorrelationMethod::ExactPermutation);
    CHECK(r.method == CorrelationMethod::ExactPermutation);
    CHECK(r.p_value == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("exact p matches enumeration for every tie pattern of length 5 over {1,2}") {
    std::vector<double> x(5), y(5);
    for (int a = 0; a < 32; ++a) {
        for (int i = 0; i < 5; ++i) x[i] = 1 + (a >> i & 1);
        for (int b = 0; b < 32; ++b) {
            for (int i = 0; i < 5; ++i) y[i] = 1 + (b >> i & 1);
            if (std::isnan(oracle::rank_pearson(x, y))) continue;
            CHECK(exact_permutation_p(x, y) == oracle::exhaustive_p(x, y));
        }
    }
}

TEST_CASE("no-ties rho equals the sum of squared rank differences formula bit for bit") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    for (int c = 0; c < 200; ++c) {
        std::vector<double> x(33), y(33);
        for (int i = 0; i < 33; ++i) {
            x[i] = u(rng);
            y[i] = u(rng);
        }
        REQUIRE_FALSE(oracle::has_ties(x));
        CHECK(spearman(x, y).rho == oracle::sigma_d2_rho(x, y));
    }
}

TEST_CASE("format_rho") {
    CHECK(format_rho(0.520, 0.002) == ".520**");
    CHECK(format_rho(0.4, 0.03) == ".400*");
    CHECK(format_rho(0.4, 0.01) == ".400*");
    CHECK(format_rho(0.4, 0.05) == ".400");
    CHECK(format_rho(-0.3456, 0.2) == "-.346");
    CHECK(format_rho(-0.0001, 0.9) == ".000");
    CHECK(format_rho(1.0, 0.0) == "1.000**");
    CHECK(format_rho(-1.0, 0.0) == "-1.000**");
    CorrelationResult r{0.25, 0.5, 10, CorrelationMethod::TApprox};
    CHECK(format_rho(r) == ".250");
    CHECK(to_string(CorrelationMethod::ExactPermutation) == "exact_permutation");
}
