#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "coldbox/errors.hpp"
#include "coldbox/rng.hpp"
#include "coldbox/stats.hpp"

using namespace coldbox;

TEST_CASE("chi-squared CDF with two degrees of freedom has a closed form") {
    // F(x; 2) = 1 - exp(-x/2), exact.
    for (double x : {0.01, 0.1, 0.5, 1.0, 2.0, 3.5, 5.0, 7.0, 10.0, 20.0, 40.0}) {
        CHECK(std::abs(chi2_cdf(x, 2) - (1.0 - std::exp(-0.5 * x))) < 1e-12);
    }
}

TEST_CASE("chi-squared CDF with four degrees of freedom has a closed form") {
    // F(x; 4) = 1 - exp(-x/2)*(1 + x/2).
    for (double x : {0.2, 1.0, 3.0, 8.0, 15.0}) {
        const double want = 1.0 - std::exp(-0.5 * x) * (1.0 + 0.5 * x);
        CHECK(std::abs(chi2_cdf(x, 4) - want) < 1e-12);
    }
    CHECK(chi2_cdf(3.0, 4) == doctest::Approx(0.4421746).epsilon(1e-6));
}

TEST_CASE("chi-squared CDF boundary and tail behavior") {
    for (int df : {1, 2, 3, 4, 7}) {
        CHECK(chi2_cdf(0.0, df) == 0.0);
        CHECK_THROWS_AS(chi2_cdf(-1.0, df), ValidationError);
        CHECK(chi2_cdf(1e3 * df, df) == doctest::Approx(1.0).epsilon(1e-12));
        double prev = 0.0;
        for (double x = 0.25; x <= 30.0; x += 0.25) {
            const double cur = chi2_cdf(x, df);
            CHECK(cur >= prev);
            prev = cur;
        }
    }
    // Textbook 95% critical value for one degree of freedom.
    CHECK(chi2_cdf(3.841, 1) == doctest::Approx(0.9499863).epsilon(1e-6));
    CHECK_THROWS_AS(chi2_cdf(1.0, 0), ValidationError);
}

TEST_CASE("normal quantile hits the familiar z values") {
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959964).epsilon(1e-6));
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
    CHECK(normal_quantile(0.995) == doctest::Approx(2.575829).epsilon(1e-6));
    // Symmetry about the median.
    for (double p : {0.6, 0.8, 0.95, 0.99}) {
        CHECK(normal_quantile(p) == doctest::Approx(-normal_quantile(1.0 - p)).epsilon(1e-9));
    }
    CHECK_THROWS_AS(normal_quantile(0.0), ValidationError);
    CHECK_THROWS_AS(normal_quantile(1.0), ValidationError);
}

TEST_CASE("whiteness band matches z over root n") {
    // 1.959964/sqrt(6147) = 0.0250
    CHECK(whiteness_threshold(6147) == doctest::Approx(0.0250).epsilon(1e-3));
    CHECK(whiteness_threshold(100) == doctest::Approx(0.196).epsilon(1e-3));
    // 99% band is wider: 2.575829/sqrt(100).
    CHECK(whiteness_threshold(100, 0.99) == doctest::Approx(0.2575829).epsilon(1e-6));
}

TEST_CASE("autocorrelation of an alternating sequence") {
    const std::size_t n = 50;
    std::vector<double> r(n);
    for (std::size_t k = 0; k < n; ++k) r[k] = (k % 2 == 0) ? 1.0 : -1.0;
    const auto acf = residual_acf(r, 3);
    REQUIRE(acf.size() == 4);
    CHECK(acf[0] == 1.0);
    // Finite-sample value: -(n-1)/n, not -1.
    CHECK(acf[1] == doctest::Approx(-(double(n) - 1.0) / double(n)).epsilon(1e-12));
    CHECK(acf[2] == doctest::Approx((double(n) - 2.0) / double(n)).epsilon(1e-12));
}

TEST_CASE("autocorrelation of white noise stays inside the band") {
    const std::size_t n = 1600;
    std::mt19937_64 gen(substream(77, "stats-white"));
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<double> r(n);
    for (auto& v : r) v = dist(gen);

    const std::size_t max_lag = 193;
    const auto acf = residual_acf(r, max_lag);
    const double band = whiteness_threshold(n);
    std::size_t outside = 0;
    for (std::size_t k = 1; k <= max_lag; ++k)
        if (std::abs(acf[k]) > band) ++outside;
    // 5% expected exceedance; 10% is a comfortable deterministic margin.
    CHECK(outside <= max_lag / 10);
}

TEST_CASE("autocorrelation rejects degenerate input") {
    CHECK_THROWS_AS(residual_acf(std::vector<double>(10, 3.0), 2), ValidationError);
    CHECK_THROWS_AS(residual_acf({1.0, 2.0}, 5), ValidationError);  // lag >= n
    CHECK_THROWS_AS(residual_acf({}, 0), ValidationError);
}

TEST_CASE("likelihood-ratio test arithmetic") {
    // Small-model loglik 19833.1 vs 25165.4 with three extra parameters:
    // D = 10664.6, overwhelming rejection.
    const DevianceResult big = deviance_test(19833.1, 25165.4, 3);
    CHECK(big.D == doctest::Approx(10664.6).epsilon(1e-9));
    CHECK(big.df == 3);
    CHECK(big.p_value < 1e-12);
    CHECK(big.reject_null);
    CHECK_FALSE(big.negative_deviance_warning);

    // D = 7 on two degrees of freedom: p = exp(-3.5) = 0.0302.
    const DevianceResult seven = deviance_test(0.0, 3.5, 2);
    CHECK(seven.p_value == doctest::Approx(std::exp(-3.5)).epsilon(1e-9));
    CHECK(seven.reject_null);

    // D = 1 on two degrees of freedom: p = exp(-0.5) = 0.607, comfortably
    // inside the null.
    const DevianceResult one = deviance_test(0.0, 0.5, 2);
    CHECK(one.p_value == doctest::Approx(std::exp(-0.5)).epsilon(1e-9));
    CHECK_FALSE(one.reject_null);

    // Identical fits: D = 0, p = 1.
    const DevianceResult same = deviance_test(100.0, 100.0, 1);
    CHECK(same.D == 0.0);
    CHECK(same.p_value == 1.0);
    CHECK_FALSE(same.reject_null);
}

TEST_CASE("negative deviance is flagged, not hidden") {
    const DevianceResult r = deviance_test(10.0, 9.0, 1);
    CHECK(r.D == doctest::Approx(-2.0));
    CHECK(r.negative_deviance_warning);
    CHECK(r.p_value == 1.0);
    CHECK_FALSE(r.reject_null);
}

TEST_CASE("deviance test validates its degrees of freedom") {
    CHECK_THROWS_AS(deviance_test(0.0, 1.0, 0), ValidationError);
    CHECK_THROWS_AS(deviance_test(0.0, 1.0, -2), ValidationError);
}
