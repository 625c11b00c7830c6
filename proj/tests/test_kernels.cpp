#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "coldbox/kernels.hpp"
#include "coldbox/rng.hpp"

using namespace coldbox;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 gen = substream(seed, "kernel-test");
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::vector<double> out(n);
    for (auto& x : out) x = u(gen);
    return out;
}

} // namespace

TEST_CASE("scalar dot matches hand arithmetic") {
    const double a[] = {1.0, 2.0, 3.0};
    const double b[] = {4.0, -5.0, 6.0};
    // 4 - 10 + 18 = 12
    CHECK(kernels::ref::dot(a, b, 3) == doctest::Approx(12.0).epsilon(1e-15));
    CHECK(kernels::ref::dot(a, b, 0) == 0.0);
    CHECK(kernels::ref::dot(a, b, 1) == 4.0);
}

TEST_CASE("scalar axpy matches hand arithmetic") {
    const double x[] = {1.0, -1.0, 0.5, 2.0};
    double y[] = {10.0, 20.0, 30.0, 40.0};
    kernels::ref::axpy(2.0, x, y, 4);
    CHECK(y[0] == 12.0);
    CHECK(y[1] == 18.0);
    CHECK(y[2] == 31.0);
    CHECK(y[3] == 44.0);
}

TEST_CASE("axpy with zero coefficient leaves y untouched") {
    const double x[] = {5.0, 6.0, 7.0};
    double y[] = {1.0, 2.0, 3.0};
    kernels::axpy(0.0, x, y, 3);
    CHECK(y[0] == 1.0);
    CHECK(y[1] == 2.0);
    CHECK(y[2] == 3.0);
}

TEST_CASE("scalar sum is exact on integers below the mantissa limit") {
    std::vector<double> ones(1000000, 1.0);
    CHECK(kernels::ref::sum(ones.data(), ones.size()) == 1000000.0);
}

TEST_CASE("backend bookkeeping") {
    const kernels::Backend initial = kernels::active_backend();
    CHECK(kernels::backend_name(initial) != nullptr);

    REQUIRE(kernels::set_backend(kernels::Backend::scalar));
    CHECK(kernels::active_backend() == kernels::Backend::scalar);

    // Restore whatever CPUID picked so later tests see the default.
    kernels::set_backend(initial);
    CHECK(kernels::active_backend() == initial);
}

TEST_CASE("vector backend agrees with the scalar reference") {
    if (!kernels::set_backend(kernels::Backend::avx2)) {
        MESSAGE("vector backend not available on this machine; dispatch covered above");
        return;
    }

    // Lengths straddle the unroll width and its remainders. FMA changes
    // round-off, so comparisons are relative, never bitwise.
    for (std::size_t n : {0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 64, 1001}) {
        const auto a = random_vector(n, 100 + n);
        const auto b = random_vector(n, 200 + n);

        const double want_dot = kernels::ref::dot(a.data(), b.data(), n);
        const double got_dot = kernels::dot(a.data(), b.data(), n);
        CHECK(got_dot == doctest::Approx(want_dot).epsilon(1e-12));

        const double want_sum = kernels::ref::sum(a.data(), n);
        const double got_sum = kernels::sum(a.data(), n);
        CHECK(got_sum == doctest::Approx(want_sum).epsilon(1e-12));

        auto y_ref = random_vector(n, 300 + n);
        auto y_vec = y_ref;
        kernels::ref::axpy(0.37, a.data(), y_ref.data(), n);
        kernels::axpy(0.37, a.data(), y_vec.data(), n);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(y_vec[i] == doctest::Approx(y_ref[i]).epsilon(1e-12));
    }

    kernels::set_backend(kernels::Backend::scalar);
    kernels::set_backend(kernels::Backend::avx2);
}

TEST_CASE("dispatched kernels are deterministic per backend") {
    const auto a = random_vector(257, 7);
    const auto b = random_vector(257, 8);
    const double first = kernels::dot(a.data(), b.data(), a.size());
    const double second = kernels::dot(a.data(), b.data(), a.size());
    CHECK(first == second);
}
