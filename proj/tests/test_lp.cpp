#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "coldbox/errors.hpp"
#include "coldbox/lp.hpp"
#include "coldbox/rng.hpp"

using namespace coldbox;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

LpProblem two_var_classic() {
    // minimize -x - 2y  s.t.  x + y <= 4, y <= 2, 0 <= x,y <= 10.
    // Optimum at (2, 2) with objective -6.
    LpProblem p;
    p.n_vars = 2;
    p.c = {-1.0, -2.0};
    p.lower = {0.0, 0.0};
    p.upper = {10.0, 10.0};
    p.n_rows = 2;
    p.A = {1.0, 1.0,
           0.0, 1.0};
    p.rhs = {4.0, 2.0};
    return p;
}

} // namespace

TEST_CASE("textbook two-variable problem") {
    const LpResult r = lp_solve(two_var_classic());
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.x[0] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(r.x[1] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(r.objective == doctest::Approx(-6.0).epsilon(1e-9));
    CHECK(r.comp_slackness < 1e-6);
    // Both rows bind; pushing either right-hand side up by one unit lowers
    // the objective by the dual.
    REQUIRE(r.duals.size() == 2);
    CHECK(r.duals[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.duals[1] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("solution driven entirely by bound flips") {
    // No rows at all: minimize x - y over boxes picks the active bounds.
    LpProblem p;
    p.n_vars = 2;
    p.c = {1.0, -1.0};
    p.lower = {-3.0, -5.0};
    p.upper = {7.0, 6.0};
    const LpResult r = lp_solve(p);
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.x[0] == doctest::Approx(-3.0));
    CHECK(r.x[1] == doctest::Approx(6.0));
    CHECK(r.objective == doctest::Approx(-9.0));
}

TEST_CASE("infeasible constraints are reported") {
    LpProblem p;
    p.n_vars = 1;
    p.c = {1.0};
    p.lower = {0.0};
    p.upper = {10.0};
    p.n_rows = 1;
    p.A = {-1.0};
    p.rhs = {-20.0};  // requires x >= 20, impossible inside the box
    const LpResult r = lp_solve(p);
    CHECK(r.status == LpStatus::Infeasible);
}

TEST_CASE("unbounded descent through an infinite upper bound") {
    LpProblem p;
    p.n_vars = 1;
    p.c = {-1.0};
    p.lower = {0.0};
    p.upper = {kInf};
    const LpResult r = lp_solve(p);
    CHECK(r.status == LpStatus::Unbounded);
}

TEST_CASE("negative right-hand sides force a feasibility phase") {
    // minimize x + y  s.t.  -x - y <= -1 (i.e. x + y >= 1), x,y in [0, 5].
    // The all-slack basis is infeasible, so phase one must run.
    LpProblem p;
    p.n_vars = 2;
    p.c = {1.0, 1.0};
    p.lower = {0.0, 0.0};
    p.upper = {5.0, 5.0};
    p.n_rows = 1;
    p.A = {-1.0, -1.0};
    p.rhs = {-1.0};
    const LpResult r = lp_solve(p);
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.phase1_iterations > 0);
    CHECK(r.objective == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.x[0] + r.x[1] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("iteration budget exhaustion is reported, not hidden") {
    LpProblem p = two_var_classic();
    LpOptions opt;
    opt.max_iter = 1;
    const LpResult r = lp_solve(p, opt);
    CHECK(r.status == LpStatus::IterationLimit);
}

TEST_CASE("random box problems: optimum beats sampled feasible points") {
    std::mt19937_64 gen = substream(2024, "lp-random");
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    for (int trial = 0; trial < 20; ++trial) {
        const int n = 4, m = 5;
        LpProblem p;
        p.n_vars = n;
        p.n_rows = m;
        for (int j = 0; j < n; ++j) {
            p.c.push_back(coef(gen));
            p.lower.push_back(0.0);
            p.upper.push_back(1.0 + unit(gen));
        }
        for (int i = 0; i < m; ++i) {
            double row_abs = 0.0;
            for (int j = 0; j < n; ++j) {
                const double a = coef(gen);
                p.A.push_back(a);
                row_abs += std::max(a, 0.0) * p.upper[static_cast<std::size_t>(j)];
            }
            // Keep a margin so the box midpoint region stays feasible often.
            p.rhs.push_back(0.6 * row_abs + 0.1);
        }

        const LpResult r = lp_solve(p);
        REQUIRE(r.status == LpStatus::Optimal);
        CHECK(r.comp_slackness < 1e-6);
        for (double d : r.duals) CHECK(d >= -1e-9);

        // The solution respects every constraint.
        for (int j = 0; j < n; ++j) {
            CHECK(r.x[j] >= p.lower[static_cast<std::size_t>(j)] - 1e-7);
            CHECK(r.x[j] <= p.upper[static_cast<std::size_t>(j)] + 1e-7);
        }
        for (int i = 0; i < m; ++i) {
            double ax = 0.0;
            for (int j = 0; j < n; ++j)
                ax += p.A[static_cast<std::size_t>(i * n + j)] * r.x[static_cast<std::size_t>(j)];
            CHECK(ax <= p.rhs[static_cast<std::size_t>(i)] + 1e-7);
        }

        // No sampled feasible point does better.
        for (int s = 0; s < 200; ++s) {
            std::vector<double> x(n);
            for (int j = 0; j < n; ++j)
                x[static_cast<std::size_t>(j)] =
                    p.lower[static_cast<std::size_t>(j)] +
                    unit(gen) * (p.upper[static_cast<std::size_t>(j)] -
                                 p.lower[static_cast<std::size_t>(j)]);
            bool feasible = true;
            for (int i = 0; i < m && feasible; ++i) {
                double ax = 0.0;
                for (int j = 0; j < n; ++j)
                    ax += p.A[static_cast<std::size_t>(i * n + j)] *
                          x[static_cast<std::size_t>(j)];
                feasible = ax <= p.rhs[static_cast<std::size_t>(i)];
            }
            if (!feasible) continue;
            double obj = 0.0;
            for (int j = 0; j < n; ++j)
                obj += p.c[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
            CHECK(r.objective <= obj + 1e-7);
        }
    }
}

TEST_CASE("a correct crash basis reproduces the cold-start optimum") {
    const LpProblem p = two_var_classic();
    const LpResult cold = lp_solve(p);
    REQUIRE(cold.status == LpStatus::Optimal);

    // Seed the final basis directly: x into row 0, y into row 1.
    LpOptions opt;
    opt.crash = {{0, 0}, {1, 1}};
    const LpResult warm = lp_solve(p, opt);
    REQUIRE(warm.status == LpStatus::Optimal);
    CHECK(warm.objective == doctest::Approx(cold.objective).epsilon(1e-9));
    CHECK(warm.phase1_iterations == 0);
}

TEST_CASE("a wrong crash basis falls back silently and still solves") {
    // minimize y  s.t.  x - y <= -2, x,y in [0,5]: optimum (0, 2).
    // Seeding x into the row puts it at -2, below its bound, so the seeded
    // basis is infeasible and the solver must quietly restart from scratch.
    LpProblem p;
    p.n_vars = 2;
    p.c = {0.0, 1.0};
    p.lower = {0.0, 0.0};
    p.upper = {5.0, 5.0};
    p.n_rows = 1;
    p.A = {1.0, -1.0};
    p.rhs = {-2.0};

    LpOptions opt;
    opt.crash = {{0, 0}};
    const LpResult warm = lp_solve(p, opt);
    REQUIRE(warm.status == LpStatus::Optimal);
    CHECK(warm.objective == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(warm.x[1] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(warm.phase1_iterations > 0);
}

TEST_CASE("problem validation rejects malformed inputs") {
    LpProblem p = two_var_classic();
    CHECK_NOTHROW(p.validate());

    LpProblem wrong_c = two_var_classic();
    wrong_c.c.pop_back();
    CHECK_THROWS_AS(wrong_c.validate(), ValidationError);

    LpProblem wrong_a = two_var_classic();
    wrong_a.A.pop_back();
    CHECK_THROWS_AS(wrong_a.validate(), ValidationError);

    LpProblem empty_interval = two_var_classic();
    empty_interval.lower[0] = 11.0;  // above its upper bound
    CHECK_THROWS_AS(empty_interval.validate(), ValidationError);

    LpProblem free_var = two_var_classic();
    free_var.lower[1] = -kInf;
    free_var.upper[1] = kInf;
    CHECK_THROWS_AS(free_var.validate(), ValidationError);

    LpProblem nan_cost = two_var_classic();
    nan_cost.c[0] = std::nan("");
    CHECK_THROWS_AS(nan_cost.validate(), ValidationError);
}
