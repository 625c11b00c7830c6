#pragma once

#include <utility>
#include <vector>

namespace coldbox {

/// Dense linear program
///     minimize    c'x
///     subject to  A x <= rhs,   lower <= x <= upper,
/// with per-variable bounds (upper entries may be +infinity). Every
/// variable needs at least one finite bound; fully free variables are
/// rejected.
struct LpProblem {
    int n_vars = 0;
    std::vector<double> c;       // n_vars
    std::vector<double> lower;   // n_vars
    std::vector<double> upper;   // n_vars
    int n_rows = 0;
    std::vector<double> A;       // row-major, n_rows x n_vars
    std::vector<double> rhs;     // n_rows

    void validate() const;
};

struct LpOptions {
    double opt_tol = 1e-9;    // reduced-cost threshold for entering
    double feas_tol = 1e-9;   // bound violation treated as infeasible
    double pivot_tol = 1e-8;  // smallest acceptable pivot magnitude
    int max_iter = 50000;

    /// Basis seed: pivot variable `second` into row `first` before the
    /// feasibility check, in order. A caller that knows the structure of
    /// its problem can hand the solver a feasible basis and skip the
    /// artificial-variable phase; if the seeded basis turns out infeasible
    /// the solver quietly restarts from the all-slack basis instead.
    std::vector<std::pair<int, int>> crash;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

struct LpResult {
    LpStatus status = LpStatus::IterationLimit;
    std::vector<double> x;      // n_vars, best point reached
    double objective = 0.0;
    /// Per row: marginal objective decrease per unit of extra right-hand
    /// side headroom (zero on rows with positive slack). Nonnegative at an
    /// optimum.
    std::vector<double> duals;
    /// max over rows of |dual * remaining slack|, the certificate the
    /// consumers assert on.
    double comp_slackness = 0.0;
    int iterations = 0;
    int phase1_iterations = 0;
};

/// Bounded-variable primal simplex on the full tableau. Dantzig pricing
/// with an automatic switch to Bland's rule after a degenerate streak, so
/// cycling cannot persist.
LpResult lp_solve(const LpProblem& p, const LpOptions& opt = {});

} // namespace coldbox
