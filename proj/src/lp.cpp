#include "coldbox/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "coldbox/errors.hpp"
#include "coldbox/kernels.hpp"

namespace coldbox {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarStatus : unsigned char { Basic, AtLo, AtHi };

/// Full-tableau bounded-variable simplex. Columns are laid out as
/// [structural | slack | artificial], with the running right-hand side in
/// one extra trailing column so row eliminations carry it along.
struct Solver {
    const LpProblem& p;
    const LpOptions& opt;

    int m;
    int n_struct;
    int art_base;   // first artificial column
    int n_cols;     // includes reserved artificial block
    int width;      // n_cols + 1, the rhs column
    int n_art = 0;  // artificials actually activated

    std::vector<double> T;
    std::vector<double> d;        // reduced costs under the active objective
    std::vector<double> cost;     // active objective per column
    std::vector<double> lo, hi;
    std::vector<VarStatus> status;
    std::vector<int> basis;       // row -> column
    std::vector<double> beta;     // row -> basic value
    std::vector<double> col_buf;

    int iterations = 0;
    int phase1_iterations = 0;
    int degenerate_streak = 0;
    bool bland = false;

    explicit Solver(const LpProblem& prob, const LpOptions& options)
        : p(prob), opt(options) {
        m = p.n_rows;
        n_struct = p.n_vars;
        art_base = n_struct + m;
        n_cols = art_base + m;  // worst case: one artificial per row
        width = n_cols + 1;
        T.assign(static_cast<std::size_t>(m) * width, 0.0);
        col_buf.assign(static_cast<std::size_t>(std::max(m, 1)), 0.0);
        init_tableau();
    }

    double* row(int i) { return T.data() + static_cast<std::size_t>(i) * width; }

    void init_tableau() {
        std::fill(T.begin(), T.end(), 0.0);
        for (int i = 0; i < m; ++i) {
            double* r = row(i);
            for (int j = 0; j < n_struct; ++j)
                r[j] = p.A[static_cast<std::size_t>(i) * n_struct + j];
            r[n_struct + i] = 1.0;
            r[n_cols] = p.rhs[static_cast<std::size_t>(i)];
        }

        lo.assign(static_cast<std::size_t>(n_cols), 0.0);
        hi.assign(static_cast<std::size_t>(n_cols), 0.0);
        status.assign(static_cast<std::size_t>(n_cols), VarStatus::AtLo);
        for (int j = 0; j < n_struct; ++j) {
            lo[j] = p.lower[static_cast<std::size_t>(j)];
            hi[j] = p.upper[static_cast<std::size_t>(j)];
            status[j] = std::isfinite(lo[j]) ? VarStatus::AtLo : VarStatus::AtHi;
        }
        for (int j = n_struct; j < art_base; ++j) {
            lo[j] = 0.0;
            hi[j] = kInf;
        }
        // Reserved artificials stay fixed at zero until activated.
        for (int j = art_base; j < n_cols; ++j) {
            lo[j] = 0.0;
            hi[j] = 0.0;
        }

        basis.assign(static_cast<std::size_t>(std::max(m, 1)), -1);
        beta.assign(static_cast<std::size_t>(std::max(m, 1)), 0.0);
        for (int i = 0; i < m; ++i) {
            basis[static_cast<std::size_t>(i)] = n_struct + i;
            status[static_cast<std::size_t>(n_struct + i)] = VarStatus::Basic;
        }
        n_art = 0;
        recompute_beta();
    }

    double value_of(int j) const {
        switch (status[static_cast<std::size_t>(j)]) {
            case VarStatus::AtLo: return lo[static_cast<std::size_t>(j)];
            case VarStatus::AtHi: return hi[static_cast<std::size_t>(j)];
            case VarStatus::Basic: break;
        }
        for (int i = 0; i < m; ++i)
            if (basis[static_cast<std::size_t>(i)] == j)
                return beta[static_cast<std::size_t>(i)];
        return 0.0;
    }

    void recompute_beta() {
        for (int i = 0; i < m; ++i) beta[static_cast<std::size_t>(i)] = row(i)[n_cols];
        for (int j = 0; j < n_cols; ++j) {
            if (status[static_cast<std::size_t>(j)] == VarStatus::Basic) continue;
            const double v = status[static_cast<std::size_t>(j)] == VarStatus::AtLo
                                 ? lo[static_cast<std::size_t>(j)]
                                 : hi[static_cast<std::size_t>(j)];
            if (v == 0.0) continue;
            for (int i = 0; i < m; ++i)
                beta[static_cast<std::size_t>(i)] -= row(i)[j] * v;
        }
    }

    void recompute_reduced_costs() {
        d = cost;
        for (int i = 0; i < m; ++i) {
            const double cb = cost[static_cast<std::size_t>(basis[static_cast<std::size_t>(i)])];
            if (cb != 0.0)
                kernels::axpy(-cb, row(i), d.data(), static_cast<std::size_t>(n_cols));
        }
    }

    /// Re-express the system with column q basic in row r. The pivot column
    /// is gathered once so the row eliminations can skip its zeros.
    void pivot(int r, int q) {
        double* pr = row(r);
        const double inv = 1.0 / pr[q];
        for (int j = 0; j < width; ++j) pr[j] *= inv;
        pr[q] = 1.0;

        for (int i = 0; i < m; ++i) col_buf[static_cast<std::size_t>(i)] = row(i)[q];
        for (int i = 0; i < m; ++i) {
            if (i == r) continue;
            const double f = col_buf[static_cast<std::size_t>(i)];
            if (f == 0.0) continue;
            kernels::axpy(-f, pr, row(i), static_cast<std::size_t>(width));
            row(i)[q] = 0.0;
        }
        if (!d.empty() && d[static_cast<std::size_t>(q)] != 0.0) {
            const double f = d[static_cast<std::size_t>(q)];
            kernels::axpy(-f, pr, d.data(), static_cast<std::size_t>(n_cols));
            d[static_cast<std::size_t>(q)] = 0.0;
        }
    }

    void make_basic(int r, int q, double new_value, bool leaving_to_hi) {
        const int out = basis[static_cast<std::size_t>(r)];
        status[static_cast<std::size_t>(out)] =
            leaving_to_hi ? VarStatus::AtHi : VarStatus::AtLo;
        pivot(r, q);
        basis[static_cast<std::size_t>(r)] = q;
        status[static_cast<std::size_t>(q)] = VarStatus::Basic;
        beta[static_cast<std::size_t>(r)] = new_value;
    }

    bool basis_feasible() const {
        for (int i = 0; i < m; ++i) {
            const int b = basis[static_cast<std::size_t>(i)];
            const double v = beta[static_cast<std::size_t>(i)];
            if (v < lo[static_cast<std::size_t>(b)] - opt.feas_tol ||
                v > hi[static_cast<std::size_t>(b)] + opt.feas_tol)
                return false;
        }
        return true;
    }

    int pick_entering(int& direction) {
        int best = -1;
        double best_score = opt.opt_tol;
        direction = 0;
        for (int j = 0; j < n_cols; ++j) {
            const VarStatus st = status[static_cast<std::size_t>(j)];
            if (st == VarStatus::Basic) continue;
            if (hi[static_cast<std::size_t>(j)] - lo[static_cast<std::size_t>(j)] <= 0.0)
                continue;  // fixed (includes retired artificials)
            double score = 0.0;
            int dir = 0;
            if (st == VarStatus::AtLo && d[static_cast<std::size_t>(j)] < -opt.opt_tol) {
                score = -d[static_cast<std::size_t>(j)];
                dir = +1;
            } else if (st == VarStatus::AtHi && d[static_cast<std::size_t>(j)] > opt.opt_tol) {
                score = d[static_cast<std::size_t>(j)];
                dir = -1;
            } else {
                continue;
            }
            if (bland) {
                direction = dir;
                return j;  // lowest eligible index
            }
            if (score > best_score) {
                best_score = score;
                best = j;
                direction = dir;
            }
        }
        return best;
    }

    enum class LoopOutcome { Optimal, Unbounded, IterationLimit };

    LoopOutcome run_simplex(int* iter_counter) {
        constexpr double kRatioTie = 1e-9;
        constexpr double kDropTol = 1e-11;
        while (true) {
            if (iterations >= opt.max_iter) return LoopOutcome::IterationLimit;
            if (iterations % 512 == 511) recompute_beta();  // drift guard

            int dir = 0;
            const int q = pick_entering(dir);
            if (q < 0) return LoopOutcome::Optimal;

            const double span =
                hi[static_cast<std::size_t>(q)] - lo[static_cast<std::size_t>(q)];
            double t_best = span;  // may be +inf
            int leave_r = -1;
            bool leave_to_hi = false;
            double leader_abs = 0.0;

            for (int i = 0; i < m; ++i) {
                const double a = row(i)[q];
                if (std::abs(a) < kDropTol) continue;
                const double delta = dir * a;
                const int b = basis[static_cast<std::size_t>(i)];
                double ratio;
                bool to_hi;
                if (delta > 0.0) {
                    if (lo[static_cast<std::size_t>(b)] == -kInf) continue;
                    ratio = (beta[static_cast<std::size_t>(i)] -
                             lo[static_cast<std::size_t>(b)]) / delta;
                    to_hi = false;
                } else {
                    if (hi[static_cast<std::size_t>(b)] == kInf) continue;
                    ratio = (hi[static_cast<std::size_t>(b)] -
                             beta[static_cast<std::size_t>(i)]) / (-delta);
                    to_hi = true;
                }
                if (ratio < 0.0) ratio = 0.0;

                bool take;
                if (leave_r < 0) {
                    take = ratio < t_best + kRatioTie && ratio <= t_best;
                    if (!std::isfinite(t_best)) take = true;
                } else if (bland) {
                    take = ratio < t_best - kRatioTie ||
                           (ratio < t_best + kRatioTie &&
                            basis[static_cast<std::size_t>(i)] <
                                basis[static_cast<std::size_t>(leave_r)]);
                } else {
                    take = ratio < t_best - kRatioTie ||
                           (ratio < t_best + kRatioTie && std::abs(a) > leader_abs);
                }
                if (take) {
                    t_best = std::min(t_best, ratio);
                    leave_r = i;
                    leave_to_hi = to_hi;
                    leader_abs = std::abs(a);
                }
            }

            if (!std::isfinite(t_best)) return LoopOutcome::Unbounded;

            ++iterations;
            if (iter_counter) ++(*iter_counter);

            if (leave_r < 0) {
                // The entering variable crosses its whole range: bound flip.
                const double delta = dir * span;
                for (int i = 0; i < m; ++i) {
                    const double a = row(i)[q];
                    if (a != 0.0) beta[static_cast<std::size_t>(i)] -= delta * a;
                }
                status[static_cast<std::size_t>(q)] =
                    dir > 0 ? VarStatus::AtHi : VarStatus::AtLo;
                degenerate_streak = 0;
                bland = false;
                continue;
            }

            const double t = t_best;
            const double enter_from = status[static_cast<std::size_t>(q)] == VarStatus::AtLo
                                          ? lo[static_cast<std::size_t>(q)]
                                          : hi[static_cast<std::size_t>(q)];
            if (t > 0.0) {
                for (int i = 0; i < m; ++i) {
                    if (i == leave_r) continue;
                    const double a = row(i)[q];
                    if (a != 0.0)
                        beta[static_cast<std::size_t>(i)] -= dir * t * a;
                }
                degenerate_streak = 0;
                bland = false;
            } else if (++degenerate_streak > 40) {
                bland = true;
            }
            make_basic(leave_r, q, enter_from + dir * t, leave_to_hi);
        }
    }

    /// Adds a cost-1 artificial for every row whose slack basis value is
    /// negative, minimizes their sum, then retires them.
    LoopOutcome run_phase1(bool& feasible) {
        for (int i = 0; i < m; ++i) {
            if (beta[static_cast<std::size_t>(i)] >= -opt.feas_tol) continue;
            const int q = art_base + n_art;
            ++n_art;
            row(i)[q] = -1.0;
            hi[static_cast<std::size_t>(q)] = kInf;
            make_basic(i, q, -beta[static_cast<std::size_t>(i)], false);
        }
        feasible = true;
        if (n_art == 0) return LoopOutcome::Optimal;

        cost.assign(static_cast<std::size_t>(n_cols), 0.0);
        for (int j = art_base; j < art_base + n_art; ++j)
            cost[static_cast<std::size_t>(j)] = 1.0;
        recompute_reduced_costs();

        const LoopOutcome out = run_simplex(&phase1_iterations);
        if (out != LoopOutcome::Optimal) {
            feasible = false;
            return out;
        }

        double infeasibility = 0.0;
        for (int j = art_base; j < art_base + n_art; ++j)
            infeasibility += value_of(j);
        if (infeasibility > 1e-7) {
            feasible = false;
            return LoopOutcome::Optimal;
        }

        // Retire the artificials: pin them to zero and pivot basic ones out
        // where a usable pivot exists (an all-zero row is redundant and may
        // keep its artificial at value zero).
        for (int j = art_base; j < art_base + n_art; ++j)
            hi[static_cast<std::size_t>(j)] = 0.0;
        for (int i = 0; i < m; ++i) {
            const int b = basis[static_cast<std::size_t>(i)];
            if (b < art_base) continue;
            for (int j = 0; j < art_base; ++j) {
                if (status[static_cast<std::size_t>(j)] == VarStatus::Basic) continue;
                if (std::abs(row(i)[j]) > opt.pivot_tol) {
                    make_basic(i, j, value_of(j), false);
                    break;
                }
            }
        }
        return LoopOutcome::Optimal;
    }
};

} // namespace

void LpProblem::validate() const {
    if (n_vars < 1) throw ValidationError("LpProblem: needs at least one variable");
    if (n_rows < 0) throw ValidationError("LpProblem: negative row count");
    const auto sz = [](std::size_t got, std::size_t want, const char* what) {
        if (got != want)
            throw ValidationError(std::string("LpProblem: ") + what +
                                  " has wrong length");
    };
    sz(c.size(), static_cast<std::size_t>(n_vars), "cost vector");
    sz(lower.size(), static_cast<std::size_t>(n_vars), "lower bound vector");
    sz(upper.size(), static_cast<std::size_t>(n_vars), "upper bound vector");
    sz(rhs.size(), static_cast<std::size_t>(n_rows), "rhs vector");
    sz(A.size(), static_cast<std::size_t>(n_rows) * static_cast<std::size_t>(n_vars),
       "constraint matrix");
    for (int j = 0; j < n_vars; ++j) {
        if (!std::isfinite(c[static_cast<std::size_t>(j)]))
            throw ValidationError("LpProblem: non-finite cost");
        const double l = lower[static_cast<std::size_t>(j)];
        const double u = upper[static_cast<std::size_t>(j)];
        if (std::isnan(l) || std::isnan(u) || l > u)
            throw ValidationError("LpProblem: empty bound interval at variable " +
                                  std::to_string(j));
        if (!std::isfinite(l) && !std::isfinite(u))
            throw ValidationError("LpProblem: variable " + std::to_string(j) +
                                  " is free; every variable needs a finite bound");
    }
    for (double b : rhs)
        if (!std::isfinite(b)) throw ValidationError("LpProblem: non-finite rhs");
    for (double a : A)
        if (!std::isfinite(a)) throw ValidationError("LpProblem: non-finite matrix entry");
}

LpResult lp_solve(const LpProblem& p, const LpOptions& opt) {
    p.validate();
    Solver s(p, opt);

    bool feasible = true;
    bool crashed = false;
    if (!opt.crash.empty()) {
        crashed = true;
        for (const auto& [r, q] : opt.crash) {
            if (r < 0 || r >= p.n_rows || q < 0 || q >= p.n_vars)
                throw ValidationError("lp_solve: crash pivot out of range");
            if (std::abs(s.row(r)[q]) <= opt.pivot_tol) {
                crashed = false;
                break;
            }
            s.make_basic(r, q, 0.0, false);
        }
        if (crashed) {
            s.recompute_beta();
            if (!s.basis_feasible()) crashed = false;
        }
        if (!crashed) s.init_tableau();  // seed did not pan out; start over
    }

    Solver::LoopOutcome outcome = Solver::LoopOutcome::Optimal;
    if (!crashed) outcome = s.run_phase1(feasible);

    const bool phase1_clean = feasible && outcome == Solver::LoopOutcome::Optimal;
    if (phase1_clean) {
        s.cost.assign(static_cast<std::size_t>(s.n_cols), 0.0);
        for (int j = 0; j < p.n_vars; ++j)
            s.cost[static_cast<std::size_t>(j)] = p.c[static_cast<std::size_t>(j)];
        s.recompute_reduced_costs();
        outcome = s.run_simplex(nullptr);
        s.recompute_beta();
    }

    LpResult res;
    res.iterations = s.iterations;
    res.phase1_iterations = s.phase1_iterations;
    res.x.assign(static_cast<std::size_t>(p.n_vars), 0.0);
    res.duals.assign(static_cast<std::size_t>(p.n_rows), 0.0);
    for (int j = 0; j < p.n_vars; ++j) res.x[static_cast<std::size_t>(j)] = s.value_of(j);
    res.objective = kernels::dot(p.c.data(), res.x.data(), res.x.size());

    if (!phase1_clean) {
        res.status = outcome == Solver::LoopOutcome::IterationLimit
                         ? LpStatus::IterationLimit
                         : LpStatus::Infeasible;
        return res;
    }

    switch (outcome) {
        case Solver::LoopOutcome::Optimal: res.status = LpStatus::Optimal; break;
        case Solver::LoopOutcome::Unbounded: res.status = LpStatus::Unbounded; break;
        case Solver::LoopOutcome::IterationLimit:
            res.status = LpStatus::IterationLimit;
            break;
    }

    if (res.status == LpStatus::Optimal) {
        double worst = 0.0;
        for (int i = 0; i < p.n_rows; ++i) {
            const double y = std::max(0.0, s.d[static_cast<std::size_t>(s.n_struct + i)]);
            res.duals[static_cast<std::size_t>(i)] = y;
            const double act =
                kernels::dot(p.A.data() + static_cast<std::size_t>(i) * p.n_vars,
                             res.x.data(), res.x.size());
            worst = std::max(worst,
                             std::abs(y * (p.rhs[static_cast<std::size_t>(i)] - act)));
        }
        res.comp_slackness = worst;
    }
    return res;
}

} // namespace coldbox
