#include "coldbox/mpc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "coldbox/errors.hpp"
#include "coldbox/kalman.hpp"
#include "coldbox/kernels.hpp"
#include "coldbox/rng.hpp"

namespace coldbox {

void PriceSignal::validate() const {
    if (t_s.empty() || t_s.size() != price.size())
        throw ValidationError("PriceSignal: empty or mismatched columns");
    if (t_s.front() > 0.0)
        throw ValidationError("PriceSignal: first knot must be at or before t = 0");
    for (std::size_t i = 0; i < t_s.size(); ++i) {
        if (!std::isfinite(t_s[i]) || !std::isfinite(price[i]))
            throw ValidationError("PriceSignal: non-finite knot");
        if (i > 0 && t_s[i] <= t_s[i - 1])
            throw ValidationError("PriceSignal: knots must increase strictly");
    }
}

double PriceSignal::at(double t) const {
    std::size_t lo = 0;
    for (std::size_t i = 1; i < t_s.size() && t_s[i] <= t; ++i) lo = i;
    return price[lo];
}

void MpcConfig::validate() const {
    if (!(d_s > 0.0) || std::llround(d_s) <= 0 ||
        std::abs(d_s - static_cast<double>(std::llround(d_s))) > 1e-9)
        throw ValidationError("MpcConfig: block length must be a whole number of seconds");
    if (N < 1) throw ValidationError("MpcConfig: horizon must be at least one block");
    if (!(T_min_C < T_max_C))
        throw ValidationError("MpcConfig: T_min must lie below T_max");
    if (!(P_max_W > 0.0)) throw ValidationError("MpcConfig: P_max must be positive");
    if (min_pulse_s < 0.0 || 2.0 * min_pulse_s > d_s)
        throw ValidationError("MpcConfig: min_pulse must fit twice into a block");
    if (!(lin_tol_C > 0.0))
        throw ValidationError("MpcConfig: linearization tolerance must be positive");
    if (lin_max_iters < 1)
        throw ValidationError("MpcConfig: at least one linearization pass required");
    if (solve_delay_s < 0.0 || solve_delay_s >= d_s)
        throw ValidationError("MpcConfig: solve delay must be shorter than a block");
    if (slack_weight < 0.0)
        throw ValidationError("MpcConfig: slack weight must not be negative");
}

double MpcConfig::resolved_slack_weight(const PriceSignal& prices) const {
    if (slack_weight > 0.0) return slack_weight;
    prices.validate();
    const double top = *std::max_element(prices.price.begin(), prices.price.end());
    if (!(top > 0.0))
        throw ValidationError("MpcConfig: cannot derive a slack weight from a "
                              "non-positive price signal");
    return 1000.0 * top;
}

CondensedProblem condense(const DiscreteStateSpace& dss, const Vec& x0, int N) {
    if (N < 1) throw ValidationError("condense: horizon must be at least one block");
    if (x0.n != dss.n) throw ValidationError("condense: state length mismatch");

    CondensedProblem cp;
    cp.N = N;
    cp.n = dss.n;
    cp.d_s = dss.d;
    cp.x0 = x0;
    cp.energy_cost_scale = dss.d / 3600.0;
    cp.Phi.assign(static_cast<std::size_t>(N) * dss.n, 0.0);
    cp.ThetaB.assign(static_cast<std::size_t>(N) * N, 0.0);
    cp.ThetaE.assign(static_cast<std::size_t>(N) * N, 0.0);

    // Impulse responses g/h of the power and room-temperature inputs, and
    // the observability rows, built from one running row vector C*A_d^m.
    const Mat AdT = transpose(dss.A_d);
    Vec cur = dss.C;
    std::vector<double> g(static_cast<std::size_t>(N)), h(static_cast<std::size_t>(N));
    for (int k = 0; k < N; ++k) {
        double gp = 0.0, hp = 0.0;
        for (int i = 0; i < dss.n; ++i) {
            gp += cur[i] * dss.B_d(i, 1);
            hp += cur[i] * dss.B_d(i, 0);
        }
        g[static_cast<std::size_t>(k)] = gp;
        h[static_cast<std::size_t>(k)] = hp;
        cur = AdT * cur;
        for (int i = 0; i < dss.n; ++i)
            cp.Phi[static_cast<std::size_t>(k) * dss.n + i] = cur[i];
    }
    for (int k = 0; k < N; ++k) {
        double* rb = cp.ThetaB.data() + static_cast<std::size_t>(k) * N;
        double* re = cp.ThetaE.data() + static_cast<std::size_t>(k) * N;
        for (int j = 0; j <= k; ++j) {
            rb[j] = g[static_cast<std::size_t>(k - j)];
            re[j] = h[static_cast<std::size_t>(k - j)];
        }
    }
    return cp;
}

namespace {

std::vector<double> free_response(const CondensedProblem& cp) {
    const std::size_t N = static_cast<std::size_t>(cp.N);
    std::vector<double> f(N);
    for (std::size_t k = 0; k < N; ++k) {
        double acc = 0.0;
        for (int i = 0; i < cp.n; ++i)
            acc += cp.Phi[k * cp.n + static_cast<std::size_t>(i)] * cp.x0[i];
        acc += kernels::dot(cp.ThetaE.data() + k * N, cp.Tr_C.data(), N);
        f[k] = acc;
    }
    return f;
}

const char* lp_status_name(LpStatus s) {
    switch (s) {
        case LpStatus::Optimal: return "optimal";
        case LpStatus::Infeasible: return "infeasible";
        case LpStatus::Unbounded: return "unbounded";
        case LpStatus::IterationLimit: return "iteration limit";
    }
    return "unknown";
}

void check_condensed(const CondensedProblem& cp) {
    const std::size_t N = static_cast<std::size_t>(cp.N);
    if (cp.N < 1 || cp.n < 1) throw ValidationError("CondensedProblem: empty");
    if (cp.Phi.size() != N * static_cast<std::size_t>(cp.n) ||
        cp.ThetaB.size() != N * N || cp.ThetaE.size() != N * N)
        throw ValidationError("CondensedProblem: prediction blocks have wrong shape");
    if (cp.prices.size() != N || cp.Tr_C.size() != N)
        throw ValidationError("CondensedProblem: prices and room temperature must "
                              "cover the horizon");
    if (!(cp.slack_weight > 0.0))
        throw ValidationError("CondensedProblem: slack weight must be positive");
    if (!(cp.P_max_W > 0.0) || !(cp.T_min_C < cp.T_max_C))
        throw ValidationError("CondensedProblem: bounds are inconsistent");
    if (!(cp.energy_cost_scale > 0.0))
        throw ValidationError("CondensedProblem: energy cost scale must be positive");
}

} // namespace

MpcSolution build_and_solve_lp(const CondensedProblem& cp, const MpcConfig& cfg) {
    cfg.validate();
    check_condensed(cp);
    const int N = cp.N;
    const std::size_t Ns = static_cast<std::size_t>(N);
    const std::vector<double> f = free_response(cp);

    LpProblem lp;
    lp.n_vars = 2 * N;
    lp.n_rows = 2 * N;
    lp.c.assign(2 * Ns, 0.0);
    lp.lower.assign(2 * Ns, 0.0);
    lp.upper.assign(2 * Ns, std::numeric_limits<double>::infinity());
    lp.A.assign(4 * Ns * Ns, 0.0);
    lp.rhs.assign(2 * Ns, 0.0);

    for (int k = 0; k < N; ++k) {
        lp.c[static_cast<std::size_t>(k)] =
            cp.energy_cost_scale * cp.prices[static_cast<std::size_t>(k)];
        lp.c[Ns + static_cast<std::size_t>(k)] = cp.slack_weight;
        lp.upper[static_cast<std::size_t>(k)] = cp.P_max_W;
    }

    // Row k:     ThetaB[k] P - s_k <= T_max - f_k        (stay below the ceiling)
    // Row N + k: -ThetaB[k] P - s_k <= f_k - T_min       (stay above the floor)
    for (int k = 0; k < N; ++k) {
        const double* tb = cp.ThetaB.data() + static_cast<std::size_t>(k) * Ns;
        double* up = lp.A.data() + static_cast<std::size_t>(k) * 2 * Ns;
        double* lo = lp.A.data() + (Ns + static_cast<std::size_t>(k)) * 2 * Ns;
        for (int j = 0; j <= k; ++j) {
            up[j] = tb[j];
            lo[j] = -tb[j];
        }
        up[Ns + static_cast<std::size_t>(k)] = -1.0;
        lo[Ns + static_cast<std::size_t>(k)] = -1.0;
        lp.rhs[static_cast<std::size_t>(k)] = cp.T_max_C - f[static_cast<std::size_t>(k)];
        lp.rhs[Ns + static_cast<std::size_t>(k)] =
            f[static_cast<std::size_t>(k)] - cp.T_min_C;
    }

    LpOptions opt;
    opt.max_iter = 100000;
    // With all powers at zero, at most one row of each slack pair can be
    // violated (their right-hand sides sum to T_max - T_min > 0); pivoting
    // the pair's slack variable into the violated row yields a feasible
    // basis directly.
    for (int k = 0; k < N; ++k) {
        if (lp.rhs[static_cast<std::size_t>(k)] < 0.0) {
            opt.crash.emplace_back(k, N + k);
        } else if (lp.rhs[Ns + static_cast<std::size_t>(k)] < 0.0) {
            opt.crash.emplace_back(N + k, N + k);
        }
    }

    const LpResult r = lp_solve(lp, opt);

    MpcSolution sol;
    sol.P_W.assign(r.x.begin(), r.x.begin() + N);
    sol.slack_C.assign(r.x.begin() + N, r.x.end());
    sol.T_pred_C.resize(Ns);
    for (int k = 0; k < N; ++k) {
        sol.T_pred_C[static_cast<std::size_t>(k)] =
            f[static_cast<std::size_t>(k)] +
            kernels::dot(cp.ThetaB.data() + static_cast<std::size_t>(k) * Ns,
                         sol.P_W.data(), Ns);
    }
    sol.objective = r.objective;
    sol.status = r.status;
    sol.comp_slackness = r.comp_slackness;
    sol.duals = r.duals;
    sol.iterations = r.iterations;
    sol.phase1_iterations = r.phase1_iterations;
    return sol;
}

namespace {

/// Carnot gain frozen at the block-start evaporator temperature, kept
/// finite near the ambient fixed point (a free drift toward room
/// temperature would otherwise blow the gain up).
double frozen_gain(double T_r_C, double V_e_C) {
    return carnot_cop(T_r_C, std::min(V_e_C, T_r_C - 1.0));
}

struct Rollout {
    std::vector<double> T_C;      // end-of-block sensed temperatures
    std::vector<double> gamma;    // block-start Carnot gains
};

Rollout rollout_nonlinear(const ContinuousStateSpace& css, const Vec& x0,
                          const std::vector<double>& P, double T_r_C, double d) {
    Rollout out;
    const std::size_t N = P.size();
    out.T_C.resize(N);
    out.gamma.resize(N);
    Vec x = x0;
    for (std::size_t j = 0; j < N; ++j) {
        out.gamma[j] = frozen_gain(T_r_C, x[0]);
        x = nonlinear_step(css, x, P[j], T_r_C, d);
        out.T_C[j] = x[1];
    }
    return out;
}

} // namespace

NonlinearHorizonResult solve_nonlinear_horizon(const ThermalParameters& params,
                                               const Vec& x0, const MpcConfig& cfg,
                                               const std::vector<double>& prices,
                                               double T_r_C, int max_iters) {
    cfg.validate();
    validate_parameters(ModelKind::E, params);
    if (prices.size() != static_cast<std::size_t>(cfg.N))
        throw ValidationError("solve_nonlinear_horizon: price vector must cover the "
                              "horizon");
    if (max_iters <= 0) max_iters = cfg.lin_max_iters;

    const ContinuousStateSpace css = build_continuous(ModelKind::E, params);
    const DiscreteStateSpace dss = discretize(css, cfg.d_s);
    const std::size_t N = prices.size();

    const CondensedProblem base = condense(dss, x0, cfg.N);
    const double w = cfg.slack_weight;
    if (!(w > 0.0))
        throw ValidationError("solve_nonlinear_horizon: config must carry a resolved "
                              "slack weight");

    const auto resim_objective = [&](const std::vector<double>& P,
                                     const std::vector<double>& T) {
        double acc = 0.0;
        for (std::size_t j = 0; j < N; ++j) {
            acc += base.energy_cost_scale * prices[j] * P[j];
            acc += w * (std::max(0.0, T[j] - cfg.T_max_C) +
                        std::max(0.0, cfg.T_min_C - T[j]));
        }
        return acc;
    };

    NonlinearHorizonResult res;
    Rollout traj = rollout_nonlinear(css, x0, std::vector<double>(N, 0.0), T_r_C,
                                     cfg.d_s);
    double best_objective = std::numeric_limits<double>::infinity();

    for (int it = 0; it < max_iters; ++it) {
        CondensedProblem cp = base;
        for (std::size_t k = 0; k < N; ++k) {
            double* rb = cp.ThetaB.data() + k * N;
            for (std::size_t j = 0; j <= k; ++j) rb[j] *= traj.gamma[j];
        }
        cp.prices = prices;
        cp.Tr_C.assign(N, T_r_C);
        cp.T_min_C = cfg.T_min_C;
        cp.T_max_C = cfg.T_max_C;
        cp.P_max_W = cfg.P_max_W;
        cp.slack_weight = w;

        MpcSolution lin = build_and_solve_lp(cp, cfg);
        res.linearization_iters = it + 1;
        if (lin.status != LpStatus::Optimal) {
            if (res.plan.P_W.empty()) res.plan = std::move(lin);
            break;
        }

        const Rollout resim = rollout_nonlinear(css, x0, lin.P_W, T_r_C, cfg.d_s);
        const double obj = resim_objective(lin.P_W, resim.T_C);
        if (obj < best_objective) {
            best_objective = obj;
            res.plan = lin;
            res.plan.objective = obj;
            res.plan.T_pred_C = resim.T_C;
            for (std::size_t j = 0; j < N; ++j)
                res.plan.slack_C[j] = std::max(0.0, resim.T_C[j] - cfg.T_max_C) +
                                      std::max(0.0, cfg.T_min_C - resim.T_C[j]);
        }

        double shift = 0.0;
        for (std::size_t j = 0; j < N; ++j)
            shift = std::max(shift, std::abs(resim.T_C[j] - traj.T_C[j]));
        res.final_shift_C = shift;
        traj = resim;
        if (shift < cfg.lin_tol_C) {
            res.converged = true;
            break;
        }
    }
    return res;
}

PwmPulse pwm_translate(double P_W, const MpcConfig& cfg, int period_index) {
    const double P = std::clamp(P_W, 0.0, cfg.P_max_W);
    const double tau = P / cfg.P_max_W * cfg.d_s;
    PwmPulse pulse;
    if (tau < cfg.min_pulse_s) {
        pulse.duration_s = 0.0;
    } else if (cfg.d_s - tau < cfg.min_pulse_s) {
        pulse.duration_s = cfg.d_s;
    } else {
        pulse.duration_s = static_cast<double>(std::llround(tau));
    }
    const bool at_end = cfg.pwm_flip_odd && (period_index % 2 != 0);
    pulse.offset_s = at_end ? cfg.d_s - pulse.duration_s : 0.0;
    return pulse;
}

MpcTrace receding_horizon_run(ModelKind kind, const ThermalParameters& params,
                              const PlantConfig& plant, const PriceSignal& prices,
                              const MpcConfig& cfg, double duration_s) {
    cfg.validate();
    prices.validate();
    validate_parameters(kind, params);
    validate_parameters(plant.kind, plant.params);
    if (plant.step_s != 1.0)
        throw ValidationError("receding_horizon_run: the plant must step at 1 s for "
                              "pulse actuation");
    const int L = static_cast<int>(duration_s / cfg.d_s);
    if (L < 1)
        throw ValidationError("receding_horizon_run: duration shorter than one block");
    const int d = static_cast<int>(std::llround(cfg.d_s));

    MpcTrace trace;
    trace.cfg = cfg;
    trace.slack_weight = cfg.resolved_slack_weight(prices);
    trace.rows.reserve(static_cast<std::size_t>(L));
    trace.on.assign(static_cast<std::size_t>(L) * d, 0);

    MpcConfig solve_cfg = cfg;
    solve_cfg.slack_weight = trace.slack_weight;

    // Controller-side model, fixed over the run.
    const int n = state_dim(kind);
    DiscreteStateSpace dss;
    if (kind != ModelKind::E)
        dss = discretize(build_continuous(kind, params), cfg.d_s);

    // Plant truth.
    const ContinuousStateSpace truth = build_continuous(plant.kind, plant.params);
    Vec x = Vec::constant(truth.n, plant.T_r_C);
    if (!plant.x0_C.empty()) {
        if (plant.x0_C.size() != static_cast<std::size_t>(truth.n))
            throw ValidationError("receding_horizon_run: initial state length does "
                                  "not match the plant order");
        for (int i = 0; i < truth.n; ++i) x[i] = plant.x0_C[static_cast<std::size_t>(i)];
    }
    const int sensed = measured_state(plant.kind);

    std::mt19937_64 gen_w = substream(plant.seed, "plant-process");
    std::mt19937_64 gen_s1 = substream(plant.seed, "plant-sensor1");
    std::mt19937_64 gen_s2 = substream(plant.seed, "plant-sensor2");
    std::normal_distribution<double> normal(0.0, 1.0);

    KalmanBelief belief;
    belief.x = Vec::zero(n);
    belief.P = Mat::identity(n);

    double prev_meas_mean = 0.0;   // block mean of the sensor average
    double prev_on_fraction = 0.0; // commanded duty of the previous block
    bool have_first_reading = false;
    double first_reading = 0.0;
    const int delay = static_cast<int>(std::llround(cfg.solve_delay_s));

    using clock = std::chrono::steady_clock;

    for (int blk = 0; blk < L; ++blk) {
        const double t_blk = static_cast<double>(blk) * cfg.d_s;

        if (blk == 0) {
            // Peek the t = 0 sensor pair for the prior; the first simulated
            // second reuses exactly these draws.
            const double T1 = x[sensed] + plant.sensor_std_C * normal(gen_s1);
            const double T2 = x[sensed] + plant.sensor_std_C * normal(gen_s2);
            first_reading = 0.5 * (T1 + T2);
            have_first_reading = true;
            belief.x = Vec::constant(n, first_reading);
            belief.P = Mat::identity(n);
        } else {
            const double u_P = prev_on_fraction * cfg.P_max_W;
            const KfStepResult step =
                kind == ModelKind::E
                    ? ekf_step(belief, params, plant.T_r_C, u_P, prev_meas_mean,
                               cfg.d_s)
                    : kf_step(belief, dss, plant.T_r_C, u_P, prev_meas_mean);
            belief = step.belief;
        }

        const auto solve_start = clock::now();
        std::vector<double> horizon_prices(static_cast<std::size_t>(cfg.N));
        for (int j = 0; j < cfg.N; ++j)
            horizon_prices[static_cast<std::size_t>(j)] =
                prices.at(t_blk + static_cast<double>(j) * cfg.d_s);

        MpcSolution plan;
        if (kind == ModelKind::E) {
            plan = solve_nonlinear_horizon(params, belief.x, solve_cfg,
                                           horizon_prices, plant.T_r_C)
                       .plan;
        } else {
            CondensedProblem cp = condense(dss, belief.x, cfg.N);
            cp.prices = horizon_prices;
            cp.Tr_C.assign(static_cast<std::size_t>(cfg.N), plant.T_r_C);
            cp.T_min_C = cfg.T_min_C;
            cp.T_max_C = cfg.T_max_C;
            cp.P_max_W = cfg.P_max_W;
            cp.slack_weight = trace.slack_weight;
            plan = build_and_solve_lp(cp, solve_cfg);
        }
        const double solve_ms =
            std::chrono::duration<double, std::milli>(clock::now() - solve_start)
                .count();

        if (plan.status != LpStatus::Optimal) {
            std::ostringstream msg;
            msg << "receding_horizon_run: planner returned "
                << lp_status_name(plan.status) << " at block " << blk;
            throw NumericalError(msg.str());
        }

        const PwmPulse pulse = pwm_translate(plan.P_W[0], cfg, blk);
        const std::uint8_t hold =
            blk > 0 ? trace.on[static_cast<std::size_t>(blk) * d - 1] : 0;

        double meas_acc = 0.0;
        int on_seconds = 0;
        for (int s = 0; s < d; ++s) {
            const std::size_t g = static_cast<std::size_t>(blk) * d +
                                  static_cast<std::size_t>(s);
            std::uint8_t cmd;
            if (s < delay) {
                cmd = hold;
            } else {
                const double ts = static_cast<double>(s);
                cmd = (ts >= pulse.offset_s &&
                       ts < pulse.offset_s + pulse.duration_s)
                          ? 1
                          : 0;
            }
            trace.on[g] = cmd;
            on_seconds += cmd;

            double reading;
            if (have_first_reading && g == 0) {
                reading = first_reading;
            } else {
                const double T1 = x[sensed] + plant.sensor_std_C * normal(gen_s1);
                const double T2 = x[sensed] + plant.sensor_std_C * normal(gen_s2);
                reading = 0.5 * (T1 + T2);
            }
            meas_acc += reading;

            const double P_thermal = cmd ? plant.P_max_W : 0.0;
            Vec mean;
            if (plant.kind == ModelKind::E) {
                mean = nonlinear_step(truth, x, P_thermal, plant.T_r_C, 1.0);
            } else {
                Vec u = Vec::zero(2);
                u[0] = plant.T_r_C;
                u[1] = P_thermal;
                mean = x + 1.0 * (truth.A * x + truth.B * u);
            }
            for (int i = 0; i < truth.n; ++i) mean[i] += truth.W[i] * normal(gen_w);
            x = mean;
        }

        prev_meas_mean = meas_acc / static_cast<double>(d);
        prev_on_fraction = static_cast<double>(on_seconds) / static_cast<double>(d);

        MpcTraceRow row;
        row.t_s = t_blk;
        row.price = prices.at(t_blk);
        row.P_setpoint_W = plan.P_W[0];
        row.P_actuated_W = prev_on_fraction * plant.P_max_W;
        row.T_meas_C = prev_meas_mean;
        row.T_pred_C = plan.T_pred_C[0];
        row.slack_C = plan.slack_C[0];
        row.solve_ms = solve_ms;
        trace.rows.push_back(row);
    }
    return trace;
}

RunMetrics metrics(const MpcTrace& trace, const TimeSeries& baseline,
                   const PriceSignal& prices) {
    prices.validate();
    const std::size_t L = trace.rows.size();
    if (L == 0) throw ValidationError("metrics: empty trace");
    if (baseline.size() < L)
        throw ValidationError("metrics: baseline shorter than the trace");
    for (std::size_t i = 0; i < L; ++i) {
        if (std::abs(baseline.t_s[i] - trace.rows[i].t_s) > 1e-6)
            throw ValidationError("metrics: baseline grid does not match the trace");
    }

    const MpcConfig& cfg = trace.cfg;
    const double hours_per_block = cfg.d_s / 3600.0;
    const double b = trace.slack_weight;
    const double run_end = trace.rows.back().t_s + cfg.d_s;

    RunMetrics m;
    for (std::size_t i = 0; i < L; ++i) {
        const MpcTraceRow& r = trace.rows[i];
        const double viol = std::max(0.0, r.T_meas_C - cfg.T_max_C);
        m.m0_cost += r.P_actuated_W * hours_per_block * r.price + b * viol;
        m.m2_C += viol;
        m.m3_C = std::max(m.m3_C, viol);
        m.mean_solve_ms += r.solve_ms;
        m.max_solve_ms = std::max(m.max_solve_ms, r.solve_ms);
    }
    m.m2_C /= static_cast<double>(L);
    m.mean_solve_ms /= static_cast<double>(L);

    for (std::size_t g = 1; g < trace.on.size(); ++g)
        if (trace.on[g] != trace.on[g - 1]) ++m.transitions;

    // Load-shift accounting around the first strict price increase.
    double t_step = -1.0;
    for (std::size_t i = 1; i < prices.t_s.size(); ++i) {
        if (prices.price[i] > prices.price[i - 1] && prices.t_s[i] < run_end) {
            t_step = prices.t_s[i];
            break;
        }
    }
    if (t_step < 0.0) return m;  // flat prices: nothing to shift against

    double t_hit = run_end;
    m.m1_truncated = true;
    for (std::size_t i = 0; i < L; ++i) {
        if (trace.rows[i].t_s >= t_step && trace.rows[i].T_meas_C >= cfg.T_max_C) {
            t_hit = trace.rows[i].t_s;
            m.m1_truncated = false;
            break;
        }
    }
    m.m1_Wh = cfg.P_max_W * (t_hit - t_step) / 3600.0;

    double invested_Wh = 0.0, saved_Wh = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
        const double t = trace.rows[i].t_s;
        const double diff = trace.rows[i].P_actuated_W - baseline.P_W[i];
        if (t < t_step) {
            invested_Wh += diff * hours_per_block;
        } else if (t < t_hit) {
            saved_Wh += -diff * hours_per_block;
        }
    }
    m.round_trip = invested_Wh > 0.0 ? saved_Wh / invested_Wh : 0.0;
    return m;
}

} // namespace coldbox
