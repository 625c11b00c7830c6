#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "coldbox/errors.hpp"
#include "coldbox/mpc.hpp"
#include "coldbox/plant.hpp"
#include "coldbox/rng.hpp"
#include "coldbox/smallmat.hpp"
#include "coldbox/thermal.hpp"
#include "coldbox/timeseries.hpp"

using namespace coldbox;

namespace {

const std::string kFixtures = COLDBOX_FIXTURE_DIR;

PriceSignal step_prices(double t_step, double low, double high) {
    PriceSignal p;
    p.t_s = {0.0, t_step};
    p.price = {low, high};
    return p;
}

MpcConfig small_config(int N) {
    MpcConfig cfg;
    cfg.d_s = 120.0;
    cfg.N = N;
    cfg.T_min_C = -27.0;
    cfg.T_max_C = -18.0;
    cfg.P_max_W = 68.0;
    cfg.slack_weight = 500.0;
    return cfg;
}

/// End-of-block temperatures by brute-force iteration of the dynamics.
std::vector<double> iterate_blocks(const DiscreteStateSpace& dss, const Vec& x0,
                                   const std::vector<double>& P,
                                   const std::vector<double>& Tr) {
    std::vector<double> out;
    Vec x = x0;
    for (std::size_t k = 0; k < P.size(); ++k) {
        x = dss.A_d * x + dss.B_d * Vec{2, {Tr[k], P[k]}};
        double y = 0.0;
        for (int i = 0; i < dss.n; ++i) y += dss.C[i] * x[i];
        out.push_back(y);
    }
    return out;
}

std::vector<double> predicted_blocks(const CondensedProblem& cp,
                                     const std::vector<double>& P,
                                     const std::vector<double>& Tr) {
    std::vector<double> out;
    for (int k = 0; k < cp.N; ++k) {
        double y = 0.0;
        for (int i = 0; i < cp.n; ++i)
            y += cp.Phi[static_cast<std::size_t>(k) * cp.n + i] * cp.x0[i];
        for (int j = 0; j <= k; ++j) {
            y += cp.ThetaB[static_cast<std::size_t>(k) * cp.N + j] * P[static_cast<std::size_t>(j)];
            y += cp.ThetaE[static_cast<std::size_t>(k) * cp.N + j] * Tr[static_cast<std::size_t>(j)];
        }
        out.push_back(y);
    }
    return out;
}

} // namespace

TEST_CASE("step-price lookup clamps to the first knot and holds the last") {
    const PriceSignal p = step_prices(11760.0, 10.0, 50.0);
    CHECK_NOTHROW(p.validate());
    CHECK(p.at(-5.0) == 10.0);
    CHECK(p.at(0.0) == 10.0);
    CHECK(p.at(11759.9) == 10.0);
    CHECK(p.at(11760.0) == 50.0);
    CHECK(p.at(1e9) == 50.0);
}

TEST_CASE("price validation catches malformed signals") {
    PriceSignal empty;
    CHECK_THROWS_AS(empty.validate(), ValidationError);

    PriceSignal late;
    late.t_s = {100.0};
    late.price = {10.0};
    CHECK_THROWS_AS(late.validate(), ValidationError);

    PriceSignal unsorted;
    unsorted.t_s = {0.0, 50.0, 50.0};
    unsorted.price = {1.0, 2.0, 3.0};
    CHECK_THROWS_AS(unsorted.validate(), ValidationError);
}

TEST_CASE("config validation pins the block grid rules") {
    MpcConfig cfg = small_config(10);
    CHECK_NOTHROW(cfg.validate());

    MpcConfig frac = cfg;
    frac.d_s = 120.5;
    CHECK_THROWS_AS(frac.validate(), ValidationError);

    MpcConfig wide_pulse = cfg;
    wide_pulse.min_pulse_s = 70.0;  // cannot fit twice into the block
    CHECK_THROWS_AS(wide_pulse.validate(), ValidationError);

    MpcConfig slow_solver = cfg;
    slow_solver.solve_delay_s = 120.0;
    CHECK_THROWS_AS(slow_solver.validate(), ValidationError);

    MpcConfig inverted = cfg;
    inverted.T_min_C = -10.0;
    CHECK_THROWS_AS(inverted.validate(), ValidationError);
}

TEST_CASE("the default comfort weight is a thousand times the peak price") {
    MpcConfig cfg = small_config(10);
    cfg.slack_weight = 0.0;
    const PriceSignal p = step_prices(600.0, 10.0, 50.0);
    CHECK(cfg.resolved_slack_weight(p) == doctest::Approx(50000.0));
    cfg.slack_weight = 7.0;
    CHECK(cfg.resolved_slack_weight(p) == doctest::Approx(7.0));
}

TEST_CASE("condensation reproduces brute-force propagation over a long horizon") {
    const auto c = load_parameters(kFixtures + "/model_c.txt");
    const DiscreteStateSpace dss = discretize(build_continuous(c.kind, c.params), 120.0);
    const Vec x0 = Vec{3, {-24.0, -21.5, -15.0}};
    const int N = 300;

    const CondensedProblem cp = condense(dss, x0, N);
    CHECK(cp.energy_cost_scale == doctest::Approx(120.0 / 3600.0).epsilon(1e-15));

    std::mt19937_64 gen = substream(5150, "mpc-condense");
    std::uniform_real_distribution<double> power(0.0, 68.0);
    std::uniform_real_distribution<double> room(18.0, 26.0);
    std::vector<double> P, Tr;
    for (int k = 0; k < N; ++k) {
        P.push_back(power(gen));
        Tr.push_back(room(gen));
    }

    const auto brute = iterate_blocks(dss, x0, P, Tr);
    const auto fast = predicted_blocks(cp, P, Tr);
    REQUIRE(brute.size() == fast.size());
    for (std::size_t k = 0; k < brute.size(); ++k)
        CHECK(std::abs(brute[k] - fast[k]) < 1e-9);
}

TEST_CASE("condensation validates its inputs") {
    const auto c = load_parameters(kFixtures + "/model_c.txt");
    const DiscreteStateSpace dss = discretize(build_continuous(c.kind, c.params), 120.0);
    CHECK_THROWS_AS(condense(dss, Vec{3, {0.0, 0.0, 0.0}}, 0), ValidationError);
    CHECK_THROWS_AS(condense(dss, Vec{2, {0.0, 0.0}}, 5), ValidationError);
}

TEST_CASE("three-block plan matches exhaustive enumeration on a power grid") {
    const auto c = load_parameters(kFixtures + "/model_c.txt");
    const DiscreteStateSpace dss = discretize(build_continuous(c.kind, c.params), 120.0);
    const MpcConfig cfg = small_config(3);

    std::mt19937_64 gen = substream(808, "mpc-enum");
    std::uniform_real_distribution<double> state(-30.0, -15.0);
    std::uniform_real_distribution<double> tariff(5.0, 50.0);

    const std::vector<double> levels = {0.0, 17.0, 34.0, 51.0, 68.0};

    for (int trial = 0; trial < 50; ++trial) {
        const Vec x0 = Vec{3, {state(gen), state(gen), state(gen)}};
        CondensedProblem cp = condense(dss, x0, 3);
        cp.prices = {tariff(gen), tariff(gen), tariff(gen)};
        cp.Tr_C = {23.0, 23.0, 23.0};
        cp.T_min_C = cfg.T_min_C;
        cp.T_max_C = cfg.T_max_C;
        cp.P_max_W = cfg.P_max_W;
        cp.slack_weight = cfg.slack_weight;

        const MpcSolution sol = build_and_solve_lp(cp, cfg);
        REQUIRE(sol.status == LpStatus::Optimal);
        CHECK(sol.comp_slackness < 1e-6);

        // Exhaustive sweep of the 125 grid plans, each with its cheapest
        // admissible slack filled in analytically.
        double best = 1e300;
        std::vector<double> P(3), Tr = {23.0, 23.0, 23.0};
        for (double p0 : levels)
            for (double p1 : levels)
                for (double p2 : levels) {
                    P = {p0, p1, p2};
                    const auto temps = predicted_blocks(cp, P, Tr);
                    double costv = 0.0;
                    for (int k = 0; k < 3; ++k) {
                        const double s =
                            std::max({0.0, temps[static_cast<std::size_t>(k)] - cp.T_max_C,
                                      cp.T_min_C - temps[static_cast<std::size_t>(k)]});
                        costv += cp.energy_cost_scale *
                                     cp.prices[static_cast<std::size_t>(k)] *
                                     P[static_cast<std::size_t>(k)] +
                                 cp.slack_weight * s;
                    }
                    best = std::min(best, costv);
                }

        CHECK(sol.objective <= best + 1e-6);
    }
}

TEST_CASE("plans front-load energy ahead of a price rise") {
    const auto c = load_parameters(kFixtures + "/model_c.txt");
    const DiscreteStateSpace dss = discretize(build_continuous(c.kind, c.params), 120.0);

    // Four cheap hours before the step: several air time constants, enough
    // for the plan to reach the cold rail before prices quintuple.
    const int N = 240;
    const int step = 120;
    const MpcConfig cfg = small_config(N);

    const Vec x0 = Vec{3, {-22.0, -20.0, -20.0}};
    CondensedProblem cp = condense(dss, x0, N);
    cp.Tr_C.assign(N, 23.0);
    cp.T_min_C = cfg.T_min_C;
    cp.T_max_C = cfg.T_max_C;
    cp.P_max_W = cfg.P_max_W;
    cp.slack_weight = cfg.slack_weight;
    cp.prices.assign(N, 10.0);
    for (int k = step; k < N; ++k) cp.prices[static_cast<std::size_t>(k)] = 50.0;

    const MpcSolution sol = build_and_solve_lp(cp, cfg);
    REQUIRE(sol.status == LpStatus::Optimal);

    double cheap = 0.0, dear = 0.0;
    for (int k = 0; k < step; ++k) cheap += sol.P_W[static_cast<std::size_t>(k)];
    for (int k = step; k < N; ++k) dear += sol.P_W[static_cast<std::size_t>(k)];
    CHECK(cheap > dear);

    // The last blocks before the step ride close to the cold rail.
    double coldest = 1e300;
    for (int k = step - 5; k < step; ++k)
        coldest = std::min(coldest, sol.T_pred_C[static_cast<std::size_t>(k)]);
    CHECK(coldest < cfg.T_min_C + 1.5);

    // Under a uniform price doubling with no binding slack the plan is
    // unchanged and the objective exactly doubles.
    CondensedProblem flat = cp;
    flat.prices.assign(N, 20.0);
    const MpcSolution base = build_and_solve_lp(flat, cfg);
    REQUIRE(base.status == LpStatus::Optimal);
    flat.prices.assign(N, 40.0);
    const MpcSolution twice = build_and_solve_lp(flat, cfg);
    REQUIRE(twice.status == LpStatus::Optimal);
    CHECK(twice.objective == doctest::Approx(2.0 * base.objective).epsilon(1e-9));
    for (int k = 0; k < N; ++k)
        CHECK(twice.P_W[static_cast<std::size_t>(k)] ==
              doctest::Approx(base.P_W[static_cast<std::size_t>(k)]).epsilon(1e-6).scale(1.0));
}

TEST_CASE("infeasible comfort bands are absorbed by slack, not failure") {
    const auto c = load_parameters(kFixtures + "/model_c.txt");
    const DiscreteStateSpace dss = discretize(build_continuous(c.kind, c.params), 120.0);
    MpcConfig cfg = small_config(10);

    // Start far above the band: no admissible plan reaches it in one block,
    // so the slack variables must carry the early violations.
    const Vec x0 = Vec{3, {10.0, 10.0, 15.0}};
    CondensedProblem cp = condense(dss, x0, 10);
    cp.prices.assign(10, 10.0);
    cp.Tr_C.assign(10, 23.0);
    cp.T_min_C = cfg.T_min_C;
    cp.T_max_C = cfg.T_max_C;
    cp.P_max_W = cfg.P_max_W;
    cp.slack_weight = cfg.slack_weight;

    const MpcSolution sol = build_and_solve_lp(cp, cfg);
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(sol.slack_C[0] > 1.0);
    // Full power while the box is above the band.
    CHECK(sol.P_W[0] == doctest::Approx(68.0).epsilon(1e-6));
}

TEST_CASE("sequential linearization converges and never loses to one pass") {
    const auto e = load_parameters(kFixtures + "/model_e.txt");
    MpcConfig cfg = small_config(20);

    const Vec x0 = Vec{3, {-25.0, -22.0, -20.0}};
    std::vector<double> prices(20, 10.0);
    for (int k = 10; k < 20; ++k) prices[static_cast<std::size_t>(k)] = 50.0;

    const NonlinearHorizonResult one =
        solve_nonlinear_horizon(e.params, x0, cfg, prices, 23.0, 1);
    const NonlinearHorizonResult full =
        solve_nonlinear_horizon(e.params, x0, cfg, prices, 23.0);

    REQUIRE(one.plan.status == LpStatus::Optimal);
    REQUIRE(full.plan.status == LpStatus::Optimal);
    CHECK(full.converged);
    CHECK(full.final_shift_C < cfg.lin_tol_C);
    CHECK(full.linearization_iters >= 1);
    CHECK(full.plan.objective <= one.plan.objective + 1e-9);
    REQUIRE(full.plan.T_pred_C.size() == 20);
    // The resimulated trajectory respects the physics: evaporator stays
    // below room temperature, so the Carnot factor stayed defined.
    for (double t : full.plan.T_pred_C) CHECK(t < 23.0);
}

TEST_CASE("pulse translation preserves block energy within its quantum") {
    const MpcConfig cfg = small_config(5);

    const PwmPulse half = pwm_translate(34.0, cfg, 0);
    CHECK(half.duration_s == 60.0);
    CHECK(half.offset_s == 0.0);
    const PwmPulse half_odd = pwm_translate(34.0, cfg, 1);
    CHECK(half_odd.duration_s == 60.0);
    CHECK(half_odd.offset_s == 60.0);

    // 20 W wants tau = 35.294 s; whole seconds give 35.
    CHECK(pwm_translate(20.0, cfg, 0).duration_s == 35.0);
    // Below the floor the pulse is dropped entirely.
    CHECK(pwm_translate(5.0, cfg, 0).duration_s == 0.0);
    CHECK(pwm_translate(0.0, cfg, 2).duration_s == 0.0);
    // A gap shorter than the floor rounds up to a solid block.
    CHECK(pwm_translate(66.0, cfg, 0).duration_s == 120.0);
    CHECK(pwm_translate(68.0, cfg, 1).duration_s == 120.0);
    CHECK(pwm_translate(68.0, cfg, 1).offset_s == 0.0);
    // Out-of-range requests clamp to the rails.
    CHECK(pwm_translate(90.0, cfg, 0).duration_s == 120.0);
    CHECK(pwm_translate(-3.0, cfg, 0).duration_s == 0.0);

    for (double P = 0.0; P <= 68.0; P += 0.5) {
        const PwmPulse pulse = pwm_translate(P, cfg, 0);
        const double translated_J = pulse.duration_s * cfg.P_max_W;
        const double requested_J = P * cfg.d_s;
        CHECK(std::abs(translated_J - requested_J) <=
              cfg.min_pulse_s * cfg.P_max_W + 1e-9);
    }
}

TEST_CASE("end-of-block pulses on odd periods halve the switching") {
    const MpcConfig flip = small_config(5);
    MpcConfig noflip = flip;
    noflip.pwm_flip_odd = false;

    const auto edges = [](const std::vector<std::uint8_t>& on) {
        int e = 0;
        for (std::size_t k = 1; k < on.size(); ++k)
            if (on[k] != on[k - 1]) ++e;
        return e;
    };
    const auto lay_out = [](const MpcConfig& cfg, int blocks) {
        const int d = static_cast<int>(cfg.d_s);
        std::vector<std::uint8_t> on(static_cast<std::size_t>(blocks * d), 0);
        for (int b = 0; b < blocks; ++b) {
            const PwmPulse pulse = pwm_translate(34.0, cfg, b);
            const int from = b * d + static_cast<int>(pulse.offset_s);
            for (int s = 0; s < static_cast<int>(pulse.duration_s); ++s)
                on[static_cast<std::size_t>(from + s)] = 1;
        }
        return on;
    };

    const int with = edges(lay_out(flip, 20));
    const int without = edges(lay_out(noflip, 20));
    CHECK(std::abs(static_cast<double>(without) / static_cast<double>(with) - 2.0) <= 1.0);
    CHECK(with < without);
}

TEST_CASE("closed loop smoke run: shapes, ranges and determinism") {
    const auto c = load_parameters(kFixtures + "/model_c.txt");
    PlantConfig plant;
    plant.kind = c.kind;
    plant.params = c.params;
    plant.seed = 21;
    plant.x0_C = {-26.0, -24.0, -22.0};

    MpcConfig cfg = small_config(30);
    const PriceSignal prices = step_prices(3600.0, 10.0, 50.0);

    const MpcTrace trace =
        receding_horizon_run(c.kind, c.params, plant, prices, cfg, 1800.0);
    REQUIRE(trace.rows.size() == 15);
    REQUIRE(trace.on.size() == 1800);
    CHECK(trace.slack_weight == doctest::Approx(500.0));

    for (const MpcTraceRow& r : trace.rows) {
        CHECK(r.P_setpoint_W >= -1e-9);
        CHECK(r.P_setpoint_W <= 68.0 + 1e-9);
        CHECK(r.P_actuated_W >= -1e-9);
        CHECK(r.P_actuated_W <= 68.0 + 1e-9);
        CHECK(r.T_meas_C > -35.0);
        CHECK(r.T_meas_C < -10.0);
        CHECK(r.price == 10.0);  // the step lies beyond this short run
        CHECK(r.solve_ms >= 0.0);
    }
    for (std::uint8_t b : trace.on) CHECK((b == 0 || b == 1));

    const MpcTrace again =
        receding_horizon_run(c.kind, c.params, plant, prices, cfg, 1800.0);
    REQUIRE(again.rows.size() == trace.rows.size());
    for (std::size_t i = 0; i < trace.rows.size(); ++i) {
        CHECK(again.rows[i].P_setpoint_W == trace.rows[i].P_setpoint_W);
        CHECK(again.rows[i].T_meas_C == trace.rows[i].T_meas_C);
    }
    CHECK(again.on == trace.on);
}

TEST_CASE("constant-price control spends about as much as the thermostat") {
    const auto c = load_parameters(kFixtures + "/model_c.txt");
    PlantConfig plant;
    plant.kind = c.kind;
    plant.params = c.params;
    plant.seed = 33;
    plant.x0_C = {-26.0, -24.0, -22.0};

    MpcConfig cfg = small_config(60);
    PriceSignal flat;
    flat.t_s = {0.0};
    flat.price = {10.0};

    const double duration = 4.0 * 3600.0;
    const MpcTrace trace =
        receding_horizon_run(c.kind, c.params, plant, flat, cfg, duration);

    ThermostatBand band;
    band.low_C = cfg.T_max_C - 2.0;
    band.high_C = cfg.T_max_C;
    const RawRecording base_raw = thermostat_run(plant, band, duration);
    const TimeSeries base = preprocess(base_raw, cfg.d_s);

    double mpc_Wh = 0.0, thermo_Wh = 0.0;
    for (const MpcTraceRow& r : trace.rows)
        mpc_Wh += r.P_actuated_W * cfg.d_s / 3600.0;
    for (std::size_t k = 0; k < trace.rows.size(); ++k)
        thermo_Wh += base.P_W[k] * cfg.d_s / 3600.0;

    CHECK(mpc_Wh > 0.5 * thermo_Wh);
    CHECK(mpc_Wh < 1.3 * thermo_Wh);

    // Block means never stray far outside the comfort band.
    for (const MpcTraceRow& r : trace.rows) {
        CHECK(r.T_meas_C < cfg.T_max_C + 1.0);
        CHECK(r.T_meas_C > cfg.T_min_C - 1.0);
    }
}

TEST_CASE("metric arithmetic on a handmade trace") {
    MpcTrace trace;
    trace.cfg = small_config(6);
    trace.slack_weight = 2.0;

    const PriceSignal prices = step_prices(240.0, 10.0, 50.0);
    const double P[6] = {40.0, 40.0, 20.0, 0.0, 0.0, 10.0};
    const double T[6] = {-19.0, -18.5, -18.2, -17.9, -17.95, -18.3};
    for (int i = 0; i < 6; ++i) {
        MpcTraceRow r;
        r.t_s = 120.0 * i;
        r.price = prices.at(r.t_s);
        r.P_setpoint_W = P[i];
        r.P_actuated_W = P[i];
        r.T_meas_C = T[i];
        trace.rows.push_back(r);
    }
    trace.on = {0, 1, 1, 0, 0, 1};

    TimeSeries base;
    for (int i = 0; i < 6; ++i) {
        base.t_s.push_back(120.0 * i);
        base.P_W.push_back(30.0);
        base.Tr_C.push_back(23.0);
        base.T_C.push_back(-19.0);
    }

    const RunMetrics m = metrics(trace, base, prices);
    // Energy cost (2300/30) plus weighted violations 2*(0.1+0.05).
    CHECK(m.m0_cost == doctest::Approx(2300.0 / 30.0 + 0.3).epsilon(1e-12));
    CHECK(m.m2_C == doctest::Approx(0.15 / 6.0).epsilon(1e-12));
    CHECK(m.m3_C == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(m.transitions == 3);
    // First warm block at or after the step sits at t = 360.
    CHECK_FALSE(m.m1_truncated);
    CHECK(m.m1_Wh == doctest::Approx(68.0 * 120.0 / 3600.0).epsilon(1e-12));
    // Invested 20/30 Wh before the step, saved 10/30 Wh while coasting.
    CHECK(m.round_trip == doctest::Approx(0.5).epsilon(1e-12));

    // Flat prices: nothing to shift against.
    PriceSignal flat;
    flat.t_s = {0.0};
    flat.price = {10.0};
    for (auto& r : trace.rows) r.price = 10.0;
    const RunMetrics fm = metrics(trace, base, flat);
    CHECK(fm.m1_Wh == 0.0);
    CHECK(fm.round_trip == 0.0);
    CHECK_FALSE(fm.m1_truncated);
    CHECK(fm.m2_C == doctest::Approx(0.15 / 6.0).epsilon(1e-12));
}

TEST_CASE("metrics flag a run that never re-enters the warm band") {
    MpcTrace trace;
    trace.cfg = small_config(4);
    trace.slack_weight = 1.0;
    const PriceSignal prices = step_prices(120.0, 10.0, 50.0);
    for (int i = 0; i < 4; ++i) {
        MpcTraceRow r;
        r.t_s = 120.0 * i;
        r.price = prices.at(r.t_s);
        r.P_actuated_W = 0.0;
        r.T_meas_C = -20.0;  // always below T_max
        trace.rows.push_back(r);
    }
    trace.on.assign(480, 0);

    TimeSeries base;
    for (int i = 0; i < 4; ++i) {
        base.t_s.push_back(120.0 * i);
        base.P_W.push_back(30.0);
        base.Tr_C.push_back(23.0);
        base.T_C.push_back(-19.0);
    }

    const RunMetrics m = metrics(trace, base, prices);
    CHECK(m.m1_truncated);
    // t_hit falls back to the run end: 68 * (480 - 120) / 3600.
    CHECK(m.m1_Wh == doctest::Approx(68.0 * 360.0 / 3600.0).epsilon(1e-12));
    // Nothing was invested before the step, so the ratio stays zero.
    CHECK(m.round_trip == 0.0);
}

TEST_CASE("metrics validate the baseline grid") {
    MpcTrace trace;
    trace.cfg = small_config(2);
    trace.slack_weight = 1.0;
    for (int i = 0; i < 2; ++i) {
        MpcTraceRow r;
        r.t_s = 120.0 * i;
        r.price = 10.0;
        trace.rows.push_back(r);
    }
    const PriceSignal prices = step_prices(120.0, 10.0, 50.0);

    TimeSeries shifted;
    shifted.t_s = {30.0, 150.0};
    shifted.P_W = {1.0, 1.0};
    shifted.Tr_C = {23.0, 23.0};
    shifted.T_C = {-19.0, -19.0};
    CHECK_THROWS_AS(metrics(trace, shifted, prices), ValidationError);

    TimeSeries short_base;
    short_base.t_s = {0.0};
    short_base.P_W = {1.0};
    short_base.Tr_C = {23.0};
    short_base.T_C = {-19.0};
    CHECK_THROWS_AS(metrics(trace, short_base, prices), ValidationError);

    MpcTrace empty;
    empty.cfg = small_config(2);
    CHECK_THROWS_AS(metrics(empty, shifted, prices), ValidationError);
}
