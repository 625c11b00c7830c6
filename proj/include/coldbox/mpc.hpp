#pragma once

#include <cstdint>
#include <vector>

#include "coldbox/lp.hpp"
#include "coldbox/plant.hpp"
#include "coldbox/smallmat.hpp"
#include "coldbox/thermal.hpp"
#include "coldbox/timeseries.hpp"

namespace coldbox {

/// Step-constant electricity price: value i applies from t_s[i] until the
/// next knot, and the last value extends indefinitely. Knots must be
/// strictly increasing and start at or before zero.
struct PriceSignal {
    std::vector<double> t_s;
    std::vector<double> price;

    double at(double t) const;
    void validate() const;
};

struct MpcConfig {
    double d_s = 120.0;        // control block length
    int N = 270;               // prediction horizon, blocks
    double T_min_C = -27.0;
    double T_max_C = -18.0;
    double P_max_W = 68.0;
    /// Comfort-violation weight per degC per block in the LP objective and
    /// in the cost metric; zero means the default of 1000 times the largest
    /// price in the signal.
    double slack_weight = 0.0;
    double min_pulse_s = 10.0;     // narrowest pulse the modulator emits
    bool pwm_flip_odd = true;      // odd blocks pulse at the end, pairing runs
    double lin_tol_C = 0.01;       // trajectory shift that ends relinearization
    int lin_max_iters = 10;
    double solve_delay_s = 0.0;    // actuation lag; previous state held meanwhile

    void validate() const;
    double resolved_slack_weight(const PriceSignal& prices) const;
};

/// Stacked prediction of the sensed temperature over N blocks:
///     T(k) = Phi[k] x0 + sum_j ThetaB[k][j] P_j + sum_j ThetaE[k][j] Tr_j,
/// where T(k) is the temperature at the END of block k. ThetaB/ThetaE are
/// lower-triangular Toeplitz, stored dense row-major N x N.
struct CondensedProblem {
    int N = 0;
    int n = 0;              // state dimension
    double d_s = 0.0;
    std::vector<double> Phi;      // N x n, row-major
    std::vector<double> ThetaB;   // N x N
    std::vector<double> ThetaE;   // N x N
    Vec x0;
    std::vector<double> prices;   // per block
    std::vector<double> Tr_C;     // per block
    double T_min_C = 0.0, T_max_C = 0.0, P_max_W = 0.0;
    double slack_weight = 0.0;
    double energy_cost_scale = 0.0;  // price-to-cost factor, d/3600 (per Wh prices)
};

/// Impulse-response condensation of the discrete dynamics. Fills the
/// structural fields only; the caller supplies prices, room temperature and
/// bounds before solving.
CondensedProblem condense(const DiscreteStateSpace& dss, const Vec& x0, int N);

struct MpcSolution {
    std::vector<double> P_W;       // planned block powers
    std::vector<double> slack_C;   // comfort violations the plan accepts
    std::vector<double> T_pred_C;  // predicted end-of-block temperatures
    double objective = 0.0;
    LpStatus status = LpStatus::IterationLimit;
    double comp_slackness = 0.0;
    std::vector<double> duals;
    int iterations = 0;
    int phase1_iterations = 0;
};

/// One linear plan: assembles the 2N-row LP
///     min  sum_k (scale * price_k * P_k + slack_weight * s_k)
///     s.t. T_min - s_k <= T(k) <= T_max + s_k,  0 <= P_k <= P_max,  s_k >= 0
/// and solves it with a basis seeded from the sign of the free response, so
/// the artificial-variable phase is skipped for this problem family.
MpcSolution build_and_solve_lp(const CondensedProblem& cp, const MpcConfig& cfg);

struct NonlinearHorizonResult {
    MpcSolution plan;          // T_pred_C holds the nonlinear resimulation
    int linearization_iters = 0;
    bool converged = false;
    double final_shift_C = 0.0;  // trajectory change of the last iteration
};

/// Plan for the Carnot-input kind by sequential linearization: freeze per-
/// block Carnot gains along a predicted trajectory, solve the linear
/// problem, resimulate, repeat until the trajectory shifts less than
/// lin_tol or lin_max_iters is hit. Among iterations, the plan whose
/// resimulated cost is lowest wins. `max_iters` overrides the config cap
/// (1 = a single frozen-gain solve).
NonlinearHorizonResult solve_nonlinear_horizon(const ThermalParameters& params,
                                               const Vec& x0, const MpcConfig& cfg,
                                               const std::vector<double>& prices,
                                               double T_r_C, int max_iters = 0);

struct PwmPulse {
    double offset_s = 0.0;
    double duration_s = 0.0;  // whole seconds; 0 or the full block at the rails
};

/// Average-power-preserving on/off translation of one block's plan.
/// Durations under min_pulse round to zero; gaps under min_pulse round to a
/// full block. With pwm_flip_odd, odd blocks place the pulse at the block
/// end so adjacent pulses merge and switching roughly halves.
PwmPulse pwm_translate(double P_W, const MpcConfig& cfg, int period_index);

struct MpcTraceRow {
    double t_s = 0.0;
    double price = 0.0;
    double P_setpoint_W = 0.0;   // first planned block power
    double P_actuated_W = 0.0;   // realized mean thermal power over the block
    double T_meas_C = 0.0;       // realized block mean of the sensor average
    double T_pred_C = 0.0;       // planner's end-of-block temperature
    double slack_C = 0.0;        // planner's accepted violation, first block
    double solve_ms = 0.0;
};

struct MpcTrace {
    MpcConfig cfg;
    double slack_weight = 0.0;        // resolved comfort weight
    std::vector<MpcTraceRow> rows;
    std::vector<std::uint8_t> on;     // per-second compressor command
};

/// Closed loop: at each block boundary, update the belief with the previous
/// block's mean measurement and actuated power, condense from the state
/// estimate, solve (relinearizing for the Carnot kind), and actuate the
/// first planned power through the pulse modulator. The belief starts from
/// the first sensor reading with unit covariance.
MpcTrace receding_horizon_run(ModelKind kind, const ThermalParameters& params,
                              const PlantConfig& plant, const PriceSignal& prices,
                              const MpcConfig& cfg, double duration_s);

struct RunMetrics {
    double m0_cost = 0.0;        // energy cost plus weighted violations
    double m1_Wh = 0.0;          // load shifted past the price step
    bool m1_truncated = false;   // run ended before the band was re-entered
    double m2_C = 0.0;           // mean violation above T_max
    double m3_C = 0.0;           // worst violation above T_max
    double round_trip = 0.0;     // coast savings over pre-step investment
    int transitions = 0;         // compressor on/off edges
    double mean_solve_ms = 0.0;
    double max_solve_ms = 0.0;
};

/// Scores a closed-loop trace against a thermostat baseline preprocessed
/// onto the same block grid. The load-shift and round-trip figures are
/// measured around the first strict price increase.
RunMetrics metrics(const MpcTrace& trace, const TimeSeries& baseline,
                   const PriceSignal& prices);

} // namespace coldbox
