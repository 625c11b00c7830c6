#pragma once

#include <cstdint>
#include <vector>

#include "coldbox/thermal.hpp"
#include "coldbox/timeseries.hpp"

namespace coldbox {

/// Synthetic freezer used as ground truth for identification and control
/// experiments. The compressor is an on/off device: when on it draws rated
/// power plus a decaying switch-on inrush, and the control electronics add
/// a constant auxiliary draw whether the compressor runs or not. Only the
/// rated power reaches the thermal dynamics; inrush and auxiliaries heat
/// the machinery compartment, not the cold space.
struct PlantConfig {
    ModelKind kind = ModelKind::C;
    ThermalParameters params;
    double P_max_W = 68.0;
    double aux_W = 2.0;
    double inrush_W = 300.0;     // added at the switch-on instant
    double inrush_tau_s = 3.0;   // exponential decay constant of the inrush
    double sensor_std_C = 0.2;   // per thermistor
    double step_s = 1.0;         // integration and recording step
    double T_r_C = 23.0;         // room temperature
    std::vector<double> x0_C;    // initial state; empty = every node at T_r
    std::uint64_t seed = 0;
};

struct PrbsConfig {
    double base_s = 30.0;        // shortest commanded run length
    double duration_s = 0.0;
    double min_pulse_s = 30.0;   // compressor protection floor
    std::uint64_t seed = 0;
};

/// Pseudo-random on/off excitation, one entry per second. The signal is
/// built from frames of ten base periods; each frame starts with an on-run
/// whose length is a uniformly drawn multiple (0..10) of the base period.
/// Afterwards, runs shorter than min_pulse are absorbed into their
/// predecessor (the leading run into its successor) until none remain.
/// Rejects min_pulse below the base period and durations under ten base
/// periods.
std::vector<std::uint8_t> prbs_generate(const PrbsConfig& cfg);

/// Euler-Maruyama simulation of the configured truth model driven by a
/// per-step on/off switch signal. Record i holds the state at t = i*step
/// and the electrical draw over the step starting there; the final record
/// holds the terminal state with the last step's draw. Two thermistors
/// observe the sensed node with independent Gaussian noise. Process and
/// sensor noise come from substreams of the plant seed, so runs with equal
/// configuration are bit-identical.
RawRecording simulate(const PlantConfig& plant, const std::vector<std::uint8_t>& on,
                      double T_r_C);

/// Measurement pipeline from raw 1 Hz records to an identification series:
/// subtract the auxiliary draw (clamped at zero), clip the switch-on inrush
/// (any sample within 10 s of a rising edge is limited to rated power),
/// average the two thermistors, then block-average onto the output period.
/// Row k covers [k*d, (k+1)*d) and is stamped t = k*d; a shorter tail block
/// is averaged over what remains.
TimeSeries preprocess(const RawRecording& raw, double output_d_s,
                      double P_max_W = 68.0, double aux_W = 2.0);

/// Hysteresis band for the thermostat: switch on above `high_C`, off below
/// `low_C` (both sensed on the two-thermistor average).
struct ThermostatBand {
    double low_C = -20.0;
    double high_C = -18.0;
};

/// Baseline controller: per-step two-point thermostat on the configured
/// plant at the configured room temperature.
RawRecording thermostat_run(const PlantConfig& plant, const ThermostatBand& band,
                            double duration_s);

} // namespace coldbox
