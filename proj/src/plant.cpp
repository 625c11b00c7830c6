#include "coldbox/plant.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "coldbox/errors.hpp"
#include "coldbox/rng.hpp"

namespace coldbox {

namespace {

struct Segment {
    std::uint8_t value;
    std::size_t length;
};

std::vector<Segment> to_segments(const std::vector<std::uint8_t>& s) {
    std::vector<Segment> segs;
    for (std::uint8_t b : s) {
        if (!segs.empty() && segs.back().value == b) {
            ++segs.back().length;
        } else {
            segs.push_back({b, 1});
        }
    }
    return segs;
}

} // namespace

std::vector<std::uint8_t> prbs_generate(const PrbsConfig& cfg) {
    if (!(cfg.base_s >= 1.0))
        throw ValidationError("prbs_generate: base period must be at least one second");
    if (cfg.min_pulse_s < cfg.base_s)
        throw ValidationError("prbs_generate: min_pulse below the base period would "
                              "erase the excitation it is meant to protect");
    const std::size_t base = static_cast<std::size_t>(cfg.base_s);
    const std::size_t duration = static_cast<std::size_t>(cfg.duration_s);
    const std::size_t frame = 10 * base;
    if (duration < frame)
        throw ValidationError("prbs_generate: duration must cover at least ten base "
                              "periods");

    std::mt19937_64 gen = substream(cfg.seed, "prbs");
    std::uniform_int_distribution<int> duty(0, 10);

    std::vector<std::uint8_t> on;
    on.reserve(duration);
    while (on.size() < duration) {
        const std::size_t k = static_cast<std::size_t>(duty(gen));
        for (std::size_t i = 0; i < frame && on.size() < duration; ++i)
            on.push_back(i < k * base ? 1 : 0);
    }

    // Absorb runs shorter than the protection floor. Each pass removes at
    // least one segment, so this terminates.
    const std::size_t min_pulse = static_cast<std::size_t>(cfg.min_pulse_s);
    std::vector<Segment> segs = to_segments(on);
    for (;;) {
        bool merged = false;
        for (std::size_t i = 0; i < segs.size(); ++i) {
            if (segs[i].length >= min_pulse || segs.size() == 1) continue;
            segs[i].value = (i == 0) ? segs[1].value : segs[i - 1].value;
            std::vector<Segment> next;
            for (const Segment& s : segs) {
                if (!next.empty() && next.back().value == s.value) {
                    next.back().length += s.length;
                } else {
                    next.push_back(s);
                }
            }
            segs = std::move(next);
            merged = true;
            break;
        }
        if (!merged) break;
    }

    std::vector<std::uint8_t> out;
    out.reserve(duration);
    for (const Segment& s : segs)
        out.insert(out.end(), s.length, s.value);
    return out;
}

RawRecording simulate(const PlantConfig& plant, const std::vector<std::uint8_t>& on,
                      double T_r_C) {
    validate_parameters(plant.kind, plant.params);
    if (on.empty()) throw ValidationError("simulate: empty switch signal");
    if (!(plant.step_s > 0.0))
        throw ValidationError("simulate: step must be positive");

    const ContinuousStateSpace css = build_continuous(plant.kind, plant.params);
    const int n = css.n;
    const int sensed = measured_state(plant.kind);
    const double h = plant.step_s;
    const double sqrt_h = std::sqrt(h);

    Vec x = Vec::constant(n, T_r_C);
    if (!plant.x0_C.empty()) {
        if (plant.x0_C.size() != static_cast<std::size_t>(n))
            throw ValidationError("simulate: initial state length does not match the "
                                  "model order");
        for (int i = 0; i < n; ++i) x[i] = plant.x0_C[static_cast<std::size_t>(i)];
    }

    std::mt19937_64 gen_w = substream(plant.seed, "plant-process");
    std::mt19937_64 gen_s1 = substream(plant.seed, "plant-sensor1");
    std::mt19937_64 gen_s2 = substream(plant.seed, "plant-sensor2");
    std::normal_distribution<double> normal(0.0, 1.0);

    const std::size_t n_steps = on.size();
    RawRecording rec;
    rec.t_s.reserve(n_steps + 1);
    rec.P_W.reserve(n_steps + 1);
    rec.Tr_C.reserve(n_steps + 1);
    rec.T1_C.reserve(n_steps + 1);
    rec.T2_C.reserve(n_steps + 1);

    // Index of the most recent off->on edge, for the inrush decay.
    std::size_t switched_on_at = 0;

    const auto electrical = [&](std::size_t i) -> double {
        const bool running = on[std::min(i, n_steps - 1)] != 0;
        if (!running) return plant.aux_W;
        const double dt = static_cast<double>(i - switched_on_at) * h;
        return plant.P_max_W + plant.inrush_W * std::exp(-dt / plant.inrush_tau_s) +
               plant.aux_W;
    };

    for (std::size_t i = 0; i <= n_steps; ++i) {
        if (i < n_steps && on[i] && (i == 0 || !on[i - 1])) switched_on_at = i;

        rec.t_s.push_back(static_cast<double>(i) * h);
        rec.P_W.push_back(electrical(i));
        rec.Tr_C.push_back(T_r_C);
        rec.T1_C.push_back(x[sensed] + plant.sensor_std_C * normal(gen_s1));
        rec.T2_C.push_back(x[sensed] + plant.sensor_std_C * normal(gen_s2));

        if (i == n_steps) break;
        const double P_thermal = on[i] ? plant.P_max_W : 0.0;
        Vec mean;
        if (plant.kind == ModelKind::E) {
            try {
                mean = nonlinear_step(css, x, P_thermal, T_r_C, h);
            } catch (const DomainError& e) {
                std::ostringstream msg;
                msg << "simulate: " << e.what() << " at t = "
                    << static_cast<double>(i) * h << " s";
                throw DomainError(msg.str());
            }
        } else {
            Vec u = Vec::zero(2);
            u[0] = T_r_C;
            u[1] = P_thermal;
            mean = x + h * (css.A * x + css.B * u);
        }
        for (int j = 0; j < n; ++j)
            mean[j] += css.W[j] * sqrt_h * normal(gen_w);
        x = mean;
    }
    return rec;
}

TimeSeries preprocess(const RawRecording& raw, double output_d_s, double P_max_W,
                      double aux_W) {
    raw.validate();
    const double h = raw.step();
    if (!(output_d_s > 0.0) || output_d_s < h)
        throw ValidationError("preprocess: output period must be positive and no "
                              "shorter than the recording step");
    const std::size_t per_block =
        static_cast<std::size_t>(std::llround(output_d_s / h));
    if (std::abs(static_cast<double>(per_block) * h - output_d_s) > 1e-9 * output_d_s)
        throw ValidationError("preprocess: output period must be a multiple of the "
                              "recording step");

    const std::size_t m = raw.t_s.size();
    std::vector<double> power(m), temp(m);
    // Daemon load off, inrush clipped: both are machinery-side draws the
    // thermal model never sees.
    constexpr double kOnThreshold_W = 0.5;
    constexpr double kInrushWindow_s = 10.0;
    double last_edge = -1e300;
    bool was_on = false;
    for (std::size_t i = 0; i < m; ++i) {
        double p = raw.P_W[i] - aux_W;
        if (p < 0.0) p = 0.0;
        const bool is_on = p > kOnThreshold_W;
        if (is_on && !was_on) last_edge = raw.t_s[i];
        was_on = is_on;
        if (is_on && raw.t_s[i] - last_edge <= kInrushWindow_s && p > P_max_W)
            p = P_max_W;
        power[i] = p;
        temp[i] = 0.5 * (raw.T1_C[i] + raw.T2_C[i]);
    }

    TimeSeries out;
    for (std::size_t start = 0; start < m; start += per_block) {
        const std::size_t stop = std::min(start + per_block, m);
        double p_acc = 0.0, t_acc = 0.0, r_acc = 0.0;
        for (std::size_t i = start; i < stop; ++i) {
            p_acc += power[i];
            t_acc += temp[i];
            r_acc += raw.Tr_C[i];
        }
        const double cnt = static_cast<double>(stop - start);
        out.t_s.push_back(static_cast<double>(start) * h);
        out.P_W.push_back(p_acc / cnt);
        out.Tr_C.push_back(r_acc / cnt);
        out.T_C.push_back(t_acc / cnt);
    }
    return out;
}

RawRecording thermostat_run(const PlantConfig& plant, const ThermostatBand& band,
                            double duration_s) {
    if (!(band.low_C < band.high_C))
        throw ValidationError("thermostat_run: band low must lie below band high");
    if (!(duration_s >= plant.step_s))
        throw ValidationError("thermostat_run: duration shorter than one step");
    validate_parameters(plant.kind, plant.params);

    const ContinuousStateSpace css = build_continuous(plant.kind, plant.params);
    const int n = css.n;
    const int sensed = measured_state(plant.kind);
    const double h = plant.step_s;
    const double sqrt_h = std::sqrt(h);
    const std::size_t n_steps =
        static_cast<std::size_t>(std::llround(duration_s / h));

    Vec x = Vec::constant(n, plant.T_r_C);
    if (!plant.x0_C.empty()) {
        if (plant.x0_C.size() != static_cast<std::size_t>(n))
            throw ValidationError("thermostat_run: initial state length does not "
                                  "match the model order");
        for (int i = 0; i < n; ++i) x[i] = plant.x0_C[static_cast<std::size_t>(i)];
    }

    std::mt19937_64 gen_w = substream(plant.seed, "plant-process");
    std::mt19937_64 gen_s1 = substream(plant.seed, "plant-sensor1");
    std::mt19937_64 gen_s2 = substream(plant.seed, "plant-sensor2");
    std::normal_distribution<double> normal(0.0, 1.0);

    RawRecording rec;
    bool running = false;
    double switched_on_at = 0.0;

    for (std::size_t i = 0; i <= n_steps; ++i) {
        const double t = static_cast<double>(i) * h;
        const double T1 = x[sensed] + plant.sensor_std_C * normal(gen_s1);
        const double T2 = x[sensed] + plant.sensor_std_C * normal(gen_s2);
        const double sensed_mean = 0.5 * (T1 + T2);

        if (i < n_steps) {
            const bool was_running = running;
            if (!running && sensed_mean > band.high_C) {
                running = true;
            } else if (running && sensed_mean < band.low_C) {
                running = false;
            }
            if (running && !was_running) switched_on_at = t;
        }

        double P = plant.aux_W;
        if (running)
            P += plant.P_max_W +
                 plant.inrush_W * std::exp(-(t - switched_on_at) / plant.inrush_tau_s);

        rec.t_s.push_back(t);
        rec.P_W.push_back(P);
        rec.Tr_C.push_back(plant.T_r_C);
        rec.T1_C.push_back(T1);
        rec.T2_C.push_back(T2);

        if (i == n_steps) break;
        const double P_thermal = running ? plant.P_max_W : 0.0;
        Vec mean;
        if (plant.kind == ModelKind::E) {
            mean = nonlinear_step(css, x, P_thermal, plant.T_r_C, h);
        } else {
            Vec u = Vec::zero(2);
            u[0] = plant.T_r_C;
            u[1] = P_thermal;
            mean = x + h * (css.A * x + css.B * u);
        }
        for (int j = 0; j < n; ++j)
            mean[j] += css.W[j] * sqrt_h * normal(gen_w);
        x = mean;
    }
    return rec;
}

} // namespace coldbox
