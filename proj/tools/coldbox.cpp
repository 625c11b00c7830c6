#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "coldbox/errors.hpp"
#include "coldbox/kalman.hpp"
#include "coldbox/kvfile.hpp"
#include "coldbox/mle.hpp"
#include "coldbox/mpc.hpp"
#include "coldbox/plant.hpp"
#include "coldbox/report.hpp"
#include "coldbox/stats.hpp"
#include "coldbox/thermal.hpp"
#include "coldbox/timeseries.hpp"

namespace {

using namespace coldbox;

std::string join(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw ValidationError("cannot create output directory " + dir + ": " + ec.message());
}

/// Controller model from either a fit report or a parameter fixture.
LoadedParameters load_model(const std::string& fit_path, const std::string& params_path) {
    if (!fit_path.empty()) return read_fit_json(fit_path);
    if (!params_path.empty()) return load_parameters(params_path);
    throw ValidationError("a model is required: --fit <fit.json> or --params <fixture>");
}

/// Freezer-scale engineering guess used when identify is run without an
/// initial parameter file. Deliberately coarse; the multistart perturbations
/// and the optimizer do the rest.
ThermalParameters generic_initial_guess(ModelKind kind) {
    std::vector<double> free_params;
    for (const auto& name : parameter_names(kind)) {
        if (name[0] == 'C')
            free_params.push_back(5e4);
        else if (name[0] == 'R')
            free_params.push_back(1.0);
        else if (name == "COP")
            free_params.push_back(1.5);
        else if (name == "eta")
            free_params.push_back(0.5);
        else
            free_params.push_back(-5.0);  // noise exponent
    }
    return unpack_parameters(kind, free_params, 0.3);
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string params_path;
    std::string kind;
    double hours = 35.0;
    double d_s = 10.0;
    double base_s = 30.0;
    double min_pulse_s = 30.0;
    double T_r_C = 23.0;
    std::uint64_t seed = 0;
    std::string out = ".";
};

void cmd_simulate(const SimulateArgs& a) {
    LoadedParameters loaded = load_parameters(a.params_path);
    if (!a.kind.empty()) loaded.kind = kind_from_string(a.kind);
    validate_parameters(loaded.kind, loaded.params);

    PlantConfig plant;
    plant.kind = loaded.kind;
    plant.params = loaded.params;
    plant.T_r_C = a.T_r_C;
    plant.seed = a.seed;

    PrbsConfig prbs;
    prbs.base_s = a.base_s;
    prbs.duration_s = a.hours * 3600.0;
    prbs.min_pulse_s = a.min_pulse_s;
    prbs.seed = a.seed;

    const std::vector<std::uint8_t> on = prbs_generate(prbs);
    const RawRecording raw = simulate(plant, on, a.T_r_C);
    const TimeSeries ts = preprocess(raw, a.d_s, plant.P_max_W, plant.aux_W);

    ensure_out_dir(a.out);
    const std::string raw_path = join(a.out, "raw.csv");
    const std::string data_path = join(a.out, "data.csv");
    write_raw_csv(raw, raw_path);
    write_timeseries_csv(ts, data_path);

    std::size_t on_s = 0, edges = 0;
    for (std::size_t i = 0; i < on.size(); ++i) {
        on_s += on[i];
        if (i > 0 && on[i] != on[i - 1]) ++edges;
    }
    std::printf("plant: kind %s, P_max %g W, room %g C, seed %llu\n", kind_name(plant.kind),
                plant.P_max_W, a.T_r_C, static_cast<unsigned long long>(a.seed));
    std::printf("excitation: %.4g h PRBS, base %g s, min pulse %g s, duty %.1f%%, "
                "%zu transitions\n",
                a.hours, a.base_s, a.min_pulse_s,
                100.0 * static_cast<double>(on_s) / static_cast<double>(on.size()), edges);
    std::printf("wrote %s (%zu rows), %s (%zu rows at %g s)\n", raw_path.c_str(), raw.size(),
                data_path.c_str(), ts.size(), a.d_s);
}

// ---------------------------------------------------------------- identify

struct IdentifyArgs {
    std::string data_path;
    std::string kind = "C";
    std::string init_path;
    int starts = 8;
    std::uint64_t seed = 0;
    std::string out = ".";
};

void cmd_identify(const IdentifyArgs& a) {
    const ModelKind kind = kind_from_string(a.kind);
    const TimeSeries data = read_timeseries_csv(a.data_path);

    ThermalParameters theta0;
    if (!a.init_path.empty()) {
        const LoadedParameters init = load_parameters(a.init_path);
        if (init.kind != kind)
            throw ValidationError("--init fixture is for kind " +
                                  std::string(kind_name(init.kind)) + ", not " + a.kind);
        theta0 = init.params;
    } else {
        theta0 = generic_initial_guess(kind);
    }

    const FitResult fit = mle_fit(kind, data, theta0, default_bounds(kind), a.starts, a.seed);

    ensure_out_dir(a.out);
    const std::string fit_path = join(a.out, "fit.json");
    write_fit_result_json(fit, fit_path);

    std::printf("fit: kind %s, %d starts, seed %llu, %zu rows at %g s\n", kind_name(kind),
                a.starts, static_cast<unsigned long long>(a.seed), data.size(),
                data.sample_period());
    std::printf("loglik = %.10g  (start %d won after %d iterations, %s)\n", fit.loglik,
                fit.multistart_index, fit.iterations,
                fit.converged ? "converged" : "hit the iteration cap");
    std::printf("%-10s %s\n", "parameter", "value");
    const auto names = parameter_names(kind);
    const auto values = pack_parameters(kind, fit.params);
    for (std::size_t i = 0; i < names.size(); ++i)
        std::printf("%-10s %.6g\n", names[i].c_str(), values[i]);
    std::printf("%-10s %.6g\n", "v", fit.params.v);
    std::printf("wrote %s\n", fit_path.c_str());
}

// ---------------------------------------------------------------- validate

struct ValidateArgs {
    std::string fit_a, fit_b;
    std::string data_path;
    double loglik_a = std::numeric_limits<double>::quiet_NaN();
    double loglik_b = std::numeric_limits<double>::quiet_NaN();
    int df = 0;  // 0 = parameter-count difference (at least 1)
    std::string out = ".";
};

void cmd_validate(const ValidateArgs& a) {
    ensure_out_dir(a.out);
    nlohmann::ordered_json report;

    double ll_small, ll_big;
    int df = a.df;
    std::vector<double> residuals;  // of the bigger model, data mode only

    const bool explicit_logliks = !std::isnan(a.loglik_a) && !std::isnan(a.loglik_b);
    if (explicit_logliks) {
        if (df < 1)
            throw ValidationError("--df is required when log-likelihoods are given "
                                  "directly");
        ll_small = a.loglik_a;
        ll_big = a.loglik_b;
        report["mode"] = "logliks";
    } else {
        if (a.fit_a.empty() || a.fit_b.empty() || a.data_path.empty())
            throw ValidationError("validate needs --fit-a, --fit-b and --data (or "
                                  "--loglik-a/--loglik-b/--df)");
        const LoadedParameters small = read_fit_json(a.fit_a);
        const LoadedParameters big = read_fit_json(a.fit_b);
        const TimeSeries data = read_timeseries_csv(a.data_path);

        const LoglikResult rs = innovations_loglik(small.kind, small.params, data);
        if (!rs.ok)
            throw NumericalError("likelihood of the smaller model failed: " + rs.failure);
        const LoglikResult rb = innovations_loglik(big.kind, big.params, data);
        if (!rb.ok)
            throw NumericalError("likelihood of the bigger model failed: " + rb.failure);
        ll_small = rs.loglik;
        ll_big = rb.loglik;
        residuals = rb.residuals;
        if (df < 1) df = std::max(1, parameter_count(big.kind) - parameter_count(small.kind));
        report["mode"] = "data";
        report["kind_small"] = kind_name(small.kind);
        report["kind_big"] = kind_name(big.kind);
        std::printf("loglik small (%s) = %.10g\n", kind_name(small.kind), ll_small);
        std::printf("loglik big   (%s) = %.10g\n", kind_name(big.kind), ll_big);
    }

    const DevianceResult dev = deviance_test(ll_small, ll_big, df);
    std::printf("D = %.6g  df = %d  p = %.6g\n", dev.D, dev.df, dev.p_value);
    if (dev.negative_deviance_warning)
        std::printf("warning: negative deviance (nesting violated or optimizer "
                    "under-converged); p clamped to 1\n");
    std::printf("H0 (smaller model sufficient): %s at 95%%\n",
                dev.reject_null ? "rejected" : "not rejected");

    report["loglik_small"] = ll_small;
    report["loglik_big"] = ll_big;
    report["D"] = dev.D;
    report["df"] = dev.df;
    report["p_value"] = dev.p_value;
    report["reject_null"] = dev.reject_null;
    report["negative_deviance_warning"] = dev.negative_deviance_warning;

    if (!residuals.empty()) {
        const std::size_t n = residuals.size();
        const std::size_t max_lag = std::min<std::size_t>(193, n - 1);
        const std::vector<double> acf = residual_acf(residuals, max_lag);
        const double thr = whiteness_threshold(n);

        const std::string acf_path = join(a.out, "acf.csv");
        std::FILE* f = std::fopen(acf_path.c_str(), "wb");
        if (!f) throw ValidationError("cannot write: " + acf_path);
        std::fputs("lag,rho,log10_abs_rho\n", f);
        std::size_t above = 0;
        for (std::size_t l = 1; l <= max_lag; ++l) {
            if (std::abs(acf[l]) > thr) ++above;
            std::fprintf(f, "%zu,%.12g,%.12g\n", l, acf[l],
                         std::log10(std::max(std::abs(acf[l]), 1e-16)));
        }
        std::fclose(f);

        std::printf("residual whiteness (big model): N = %zu, threshold = %.4g, lags "
                    "above: %zu/%zu (%.1f%%)\n",
                    n, thr, above, max_lag,
                    100.0 * static_cast<double>(above) / static_cast<double>(max_lag));
        std::printf("wrote %s\n", acf_path.c_str());

        report["whiteness"] = nlohmann::ordered_json{
            {"n_residuals", n},
            {"threshold", thr},
            {"lags_tested", max_lag},
            {"lags_above", above},
            {"fraction_above", static_cast<double>(above) / static_cast<double>(max_lag)}};
    }

    const std::string report_path = join(a.out, "validation.json");
    std::FILE* f = std::fopen(report_path.c_str(), "wb");
    if (!f) throw ValidationError("cannot write: " + report_path);
    const std::string text = report.dump(2) + "\n";
    std::fwrite(text.data(), 1, text.size(), f);
    std::fclose(f);
    std::printf("wrote %s\n", report_path.c_str());
}

// ----------------------------------------------------------------- predict

struct PredictArgs {
    std::string fit_path, params_path;
    std::string data_path;
    double horizon_min = 20.0;
    std::string out = ".";
};

void cmd_predict(const PredictArgs& a) {
    const LoadedParameters model = load_model(a.fit_path, a.params_path);
    const TimeSeries data = read_timeseries_csv(a.data_path);
    const double d = data.sample_period();
    const int steps = static_cast<int>(std::llround(a.horizon_min * 60.0 / d));
    if (steps < 1)
        throw ValidationError("horizon shorter than one sample at d = " +
                              std::to_string(d) + " s");

    const std::vector<double> res = k_step_residuals(model.kind, model.params, data, steps);
    double mean = 0.0;
    for (double e : res) mean += e;
    mean /= static_cast<double>(res.size());
    double sd = 0.0;
    for (double e : res) sd += (e - mean) * (e - mean);
    sd = res.size() > 1 ? std::sqrt(sd / static_cast<double>(res.size() - 1)) : 0.0;

    std::printf("model %s on %s: horizon %g min = %d steps at %g s\n",
                kind_name(model.kind), a.data_path.c_str(), a.horizon_min, steps, d);
    std::printf("prediction residuals over %zu anchors: mean = %.6g C, std = %.6g C\n",
                res.size(), mean, sd);

    ensure_out_dir(a.out);
    nlohmann::ordered_json j;
    j["kind"] = kind_name(model.kind);
    j["horizon_min"] = a.horizon_min;
    j["horizon_steps"] = steps;
    j["d_s"] = d;
    j["count"] = res.size();
    j["mean_C"] = mean;
    j["std_C"] = sd;
    const std::string path = join(a.out, "predict.json");
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw ValidationError("cannot write: " + path);
    const std::string text = j.dump(2) + "\n";
    std::fwrite(text.data(), 1, text.size(), f);
    std::fclose(f);
    std::printf("wrote %s\n", path.c_str());
}

// --------------------------------------------------------------------- mpc

struct MpcArgs {
    std::string plant_path;
    std::string fit_path, params_path;
    std::string price_path;
    double hours = 6.0;
    MpcConfig cfg;
    bool no_flip = false;
    double band_low = std::numeric_limits<double>::quiet_NaN();
    double band_high = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t seed = 0;
    std::string out = ".";
};

void cmd_mpc(const MpcArgs& a) {
    const LoadedParameters truth = load_parameters(a.plant_path);
    const LoadedParameters model = load_model(a.fit_path, a.params_path);
    const PriceSignal prices = read_price_csv(a.price_path);

    PlantConfig plant;
    plant.kind = truth.kind;
    plant.params = truth.params;
    plant.P_max_W = a.cfg.P_max_W;
    plant.seed = a.seed;

    MpcConfig cfg = a.cfg;
    cfg.pwm_flip_odd = !a.no_flip;
    cfg.validate();

    const double duration_s = a.hours * 3600.0;
    const MpcTrace trace =
        receding_horizon_run(model.kind, model.params, plant, prices, cfg, duration_s);

    ThermostatBand band;
    band.low_C = std::isnan(a.band_low) ? cfg.T_max_C - 2.0 : a.band_low;
    band.high_C = std::isnan(a.band_high) ? cfg.T_max_C : a.band_high;
    const RawRecording base_raw = thermostat_run(plant, band, duration_s);
    const TimeSeries base = preprocess(base_raw, cfg.d_s, plant.P_max_W, plant.aux_W);

    const RunMetrics m = metrics(trace, base, prices);

    ensure_out_dir(a.out);
    const std::string trace_path = join(a.out, "trace.csv");
    const std::string base_path = join(a.out, "baseline.csv");
    const std::string metrics_path = join(a.out, "metrics.json");
    write_trace_csv(trace, trace_path);
    write_timeseries_csv(base, base_path);
    write_metrics_json(m, metrics_path);

    std::printf("closed loop: model %s on plant %s, %zu blocks of %g s, horizon %d, "
                "band [%g, %g] C\n",
                kind_name(model.kind), kind_name(plant.kind), trace.rows.size(), cfg.d_s,
                cfg.N, cfg.T_min_C, cfg.T_max_C);
    std::printf("m0 = %.6g  m1 = %.4g Wh%s  m2 = %.4g C  m3 = %.4g C  round-trip = %.3g\n",
                m.m0_cost, m.m1_Wh, m.m1_truncated ? " (truncated)" : "", m.m2_C, m.m3_C,
                m.round_trip);
    std::printf("transitions = %d, solve %.2f ms mean / %.2f ms max\n", m.transitions,
                m.mean_solve_ms, m.max_solve_ms);
    std::printf("wrote %s, %s, %s\n", trace_path.c_str(), base_path.c_str(),
                metrics_path.c_str());
}

// ------------------------------------------------------------------ report

struct ReportArgs {
    std::vector<std::string> runs;
    std::string out = ".";
};

void cmd_report(const ReportArgs& a) {
    ensure_out_dir(a.out);
    auto runs = nlohmann::ordered_json::array();
    std::vector<std::string> used_stems;

    for (const std::string& run : a.runs) {
        std::filesystem::path p = std::filesystem::path(run).lexically_normal();
        std::string stem = p.filename().string();
        if (stem.empty() || stem == ".") stem = p.parent_path().filename().string();
        if (stem.empty()) stem = "run";
        std::string unique = stem;
        for (int k = 2; std::count(used_stems.begin(), used_stems.end(), unique) > 0; ++k)
            unique = stem + "_" + std::to_string(k);
        used_stems.push_back(unique);

        const std::vector<MpcTraceRow> rows = read_trace_csv(join(run, "trace.csv"));
        if (rows.size() < 2)
            throw ValidationError(run + ": trace.csv needs at least 2 rows");
        const double d = rows[1].t_s - rows[0].t_s;

        const std::string price_path = join(a.out, unique + "_price.csv");
        const std::string power_path = join(a.out, unique + "_power.csv");
        const std::string temp_path = join(a.out, unique + "_temperature.csv");

        std::FILE* f = std::fopen(price_path.c_str(), "wb");
        if (!f) throw ValidationError("cannot write: " + price_path);
        std::fputs("t_s,price\n", f);
        for (const auto& r : rows) std::fprintf(f, "%.12g,%.12g\n", r.t_s, r.price);
        std::fclose(f);

        f = std::fopen(power_path.c_str(), "wb");
        if (!f) throw ValidationError("cannot write: " + power_path);
        std::fputs("t_s,P_setpoint_W,P_actuated_W\n", f);
        for (const auto& r : rows)
            std::fprintf(f, "%.12g,%.12g,%.12g\n", r.t_s, r.P_setpoint_W, r.P_actuated_W);
        std::fclose(f);

        f = std::fopen(temp_path.c_str(), "wb");
        if (!f) throw ValidationError("cannot write: " + temp_path);
        std::fputs("t_s,T_meas_C,T_pred_C\n", f);
        for (const auto& r : rows)
            std::fprintf(f, "%.12g,%.12g,%.12g\n", r.t_s, r.T_meas_C, r.T_pred_C);
        std::fclose(f);

        double energy_Wh = 0.0, cost = 0.0;
        for (const auto& r : rows) {
            energy_Wh += r.P_actuated_W * d / 3600.0;
            cost += r.P_actuated_W * d / 3600.0 * r.price;
        }

        nlohmann::ordered_json entry;
        entry["dir"] = run;
        entry["rows"] = rows.size();
        entry["block_s"] = d;
        entry["t_end_s"] = rows.back().t_s + d;
        entry["energy_Wh"] = energy_Wh;
        entry["energy_cost"] = cost;
        const std::string metrics_path = join(run, "metrics.json");
        if (std::filesystem::exists(metrics_path)) {
            std::ifstream min(metrics_path);
            entry["metrics"] = nlohmann::ordered_json::parse(min);
        } else {
            entry["metrics"] = nullptr;
        }
        runs.push_back(entry);

        std::printf("run %s: %zu blocks of %g s, actuated energy %.4g Wh\n", run.c_str(),
                    rows.size(), d, energy_Wh);
        std::printf("wrote %s, %s, %s\n", price_path.c_str(), power_path.c_str(),
                    temp_path.c_str());
    }

    nlohmann::ordered_json j;
    j["runs"] = runs;
    const std::string path = join(a.out, "report.json");
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw ValidationError("cannot write: " + path);
    const std::string text = j.dump(2) + "\n";
    std::fwrite(text.data(), 1, text.size(), f);
    std::fclose(f);
    std::printf("wrote %s\n", path.c_str());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"grey-box freezer identification and price-responsive MPC"};
    app.require_subcommand(1);
    const std::vector<std::string> kinds{"A", "B", "C", "D", "E"};
    std::string config_file;

    SimulateArgs sim;
    CLI::App* s = app.add_subcommand("simulate",
                                     "PRBS-excite a simulated freezer and preprocess "
                                     "the recording into an identification series");
    s->add_option("--config", config_file, "flat key=value file of these options");
    s->add_option("--params", sim.params_path, "plant truth fixture (kind + parameters)")
        ->required()
        ->check(CLI::ExistingFile);
    s->add_option("--kind", sim.kind, "override the fixture's model kind")
        ->check(CLI::IsMember(kinds));
    s->add_option("--hours", sim.hours, "run length, hours")->check(CLI::PositiveNumber);
    s->add_option("--d", sim.d_s, "output sample period, s")->check(CLI::PositiveNumber);
    s->add_option("--base", sim.base_s, "PRBS base period, s")->check(CLI::PositiveNumber);
    s->add_option("--min-pulse", sim.min_pulse_s, "shortest surviving run, s");
    s->add_option("--troom", sim.T_r_C, "room temperature, C");
    s->add_option("--seed", sim.seed, "RNG seed");
    s->add_option("--out", sim.out, "output directory");
    s->callback([&] { cmd_simulate(sim); });

    IdentifyArgs idf;
    CLI::App* i = app.add_subcommand("identify", "maximum-likelihood fit of a model kind "
                                                 "to an identification series");
    i->add_option("--config", config_file, "flat key=value file of these options");
    i->add_option("--data", idf.data_path, "identification series CSV")
        ->required()
        ->check(CLI::ExistingFile);
    i->add_option("--kind", idf.kind, "model kind to fit")->check(CLI::IsMember(kinds));
    i->add_option("--init", idf.init_path, "initial parameter fixture (defaults to a "
                                           "coarse engineering guess)")
        ->check(CLI::ExistingFile);
    i->add_option("--starts", idf.starts, "multistart count")->check(CLI::PositiveNumber);
    i->add_option("--seed", idf.seed, "RNG seed for start perturbations");
    i->add_option("--out", idf.out, "output directory");
    i->callback([&] { cmd_identify(idf); });

    ValidateArgs val;
    CLI::App* v = app.add_subcommand("validate", "residual whiteness and nested deviance "
                                                 "test of two fits on shared data");
    v->add_option("--config", config_file, "flat key=value file of these options");
    v->add_option("--fit-a", val.fit_a, "smaller model fit JSON")->check(CLI::ExistingFile);
    v->add_option("--fit-b", val.fit_b, "bigger model fit JSON")->check(CLI::ExistingFile);
    v->add_option("--data", val.data_path, "shared evaluation series CSV")
        ->check(CLI::ExistingFile);
    v->add_option("--loglik-a", val.loglik_a, "skip refiltering: smaller log-likelihood");
    v->add_option("--loglik-b", val.loglik_b, "skip refiltering: bigger log-likelihood");
    v->add_option("--df", val.df, "deviance degrees of freedom (default: parameter-count "
                                  "difference)");
    v->add_option("--out", val.out, "output directory");
    v->callback([&] { cmd_validate(val); });

    PredictArgs pre;
    CLI::App* p = app.add_subcommand("predict", "fixed-horizon open-loop prediction "
                                                "residuals of a fitted model");
    p->add_option("--config", config_file, "flat key=value file of these options");
    p->add_option("--fit", pre.fit_path, "model fit JSON")->check(CLI::ExistingFile);
    p->add_option("--params", pre.params_path, "model parameter fixture")
        ->check(CLI::ExistingFile);
    p->add_option("--data", pre.data_path, "validation series CSV")
        ->required()
        ->check(CLI::ExistingFile);
    p->add_option("--horizon-min", pre.horizon_min, "prediction horizon, minutes")
        ->check(CLI::PositiveNumber);
    p->add_option("--out", pre.out, "output directory");
    p->callback([&] { cmd_predict(pre); });

    MpcArgs mpc;
    CLI::App* m = app.add_subcommand("mpc", "closed-loop receding-horizon run against a "
                                            "simulated plant, with thermostat baseline");
    m->add_option("--config", config_file, "flat key=value file of these options");
    m->add_option("--plant", mpc.plant_path, "plant truth fixture")
        ->required()
        ->check(CLI::ExistingFile);
    m->add_option("--fit", mpc.fit_path, "controller model fit JSON")
        ->check(CLI::ExistingFile);
    m->add_option("--params", mpc.params_path, "controller model parameter fixture")
        ->check(CLI::ExistingFile);
    m->add_option("--price", mpc.price_path, "price knots CSV")
        ->required()
        ->check(CLI::ExistingFile);
    m->add_option("--hours", mpc.hours, "run length, hours")->check(CLI::PositiveNumber);
    m->add_option("--d", mpc.cfg.d_s, "control block length, s");
    m->add_option("--horizon", mpc.cfg.N, "prediction horizon, blocks");
    m->add_option("--tmin", mpc.cfg.T_min_C, "lower comfort bound, C");
    m->add_option("--tmax", mpc.cfg.T_max_C, "upper comfort bound, C");
    m->add_option("--pmax", mpc.cfg.P_max_W, "rated compressor power, W");
    m->add_option("--slack-weight", mpc.cfg.slack_weight,
                  "comfort violation weight (0 = 1000x the peak price)");
    m->add_option("--min-pulse", mpc.cfg.min_pulse_s, "narrowest actuated pulse, s");
    m->add_flag("--no-flip", mpc.no_flip, "pulse every block at its start");
    m->add_option("--lin-tol", mpc.cfg.lin_tol_C, "relinearization tolerance, C");
    m->add_option("--lin-iters", mpc.cfg.lin_max_iters, "relinearization cap");
    m->add_option("--solve-delay", mpc.cfg.solve_delay_s, "actuation lag, s");
    m->add_option("--band-low", mpc.band_low, "baseline thermostat lower bound "
                                              "(default tmax - 2)");
    m->add_option("--band-high", mpc.band_high, "baseline thermostat upper bound "
                                                "(default tmax)");
    m->add_option("--seed", mpc.seed, "plant RNG seed");
    m->add_option("--out", mpc.out, "output directory");
    m->callback([&] { cmd_mpc(mpc); });

    ReportArgs rep;
    CLI::App* r = app.add_subcommand("report", "plot-ready CSVs and a consolidated JSON "
                                               "from closed-loop run directories");
    r->add_option("--config", config_file, "flat key=value file of these options");
    r->add_option("--run", rep.runs, "run directory containing trace.csv (repeatable)")
        ->required()
        ->check(CLI::ExistingDirectory);
    r->add_option("--out", rep.out, "output directory");
    r->callback([&] { cmd_report(rep); });

    // The parser resolves a config option only on the root app, never on a
    // subcommand, so the flat key=value file is expanded into ordinary
    // tokens up front. Keys already given on the command line are skipped:
    // explicit flags win over the file.
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    std::string config_path;
    for (std::size_t i = 0; i < args.size();) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) {
                std::fprintf(stderr, "--config expects a file path\n");
                return 2;
            }
            config_path = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                       args.begin() + static_cast<std::ptrdiff_t>(i + 2));
        } else if (args[i].rfind("--config=", 0) == 0) {
            config_path = args[i].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
        } else {
            ++i;
        }
    }
    if (!config_path.empty()) {
        KvMap kv;
        try {
            kv = read_kv_file(config_path);
        } catch (const std::exception& e) {
            std::fprintf(stderr, "error: %s\n", e.what());
            return 2;
        }
        for (const auto& [key, value] : kv) {
            const std::string flag = "--" + key;
            bool given = false;
            for (const std::string& a : args)
                if (a == flag || a.rfind(flag + "=", 0) == 0) {
                    given = true;
                    break;
                }
            // The attached form works for value options and flags alike.
            if (!given) args.push_back(flag + "=" + value);
        }
    }

    try {
        app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const DomainError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
