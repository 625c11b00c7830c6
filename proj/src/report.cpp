#include "coldbox/report.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "coldbox/errors.hpp"

namespace coldbox {

namespace {

using ojson = nlohmann::ordered_json;

void write_text_file(const std::string& text, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw ValidationError("cannot write: " + path);
    std::fwrite(text.data(), 1, text.size(), f);
    std::fclose(f);
}

ojson parse_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open: " + path);
    try {
        return ojson::parse(in);
    } catch (const std::exception& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

std::vector<double> split_numeric_line(const std::string& line, std::size_t expect,
                                       const std::string& path, std::size_t lineno) {
    std::vector<double> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        const std::string cell =
            line.substr(start, comma == std::string::npos ? comma : comma - start);
        char* end = nullptr;
        const double v = std::strtod(cell.c_str(), &end);
        if (end == cell.c_str()) {
            throw ValidationError(path + ":" + std::to_string(lineno) +
                                  ": not a number: " + cell);
        }
        out.push_back(v);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (out.size() != expect) {
        throw ValidationError(path + ":" + std::to_string(lineno) + ": expected " +
                              std::to_string(expect) + " columns, got " +
                              std::to_string(out.size()));
    }
    return out;
}

void expect_header(std::ifstream& in, const std::string& want, const std::string& path) {
    std::string line;
    if (!std::getline(in, line)) throw ValidationError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != want) {
        throw ValidationError(path + ": expected header `" + want + "`, got `" + line + "`");
    }
}

void write_row(std::FILE* f, const double* vals, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        std::fprintf(f, "%s%.12g", i ? "," : "", vals[i]);
    std::fputc('\n', f);
}

} // namespace

std::string fit_result_json(const FitResult& fit) {
    ojson j;
    j["kind"] = kind_name(fit.kind);
    j["loglik"] = fit.loglik;
    j["converged"] = fit.converged;
    j["iterations"] = fit.iterations;
    j["multistart_index"] = fit.multistart_index;

    ojson params;
    const auto names = parameter_names(fit.kind);
    const auto values = pack_parameters(fit.kind, fit.params);
    for (std::size_t i = 0; i < names.size(); ++i) params[names[i]] = values[i];
    params["v"] = fit.params.v;
    j["parameters"] = params;

    const std::size_t n = fit.residuals.size();
    double mean = 0.0, sd = 0.0;
    if (n > 0) {
        for (double e : fit.residuals) mean += e;
        mean /= static_cast<double>(n);
        for (double e : fit.residuals) sd += (e - mean) * (e - mean);
        sd = n > 1 ? std::sqrt(sd / static_cast<double>(n - 1)) : 0.0;
    }
    j["residuals"] = ojson{{"count", n}, {"mean", mean}, {"std", sd}};

    auto starts = ojson::array();
    for (const auto& s : fit.starts) {
        starts.push_back(ojson{{"index", s.index},
                               {"loglik", s.loglik},
                               {"iterations", s.iterations},
                               {"converged", s.converged},
                               {"failure", s.failure}});
    }
    j["starts"] = starts;
    return j.dump(2) + "\n";
}

void write_fit_result_json(const FitResult& fit, const std::string& path) {
    write_text_file(fit_result_json(fit), path);
}

LoadedParameters read_fit_json(const std::string& path) {
    const ojson j = parse_json_file(path);
    if (!j.contains("kind") || !j.contains("parameters"))
        throw ValidationError(path + ": missing `kind` or `parameters`");
    LoadedParameters out;
    out.kind = kind_from_string(j["kind"].get<std::string>());
    const auto& pj = j["parameters"];
    std::vector<double> free_params;
    for (const auto& name : parameter_names(out.kind)) {
        if (!pj.contains(name))
            throw ValidationError(path + ": missing parameter `" + name + "`");
        free_params.push_back(pj[name].get<double>());
    }
    if (!pj.contains("v")) throw ValidationError(path + ": missing parameter `v`");
    out.params = unpack_parameters(out.kind, free_params, pj["v"].get<double>());
    validate_parameters(out.kind, out.params);
    return out;
}

std::string metrics_json(const RunMetrics& m) {
    ojson j;
    j["m0"] = m.m0_cost;
    j["m1_Wh"] = m.m1_Wh;
    j["m1_truncated"] = m.m1_truncated;
    j["m2_C"] = m.m2_C;
    j["m3_C"] = m.m3_C;
    j["round_trip"] = m.round_trip;
    j["transitions"] = m.transitions;
    j["mean_solve_ms"] = m.mean_solve_ms;
    j["max_solve_ms"] = m.max_solve_ms;
    return j.dump(2) + "\n";
}

void write_metrics_json(const RunMetrics& m, const std::string& path) {
    write_text_file(metrics_json(m), path);
}

void write_trace_csv(const MpcTrace& trace, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw ValidationError("cannot write: " + path);
    std::fputs("t_s,price,P_setpoint_W,P_actuated_W,T_meas_C,T_pred_C,slack_C,solve_ms\n", f);
    for (const auto& r : trace.rows) {
        const double row[8] = {r.t_s,      r.price,    r.P_setpoint_W, r.P_actuated_W,
                               r.T_meas_C, r.T_pred_C, r.slack_C,      r.solve_ms};
        write_row(f, row, 8);
    }
    std::fclose(f);
}

std::vector<MpcTraceRow> read_trace_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open: " + path);
    expect_header(in, "t_s,price,P_setpoint_W,P_actuated_W,T_meas_C,T_pred_C,slack_C,solve_ms",
                  path);
    std::vector<MpcTraceRow> rows;
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto v = split_numeric_line(line, 8, path, lineno);
        rows.push_back(MpcTraceRow{v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7]});
    }
    return rows;
}

PriceSignal read_price_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open: " + path);
    expect_header(in, "t_s,price", path);
    PriceSignal prices;
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto v = split_numeric_line(line, 2, path, lineno);
        prices.t_s.push_back(v[0]);
        prices.price.push_back(v[1]);
    }
    prices.validate();
    return prices;
}

void write_price_csv(const PriceSignal& prices, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw ValidationError("cannot write: " + path);
    std::fputs("t_s,price\n", f);
    for (std::size_t k = 0; k < prices.t_s.size(); ++k) {
        const double row[2] = {prices.t_s[k], prices.price[k]};
        write_row(f, row, 2);
    }
    std::fclose(f);
}

} // namespace coldbox
