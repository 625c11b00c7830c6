#include "coldbox/timeseries.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "coldbox/errors.hpp"

namespace coldbox {

namespace {

double uniform_step(const std::vector<double>& t, const char* what) {
    if (t.size() < 2) throw ValidationError(std::string(what) + ": need at least 2 rows");
    const double d = t[1] - t[0];
    if (!(d > 0.0)) throw ValidationError(std::string(what) + ": time not increasing");
    for (std::size_t k = 1; k < t.size(); ++k) {
        const double dk = t[k] - t[k - 1];
        if (std::abs(dk - d) > 1e-9 * std::max(1.0, std::abs(d))) {
            std::ostringstream msg;
            msg << what << ": nonuniform spacing at row " << k << " (" << dk
                << " vs " << d << ")";
            throw ValidationError(msg.str());
        }
    }
    return d;
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

double TimeSeries::sample_period() const { return uniform_step(t_s, "TimeSeries"); }

void TimeSeries::validate() const {
    if (P_W.size() != t_s.size() || Tr_C.size() != t_s.size() || T_C.size() != t_s.size())
        throw ValidationError("TimeSeries: column lengths differ");
    (void)sample_period();
    for (std::size_t k = 0; k < t_s.size(); ++k) {
        if (!std::isfinite(P_W[k]) || !std::isfinite(Tr_C[k]) || !std::isfinite(T_C[k]))
            throw ValidationError("TimeSeries: non-finite value at row " + std::to_string(k));
    }
}

double RawRecording::step() const { return uniform_step(t_s, "RawRecording"); }

void RawRecording::validate() const {
    if (P_W.size() != t_s.size() || Tr_C.size() != t_s.size() ||
        T1_C.size() != t_s.size() || T2_C.size() != t_s.size())
        throw ValidationError("RawRecording: column lengths differ");
    (void)step();
    for (std::size_t k = 0; k < t_s.size(); ++k) {
        if (!std::isfinite(P_W[k]) || !std::isfinite(Tr_C[k]) ||
            !std::isfinite(T1_C[k]) || !std::isfinite(T2_C[k]))
            throw ValidationError("RawRecording: non-finite value at row " +
                                  std::to_string(k));
    }
}

TimeSeries read_timeseries_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open: " + path);
    expect_header(in, "t_s,P_W,Tr_C,T_C", path);
    TimeSeries ts;
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto v = split_numeric_line(line, 4, path, lineno);
        ts.t_s.push_back(v[0]);
        ts.P_W.push_back(v[1]);
        ts.Tr_C.push_back(v[2]);
        ts.T_C.push_back(v[3]);
    }
    ts.validate();
    return ts;
}

void write_timeseries_csv(const TimeSeries& ts, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw ValidationError("cannot write: " + path);
    std::fputs("t_s,P_W,Tr_C,T_C\n", f);
    for (std::size_t k = 0; k < ts.size(); ++k) {
        const double row[4] = {ts.t_s[k], ts.P_W[k], ts.Tr_C[k], ts.T_C[k]};
        write_row(f, row, 4);
    }
    std::fclose(f);
}

RawRecording read_raw_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open: " + path);
    expect_header(in, "t_s,P_W,Tr_C,T1_C,T2_C", path);
    RawRecording raw;
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto v = split_numeric_line(line, 5, path, lineno);
        raw.t_s.push_back(v[0]);
        raw.P_W.push_back(v[1]);
        raw.Tr_C.push_back(v[2]);
        raw.T1_C.push_back(v[3]);
        raw.T2_C.push_back(v[4]);
    }
    return raw;
}

void write_raw_csv(const RawRecording& raw, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw ValidationError("cannot write: " + path);
    std::fputs("t_s,P_W,Tr_C,T1_C,T2_C\n", f);
    for (std::size_t k = 0; k < raw.size(); ++k) {
        const double row[5] = {raw.t_s[k], raw.P_W[k], raw.Tr_C[k], raw.T1_C[k], raw.T2_C[k]};
        write_row(f, row, 5);
    }
    std::fclose(f);
}

} // namespace coldbox
