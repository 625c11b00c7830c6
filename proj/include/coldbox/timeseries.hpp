#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace coldbox {

/// Preprocessed identification data at a uniform sample period: processed
/// compressor power, room temperature and the (averaged) freezer
/// temperature. Column-of-arrays so the filter can stream through it.
struct TimeSeries {
    std::vector<double> t_s;
    std::vector<double> P_W;
    std::vector<double> Tr_C;
    std::vector<double> T_C;

    std::size_t size() const { return t_s.size(); }

    /// Uniform spacing, validated to 1e-9 relative tolerance.
    double sample_period() const;

    /// Strictly increasing uniform time base, equal column lengths, finite
    /// values. Throws ValidationError.
    void validate() const;
};

/// Raw per-second plant output before preprocessing: instantaneous
/// electrical power (with auxiliary draw and start-up spikes) and two
/// independent thermistor channels.
struct RawRecording {
    std::vector<double> t_s;
    std::vector<double> P_W;
    std::vector<double> Tr_C;
    std::vector<double> T1_C;
    std::vector<double> T2_C;

    std::size_t size() const { return t_s.size(); }
    double step() const;

    /// Same contract as TimeSeries::validate.
    void validate() const;
};

// CSV schemas: `t_s,P_W,Tr_C,T_C` and `t_s,P_W,Tr_C,T1_C,T2_C`, decimal
// point, LF endings.
TimeSeries read_timeseries_csv(const std::string& path);
void write_timeseries_csv(const TimeSeries& ts, const std::string& path);
RawRecording read_raw_csv(const std::string& path);
void write_raw_csv(const RawRecording& raw, const std::string& path);

} // namespace coldbox
