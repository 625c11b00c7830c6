#pragma once

#include <string>
#include <vector>

#include "coldbox/mle.hpp"
#include "coldbox/mpc.hpp"

namespace coldbox {

/// Fit report as JSON: kind, named parameters in canonical order with the
/// measurement noise std under "v", log-likelihood, convergence diagnostics,
/// per-start table and a residual summary. Serialization is deterministic,
/// so byte-identical reruns hold for identical fits.
std::string fit_result_json(const FitResult& fit);
void write_fit_result_json(const FitResult& fit, const std::string& path);

/// Reads back the model-defining subset of a fit report (kind, parameters,
/// v). Accepts exactly the files write_fit_result_json produces.
LoadedParameters read_fit_json(const std::string& path);

/// Closed-loop score card as JSON; field names match RunMetrics.
std::string metrics_json(const RunMetrics& m);
void write_metrics_json(const RunMetrics& m, const std::string& path);

/// Block-grid trace table:
///   t_s,price,P_setpoint_W,P_actuated_W,T_meas_C,T_pred_C,slack_C,solve_ms
void write_trace_csv(const MpcTrace& trace, const std::string& path);
/// Rows only; the config and per-second command are not stored in the CSV.
std::vector<MpcTraceRow> read_trace_csv(const std::string& path);

/// Piecewise-constant price knots as `t_s,price`.
PriceSignal read_price_csv(const std::string& path);
void write_price_csv(const PriceSignal& prices, const std::string& path);

} // namespace coldbox
