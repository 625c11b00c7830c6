#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "coldbox/kalman.hpp"
#include "coldbox/thermal.hpp"
#include "coldbox/timeseries.hpp"

namespace coldbox {

struct NelderMeadResult {
    std::vector<double> x;
    double fx = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Downhill-simplex minimizer (reflection 1, expansion 2, contraction 0.5,
/// shrink 0.5). Stops when the simplex max-norm diameter drops below
/// `diameter_tol` or after `max_iter` iterations.
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             const std::vector<double>& x0, double init_step,
                             double diameter_tol = 1e-6, int max_iter = 2000);

/// Box bounds in original parameter space, aligned with the canonical
/// free-parameter order of the kind, with the measurement noise std
/// appended as the final coordinate.
struct FitBounds {
    std::vector<double> lower;
    std::vector<double> upper;
};

/// Wide defaults: capacities [1, 1e7] J/K, resistances [1e-4, 1e3] K/W,
/// conversion gain [1e-3, 20] (capped at eta_cap for the Carnot kind),
/// noise exponents [-30, 5], measurement noise std [1e-5, 5] degC.
FitBounds default_bounds(ModelKind kind);

/// Every kind's innovations likelihood is invariant under the rescaling
/// C_i -> k*C_i, R_j -> R_j/k, gain -> k*gain: drift entries are all of the
/// form 1/(C*R) or gain/C, and the noise scales do not involve the
/// capacities. Data therefore never determines the overall capacity scale,
/// only products C*R, the gain-to-capacity ratios and the static gains.
/// gauge_align returns the member of that one-parameter family through `p`
/// closest to `reference` in log coordinates, with the shift shrunk so every
/// coordinate stays inside `bounds`. Throws ValidationError when no shift
/// along the family keeps all coordinates inside `bounds`.
ThermalParameters gauge_align(ModelKind kind, const ThermalParameters& p,
                              const ThermalParameters& reference,
                              const FitBounds& bounds);

struct StartDiagnostic {
    int index = 0;
    double loglik = kLoglikFailed;
    int iterations = 0;
    bool converged = false;
    std::string failure;  // nonempty when the start never found a valid likelihood
};

struct FitResult {
    ModelKind kind = ModelKind::A;
    ThermalParameters params;
    double loglik = kLoglikFailed;
    std::vector<double> residuals;   // one-step innovations at the optimum
    std::vector<double> variances;   // innovation variances at the optimum
    bool converged = false;
    int iterations = 0;              // iterations spent on the winning start
    int multistart_index = -1;       // which start won (0 is the unperturbed one)
    std::vector<StartDiagnostic> starts;
};

/// Maximum-likelihood fit of the free parameters plus measurement noise.
/// Positive parameters are optimized in log space, noise exponents as-is.
/// Start 0 is theta0 itself; start j perturbs every optimizer coordinate by
/// ln(U(0.7, 1.3)) drawn from a substream keyed on (seed, "mle-start", j).
/// The winner is the start with the highest likelihood (ties break toward
/// the lowest start index), reported after gauge_align against theta0 so the
/// scale split, which the likelihood cannot see, stays anchored to the
/// caller's guess instead of drifting with the search path. Throws
/// NumericalError when every start fails.
FitResult mle_fit(ModelKind kind, const TimeSeries& data,
                  const ThermalParameters& theta0, const FitBounds& bounds,
                  int n_starts, std::uint64_t seed = 0);

/// Residuals of fixed-horizon open-loop predictions: anchor the filtered
/// state at each sample k, propagate the mean `horizon_steps` ahead with
/// the recorded inputs (no measurement updates), and difference against the
/// recorded temperature. One-step residuals equal the filter innovations.
std::vector<double> k_step_residuals(ModelKind kind, const ThermalParameters& params,
                                     const TimeSeries& data, int horizon_steps);

} // namespace coldbox
