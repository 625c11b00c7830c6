#pragma once

#include <string>
#include <vector>

#include "coldbox/smallmat.hpp"
#include "coldbox/thermal.hpp"
#include "coldbox/timeseries.hpp"

namespace coldbox {

struct KalmanBelief {
    Vec x;  // state mean, degC
    Mat P;  // covariance, degC^2

    /// Symmetry and positive semidefiniteness (eigenvalues >= -1e-10).
    void validate() const;
};

struct KfStepResult {
    KalmanBelief belief;
    double innovation = 0.0;           // eps = y - C x_pred
    double innovation_variance = 0.0;  // R = C P_pred C' + v^2
};

/// One predict+update cycle of the linear filter. The covariance update
/// runs in information form, (P_pred^-1 + C'C/v^2)^-1, then symmetrizes;
/// innovation variances below 1e-12 degC^2 raise NumericalError so an
/// optimizer can discard the parameter set.
KfStepResult kf_step(const KalmanBelief& belief, const DiscreteStateSpace& dss,
                     double u_Tr, double u_P, double y);

/// Extended variant for the Carnot-input kind: the mean propagates through
/// the nonlinear Euler step, the covariance through its state Jacobian;
/// the measurement update is identical to kf_step. A Carnot domain
/// violation during prediction raises NumericalError like any other
/// filtering failure, so a fit can discard the parameter draw.
KfStepResult ekf_step(const KalmanBelief& belief, const ThermalParameters& params,
                      double u_Tr, double u_P, double y, double d);

/// Returned instead of a throw when a likelihood evaluation dies
/// numerically: large, negative, and finite so simplex arithmetic survives.
inline constexpr double kLoglikFailed = -1e100;

struct LoglikResult {
    double loglik = kLoglikFailed;
    std::vector<double> residuals;   // innovation sequence, one per step k >= 1
    std::vector<double> variances;   // innovation variances R_k
    bool ok = false;
    std::string failure;             // set when !ok
};

/// Innovations-form Gaussian log-likelihood
///   loglik = -1/2 sum_k [ eps_k^2 / R_k + ln(2 pi R_k) ]
/// with the filter started at x0 = y0 * 1, P0 = I and the sum running from
/// the second sample. Numerical failures yield the sentinel, not a throw.
LoglikResult innovations_loglik(ModelKind kind, const ThermalParameters& params,
                                const TimeSeries& data);

} // namespace coldbox
