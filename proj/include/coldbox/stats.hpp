#pragma once

#include <cstddef>
#include <vector>

namespace coldbox {

/// Chi-squared CDF: the regularized lower incomplete gamma P(df/2, x/2),
/// series expansion for small x and Lentz continued fraction otherwise.
/// Absolute error well under 1e-10 across the tested range.
double chi2_cdf(double x, int df);

/// Standard normal quantile (Acklam's rational approximation, |err| < 1.2e-9).
double normal_quantile(double p);

/// Two-sided asymptotic whiteness band for a sample ACF of a white sequence
/// of length n: z_{(1+alpha)/2} / sqrt(n). Computed, not hard-coded, so
/// non-default confidence levels work.
double whiteness_threshold(std::size_t n, double alpha = 0.95);

/// Sample autocorrelation of the (mean-centered) residuals for lags
/// 0..max_lag; out[0] == 1. Throws ValidationError on a constant sequence.
std::vector<double> residual_acf(const std::vector<double>& residuals,
                                 std::size_t max_lag);

struct DevianceResult {
    double D = 0.0;
    int df = 0;
    double p_value = 1.0;
    bool reject_null = false;
    /// Set when D < 0: the nesting was violated or an optimizer
    /// under-converged; p is clamped to 1 in that case.
    bool negative_deviance_warning = false;
};

/// Likelihood-ratio test of a nested pair: D = 2*(loglik_big - loglik_small),
/// p = 1 - chi2_cdf(D, df), rejecting when p < 1 - alpha.
DevianceResult deviance_test(double loglik_small, double loglik_big, int df,
                             double alpha = 0.95);

} // namespace coldbox
