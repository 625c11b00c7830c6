#include "coldbox/stats.hpp"

#include <cmath>
#include <limits>

#include "coldbox/errors.hpp"
#include "coldbox/kernels.hpp"

namespace coldbox {

namespace {

// Regularized lower incomplete gamma P(a, x) by power series; valid and
// fast for x < a + 1.
double gamma_p_series(double a, double x) {
    double ap = a;
    double term = 1.0 / a;
    double sum = term;
    for (int i = 0; i < 500; ++i) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a, x) by modified Lentz continued
// fraction; valid for x >= a + 1.
double gamma_q_continued_fraction(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

} // namespace

double chi2_cdf(double x, int df) {
    if (df < 1) throw ValidationError("chi2_cdf: df must be >= 1");
    if (x < 0.0) throw ValidationError("chi2_cdf: x must be nonnegative");
    if (x == 0.0) return 0.0;
    const double a = 0.5 * df;
    const double xs = 0.5 * x;
    if (xs < a + 1.0) return gamma_p_series(a, xs);
    return 1.0 - gamma_q_continued_fraction(a, xs);
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw ValidationError("normal_quantile: p must be in (0,1)");

    // Acklam's piecewise rational approximation.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double dd[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;

    double q, r;
    if (p < plow) {
        q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
    }
    if (p > 1.0 - plow) {
        q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
    }
    q = p - 0.5;
    r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double whiteness_threshold(std::size_t n, double alpha) {
    if (n == 0) throw ValidationError("whiteness_threshold: n must be positive");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ValidationError("whiteness_threshold: alpha must be in (0,1)");
    return normal_quantile(0.5 * (1.0 + alpha)) / std::sqrt(static_cast<double>(n));
}

std::vector<double> residual_acf(const std::vector<double>& residuals,
                                 std::size_t max_lag) {
    const std::size_t n = residuals.size();
    if (n < 2) throw ValidationError("residual_acf: need at least 2 residuals");
    if (max_lag >= n) throw ValidationError("residual_acf: max_lag must be < N");

    const double mean = kernels::sum(residuals.data(), n) / static_cast<double>(n);
    std::vector<double> centered(n);
    for (std::size_t k = 0; k < n; ++k) centered[k] = residuals[k] - mean;

    const double denom = kernels::dot(centered.data(), centered.data(), n);
    if (!(denom > 0.0)) throw ValidationError("residual_acf: constant residual sequence");

    std::vector<double> rho(max_lag + 1);
    rho[0] = 1.0;
    for (std::size_t lag = 1; lag <= max_lag; ++lag)
        rho[lag] = kernels::dot(centered.data(), centered.data() + lag, n - lag) / denom;
    return rho;
}

DevianceResult deviance_test(double loglik_small, double loglik_big, int df,
                             double alpha) {
    if (df < 1) throw ValidationError("deviance_test: df must be >= 1");
    DevianceResult r;
    r.df = df;
    r.D = 2.0 * (loglik_big - loglik_small);
    if (r.D < 0.0) {
        r.negative_deviance_warning = true;
        r.p_value = 1.0;
        r.reject_null = false;
        return r;
    }
    r.p_value = 1.0 - chi2_cdf(r.D, df);
    r.reject_null = r.p_value < 1.0 - alpha;
    return r;
}

} // namespace coldbox
