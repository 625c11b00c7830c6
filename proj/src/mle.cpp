#include "coldbox/mle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "coldbox/errors.hpp"
#include "coldbox/rng.hpp"

namespace coldbox {

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             const std::vector<double>& x0, double init_step,
                             double diameter_tol, int max_iter) {
    const std::size_t m = x0.size();
    if (m == 0) throw ValidationError("nelder_mead: empty start point");
    if (!(init_step > 0.0)) throw ValidationError("nelder_mead: init_step must be positive");

    struct Vertex {
        std::vector<double> x;
        double fx;
    };
    std::vector<Vertex> s(m + 1);
    s[0] = {x0, f(x0)};
    for (std::size_t i = 0; i < m; ++i) {
        std::vector<double> xi = x0;
        xi[i] += init_step;
        s[i + 1] = {std::move(xi), 0.0};
        s[i + 1].fx = f(s[i + 1].x);
    }

    const auto by_value = [](const Vertex& a, const Vertex& b) { return a.fx < b.fx; };
    std::sort(s.begin(), s.end(), by_value);

    NelderMeadResult out;
    for (out.iterations = 0; out.iterations < max_iter; ++out.iterations) {
        double diameter = 0.0;
        for (std::size_t i = 1; i <= m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                diameter = std::max(diameter, std::abs(s[i].x[j] - s[0].x[j]));
        if (diameter < diameter_tol) {
            out.converged = true;
            break;
        }

        std::vector<double> c(m, 0.0);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) c[j] += s[i].x[j];
        for (std::size_t j = 0; j < m; ++j) c[j] /= static_cast<double>(m);

        const std::vector<double>& xw = s[m].x;
        std::vector<double> xr(m);
        for (std::size_t j = 0; j < m; ++j) xr[j] = c[j] + (c[j] - xw[j]);
        const double fr = f(xr);

        bool shrink = false;
        if (fr < s[0].fx) {
            std::vector<double> xe(m);
            for (std::size_t j = 0; j < m; ++j) xe[j] = c[j] + 2.0 * (c[j] - xw[j]);
            const double fe = f(xe);
            if (fe < fr) {
                s[m] = {std::move(xe), fe};
            } else {
                s[m] = {std::move(xr), fr};
            }
        } else if (fr < s[m - 1].fx) {
            s[m] = {std::move(xr), fr};
        } else if (fr < s[m].fx) {
            std::vector<double> xc(m);
            for (std::size_t j = 0; j < m; ++j) xc[j] = c[j] + 0.5 * (xr[j] - c[j]);
            const double fc = f(xc);
            if (fc <= fr) {
                s[m] = {std::move(xc), fc};
            } else {
                shrink = true;
            }
        } else {
            std::vector<double> xc(m);
            for (std::size_t j = 0; j < m; ++j) xc[j] = c[j] + 0.5 * (xw[j] - c[j]);
            const double fc = f(xc);
            if (fc < s[m].fx) {
                s[m] = {std::move(xc), fc};
            } else {
                shrink = true;
            }
        }
        if (shrink) {
            for (std::size_t i = 1; i <= m; ++i) {
                for (std::size_t j = 0; j < m; ++j)
                    s[i].x[j] = s[0].x[j] + 0.5 * (s[i].x[j] - s[0].x[j]);
                s[i].fx = f(s[i].x);
            }
        }
        std::sort(s.begin(), s.end(), by_value);
    }

    out.x = s[0].x;
    out.fx = s[0].fx;
    return out;
}

namespace {

// Optimizer coordinates: log for the positive physical parameters and the
// measurement noise std, identity for the noise exponents.
struct Coordinates {
    ModelKind kind;
    std::vector<bool> is_log;     // per coordinate, v included last
    std::vector<std::string> names;
    ThermalParameters base;       // carries fields the optimizer never touches

    std::size_t dim() const { return is_log.size(); }

    std::vector<double> to_z(const ThermalParameters& p) const {
        std::vector<double> z = pack_parameters(kind, p);
        z.push_back(p.v);
        for (std::size_t i = 0; i < z.size(); ++i)
            if (is_log[i]) z[i] = std::log(z[i]);
        return z;
    }

    ThermalParameters to_theta(const std::vector<double>& z) const {
        std::vector<double> free(z.begin(), z.end() - 1);
        for (std::size_t i = 0; i + 1 < z.size(); ++i)
            if (is_log[i]) free[i] = std::exp(free[i]);
        const double v = std::exp(z.back());
        ThermalParameters p = unpack_parameters(kind, free, v);
        p.eta_cap = base.eta_cap;
        return p;
    }
};

Coordinates make_coordinates(ModelKind kind, const ThermalParameters& base) {
    Coordinates co;
    co.kind = kind;
    co.base = base;
    co.names = parameter_names(kind);
    co.names.emplace_back("v");
    const int n_free = parameter_count(kind);
    const int n_alpha = (kind == ModelKind::D) ? 3 : state_dim(kind);
    const int n_phys = n_free - n_alpha - 1;
    co.is_log.assign(co.names.size(), true);
    for (int i = 0; i < n_alpha; ++i)
        co.is_log[static_cast<std::size_t>(n_phys + i)] = false;
    return co;
}

struct ZBounds {
    std::vector<double> lo, hi;
};

ZBounds to_z_bounds(const Coordinates& co, const FitBounds& b) {
    if (b.lower.size() != co.dim() || b.upper.size() != co.dim())
        throw ValidationError("mle_fit: bounds length must match the free parameter "
                              "count plus the noise std");
    ZBounds zb{b.lower, b.upper};
    for (std::size_t i = 0; i < co.dim(); ++i) {
        if (!(b.lower[i] < b.upper[i]))
            throw ValidationError("mle_fit: empty bound interval for " + co.names[i]);
        if (co.is_log[i]) {
            if (!(b.lower[i] > 0.0))
                throw ValidationError("mle_fit: lower bound for " + co.names[i] +
                                      " must be positive");
            zb.lo[i] = std::log(b.lower[i]);
            zb.hi[i] = std::log(b.upper[i]);
        }
    }
    return zb;
}

constexpr double kFailedEval = 1e12;

} // namespace

FitBounds default_bounds(ModelKind kind) {
    const Coordinates co = make_coordinates(kind, ThermalParameters{});
    FitBounds b;
    b.lower.resize(co.dim());
    b.upper.resize(co.dim());
    for (std::size_t i = 0; i < co.dim(); ++i) {
        const std::string& name = co.names[i];
        if (name[0] == 'C' && name != "COP") {
            b.lower[i] = 1.0;
            b.upper[i] = 1e7;
        } else if (name[0] == 'R') {
            b.lower[i] = 1e-4;
            b.upper[i] = 1e3;
        } else if (name == "COP") {
            b.lower[i] = 1e-3;
            b.upper[i] = 20.0;
        } else if (name == "eta") {
            b.lower[i] = 1e-3;
            b.upper[i] = kind == ModelKind::E ? 1.5 : 20.0;
        } else if (name == "v") {
            b.lower[i] = 1e-5;
            b.upper[i] = 5.0;
        } else {  // noise exponents, already in log scale
            b.lower[i] = -30.0;
            b.upper[i] = 5.0;
        }
    }
    return b;
}

ThermalParameters gauge_align(ModelKind kind, const ThermalParameters& p,
                              const ThermalParameters& reference,
                              const FitBounds& bounds) {
    validate_parameters(kind, p);
    validate_parameters(kind, reference);
    const std::vector<std::string> names = parameter_names(kind);
    if (bounds.lower.size() != names.size() + 1 ||
        bounds.upper.size() != names.size() + 1)
        throw ValidationError("gauge_align: bounds length must match the free "
                              "parameter count plus the noise std");

    // Scale weight of each coordinate: +1 where the family multiplies by k,
    // -1 where it divides, 0 for the noise exponents.
    const auto weight = [](const std::string& n) -> int {
        if (n == "COP" || n == "eta") return 1;
        if (n[0] == 'C') return 1;
        if (n[0] == 'R') return -1;
        return 0;
    };

    std::vector<double> vals = pack_parameters(kind, p);
    const std::vector<double> refs = pack_parameters(kind, reference);

    double acc = 0.0;
    int scaled = 0;
    for (std::size_t i = 0; i < names.size(); ++i) {
        const int g = weight(names[i]);
        if (g == 0) continue;
        acc += g * (std::log(refs[i]) - std::log(vals[i]));
        ++scaled;
    }
    if (scaled == 0) return p;
    double shift = acc / scaled;  // least-squares log k

    // Admissible interval for the shift so every scaled coordinate stays in
    // bounds; each per-coordinate interval contains 0 when p is in bounds.
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < names.size(); ++i) {
        const int g = weight(names[i]);
        if (g == 0) continue;
        const double room_lo = std::log(bounds.lower[i]) - std::log(vals[i]);
        const double room_hi = std::log(bounds.upper[i]) - std::log(vals[i]);
        lo = std::max(lo, g > 0 ? room_lo : -room_hi);
        hi = std::min(hi, g > 0 ? room_hi : -room_lo);
    }
    if (!(lo <= hi))
        throw ValidationError("gauge_align: parameters violate the bounds");
    shift = std::clamp(shift, lo, hi);

    const double k = std::exp(shift);
    for (std::size_t i = 0; i < names.size(); ++i) {
        const int g = weight(names[i]);
        if (g == 1) vals[i] *= k;
        else if (g == -1) vals[i] /= k;
    }
    ThermalParameters out = unpack_parameters(kind, vals, p.v);
    out.eta_cap = p.eta_cap;
    return out;
}

FitResult mle_fit(ModelKind kind, const TimeSeries& data,
                  const ThermalParameters& theta0, const FitBounds& bounds,
                  int n_starts, std::uint64_t seed) {
    if (n_starts < 1) throw ValidationError("mle_fit: n_starts must be at least 1");
    data.validate();
    validate_parameters(kind, theta0);
    if (!(theta0.v > 0.0))
        throw ValidationError("mle_fit: starting noise std must be positive");

    const Coordinates co = make_coordinates(kind, theta0);
    const ZBounds zb = to_z_bounds(co, bounds);
    const std::vector<double> z0 = co.to_z(theta0);
    for (std::size_t i = 0; i < co.dim(); ++i) {
        if (z0[i] < zb.lo[i] || z0[i] > zb.hi[i])
            throw ValidationError("mle_fit: starting value for " + co.names[i] +
                                  " lies outside its bounds");
    }

    const auto objective = [&](const std::vector<double>& z) -> double {
        double excess = 0.0;
        for (std::size_t i = 0; i < co.dim(); ++i) {
            if (z[i] < zb.lo[i]) excess += zb.lo[i] - z[i];
            if (z[i] > zb.hi[i]) excess += z[i] - zb.hi[i];
        }
        if (excess > 0.0) return kFailedEval + 1e6 * excess;
        const LoglikResult r = innovations_loglik(kind, co.to_theta(z), data);
        if (!r.ok) return kFailedEval;
        return -r.loglik;
    };

    FitResult out;
    out.kind = kind;
    out.starts.reserve(static_cast<std::size_t>(n_starts));

    std::vector<double> best_z;
    for (int j = 0; j < n_starts; ++j) {
        std::vector<double> zj = z0;
        if (j > 0) {
            std::mt19937_64 gen = substream(seed, "mle-start", static_cast<std::uint64_t>(j));
            std::uniform_real_distribution<double> u(0.7, 1.3);
            for (double& zi : zj) zi += std::log(u(gen));
        }

        // Coarse pass, then a restart around its optimum with a tight
        // initial simplex to polish the coordinates the first pass froze.
        NelderMeadResult r1 = nelder_mead(objective, zj, 0.3);
        NelderMeadResult r2 = nelder_mead(objective, r1.x, 0.05);

        StartDiagnostic diag;
        diag.index = j;
        diag.iterations = r1.iterations + r2.iterations;
        diag.converged = r2.converged;
        if (r2.fx >= kFailedEval) {
            diag.failure = "no feasible likelihood found from this start";
        } else {
            diag.loglik = -r2.fx;
        }
        out.starts.push_back(diag);

        if (diag.failure.empty() && diag.loglik > out.loglik) {
            out.loglik = diag.loglik;
            out.multistart_index = j;
            out.iterations = diag.iterations;
            out.converged = diag.converged;
            best_z = std::move(r2.x);
        }
    }

    if (out.multistart_index < 0) {
        std::ostringstream msg;
        msg << "mle_fit: all " << n_starts << " starts failed to evaluate";
        throw NumericalError(msg.str());
    }

    // The likelihood is flat along the capacity-scale family, so the simplex
    // walk leaves the winner at an arbitrary point of it; report the member
    // anchored to the caller's guess.
    out.params = gauge_align(kind, co.to_theta(best_z), theta0, bounds);
    const LoglikResult final_eval = innovations_loglik(kind, out.params, data);
    out.residuals = final_eval.residuals;
    out.variances = final_eval.variances;
    return out;
}

std::vector<double> k_step_residuals(ModelKind kind, const ThermalParameters& params,
                                     const TimeSeries& data, int horizon_steps) {
    if (horizon_steps < 1)
        throw ValidationError("k_step_residuals: horizon must be at least one step");
    data.validate();
    if (data.size() <= static_cast<std::size_t>(horizon_steps))
        throw ValidationError("k_step_residuals: series shorter than the horizon");
    validate_parameters(kind, params);

    const double d = data.sample_period();
    const std::size_t last = data.size() - 1;
    const int n = state_dim(kind);

    const ContinuousStateSpace css = build_continuous(kind, params);
    DiscreteStateSpace dss;
    if (kind != ModelKind::E) dss = discretize(css, d);
    const int c = measured_state(kind);

    KalmanBelief belief;
    belief.x = Vec::constant(n, data.T_C[0]);
    belief.P = Mat::identity(n);

    // Open-loop mean propagation from a filtered anchor, using the inputs
    // recorded over the prediction window.
    const auto predict_from = [&](const Vec& x_anchor, std::size_t k) -> double {
        Vec x = x_anchor;
        for (int j = 0; j < horizon_steps; ++j) {
            const std::size_t at = k + static_cast<std::size_t>(j);
            if (kind == ModelKind::E) {
                x = nonlinear_step(css, x, data.P_W[at], data.Tr_C[at], d);
            } else {
                x = dss.A_d * x + dss.B_d * Vec{2, {data.Tr_C[at], data.P_W[at]}};
            }
        }
        return x[c];
    };

    std::vector<double> out;
    out.reserve(data.size() - static_cast<std::size_t>(horizon_steps));
    for (std::size_t k = 0; k + static_cast<std::size_t>(horizon_steps) <= last; ++k) {
        if (k > 0) {
            const KfStepResult step =
                kind == ModelKind::E
                    ? ekf_step(belief, params, data.Tr_C[k - 1], data.P_W[k - 1],
                               data.T_C[k], d)
                    : kf_step(belief, dss, data.Tr_C[k - 1], data.P_W[k - 1], data.T_C[k]);
            belief = step.belief;
        }
        const std::size_t target = k + static_cast<std::size_t>(horizon_steps);
        out.push_back(data.T_C[target] - predict_from(belief.x, k));
    }
    return out;
}

} // namespace coldbox
