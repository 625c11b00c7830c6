#include "coldbox/kalman.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "coldbox/errors.hpp"

namespace coldbox {

void KalmanBelief::validate() const {
    if (P.rows != x.n || P.cols != x.n)
        throw ValidationError("KalmanBelief: covariance shape mismatch");
    for (int i = 0; i < P.rows; ++i)
        for (int j = 0; j < i; ++j)
            if (std::abs(P(i, j) - P(j, i)) > 1e-9 * (1.0 + std::abs(P(i, j))))
                throw ValidationError("KalmanBelief: covariance not symmetric");
    const auto eig = symmetric_eigenvalues(P);
    if (eig[0] < -1e-10)
        throw ValidationError("KalmanBelief: covariance not positive semidefinite");
}

namespace {

constexpr double kVarianceFloor = 1e-12;

// Fixed-size filter engine. The public API wraps it; the likelihood loop
// calls it directly so the per-step work stays fully unrolled.
template <int N>
struct Engine {
    double Ad[N][N];
    double Bd[N][2];
    double W2[N];  // squared per-step process noise, diagonal
    double v2;
    int c;  // measured state index

    static bool invert(const double (&src)[N][N], double (&dst)[N][N]) {
        double work[N][2 * N];
        for (int i = 0; i < N; ++i) {
            for (int j = 0; j < N; ++j) {
                work[i][j] = src[i][j];
                work[i][N + j] = (i == j) ? 1.0 : 0.0;
            }
        }
        for (int col = 0; col < N; ++col) {
            int piv = col;
            for (int r = col + 1; r < N; ++r)
                if (std::abs(work[r][col]) > std::abs(work[piv][col])) piv = r;
            const double p = work[piv][col];
            if (p == 0.0 || !std::isfinite(p)) return false;
            if (piv != col)
                for (int j = 0; j < 2 * N; ++j) std::swap(work[piv][j], work[col][j]);
            const double inv_p = 1.0 / work[col][col];
            for (int j = 0; j < 2 * N; ++j) work[col][j] *= inv_p;
            for (int r = 0; r < N; ++r) {
                if (r == col) continue;
                const double f = work[r][col];
                if (f == 0.0) continue;
                for (int j = 0; j < 2 * N; ++j) work[r][j] -= f * work[col][j];
            }
        }
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) dst[i][j] = work[i][N + j];
        return true;
    }

    // Measurement update shared by the linear and extended paths. xp/Pp are
    // the predicted moments; on success they become the posterior.
    bool update(double (&xp)[N], double (&Pp)[N][N], double y, double& eps,
                double& R) const {
        eps = y - xp[c];
        R = Pp[c][c] + v2;
        if (!(R >= kVarianceFloor) || !std::isfinite(eps)) return false;

        double gain[N];
        const double inv_R = 1.0 / R;
        for (int i = 0; i < N; ++i) gain[i] = Pp[i][c] * inv_R;
        for (int i = 0; i < N; ++i) xp[i] += gain[i] * eps;

        // Information-form covariance update: only the (c,c) entry of the
        // precision gains mass, by 1/v^2.
        double prec[N][N];
        if (!invert(Pp, prec)) return false;
        prec[c][c] += 1.0 / v2;
        double post[N][N];
        if (!invert(prec, post)) return false;
        for (int i = 0; i < N; ++i) {
            for (int j = 0; j < i; ++j) {
                const double s = 0.5 * (post[i][j] + post[j][i]);
                post[i][j] = s;
                post[j][i] = s;
            }
        }
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) Pp[i][j] = post[i][j];
        return true;
    }

    bool step(double (&x)[N], double (&P)[N][N], double u_Tr, double u_P, double y,
              double& eps, double& R) const {
        double xp[N];
        for (int i = 0; i < N; ++i) {
            double acc = Bd[i][0] * u_Tr + Bd[i][1] * u_P;
            for (int k = 0; k < N; ++k) acc += Ad[i][k] * x[k];
            xp[i] = acc;
        }
        double AP[N][N];
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) {
                double acc = 0.0;
                for (int k = 0; k < N; ++k) acc += Ad[i][k] * P[k][j];
                AP[i][j] = acc;
            }
        double Pp[N][N];
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) {
                double acc = 0.0;
                for (int k = 0; k < N; ++k) acc += AP[i][k] * Ad[j][k];
                Pp[i][j] = acc;
            }
        for (int i = 0; i < N; ++i) Pp[i][i] += W2[i];

        if (!update(xp, Pp, y, eps, R)) return false;
        for (int i = 0; i < N; ++i) x[i] = xp[i];
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) P[i][j] = Pp[i][j];
        return true;
    }
};

template <int N>
Engine<N> make_engine(const DiscreteStateSpace& dss) {
    Engine<N> e;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) e.Ad[i][j] = dss.A_d(i, j);
    for (int i = 0; i < N; ++i) {
        e.Bd[i][0] = dss.B_d(i, 0);
        e.Bd[i][1] = dss.B_d(i, 1);
        e.W2[i] = dss.W[i] * dss.W[i];
    }
    e.v2 = dss.v * dss.v;
    e.c = 0;
    for (int i = 0; i < N; ++i)
        if (dss.C[i] == 1.0) e.c = i;
    return e;
}

// Extended step for the Carnot-input kind: refreshes the engine's linearized
// A_d and the predicted mean around the current state, then reuses the
// shared update. css must be the kind-E continuous form.
struct EngineE {
    const ContinuousStateSpace& css;
    double d;
    double W2[3];
    double v2;

    bool step(double (&x)[3], double (&P)[3][3], double u_Tr, double u_P, double y,
              double& eps, double& R, std::string* why) const {
        if (u_P != 0.0 && !(u_Tr > x[0])) {
            if (why) {
                std::ostringstream msg;
                msg << "carnot domain violated in prediction (room " << u_Tr
                    << " degC, evaporator " << x[0] << " degC)";
                *why = msg.str();
            }
            return false;
        }
        Vec xv = Vec::zero(3);
        for (int i = 0; i < 3; ++i) xv[i] = x[i];
        const Vec xpred = nonlinear_step(css, xv, u_P, u_Tr, d);
        const Mat J = jacobian_state(css, xv, u_Tr, u_P, d);

        Engine<3> lin;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) lin.Ad[i][j] = J(i, j);
        for (int i = 0; i < 3; ++i) {
            lin.W2[i] = W2[i];
            lin.Bd[i][0] = 0.0;
            lin.Bd[i][1] = 0.0;
        }
        lin.v2 = v2;
        lin.c = 1;

        double xp[3] = {xpred[0], xpred[1], xpred[2]};
        double JP[3][3];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double acc = 0.0;
                for (int k = 0; k < 3; ++k) acc += lin.Ad[i][k] * P[k][j];
                JP[i][j] = acc;
            }
        double Pp[3][3];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double acc = 0.0;
                for (int k = 0; k < 3; ++k) acc += JP[i][k] * lin.Ad[j][k];
                Pp[i][j] = acc;
            }
        for (int i = 0; i < 3; ++i) Pp[i][i] += W2[i];

        if (!lin.update(xp, Pp, y, eps, R)) {
            if (why) *why = "degenerate innovation variance or singular covariance";
            return false;
        }
        for (int i = 0; i < 3; ++i) x[i] = xp[i];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) P[i][j] = Pp[i][j];
        return true;
    }
};

template <int N>
KfStepResult run_public_step(const Engine<N>& engine, const KalmanBelief& belief,
                             double u_Tr, double u_P, double y) {
    double x[N];
    double P[N][N];
    for (int i = 0; i < N; ++i) x[i] = belief.x[i];
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) P[i][j] = belief.P(i, j);

    KfStepResult out;
    if (!engine.step(x, P, u_Tr, u_P, y, out.innovation, out.innovation_variance))
        throw NumericalError("kf_step: degenerate innovation variance or singular covariance");

    out.belief.x = Vec::zero(N);
    out.belief.P = Mat::zero(N, N);
    for (int i = 0; i < N; ++i) out.belief.x[i] = x[i];
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) out.belief.P(i, j) = P[i][j];
    return out;
}

template <int N>
LoglikResult run_loglik_linear(const DiscreteStateSpace& dss, const TimeSeries& data) {
    const Engine<N> engine = make_engine<N>(dss);
    const std::size_t steps = data.size() - 1;

    double x[N];
    double P[N][N];
    for (int i = 0; i < N; ++i) x[i] = data.T_C[0];
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) P[i][j] = (i == j) ? 1.0 : 0.0;

    LoglikResult out;
    out.residuals.reserve(steps);
    out.variances.reserve(steps);
    double acc = 0.0;
    for (std::size_t k = 1; k <= steps; ++k) {
        double eps, R;
        if (!engine.step(x, P, data.Tr_C[k - 1], data.P_W[k - 1], data.T_C[k], eps, R)) {
            out.loglik = kLoglikFailed;
            out.ok = false;
            out.failure = "numerical failure at step " + std::to_string(k);
            return out;
        }
        acc += eps * eps / R + std::log(2.0 * std::numbers::pi * R);
        out.residuals.push_back(eps);
        out.variances.push_back(R);
    }
    acc *= -0.5;
    if (!std::isfinite(acc)) {
        out.loglik = kLoglikFailed;
        out.ok = false;
        out.failure = "non-finite log-likelihood";
        return out;
    }
    out.loglik = acc;
    out.ok = true;
    return out;
}

LoglikResult run_loglik_extended(const ThermalParameters& params, const TimeSeries& data,
                                 double d) {
    const ContinuousStateSpace css = build_continuous(ModelKind::E, params);
    EngineE engine{css, d, {}, css.v * css.v};
    for (int i = 0; i < 3; ++i) engine.W2[i] = css.W[i] * css.W[i];

    const std::size_t steps = data.size() - 1;
    double x[3] = {data.T_C[0], data.T_C[0], data.T_C[0]};
    double P[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};

    LoglikResult out;
    out.residuals.reserve(steps);
    out.variances.reserve(steps);
    double acc = 0.0;
    std::string why;
    for (std::size_t k = 1; k <= steps; ++k) {
        double eps, R;
        if (!engine.step(x, P, data.Tr_C[k - 1], data.P_W[k - 1], data.T_C[k], eps, R, &why)) {
            out.loglik = kLoglikFailed;
            out.ok = false;
            out.failure = "step " + std::to_string(k) + ": " + why;
            return out;
        }
        acc += eps * eps / R + std::log(2.0 * std::numbers::pi * R);
        out.residuals.push_back(eps);
        out.variances.push_back(R);
    }
    acc *= -0.5;
    if (!std::isfinite(acc)) {
        out.loglik = kLoglikFailed;
        out.ok = false;
        out.failure = "non-finite log-likelihood";
        return out;
    }
    out.loglik = acc;
    out.ok = true;
    return out;
}

} // namespace

KfStepResult kf_step(const KalmanBelief& belief, const DiscreteStateSpace& dss,
                     double u_Tr, double u_P, double y) {
    if (belief.x.n != dss.n || belief.P.rows != dss.n || belief.P.cols != dss.n)
        throw ValidationError("kf_step: belief/model dimension mismatch");
    switch (dss.n) {
        case 1: return run_public_step(make_engine<1>(dss), belief, u_Tr, u_P, y);
        case 2: return run_public_step(make_engine<2>(dss), belief, u_Tr, u_P, y);
        case 3: return run_public_step(make_engine<3>(dss), belief, u_Tr, u_P, y);
        case 4: return run_public_step(make_engine<4>(dss), belief, u_Tr, u_P, y);
        default: throw ValidationError("kf_step: unsupported state dimension");
    }
}

KfStepResult ekf_step(const KalmanBelief& belief, const ThermalParameters& params,
                      double u_Tr, double u_P, double y, double d) {
    if (belief.x.n != 3)
        throw ValidationError("ekf_step: expected a 3-state belief");
    const ContinuousStateSpace css = build_continuous(ModelKind::E, params);
    EngineE engine{css, d, {}, css.v * css.v};
    for (int i = 0; i < 3; ++i) engine.W2[i] = css.W[i] * css.W[i];

    double x[3];
    double P[3][3];
    for (int i = 0; i < 3; ++i) x[i] = belief.x[i];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) P[i][j] = belief.P(i, j);

    KfStepResult out;
    std::string why;
    if (!engine.step(x, P, u_Tr, u_P, y, out.innovation, out.innovation_variance, &why))
        throw NumericalError("ekf_step: " + why);

    out.belief.x = Vec::zero(3);
    out.belief.P = Mat::zero(3, 3);
    for (int i = 0; i < 3; ++i) out.belief.x[i] = x[i];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) out.belief.P(i, j) = P[i][j];
    return out;
}

LoglikResult innovations_loglik(ModelKind kind, const ThermalParameters& params,
                                const TimeSeries& data) {
    data.validate();
    const double d = data.sample_period();

    if (kind == ModelKind::E) return run_loglik_extended(params, data, d);

    DiscreteStateSpace dss;
    try {
        dss = discretize(build_continuous(kind, params), d);
    } catch (const NumericalError& e) {
        LoglikResult out;
        out.ok = false;
        out.loglik = kLoglikFailed;
        out.failure = e.what();
        return out;
    }
    switch (dss.n) {
        case 1: return run_loglik_linear<1>(dss, data);
        case 2: return run_loglik_linear<2>(dss, data);
        case 3: return run_loglik_linear<3>(dss, data);
        case 4: return run_loglik_linear<4>(dss, data);
        default: throw ValidationError("innovations_loglik: unsupported dimension");
    }
}

} // namespace coldbox
