#include "coldbox/thermal.hpp"

#include <cmath>
#include <sstream>

#include "coldbox/errors.hpp"
#include "coldbox/kvfile.hpp"

namespace coldbox {

int state_dim(ModelKind kind) {
    switch (kind) {
        case ModelKind::A: return 1;
        case ModelKind::B: return 2;
        case ModelKind::C: return 3;
        case ModelKind::D: return 4;
        case ModelKind::E: return 3;
    }
    throw ValidationError("unknown model kind");
}

int parameter_count(ModelKind kind) {
    switch (kind) {
        case ModelKind::A: return 4;
        case ModelKind::B: return 7;
        case ModelKind::C: return 10;
        case ModelKind::D: return 12;
        case ModelKind::E: return 10;
    }
    throw ValidationError("unknown model kind");
}

int measured_state(ModelKind kind) {
    // The sensed node is always the chamber air: first state for A/B,
    // second for the three- and four-node circuits.
    switch (kind) {
        case ModelKind::A:
        case ModelKind::B: return 0;
        case ModelKind::C:
        case ModelKind::D:
        case ModelKind::E: return 1;
    }
    throw ValidationError("unknown model kind");
}

const char* kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::A: return "A";
        case ModelKind::B: return "B";
        case ModelKind::C: return "C";
        case ModelKind::D: return "D";
        case ModelKind::E: return "E";
    }
    return "?";
}

ModelKind kind_from_string(const std::string& s) {
    if (s == "A" || s == "a") return ModelKind::A;
    if (s == "B" || s == "b") return ModelKind::B;
    if (s == "C" || s == "c") return ModelKind::C;
    if (s == "D" || s == "d") return ModelKind::D;
    if (s == "E" || s == "e") return ModelKind::E;
    throw ValidationError("unknown model kind: " + s);
}

namespace {

void require_positive(double value, const char* name) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        std::ostringstream msg;
        msg << name << " must be positive, got " << value;
        throw ValidationError(msg.str());
    }
}

void require_finite_alpha(const ThermalParameters& p, int n) {
    for (int i = 0; i < n; ++i) {
        if (!std::isfinite(p.alpha[static_cast<std::size_t>(i)])) {
            throw ValidationError("alpha_" + std::to_string(i) + " must be finite");
        }
    }
}

} // namespace

void validate_parameters(ModelKind kind, const ThermalParameters& p) {
    require_positive(p.v, "v");
    switch (kind) {
        case ModelKind::A:
            require_positive(p.C_a, "C_a");
            require_positive(p.R_w, "R_w");
            require_positive(p.cop, "COP");
            break;
        case ModelKind::B:
            require_positive(p.C_a, "C_a");
            require_positive(p.C_e, "C_e");
            require_positive(p.R_e, "R_e");
            require_positive(p.R_w, "R_w");
            require_positive(p.cop, "COP");
            break;
        case ModelKind::C:
            require_positive(p.C_a, "C_a");
            require_positive(p.C_e, "C_e");
            require_positive(p.C_w, "C_w");
            require_positive(p.R_a, "R_a");
            require_positive(p.R_e, "R_e");
            require_positive(p.R_w, "R_w");
            require_positive(p.cop, "COP");
            break;
        case ModelKind::D:
            require_positive(p.C_a, "C_a");
            require_positive(p.C_e, "C_e");
            require_positive(p.C_w, "C_w");
            require_positive(p.C_f, "C_f");
            require_positive(p.R_a, "R_a");
            require_positive(p.R_e, "R_e");
            require_positive(p.R_w, "R_w");
            require_positive(p.R_f, "R_f");
            require_positive(p.cop, "eta");
            break;
        case ModelKind::E:
            require_positive(p.C_a, "C_a");
            require_positive(p.C_e, "C_e");
            require_positive(p.C_w, "C_w");
            require_positive(p.R_a, "R_a");
            require_positive(p.R_e, "R_e");
            require_positive(p.R_w, "R_w");
            require_positive(p.eta, "eta");
            if (p.eta > p.eta_cap) {
                std::ostringstream msg;
                msg << "eta exceeds plausibility cap: " << p.eta << " > " << p.eta_cap;
                throw ValidationError(msg.str());
            }
            break;
    }
    require_finite_alpha(p, state_dim(kind));
}

ContinuousStateSpace build_continuous(ModelKind kind, const ThermalParameters& p) {
    validate_parameters(kind, p);
    const int n = state_dim(kind);

    ContinuousStateSpace css;
    css.n = n;
    css.A = Mat::zero(n, n);
    css.B = Mat::zero(n, 2);
    css.C = Vec::zero(n);
    css.C[measured_state(kind)] = 1.0;
    css.W = Vec::zero(n);
    for (int i = 0; i < n; ++i) css.W[i] = std::exp(p.alpha[static_cast<std::size_t>(i)]);
    css.v = p.v;

    switch (kind) {
        case ModelKind::A: {
            // Single air node exchanging with the room through R_w.
            css.A(0, 0) = -1.0 / (p.C_a * p.R_w);
            css.B(0, 0) = 1.0 / (p.C_a * p.R_w);
            css.B(0, 1) = -p.cop / p.C_a;
            break;
        }
        case ModelKind::B: {
            // x = [V_a, V_e]: air leaks to the room (R_w) and couples to the
            // evaporator (R_e); heat is extracted at the evaporator.
            css.A(0, 0) = -1.0 / (p.C_a * p.R_w) - 1.0 / (p.C_a * p.R_e);
            css.A(0, 1) = 1.0 / (p.C_a * p.R_e);
            css.A(1, 0) = 1.0 / (p.C_e * p.R_e);
            css.A(1, 1) = -1.0 / (p.C_e * p.R_e);
            css.B(0, 0) = 1.0 / (p.C_a * p.R_w);
            css.B(1, 1) = -p.cop / p.C_e;
            break;
        }
        case ModelKind::C:
        case ModelKind::E: {
            // x = [V_e, V_a, V_w]: evaporator - R_e - air - R_a - envelope
            // - R_w - room. Same circuit for both kinds; E differs only in
            // how power maps into the evaporator node.
            css.A(0, 0) = -1.0 / (p.C_e * p.R_e);
            css.A(0, 1) = 1.0 / (p.C_e * p.R_e);
            css.A(1, 0) = 1.0 / (p.C_a * p.R_e);
            css.A(1, 1) = -1.0 / (p.C_a * p.R_a) - 1.0 / (p.C_a * p.R_e);
            css.A(1, 2) = 1.0 / (p.C_a * p.R_a);
            css.A(2, 1) = 1.0 / (p.C_w * p.R_a);
            css.A(2, 2) = -1.0 / (p.C_w * p.R_w) - 1.0 / (p.C_w * p.R_a);
            css.B(2, 0) = 1.0 / (p.C_w * p.R_w);
            if (kind == ModelKind::C) {
                css.B(0, 1) = -p.cop / p.C_e;
            } else {
                css.B(0, 1) = -p.eta / p.C_e;
                css.p_input_carnot_scaled = true;
            }
            break;
        }
        case ModelKind::D: {
            // x = [V_e, V_a, V_w, V_f]: as kind C with the insulation path
            // split into two lumped layers (V_w, V_f) before the room.
            css.A(0, 0) = -1.0 / (p.C_e * p.R_e);
            css.A(0, 1) = 1.0 / (p.C_e * p.R_e);
            css.A(1, 0) = 1.0 / (p.C_a * p.R_e);
            css.A(1, 1) = -1.0 / (p.C_a * p.R_a) - 1.0 / (p.C_a * p.R_e);
            css.A(1, 2) = 1.0 / (p.C_a * p.R_a);
            css.A(2, 1) = 1.0 / (p.C_w * p.R_a);
            css.A(2, 2) = -1.0 / (p.C_w * p.R_w) - 1.0 / (p.C_w * p.R_a);
            css.A(2, 3) = 1.0 / (p.C_w * p.R_w);
            css.A(3, 2) = 1.0 / (p.C_f * p.R_w);
            css.A(3, 3) = -1.0 / (p.C_f * p.R_f) - 1.0 / (p.C_f * p.R_w);
            css.B(3, 0) = 1.0 / (p.C_f * p.R_f);
            css.B(0, 1) = -p.cop / p.C_e;
            break;
        }
    }
    return css;
}

DiscreteStateSpace discretize(const ContinuousStateSpace& css, double d) {
    if (!(d > 0.0)) throw ValidationError("sample period d must be positive");
    DiscreteStateSpace dss;
    dss.n = css.n;
    dss.A_d = Mat::identity(css.n) + d * css.A;
    dss.B_d = d * css.B;
    dss.C = css.C;
    dss.W = css.W;
    dss.v = css.v;
    dss.d = d;
    dss.p_input_carnot_scaled = css.p_input_carnot_scaled;

    const double radius = spectral_radius(dss.A_d);
    if (radius >= 1.0) {
        std::ostringstream msg;
        msg << "Euler discretization unstable at d = " << d
            << " s (spectral radius " << radius << " >= 1)";
        throw NumericalError(msg.str());
    }
    return dss;
}

double carnot_cop(double T_H_C, double T_C_C) {
    if (!(T_H_C > T_C_C)) {
        std::ostringstream msg;
        msg << "reversed-cycle COP undefined: hot side " << T_H_C
            << " degC not above cold side " << T_C_C << " degC";
        throw DomainError(msg.str());
    }
    return (T_C_C + 273.0) / (T_H_C - T_C_C);
}

double heat_extraction(ModelKind kind, const ThermalParameters& p, double P_W,
                       double T_r_C, double V_e_C) {
    if (P_W < 0.0) throw ValidationError("power must be nonnegative");
    if (kind == ModelKind::E) {
        if (P_W == 0.0) return 0.0;
        return P_W * p.eta * carnot_cop(T_r_C, V_e_C);
    }
    return P_W * p.cop;
}

Vec nonlinear_step(const ContinuousStateSpace& css, const Vec& x, double P_W,
                   double T_r_C, double d) {
    Vec u = Vec::zero(2);
    u[0] = T_r_C;
    // With the compressor off the Carnot factor is moot; skipping it keeps
    // the off dynamics defined for any evaporator temperature.
    u[1] = P_W == 0.0 ? 0.0 : P_W * carnot_cop(T_r_C, x[0]);
    return x + d * (css.A * x + css.B * u);
}

Mat jacobian_state(const ContinuousStateSpace& css, const Vec& x, double T_r_C,
                   double P_W, double d) {
    Mat jac = Mat::identity(css.n) + d * css.A;
    if (P_W == 0.0) return jac;
    if (!(T_r_C > x[0])) {
        std::ostringstream msg;
        msg << "jacobian undefined: room " << T_r_C
            << " degC not above evaporator " << x[0] << " degC";
        throw DomainError(msg.str());
    }
    const double grad = (T_r_C + 273.0) / ((T_r_C - x[0]) * (T_r_C - x[0]));
    // B(0,1) carries -eta/C_e.
    jac(0, 0) += d * P_W * css.B(0, 1) * grad;
    return jac;
}

Vec nonlinear_step(const ThermalParameters& p, const Vec& x, double P_W,
                   double T_r_C, double d) {
    return nonlinear_step(build_continuous(ModelKind::E, p), x, P_W, T_r_C, d);
}

Mat jacobian_state(const ThermalParameters& p, const Vec& x, double T_r_C,
                   double P_W, double d) {
    return jacobian_state(build_continuous(ModelKind::E, p), x, T_r_C, P_W, d);
}

double empirical_capacity(double mass_kg, double c_J_per_kgK) {
    require_positive(mass_kg, "mass");
    require_positive(c_J_per_kgK, "specific heat");
    return mass_kg * c_J_per_kgK;
}

double empirical_resistance(double lambda_W_per_mK, double thickness_m,
                            double surface_m2) {
    require_positive(lambda_W_per_mK, "conductivity");
    require_positive(thickness_m, "thickness");
    require_positive(surface_m2, "surface");
    return thickness_m / (lambda_W_per_mK * surface_m2);
}

namespace {

struct FieldRef {
    const char* name;
    double ThermalParameters::* field;
};

// Free-parameter layout per kind: capacities, resistances, noise exponents,
// conversion gain. The optimizer, reports and fixture files all share it.
std::vector<FieldRef> physical_fields(ModelKind kind) {
    switch (kind) {
        case ModelKind::A:
            return {{"C_a", &ThermalParameters::C_a}, {"R_w", &ThermalParameters::R_w}};
        case ModelKind::B:
            return {{"C_a", &ThermalParameters::C_a}, {"C_e", &ThermalParameters::C_e},
                    {"R_e", &ThermalParameters::R_e}, {"R_w", &ThermalParameters::R_w}};
        case ModelKind::C:
            return {{"C_a", &ThermalParameters::C_a}, {"C_e", &ThermalParameters::C_e},
                    {"C_w", &ThermalParameters::C_w}, {"R_a", &ThermalParameters::R_a},
                    {"R_e", &ThermalParameters::R_e}, {"R_w", &ThermalParameters::R_w}};
        case ModelKind::D:
            return {{"C_a", &ThermalParameters::C_a}, {"C_e", &ThermalParameters::C_e},
                    {"C_w", &ThermalParameters::C_w}, {"C_f", &ThermalParameters::C_f},
                    {"R_a", &ThermalParameters::R_a}, {"R_e", &ThermalParameters::R_e},
                    {"R_w", &ThermalParameters::R_w}, {"R_f", &ThermalParameters::R_f}};
        case ModelKind::E:
            return {{"C_a", &ThermalParameters::C_a}, {"C_e", &ThermalParameters::C_e},
                    {"C_w", &ThermalParameters::C_w}, {"R_a", &ThermalParameters::R_a},
                    {"R_e", &ThermalParameters::R_e}, {"R_w", &ThermalParameters::R_w}};
    }
    throw ValidationError("unknown model kind");
}

int free_alpha_count(ModelKind kind) {
    // Kind D ties its fourth exponent to the mean of the listed three.
    return kind == ModelKind::D ? 3 : state_dim(kind);
}

const char* gain_name(ModelKind kind) {
    return (kind == ModelKind::D || kind == ModelKind::E) ? "eta" : "COP";
}

} // namespace

std::vector<std::string> parameter_names(ModelKind kind) {
    std::vector<std::string> names;
    for (const auto& f : physical_fields(kind)) names.emplace_back(f.name);
    for (int i = 0; i < free_alpha_count(kind); ++i)
        names.push_back("alpha_" + std::to_string(i));
    names.emplace_back(gain_name(kind));
    return names;
}

std::vector<double> pack_parameters(ModelKind kind, const ThermalParameters& p) {
    std::vector<double> out;
    for (const auto& f : physical_fields(kind)) out.push_back(p.*(f.field));
    for (int i = 0; i < free_alpha_count(kind); ++i)
        out.push_back(p.alpha[static_cast<std::size_t>(i)]);
    out.push_back(kind == ModelKind::E ? p.eta : p.cop);
    return out;
}

ThermalParameters unpack_parameters(ModelKind kind, const std::vector<double>& free,
                                    double v) {
    const auto fields = physical_fields(kind);
    const int na = free_alpha_count(kind);
    if (free.size() != fields.size() + static_cast<std::size_t>(na) + 1) {
        throw ValidationError("parameter vector has wrong length for kind " +
                              std::string(kind_name(kind)));
    }
    ThermalParameters p;
    std::size_t at = 0;
    for (const auto& f : fields) p.*(f.field) = free[at++];
    double alpha_sum = 0.0;
    for (int i = 0; i < na; ++i) {
        p.alpha[static_cast<std::size_t>(i)] = free[at];
        alpha_sum += free[at];
        ++at;
    }
    if (kind == ModelKind::D) p.alpha[3] = alpha_sum / 3.0;
    if (kind == ModelKind::E) {
        p.eta = free[at];
    } else {
        p.cop = free[at];
    }
    p.v = v;
    return p;
}

LoadedParameters load_parameters(const std::string& path) {
    const KvMap kv = read_kv_file(path);
    const ModelKind kind = kind_from_string(kv_get_string(kv, "kind"));
    ThermalParameters p;
    for (const auto& f : physical_fields(kind)) p.*(f.field) = kv_get_double(kv, f.name);
    double alpha_sum = 0.0;
    const int na = free_alpha_count(kind);
    for (int i = 0; i < na; ++i) {
        const double a = kv_get_double(kv, "alpha_" + std::to_string(i));
        p.alpha[static_cast<std::size_t>(i)] = a;
        alpha_sum += a;
    }
    if (kind == ModelKind::D)
        p.alpha[3] = kv_get_double_or(kv, "alpha_3", alpha_sum / 3.0);
    if (kind == ModelKind::E) {
        p.eta = kv_get_double(kv, "eta");
    } else {
        p.cop = kv_get_double(kv, gain_name(kind));
    }
    p.v = kv_get_double_or(kv, "v", 0.1);
    p.eta_cap = kv_get_double_or(kv, "eta_cap", 1.5);
    validate_parameters(kind, p);
    return {kind, p};
}

void save_parameters(ModelKind kind, const ThermalParameters& p,
                     const std::string& path) {
    validate_parameters(kind, p);
    KvMap kv;
    kv["kind"] = kind_name(kind);
    auto fmt = [](double x) {
        std::ostringstream os;
        os.precision(12);
        os << x;
        return os.str();
    };
    for (const auto& f : physical_fields(kind)) kv[f.name] = fmt(p.*(f.field));
    for (int i = 0; i < free_alpha_count(kind); ++i)
        kv["alpha_" + std::to_string(i)] = fmt(p.alpha[static_cast<std::size_t>(i)]);
    kv[gain_name(kind)] = fmt(kind == ModelKind::E ? p.eta : p.cop);
    kv["v"] = fmt(p.v);
    write_kv_file(kv, path);
}

} // namespace coldbox
