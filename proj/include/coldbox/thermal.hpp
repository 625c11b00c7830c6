#pragma once

#include <string>
#include <vector>

#include "coldbox/smallmat.hpp"

namespace coldbox {

/// The five freezer models, in increasing structural complexity:
///   A: one lumped node (air).
///   B: air + evaporator.
///   C: evaporator + air + envelope.
///   D: evaporator + air + envelope + a second envelope layer.
///   E: same circuit as C, but the compressor's heat extraction follows a
///      reversed-Carnot law in the evaporator temperature (nonlinear input).
enum class ModelKind { A, B, C, D, E };

int state_dim(ModelKind kind);             // A→1, B→2, C→3, D→4, E→3
int parameter_count(ModelKind kind);       // free parameters excluding v
int measured_state(ModelKind kind);        // index of the sensed node
const char* kind_name(ModelKind kind);
ModelKind kind_from_string(const std::string& s);

/// Physical parameter set. Only the fields a kind uses are meaningful; the
/// rest stay NaN and are never validated or read for that kind.
struct ThermalParameters {
    double C_a = nan_, C_e = nan_, C_w = nan_, C_f = nan_;  // heat capacities, J/K
    double R_w = nan_, R_e = nan_, R_a = nan_, R_f = nan_;  // thermal resistances, K/W
    double cop = nan_;  // constant conversion gain, kinds A..D
    double eta = nan_;  // Carnot efficiency factor, kind E
    std::array<double, kMaxState> alpha{};  // log process-noise scales, per state
    double v = 0.1;      // measurement noise std, degC
    double eta_cap = 1.5; // plausibility ceiling on eta

    static constexpr double nan_ = __builtin_nan("");
};

/// Throws ValidationError naming the first offending parameter.
void validate_parameters(ModelKind kind, const ThermalParameters& p);

/// dx = A x dt + B u dt + W dw,  y = C x + v e,  with u = [T_r, P].
struct ContinuousStateSpace {
    int n = 0;
    Mat A;   // 1/s
    Mat B;   // n x 2, input order [T_r, P]
    Vec C;   // unit selector row
    Vec W;   // diagonal process-noise scales
    double v = 0.0;
    /// Kind E: the P column of B is the constant gain -eta/C_e applied to
    /// the Carnot-scaled input P*carnot_cop(T_r, V_e), not to raw power.
    bool p_input_carnot_scaled = false;
};

struct DiscreteStateSpace {
    int n = 0;
    Mat A_d;
    Mat B_d;
    Vec C;
    Vec W;
    double v = 0.0;
    double d = 0.0;  // sample period, s
    bool p_input_carnot_scaled = false;
};

ContinuousStateSpace build_continuous(ModelKind kind, const ThermalParameters& p);

/// Forward-Euler: A_d = I + A*d, B_d = B*d. W and v are copied unchanged
/// (the filter treats W as per-step). Rejects d that destabilizes A_d.
DiscreteStateSpace discretize(const ContinuousStateSpace& css, double d);

/// Ideal reversed-cycle coefficient of performance (T_C + 273)/(T_H - T_C).
/// The 273 offset is deliberate (not 273.15); changing it would shift every
/// downstream gain. Throws DomainError when T_H <= T_C.
double carnot_cop(double T_H_C, double T_C_C);

/// Heat drawn from the cold side for electrical power P: P*COP for the
/// linear kinds, P*eta*carnot_cop(T_r, V_e) for kind E.
double heat_extraction(ModelKind kind, const ThermalParameters& p, double P_W,
                       double T_r_C, double V_e_C);

/// Noise-free expected Euler step of the kind-E dynamics.
Vec nonlinear_step(const ThermalParameters& p, const Vec& x, double P_W,
                   double T_r_C, double d);

/// d(nonlinear_step)/dx in closed form. Only the (V_e, V_e) entry differs
/// from the linear I + A*d, by -d*P*eta*(T_r+273)/(C_e*(T_r-V_e)^2).
Mat jacobian_state(const ThermalParameters& p, const Vec& x, double T_r_C,
                   double P_W, double d);

/// Hot-loop overloads over a prebuilt kind-E state space; the -eta/C_e gain
/// is read from B(0,1), so no parameter set is needed per step.
Vec nonlinear_step(const ContinuousStateSpace& css, const Vec& x, double P_W,
                   double T_r_C, double d);
Mat jacobian_state(const ContinuousStateSpace& css, const Vec& x, double T_r_C,
                   double P_W, double d);

double empirical_capacity(double mass_kg, double c_J_per_kgK);
double empirical_resistance(double lambda_W_per_mK, double thickness_m,
                            double surface_m2);

/// Canonical free-parameter ordering (capacities, resistances, noise
/// exponents, conversion gain), shared by the optimizer, reports and
/// fixture round-trips. For the four-state kind the fourth noise exponent
/// is tied to the mean of the first three rather than fitted freely.
std::vector<std::string> parameter_names(ModelKind kind);
std::vector<double> pack_parameters(ModelKind kind, const ThermalParameters& p);
ThermalParameters unpack_parameters(ModelKind kind, const std::vector<double>& free,
                                    double v);

struct LoadedParameters {
    ModelKind kind;
    ThermalParameters params;
};

/// Flat key-value fixture files with a `kind = X` header. The four-state
/// kind spells its gain key `eta` even though the value acts as the constant
/// COP; the loader honors that spelling.
LoadedParameters load_parameters(const std::string& path);
void save_parameters(ModelKind kind, const ThermalParameters& p,
                     const std::string& path);

} // namespace coldbox
