// semiclassics.hpp: Semiclassical equations of motion, ringdown, linear response and RWA slow flow
//
// gCL:  ẍ = −ω̃²x − κ₃x³ − Γẋ − η x²ẋ − F_c cos ωt + F_s sin ωt
//   ω̃² = ω₀² + (cosθ + sinθ)² sin2θ γ²/2
//   κ₃ = 4ω₀²U/3 + sin²θ a₊ 2γ²U/3,   Γ = (1 + sin2θ)γ,   η = (1 − cos2θ) 2γU
//   F_c = F (1 + sin²θ a₊ γ²/(2ω₀²)),   F_s = (1 − cos2θ) γFω/(2ω₀²)
// CL keeps ω̃² and Γ and drops η, F_s and the γ² parts of κ₃ and F_c.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gcl/model.hpp"

namespace gcl {

struct SemiclassicalState {
    double x = 0.0;
    double v = 0.0;
    double t = 0.0;
};

/// Coefficients of the reduced equation of motion for one family.
struct EomCoefficients {
    double omega0 = 1.0;
    double omega_sq = 1.0; // ω̃²
    double cubic = 0.0;    // κ₃
    double damping = 0.0;  // Γ
    double nl_damping = 0.0; // η
    double force = 0.0;    // F
    double force_cos = 0.0; // F_c
    double force_sin_per_omega = 0.0; // F_s/ω
    double drive_omega = 1.0;

    /// Lindblad is treated as CL at θ = π/4. Takes the first order-1 drive tone, if any;
    /// other tones are rejected with UnsupportedDrive.
    static EomCoefficients from(const ModelParams& params, Family family);

    double force_sin() const { return force_sin_per_omega * drive_omega; }

    /// Conservative energy v²/2 + ω̃²x²/2 + κ₃x⁴/4.
    double energy(double x, double v) const { return 0.5 * v * v + 0.5 * omega_sq * x * x + 0.25 * cubic * x * x * x * x; }
};

/// (ẋ, v̇)
std::pair<double, double> eom_rhs(const SemiclassicalState& s, const EomCoefficients& c);
std::pair<double, double> eom_rhs(const SemiclassicalState& s, const ModelParams& params, Family family);

/// One classic RK4 step.
SemiclassicalState rk4_step(const SemiclassicalState& s, double h, const EomCoefficients& c);

// Ringdown

struct RingdownOptions {
    int steps_per_period = 400;  // per 2π/ω₀, even
    double duration = 0.0;       // 0 = long enough for four decades of linear decay
    double fit_fraction = 0.3;   // tail used for Γ_eff
    double monotone_tolerance = 1e-3;
    int sample_stride = 0;       // 0 = one sample per 1/20 period
};

struct RingdownResult {
    std::vector<double> t;
    std::vector<double> x;
    std::vector<double> v;
    std::vector<double> envelope;     // one-period moving average of sqrt(x² + (v/ω₀)²)
    // per-period rates, indexed by the window centre
    std::vector<double> rate_t;
    std::vector<double> rate_amplitude; // envelope at the window centre
    std::vector<double> rate_power;     // −ΔE / ∫v² dt over the window
    std::vector<double> rate_envelope;  // −2 d ln A/dt across the window
    double gamma_eff = 0.0;             // −2 × slope of ln A over the tail
    double gamma_linear = 0.0;          // Γ = (1 + sin2θ)γ
    double x0 = 0.0;
    bool monotone = true;
    double max_envelope_rise = 0.0;
};

/// x₀² = (1 + sin2θ)/(2U(1 − cos2θ)): amplitude where nonlinear and linear damping
/// are equal. Infinite when either U or 1 − cos2θ vanishes.
double nonlinear_damping_threshold(const ModelParams& params);

RingdownResult ringdown(const ModelParams& params, double x0, Family family, const RingdownOptions& opts = {});

// Linear response

struct ResponsePoint {
    double omega = 0.0;
    double detuning = 0.0; // ω − ω₀
    double amplitude = 0.0;
    double phase = 0.0;    // x = A cos(ωt + δ)
    bool stable = true;
    double u = 0.0;
    double v = 0.0;
};

/// Closed-form steady response of the linearized equation (U must be 0).
ResponsePoint linear_response(const ModelParams& params, double omega, Family family);

struct ResponseMaximum {
    double theta = 0.0;
    double amplitude = 0.0;
    double omega = 0.0;
    double detuning = 0.0;
};

/// max over ω of |A| for fixed θ.
ResponseMaximum response_maximum(const ModelParams& params, Family family);

/// argmin over θ ∈ [lo, hi] of the resonance maximum.
double resonance_minimum_angle(const ModelParams& params, Family family, double lo, double hi);

// Slow flow

struct SlowFlowEval {
    Eigen::Vector2d rhs = Eigen::Vector2d::Zero(); // (u̇, v̇)
    Eigen::Matrix2d jacobian = Eigen::Matrix2d::Zero();
};

/// Period average with x = u cos ωt + v sin ωt, ẋ = ω(v cos ωt − u sin ωt):
/// u̇ = −⟨g sin ωt⟩/ω, v̇ = ⟨g cos ωt⟩/ω with g = f + ω²x, by trapezoid quadrature
/// (exact for the polynomial right-hand side).
SlowFlowEval slow_flow(double u, double v, double omega, const EomCoefficients& c);
Eigen::Vector2d slow_flow_rhs(double u, double v, double omega, const ModelParams& params, Family family);

/// Roots of the averaged amplitude balance, used as Newton seeds.
std::vector<Eigen::Vector2d> amplitude_equation_seeds(double omega, const EomCoefficients& c);

/// All fixed points at one ω from Newton seeds (amplitude-balance roots plus a ring of
/// radii spanning [0.1, 10]×F/(γω₀)); duplicates merged, sorted by amplitude.
std::vector<ResponsePoint> fixed_points_at(double omega, const EomCoefficients& c);

struct ContinuationOptions {
    double ds = 0.02;
    double ds_min = 1e-6;
    double ds_max = 0.05;
    int max_steps = 20000;
    double newton_tolerance = 1e-12;
};

struct ResponseBranch {
    std::vector<ResponsePoint> points; // ordered along the arc
    std::vector<ResponsePoint> folds;
    std::vector<std::string> log;      // skipped seeds and similar notes
    /// Number of branch crossings of the vertical line at ω, and how many are stable.
    int solutions_at(double omega) const;
    int stable_solutions_at(double omega) const;
};

/// Pseudo-arclength continuation of the slow-flow fixed points in (u, v, ω) from ω_lo to ω_hi.
ResponseBranch response_continuation(const ModelParams& params, double omega_lo, double omega_hi, Family family,
                                     const ContinuationOptions& opts = {});

// Hysteresis

enum class SweepDirection { Forward, Backward };

struct SweepPoint {
    double omega = 0.0;
    double amplitude = 0.0;
    bool settled = true;
    double drift = 0.0;
};

struct SweepOptions {
    int dwell_periods = 300;
    int average_periods = 50;
    int drift_periods = 20;
    double drift_tolerance = 1e-4;
    int steps_per_period = 400; // per 2π/ω₀, rounded up per drive period
};

/// Steps through `omegas` (reversed for Backward) carrying the state over; results are
/// returned in the order of `omegas`.
std::vector<SweepPoint> hysteresis_sweep(const ModelParams& params, const std::vector<double>& omegas, Family family,
                                         SweepDirection direction, const SweepOptions& opts = {});

} // namespace gcl
