// propagator.hpp: Time integration, steady states and physicality diagnostics

#pragma once

#include <functional>
#include <vector>

#include "gcl/dissipator.hpp"
#include "gcl/model.hpp"

namespace gcl {

using DensityMatrix = OperatorMatrix;

// Initial states

DensityMatrix thermal_state(int dim, double n_th);
DensityMatrix fock_state(int dim, int k);
/// |α⟩⟨α| with α = sqrt(ω₀/2)(x₀ + i p₀/ω₀), renormalized after truncation.
DensityMatrix coherent_state(int dim, double omega0, double x0, double p0);

/// Smallest eigenvalue of the Hermitian part.
double min_eigenvalue(const DensityMatrix& rho);

struct PositivityEvent {
    double t = 0.0;
    double min_eig = 0.0;
};

struct PositivityLog {
    double epsilon = 1e-6;
    double worst = 0.0;                 // most negative eigenvalue seen (0 if none)
    double worst_time = 0.0;
    std::vector<PositivityEvent> violations; // samples below −epsilon
    int checks = 0;

    void record(double t, double min_eig);
};

struct EvolveOptions {
    int steps_per_period = 200;    // minimum; the actual count is a multiple of this
    int max_doublings = 3;
    double trace_tolerance = 1e-8;
    double stability_margin = 2.5; // dt·ρ(L) bound
    int record_stride = 0;         // steps between observer calls; 0 = endpoints only
    int positivity_stride = 0;     // steps between eigenvalue checks; 0 = endpoints only
    double positivity_epsilon = 1e-6;
};

struct EvolveResult {
    DensityMatrix final_state;
    double t_final = 0.0;
    double dt = 0.0;
    int steps = 0;
    int doublings = 0;
    double max_trace_drift = 0.0;
    double max_hermiticity_error = 0.0;
    PositivityLog positivity;
};

using Observer = std::function<void(double t, const DensityMatrix& rho)>;

/// Shortest time scale min(2π/ω₀, 2π/ω_n) and the stroboscopic period (2π/ω of the
/// slowest tone; the other tones must be integer harmonics of it, else Consistency).
double fastest_period(const ModelParams& params);
double drive_period(const ModelParams& params);

/// Steps per stroboscopic period: a multiple of opts.steps_per_period large enough for
/// both the resolution rule and RK4 stability.
int steps_per_drive_period(const CompiledLiouvillian& L, const ModelParams& params, const EvolveOptions& opts);

/// Fixed-step RK4 over [t0, t1]. `observer` sees ρ at t0, every record_stride steps and t1.
/// Retries with doubled step count on trace drift or blow-up; throws StepSize /
/// Instability once the doublings are exhausted.
EvolveResult evolve(const ModelParams& params, const DensityMatrix& rho0, double t0, double t1,
                    const EvolveOptions& opts = {}, const Observer& observer = {});

/// Same, reusing an already compiled Liouvillian.
EvolveResult evolve(const CompiledLiouvillian& L, const ModelParams& params, const DensityMatrix& rho0, double t0,
                    double t1, const EvolveOptions& opts = {}, const Observer& observer = {});

struct SteadyStateOptions {
    EvolveOptions evolve;
    double residual_tolerance = 1e-9;     // undriven: ‖Lρ‖_max
    double stroboscopic_tolerance = 1e-8; // driven: ‖ρ(t+T)−ρ(t)‖_max
    double max_time = 0.0;                // 0 = 40/γ
    int snapshots = 200;
    bool initial_from_undriven = true;    // driven runs start from the undriven steady state
};

struct SteadyStateReport {
    DensityMatrix rho;                    // state at the end of convergence (t = integer periods)
    std::vector<double> times;            // one-period snapshot times (driven)
    std::vector<DensityMatrix> snapshots; // K states over one period (driven)
    bool converged = false;
    double residual = 0.0;
    double min_eig = 0.0;
    int periods_used = 0;
    double time_used = 0.0;
    PositivityLog positivity;
};

/// Undriven: evolve until ‖Lρ‖_max < tolerance. Driven: evolve whole periods until the
/// stroboscopic change drops below tolerance, then record one period of snapshots.
SteadyStateReport steady_state(const ModelParams& params, const SteadyStateOptions& opts = {});
SteadyStateReport steady_state(const ModelParams& params, const DensityMatrix& rho0, const SteadyStateOptions& opts);

/// Null vector of the static Liouvillian by sparse LU with the trace row imposed.
DensityMatrix undriven_steady_state_direct(const ModelParams& params);

/// Fixed point of the one-period map Φ, materialized column by column and solved as a
/// kernel of Φ − 1. Throws Ambiguity when the unit eigenvalue is degenerate.
SteadyStateReport floquet_map_fixed_point(const ModelParams& params, const EvolveOptions& opts = {});

/// Dense one-period propagator on column-major vec(ρ).
Eigen::MatrixXcd one_period_map(const CompiledLiouvillian& L, const ModelParams& params, const EvolveOptions& opts);

} // namespace gcl
