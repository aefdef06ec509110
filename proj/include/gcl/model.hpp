// model.hpp: Physical parameters and the driven Kerr system Hamiltonian

#pragma once

#include <numbers>
#include <string>
#include <vector>

#include "gcl/fock.hpp"

namespace gcl {

/// Master-equation family. CL keeps the unitary, decoherence and friction
/// groups; gCL adds the nonlinear and drive-dressed dissipators; Lindblad is
/// the θ = π/4 point written in Lindblad form.
enum class Family { CL, gCL, Lindblad };

const char* to_string(Family f) noexcept;
Family family_from_string(const std::string& s); // case-insensitive; throws Config

/// F cos(ω t) x^k
struct DriveTone {
    double amplitude = 0.0;
    double omega = 1.0;
    int order = 1;
};

struct ModelParams {
    double omega0 = 1.0;
    double gamma = 0.0;
    double theta = 0.0; // mixing angle in [0, π/2]
    double n_th = 0.0;
    double U = 0.0;     // Kerr coefficient, V1 = ω₀²U x⁴/3
    std::vector<DriveTone> drives;
    int dim = 30;
    Family family = Family::gCL;

    /// c(T) = coth(ω₀/2T) = 2 n_th + 1
    double c_thermal() const { return 2.0 * n_th + 1.0; }

    /// Throws Consistency / InvalidDimension / UnsupportedDrive on violations.
    void validate() const;
};

inline constexpr double kLindbladAngle = std::numbers::pi / 4.0;
inline constexpr double kLindbladAngleTolerance = 1e-12;

/// V1(x) = (ω₀²U/3) x⁴
OperatorMatrix kerr_potential(const ModelParams& params);

/// V1'(x) = (4ω₀²U/3) x³, so that [V1(x), p] = i V1'(x).
OperatorMatrix kerr_force_derivative(const ModelParams& params);

/// Time-independent pieces of H_S(t) on the retained basis.
struct SystemOperators {
    FockBasis basis;
    OperatorMatrix x;
    OperatorMatrix p;
    OperatorMatrix h_static;               // p²/2 + ω₀²x²/2 + V1(x)
    std::vector<OperatorMatrix> drive_ops; // x^{k_n}, one per tone
};

SystemOperators build_system(const ModelParams& params);

/// H_S(t) = H_static + Σ_n F_n cos(ω_n t) x^{k_n}
OperatorMatrix hamiltonian_at(const SystemOperators& ops, const ModelParams& params, double t);
OperatorMatrix hamiltonian_at(const ModelParams& params, double t);

/// Rescaled linear drive F_q = F/(2 sqrt(2ω₀)) and its inverse.
double fq_to_F(double F_q, double omega0);
double F_to_fq(double F, double omega0);

/// Two-photon drive strength convention G = F₂/(2ω₀).
double G_to_F2(double G, double omega0);
double F2_to_G(double F2, double omega0);

} // namespace gcl
