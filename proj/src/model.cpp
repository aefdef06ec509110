// model.cpp: Parameter validation and Hamiltonian assembly

#include "gcl/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "gcl/errors.hpp"

namespace gcl {

namespace {

constexpr int kMaxDriveOrder = 2;

void require_supported(const DriveTone& tone)
{
    if (tone.order < 1 || tone.order > kMaxDriveOrder) {
        throw Error(ErrorKind::UnsupportedDrive,
                    "drive order " + std::to_string(tone.order) + " is not supported (only 1 and 2)");
    }
}

} // namespace

const char* to_string(Family f) noexcept
{
    switch (f) {
    case Family::CL: return "CL";
    case Family::gCL: return "gCL";
    case Family::Lindblad: return "Lindblad";
    }
    return "?";
}

Family family_from_string(const std::string& s)
{
    std::string lower(s);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "cl") return Family::CL;
    if (lower == "gcl") return Family::gCL;
    if (lower == "lindblad") return Family::Lindblad;
    throw ConfigError("family", "unknown family '" + s + "' (expected CL, gCL or Lindblad)");
}

void ModelParams::validate() const
{
    if (!(omega0 > 0.0)) throw Error(ErrorKind::Consistency, "omega0 must be positive");
    if (!(gamma >= 0.0)) throw Error(ErrorKind::Consistency, "gamma must be non-negative");
    if (!(n_th >= 0.0)) throw Error(ErrorKind::Consistency, "n_th must be non-negative");
    if (!(theta >= 0.0 && theta <= std::numbers::pi / 2.0 + 1e-15)) {
        throw Error(ErrorKind::Consistency, "theta must lie in [0, pi/2]");
    }
    if (!std::isfinite(U)) throw Error(ErrorKind::Consistency, "U must be finite");
    if (dim < 2) throw Error(ErrorKind::InvalidDimension, "Fock truncation must be at least 2");
    if (family == Family::Lindblad && std::abs(theta - kLindbladAngle) > kLindbladAngleTolerance) {
        throw Error(ErrorKind::Consistency, "the Lindblad family requires theta = pi/4");
    }
    for (const auto& tone : drives) {
        if (tone.order < 1) throw Error(ErrorKind::UnsupportedDrive, "drive order must be positive");
        if (!(tone.omega > 0.0)) throw Error(ErrorKind::Consistency, "drive frequency must be positive");
        if (!std::isfinite(tone.amplitude)) throw Error(ErrorKind::Consistency, "drive amplitude must be finite");
    }
}

OperatorMatrix kerr_potential(const ModelParams& params)
{
    const FockBasis basis{params.dim, params.omega0};
    const double c = params.omega0 * params.omega0 * params.U / 3.0;
    const double coeffs[] = {0.0, 0.0, 0.0, 0.0, c};
    return poly_of_x(basis, coeffs);
}

OperatorMatrix kerr_force_derivative(const ModelParams& params)
{
    const FockBasis basis{params.dim, params.omega0};
    const double c = 4.0 * params.omega0 * params.omega0 * params.U / 3.0;
    const double coeffs[] = {0.0, 0.0, 0.0, c};
    return poly_of_x(basis, coeffs);
}

SystemOperators build_system(const ModelParams& params)
{
    const FockBasis basis{params.dim, params.omega0};
    SystemOperators ops;
    ops.basis = basis;
    const Quadratures q = build_xp(params.dim, params.omega0);
    ops.x = q.x;
    ops.p = q.p;
    ops.h_static = harmonic_hamiltonian(basis) + kerr_potential(params);
    ops.drive_ops.reserve(params.drives.size());
    for (const auto& tone : params.drives) {
        require_supported(tone);
        ops.drive_ops.push_back(x_power(basis, tone.order));
    }
    return ops;
}

OperatorMatrix hamiltonian_at(const SystemOperators& ops, const ModelParams& params, double t)
{
    if (ops.drive_ops.size() != params.drives.size()) {
        throw Error(ErrorKind::DimensionMismatch, "operator set does not match the drive list");
    }
    OperatorMatrix h = ops.h_static;
    for (std::size_t n = 0; n < params.drives.size(); ++n) {
        const auto& tone = params.drives[n];
        h += (tone.amplitude * std::cos(tone.omega * t)) * ops.drive_ops[n];
    }
    return h;
}

OperatorMatrix hamiltonian_at(const ModelParams& params, double t)
{
    return hamiltonian_at(build_system(params), params, t);
}

double fq_to_F(double F_q, double omega0) { return 2.0 * std::sqrt(2.0 * omega0) * F_q; }
double F_to_fq(double F, double omega0) { return F / (2.0 * std::sqrt(2.0 * omega0)); }
double G_to_F2(double G, double omega0) { return 2.0 * omega0 * G; }
double F2_to_G(double F2, double omega0) { return F2 / (2.0 * omega0); }

} // namespace gcl
