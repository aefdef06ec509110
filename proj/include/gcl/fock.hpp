// fock.hpp: Truncated Fock-space operators for a single bosonic mode (ℏ = m = 1)

#pragma once

#include <complex>
#include <optional>
#include <span>

#include <Eigen/Dense>

namespace gcl {

using cplx = std::complex<double>;
using OperatorMatrix = Eigen::MatrixXcd;

/// Truncated oscillator basis: `dim` retained number states, frequency `omega0`
/// fixing the oscillator length 1/sqrt(omega0).
struct FockBasis {
    int dim = 0;
    double omega0 = 1.0;
};

struct Quadratures {
    OperatorMatrix x;
    OperatorMatrix p;
};

/// Lowering operator a on `dim` levels.
OperatorMatrix annihilation(int dim);

/// x = (a + a†)/sqrt(2ω₀), p = i sqrt(ω₀/2)(a† − a) on N levels.
/// Throws InvalidDimension for N < 2 and Consistency for ω₀ <= 0.
Quadratures build_xp(int dim, double omega0);

/// Same quadratures built on dim + pad levels; used to assemble polynomials
/// before cutting back to the retained block.
Quadratures build_xp_padded(const FockBasis& basis, int pad);

/// Top-left dim×dim block.
OperatorMatrix truncate(const OperatorMatrix& m, int dim);

/// Σ_j coeffs[j] x^j. The powers are formed on dim + pad levels and truncated
/// afterwards, so the retained block is exact whenever pad >= degree/2.
/// `pad` defaults to the polynomial degree.
OperatorMatrix poly_of_x(const FockBasis& basis, std::span<const double> coeffs,
                         std::optional<int> pad = std::nullopt);

/// x^k with the same padding rule.
OperatorMatrix x_power(const FockBasis& basis, int k);

/// Harmonic part p²/2 + ω₀²x²/2 assembled with padding; equals ω₀(n + 1/2) exactly.
OperatorMatrix harmonic_hamiltonian(const FockBasis& basis);

/// max_ij |M_ij − conj(M_ji)|
double hermiticity_error(const OperatorMatrix& m);

/// max_ij |A_ij − B_ij|
double max_abs_diff(const OperatorMatrix& a, const OperatorMatrix& b);

inline OperatorMatrix commutator(const OperatorMatrix& a, const OperatorMatrix& b) {
    return a * b - b * a;
}

inline OperatorMatrix anticommutator(const OperatorMatrix& a, const OperatorMatrix& b) {
    return a * b + b * a;
}

} // namespace gcl
