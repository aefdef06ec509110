// fock.cpp: Ladder-operator construction and padded polynomial evaluation

#include "gcl/fock.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "gcl/errors.hpp"

namespace gcl {

namespace {

void require_basis(int dim, double omega0)
{
    if (dim < 2) {
        throw Error(ErrorKind::InvalidDimension,
                    "Fock truncation must be at least 2, got " + std::to_string(dim));
    }
    if (!(omega0 > 0.0)) {
        throw Error(ErrorKind::Consistency, "omega0 must be positive");
    }
}

Quadratures quadratures_from_ladder(const OperatorMatrix& a, double omega0)
{
    const OperatorMatrix ad = a.adjoint();
    Quadratures q;
    q.x = (a + ad) / std::sqrt(2.0 * omega0);
    q.p = cplx(0.0, std::sqrt(omega0 / 2.0)) * (ad - a);
    return q;
}

} // namespace

OperatorMatrix annihilation(int dim)
{
    OperatorMatrix a = OperatorMatrix::Zero(dim, dim);
    for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

Quadratures build_xp(int dim, double omega0)
{
    require_basis(dim, omega0);
    // x and p are tridiagonal, so truncating them directly loses nothing.
    return quadratures_from_ladder(annihilation(dim), omega0);
}

Quadratures build_xp_padded(const FockBasis& basis, int pad)
{
    require_basis(basis.dim, basis.omega0);
    if (pad < 0) throw Error(ErrorKind::InvalidDimension, "padding must be non-negative");
    return quadratures_from_ladder(annihilation(basis.dim + pad), basis.omega0);
}

OperatorMatrix truncate(const OperatorMatrix& m, int dim)
{
    if (dim > m.rows() || dim > m.cols()) {
        throw Error(ErrorKind::DimensionMismatch, "cannot truncate to a larger dimension");
    }
    return m.topLeftCorner(dim, dim);
}

OperatorMatrix poly_of_x(const FockBasis& basis, std::span<const double> coeffs, std::optional<int> pad)
{
    if (coeffs.empty()) throw Error(ErrorKind::InvalidDimension, "polynomial needs at least one coefficient");
    const int degree = static_cast<int>(coeffs.size()) - 1;
    const int padding = pad.value_or(degree);
    const Quadratures q = build_xp_padded(basis, padding);
    const int big = basis.dim + padding;

    // Horner on the padded space
    OperatorMatrix acc = OperatorMatrix::Identity(big, big) * coeffs[static_cast<std::size_t>(degree)];
    for (int j = degree - 1; j >= 0; --j) {
        acc = q.x * acc;
        acc.diagonal().array() += coeffs[static_cast<std::size_t>(j)];
    }
    return truncate(acc, basis.dim);
}

OperatorMatrix x_power(const FockBasis& basis, int k)
{
    if (k < 0) throw Error(ErrorKind::UnsupportedDrive, "negative power of x");
    std::vector<double> coeffs(static_cast<std::size_t>(k) + 1, 0.0);
    coeffs.back() = 1.0;
    return poly_of_x(basis, coeffs);
}

OperatorMatrix harmonic_hamiltonian(const FockBasis& basis)
{
    const Quadratures q = build_xp_padded(basis, 2);
    const double w2 = basis.omega0 * basis.omega0;
    const OperatorMatrix h = 0.5 * (q.p * q.p) + 0.5 * w2 * (q.x * q.x);
    return truncate(h, basis.dim);
}

double hermiticity_error(const OperatorMatrix& m)
{
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

double max_abs_diff(const OperatorMatrix& a, const OperatorMatrix& b)
{
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw Error(ErrorKind::DimensionMismatch, "matrix shapes differ");
    }
    return (a - b).cwiseAbs().maxCoeff();
}

} // namespace gcl
