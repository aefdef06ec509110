// test_support.hpp: Shared helpers for the unit tests

#pragma once

#include <cmath>
#include <random>

#include "gcl/fock.hpp"

namespace gcltest {

using gcl::cplx;
using gcl::OperatorMatrix;

/// Random density matrix supported on the lowest `support` levels of a dim-level space.
inline OperatorMatrix random_density(int dim, int support, unsigned seed)
{
    std::mt19937 rng(seed);
    std::normal_distribution<double> nd;
    OperatorMatrix g = OperatorMatrix::Zero(dim, dim);
    for (int i = 0; i < support; ++i)
        for (int j = 0; j < support; ++j) g(i, j) = cplx(nd(rng), nd(rng));
    OperatorMatrix rho = g * g.adjoint();
    return rho / rho.trace();
}

/// Bose–Einstein populations n̄ⁿ/(n̄+1)ⁿ⁺¹ on the diagonal.
inline OperatorMatrix thermal_reference(int dim, double nbar)
{
    OperatorMatrix rho = OperatorMatrix::Zero(dim, dim);
    for (int n = 0; n < dim; ++n) rho(n, n) = std::pow(nbar, n) / std::pow(nbar + 1.0, n + 1);
    return rho;
}

/// Ladder operator written out independently of the library.
inline OperatorMatrix lowering(int dim)
{
    OperatorMatrix a = OperatorMatrix::Zero(dim, dim);
    for (int n = 0; n + 1 < dim; ++n) a(n, n + 1) = std::sqrt(n + 1.0);
    return a;
}

inline double max_abs(const OperatorMatrix& m) { return m.cwiseAbs().maxCoeff(); }

} // namespace gcltest
