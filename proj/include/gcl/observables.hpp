// observables.hpp: Populations, effective temperature, occupation and covariance

#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gcl/fock.hpp"

namespace gcl {

struct LevelPopulation {
    double energy = 0.0;
    double population = 0.0;
};

/// P_n = ⟨ψ_n|ρ|ψ_n⟩ in the eigenbasis of H_static, ascending in energy. The top
/// `guard` levels are dropped as truncation-affected.
std::vector<LevelPopulation> populations(const OperatorMatrix& rho, const OperatorMatrix& h_static, int guard = 5);

struct PopulationFit {
    std::vector<LevelPopulation> levels; // the levels that entered the fit
    double T_eff = 0.0;
    double fit_residual = 0.0;           // weighted RMS of ln P about the line
    int levels_used = 0;
};

/// Weighted least-squares line through (E_n, ln P_n), weights P_n, over levels with
/// P_n > floor. T_eff = −1/slope. Throws NoTemperature if the slope is not negative
/// or fewer than three levels qualify.
PopulationFit effective_temperature(std::span<const LevelPopulation> pops, double floor = 1e-8);

/// ⟨n⟩ = Tr[ρ(ω₀x²/2 + p²/(2ω₀) − 1/2)] with the supplied quadratures.
double occupation(const OperatorMatrix& rho, const OperatorMatrix& x, const OperatorMatrix& p, double omega0);

struct CovarianceSummary {
    Eigen::Matrix2d sigma = Eigen::Matrix2d::Zero();
    double nu_min = 0.0;
    double nu_max = 0.0;
    double nu_geo = 0.0;
    double R = 1.0;
    double mean_x = 0.0;
    double mean_p = 0.0;
    bool physical = true; // false when Σ has a non-positive eigenvalue
};

/// Symmetrized covariance of r = (x, p); ν are the eigenvalues of Σ, ν_geo = sqrt(ν_min ν_max),
/// R = ν_max/ν_min.
CovarianceSummary covariance(const OperatorMatrix& rho, const OperatorMatrix& x, const OperatorMatrix& p);

struct MicromotionStats {
    double mean = 0.0;
    double p10 = 0.0;
    double p90 = 0.0;
};

/// Linear interpolation between order statistics at rank q(K−1).
double percentile(std::span<const double> values, double q);

MicromotionStats micromotion_stats(std::span<const double> samples);

} // namespace gcl
