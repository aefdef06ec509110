// observables.cpp: Populations, effective temperature, occupation and covariance

#include "gcl/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "gcl/errors.hpp"

namespace gcl {

namespace {

void require_square_match(const OperatorMatrix& a, const OperatorMatrix& b)
{
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols()) {
        throw Error(ErrorKind::DimensionMismatch, "operator dimensions do not match");
    }
}

double expect(const OperatorMatrix& rho, const OperatorMatrix& op) { return (rho * op).trace().real(); }

} // namespace

std::vector<LevelPopulation> populations(const OperatorMatrix& rho, const OperatorMatrix& h_static, int guard)
{
    require_square_match(rho, h_static);
    Eigen::SelfAdjointEigenSolver<OperatorMatrix> es(h_static);
    if (es.info() != Eigen::Success) throw Error(ErrorKind::NonConvergence, "diagonalization failed");
    const int keep = std::max(0, static_cast<int>(h_static.rows()) - guard);
    std::vector<LevelPopulation> out;
    out.reserve(static_cast<std::size_t>(keep));
    for (int n = 0; n < keep; ++n) {
        const Eigen::VectorXcd psi = es.eigenvectors().col(n);
        out.push_back({es.eigenvalues()(n), (psi.adjoint() * rho * psi)(0, 0).real()});
    }
    return out;
}

PopulationFit effective_temperature(std::span<const LevelPopulation> pops, double floor)
{
    PopulationFit fit;
    for (const auto& l : pops)
        if (l.population > floor) fit.levels.push_back(l);
    fit.levels_used = static_cast<int>(fit.levels.size());
    if (fit.levels_used < 3) throw Error(ErrorKind::NoTemperature, "fewer than three populated levels");

    double sw = 0, se = 0, sy = 0;
    for (const auto& l : fit.levels) {
        sw += l.population;
        se += l.population * l.energy;
        sy += l.population * std::log(l.population);
    }
    const double em = se / sw, ym = sy / sw;
    double see = 0, sey = 0;
    for (const auto& l : fit.levels) {
        const double de = l.energy - em;
        see += l.population * de * de;
        sey += l.population * de * (std::log(l.population) - ym);
    }
    const double slope = sey / see;
    if (!(slope < 0.0)) throw Error(ErrorKind::NoTemperature, "populations do not decay with energy");
    fit.T_eff = -1.0 / slope;
    double ss = 0;
    for (const auto& l : fit.levels) {
        const double r = std::log(l.population) - (ym + slope * (l.energy - em));
        ss += l.population * r * r;
    }
    fit.fit_residual = std::sqrt(ss / sw);
    return fit;
}

double occupation(const OperatorMatrix& rho, const OperatorMatrix& x, const OperatorMatrix& p, double omega0)
{
    require_square_match(rho, x);
    require_square_match(rho, p);
    const double x2 = expect(rho, x * x);
    const double p2 = expect(rho, p * p);
    return 0.5 * omega0 * x2 + 0.5 * p2 / omega0 - 0.5 * rho.trace().real();
}

CovarianceSummary covariance(const OperatorMatrix& rho, const OperatorMatrix& x, const OperatorMatrix& p)
{
    require_square_match(rho, x);
    require_square_match(rho, p);
    CovarianceSummary c;
    c.mean_x = expect(rho, x);
    c.mean_p = expect(rho, p);
    c.sigma(0, 0) = expect(rho, x * x) - c.mean_x * c.mean_x;
    c.sigma(1, 1) = expect(rho, p * p) - c.mean_p * c.mean_p;
    const double xp = 0.5 * expect(rho, x * p + p * x) - c.mean_x * c.mean_p;
    c.sigma(0, 1) = c.sigma(1, 0) = xp;

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(c.sigma);
    c.nu_min = es.eigenvalues()(0);
    c.nu_max = es.eigenvalues()(1);
    c.physical = c.nu_min > 0.0;
    if (c.physical) {
        c.nu_geo = std::sqrt(c.nu_min * c.nu_max);
        c.R = c.nu_max / c.nu_min;
    } else {
        c.nu_geo = std::numeric_limits<double>::quiet_NaN();
        c.R = std::numeric_limits<double>::quiet_NaN();
    }
    return c;
}

double percentile(std::span<const double> values, double q)
{
    if (values.empty()) throw Error(ErrorKind::Consistency, "percentile of an empty sample");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] + frac * (v[hi] - v[lo]);
}

MicromotionStats micromotion_stats(std::span<const double> samples)
{
    if (samples.empty()) throw Error(ErrorKind::Consistency, "no snapshots");
    MicromotionStats s;
    double acc = 0.0;
    for (double v : samples) acc += v;
    s.mean = acc / static_cast<double>(samples.size());
    s.p10 = percentile(samples, 0.1);
    s.p90 = percentile(samples, 0.9);
    return s;
}

} // namespace gcl
