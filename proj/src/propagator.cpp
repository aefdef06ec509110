// propagator.cpp: Fixed-step RK4 on the compiled Liouvillian, steady states, Floquet map

#include "gcl/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SparseLU>

#include "gcl/errors.hpp"

namespace gcl {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kBlowUp = 1e6;

using Vector = CompiledLiouvillian::Vector;

Eigen::Map<const Vector> as_vec(const DensityMatrix& rho) { return {rho.data(), rho.size()}; }

DensityMatrix as_matrix(const Vector& v, int dim) { return Eigen::Map<const DensityMatrix>(v.data(), dim, dim); }

cplx vec_trace(const Vector& v, int dim)
{
    cplx tr = 0.0;
    for (int k = 0; k < dim; ++k) tr += v(static_cast<Eigen::Index>(k) * dim + k);
    return tr;
}

// Classic RK4 with persistent scratch space; L(t) is applied column by column.
template <class State>
class Rk4 {
public:
    explicit Rk4(const CompiledLiouvillian& L) : L_(L) {}

    void step(double t, double h, State& y)
    {
        rhs(t, y, k1_);
        tmp_ = y + (0.5 * h) * k1_;
        rhs(t + 0.5 * h, tmp_, k2_);
        tmp_ = y + (0.5 * h) * k2_;
        rhs(t + 0.5 * h, tmp_, k3_);
        tmp_ = y + h * k3_;
        rhs(t + h, tmp_, k4_);
        y += (h / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
    }

private:
    void rhs(double t, const State& in, State& out)
    {
        if constexpr (State::ColsAtCompileTime == 1) {
            out.resize(in.size());
            L_.apply(t, in, out);
        } else {
            out.resize(in.rows(), in.cols());
            Vector col_out(in.rows());
            for (Eigen::Index c = 0; c < in.cols(); ++c) {
                const Vector col = in.col(c);
                L_.apply(t, col, col_out);
                out.col(c) = col_out;
            }
        }
    }

    const CompiledLiouvillian& L_;
    State k1_, k2_, k3_, k4_, tmp_;
};

bool finite_and_bounded(const Vector& v)
{
    const double m = v.cwiseAbs().maxCoeff();
    return std::isfinite(m) && m < kBlowUp;
}

struct Attempt {
    bool ok = true;
    bool blew_up = false;
    EvolveResult result;
};

Attempt run_attempt(const CompiledLiouvillian& L, const DensityMatrix& rho0, double t0, double t1, int steps,
                    const EvolveOptions& opts, const Observer& observer)
{
    Attempt a;
    const int dim = L.dim();
    const double h = (t1 - t0) / steps;
    Vector y = as_vec(rho0);
    Rk4<Vector> rk(L);
    a.result.dt = h;
    a.result.steps = steps;
    a.result.positivity.epsilon = opts.positivity_epsilon;

    auto check = [&](double t, bool positivity) {
        const double drift = std::abs(vec_trace(y, dim) - 1.0);
        a.result.max_trace_drift = std::max(a.result.max_trace_drift, drift);
        if (positivity) {
            const DensityMatrix rho = as_matrix(y, dim);
            a.result.max_hermiticity_error = std::max(a.result.max_hermiticity_error, hermiticity_error(rho));
            a.result.positivity.record(t, min_eigenvalue(rho));
        }
        return drift <= opts.trace_tolerance;
    };

    check(t0, true);
    if (observer) observer(t0, rho0);
    for (int n = 1; n <= steps; ++n) {
        const double t = t0 + (n - 1) * h;
        rk.step(t, h, y);
        const double tn = (n == steps) ? t1 : t0 + n * h;
        if (n % 64 == 0 || n == steps) {
            if (!finite_and_bounded(y)) {
                a.ok = false;
                a.blew_up = true;
                return a;
            }
        }
        const bool record = opts.record_stride > 0 && n % opts.record_stride == 0 && n != steps;
        const bool pos = opts.positivity_stride > 0 && n % opts.positivity_stride == 0;
        if (record || pos || n == steps) {
            if (!check(tn, pos || n == steps)) {
                a.ok = false;
                return a;
            }
        }
        if (record && observer) observer(tn, as_matrix(y, dim));
    }
    a.result.final_state = as_matrix(y, dim);
    a.result.t_final = t1;
    if (observer) observer(t1, a.result.final_state);
    return a;
}

double positive_or(double v, double fallback) { return v > 0.0 ? v : fallback; }

} // namespace

void PositivityLog::record(double t, double min_eig)
{
    ++checks;
    if (min_eig < worst) {
        worst = min_eig;
        worst_time = t;
    }
    if (min_eig < -epsilon) violations.push_back({t, min_eig});
}

DensityMatrix thermal_state(int dim, double n_th)
{
    if (dim < 2) throw Error(ErrorKind::InvalidDimension, "Fock truncation must be at least 2");
    if (!(n_th >= 0.0)) throw Error(ErrorKind::Consistency, "n_th must be non-negative");
    DensityMatrix rho = DensityMatrix::Zero(dim, dim);
    if (n_th == 0.0) {
        rho(0, 0) = 1.0;
        return rho;
    }
    const double q = n_th / (n_th + 1.0);
    double w = 1.0, total = 0.0;
    for (int n = 0; n < dim; ++n, w *= q) {
        rho(n, n) = w;
        total += w;
    }
    return rho / total;
}

DensityMatrix fock_state(int dim, int k)
{
    if (k < 0 || k >= dim) throw Error(ErrorKind::InvalidDimension, "Fock index outside the basis");
    DensityMatrix rho = DensityMatrix::Zero(dim, dim);
    rho(k, k) = 1.0;
    return rho;
}

DensityMatrix coherent_state(int dim, double omega0, double x0, double p0)
{
    if (dim < 2) throw Error(ErrorKind::InvalidDimension, "Fock truncation must be at least 2");
    const cplx alpha = std::sqrt(omega0 / 2.0) * cplx(x0, p0 / omega0);
    Eigen::VectorXcd psi(dim);
    cplx c = std::exp(-0.5 * std::norm(alpha));
    for (int n = 0; n < dim; ++n) {
        psi(n) = c;
        c *= alpha / std::sqrt(n + 1.0);
    }
    psi.normalize();
    return psi * psi.adjoint();
}

double min_eigenvalue(const DensityMatrix& rho)
{
    const DensityMatrix herm = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<DensityMatrix> es(herm, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

double fastest_period(const ModelParams& params)
{
    double w = params.omega0;
    for (const auto& tone : params.drives) w = std::max(w, tone.omega);
    return kTwoPi / w;
}

double drive_period(const ModelParams& params)
{
    if (params.drives.empty()) return kTwoPi / params.omega0;
    double base = params.drives.front().omega;
    for (const auto& tone : params.drives) base = std::min(base, tone.omega);
    for (const auto& tone : params.drives) {
        const double ratio = tone.omega / base;
        if (std::abs(ratio - std::round(ratio)) > 1e-9) {
            throw Error(ErrorKind::Consistency, "drive frequencies must be integer multiples of the slowest tone");
        }
    }
    return kTwoPi / base;
}

int steps_per_drive_period(const CompiledLiouvillian& L, const ModelParams& params, const EvolveOptions& opts)
{
    if (opts.steps_per_period <= 0) throw Error(ErrorKind::StepSize, "steps_per_period must be positive");
    const double period = drive_period(params);
    const double resolution = fastest_period(params) / opts.steps_per_period;
    const double stable = opts.stability_margin / std::max(L.spectral_radius_estimate(), 1e-300);
    const double dt_max = std::min(resolution, stable);
    const int blocks = static_cast<int>(std::ceil(period / (dt_max * opts.steps_per_period) - 1e-9));
    return std::max(1, blocks) * opts.steps_per_period;
}

EvolveResult evolve(const ModelParams& params, const DensityMatrix& rho0, double t0, double t1,
                    const EvolveOptions& opts, const Observer& observer)
{
    params.validate();
    const CompiledLiouvillian L = CompiledLiouvillian::compile(params);
    return evolve(L, params, rho0, t0, t1, opts, observer);
}

EvolveResult evolve(const CompiledLiouvillian& L, const ModelParams& params, const DensityMatrix& rho0, double t0,
                    double t1, const EvolveOptions& opts, const Observer& observer)
{
    if (rho0.rows() != L.dim() || rho0.cols() != L.dim()) {
        throw Error(ErrorKind::DimensionMismatch, "initial state does not match the Fock truncation");
    }
    if (!(t1 >= t0)) throw Error(ErrorKind::Consistency, "evolution interval must satisfy t1 >= t0");
    if (t1 == t0) {
        EvolveResult r;
        r.final_state = rho0;
        r.t_final = t1;
        if (observer) observer(t0, rho0);
        return r;
    }
    const double period = drive_period(params);
    const int per_period = steps_per_drive_period(L, params, opts);
    const double dt_nominal = period / per_period;
    int steps = static_cast<int>(std::ceil((t1 - t0) / dt_nominal - 1e-9));
    steps = std::max(steps, 1);

    bool blew_up = false;
    for (int d = 0; d <= opts.max_doublings; ++d) {
        Attempt a = run_attempt(L, rho0, t0, t1, steps, opts, observer);
        if (a.ok) {
            a.result.doublings = d;
            return a.result;
        }
        blew_up = a.blew_up;
        steps *= 2;
    }
    if (blew_up) throw Error(ErrorKind::Instability, "state diverged; step size too large or dynamics unstable");
    throw Error(ErrorKind::StepSize, "trace drift above tolerance after the maximum number of step doublings");
}

DensityMatrix undriven_steady_state_direct(const ModelParams& params)
{
    ModelParams p = params;
    p.drives.clear();
    p.validate();
    const CompiledLiouvillian L = CompiledLiouvillian::compile(p);
    const int n = p.dim;

    // column-major copy of the static part with row 0 replaced by the trace functional
    const Eigen::SparseMatrix<cplx> A = L.static_part();
    std::vector<Eigen::Triplet<cplx>> trips;
    for (int k = 0; k < A.outerSize(); ++k)
        for (Eigen::SparseMatrix<cplx>::InnerIterator it(A, k); it; ++it)
            if (it.row() != 0) trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    for (int k = 0; k < n; ++k) trips.emplace_back(0, k * n + k, cplx(1.0, 0.0));
    Eigen::SparseMatrix<cplx> M(n * n, n * n);
    M.setFromTriplets(trips.begin(), trips.end());
    M.makeCompressed();

    Eigen::SparseLU<Eigen::SparseMatrix<cplx>> lu;
    lu.compute(M);
    if (lu.info() != Eigen::Success) throw Error(ErrorKind::NonConvergence, "sparse LU of the Liouvillian failed");
    Vector rhs = Vector::Zero(n * n);
    rhs(0) = 1.0;
    const Vector v = lu.solve(rhs);
    return as_matrix(v, n);
}

SteadyStateReport steady_state(const ModelParams& params, const SteadyStateOptions& opts)
{
    DensityMatrix rho0;
    if (!params.drives.empty() && opts.initial_from_undriven) {
        rho0 = undriven_steady_state_direct(params);
        rho0 = 0.5 * (rho0 + rho0.adjoint());
        rho0 /= rho0.trace();
    } else {
        rho0 = thermal_state(params.dim, params.n_th);
    }
    return steady_state(params, rho0, opts);
}

SteadyStateReport steady_state(const ModelParams& params, const DensityMatrix& rho0, const SteadyStateOptions& opts)
{
    params.validate();
    if (!(params.gamma > 0.0)) throw Error(ErrorKind::Consistency, "steady states require gamma > 0");
    const CompiledLiouvillian L = CompiledLiouvillian::compile(params);
    const double period = drive_period(params);
    const double max_time = positive_or(opts.max_time, 40.0 / params.gamma);
    const int max_periods = std::max(1, static_cast<int>(std::ceil(max_time / period)));

    SteadyStateReport rep;
    rep.positivity.epsilon = opts.evolve.positivity_epsilon;
    DensityMatrix rho = rho0;
    double t = 0.0;
    EvolveOptions eo = opts.evolve;
    eo.record_stride = 0;
    eo.positivity_stride = 0;

    auto merge_positivity = [&](const PositivityLog& log) {
        rep.positivity.checks += log.checks;
        if (log.worst < rep.positivity.worst) {
            rep.positivity.worst = log.worst;
            rep.positivity.worst_time = log.worst_time;
        }
        rep.positivity.violations.insert(rep.positivity.violations.end(), log.violations.begin(), log.violations.end());
    };

    const bool driven = !params.drives.empty();
    for (int k = 0; k < max_periods; ++k) {
        const EvolveResult r = evolve(L, params, rho, t, t + period, eo);
        merge_positivity(r.positivity);
        t += period;
        ++rep.periods_used;
        if (driven) {
            rep.residual = (r.final_state - rho).cwiseAbs().maxCoeff();
            rho = r.final_state;
            if (rep.residual < opts.stroboscopic_tolerance) {
                rep.converged = true;
                break;
            }
        } else {
            rho = r.final_state;
            rep.residual = L.apply(t, rho).cwiseAbs().maxCoeff();
            if (rep.residual < opts.residual_tolerance) {
                rep.converged = true;
                break;
            }
        }
    }
    rep.rho = rho;
    rep.time_used = t;
    rep.min_eig = min_eigenvalue(rho);

    if (driven && opts.snapshots > 0) {
        const int per_period = steps_per_drive_period(L, params, opts.evolve);
        const int k = opts.snapshots;
        EvolveOptions so = opts.evolve;
        so.record_stride = per_period % k == 0 ? per_period / k : 0;
        if (so.record_stride == 0) {
            throw Error(ErrorKind::StepSize, "steps per period must be a multiple of the snapshot count");
        }
        const double t_start = t;
        auto grab = [&](double ts, const DensityMatrix& r) {
            if (ts == t_start) {
                rep.times.clear();
                rep.snapshots.clear();
            }
            rep.times.push_back(ts);
            rep.snapshots.push_back(r);
        };
        const EvolveResult r = evolve(L, params, rho, t, t + period, so, grab);
        merge_positivity(r.positivity);
        // drop the closing endpoint so that the K samples cover exactly one period
        if (static_cast<int>(rep.snapshots.size()) == k + 1) {
            rep.snapshots.pop_back();
            rep.times.pop_back();
        }
        for (const auto& s : rep.snapshots) rep.min_eig = std::min(rep.min_eig, min_eigenvalue(s));
    }
    return rep;
}

Eigen::MatrixXcd one_period_map(const CompiledLiouvillian& L, const ModelParams& params, const EvolveOptions& opts)
{
    const double period = drive_period(params);
    const int steps = steps_per_drive_period(L, params, opts);
    const double h = period / steps;
    const Eigen::Index m = static_cast<Eigen::Index>(L.dim()) * L.dim();
    Eigen::MatrixXcd X = Eigen::MatrixXcd::Identity(m, m);
    Rk4<Eigen::MatrixXcd> rk(L);
    for (int n = 0; n < steps; ++n) rk.step(n * h, h, X);
    if (!std::isfinite(X.cwiseAbs().maxCoeff())) throw Error(ErrorKind::Instability, "one-period map diverged");
    return X;
}

SteadyStateReport floquet_map_fixed_point(const ModelParams& params, const EvolveOptions& opts)
{
    params.validate();
    const CompiledLiouvillian L = CompiledLiouvillian::compile(params);
    const int n = params.dim;
    const Eigen::MatrixXcd phi = one_period_map(L, params, opts);
    const Eigen::Index m = phi.rows();
    Eigen::MatrixXcd A = phi - Eigen::MatrixXcd::Identity(m, m);

    Eigen::FullPivLU<Eigen::MatrixXcd> lu(A);
    lu.setThreshold(1e-10);
    const Eigen::MatrixXcd ker = lu.kernel();
    if (ker.cols() != 1) {
        throw Error(ErrorKind::Ambiguity, "one-period map has a " + std::to_string(ker.cols()) +
                                              "-dimensional fixed-point space");
    }
    Vector v = ker.col(0);
    const cplx tr = vec_trace(v, n);
    if (std::abs(tr) < 1e-14) throw Error(ErrorKind::Ambiguity, "fixed point of the one-period map is traceless");
    v /= tr;

    SteadyStateReport rep;
    rep.rho = as_matrix(v, n);
    rep.residual = (phi * v - v).cwiseAbs().maxCoeff();
    rep.converged = rep.residual < 1e-9;
    rep.min_eig = min_eigenvalue(rep.rho);
    rep.periods_used = 1;
    rep.time_used = drive_period(params);
    return rep;
}

} // namespace gcl
