// semiclassics.cpp: Semiclassical EOM, ringdown analysis, closed-form response, RWA continuation

#include "gcl/semiclassics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "gcl/errors.hpp"

namespace gcl {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kQuadrature = 16;

bool is_dressed(Family f) { return f == Family::gCL; }

double theta_for(const ModelParams& p, Family f) { return f == Family::Lindblad ? kLindbladAngle : p.theta; }

template <class F>
double golden_max(F&& f, double a, double b, double tol)
{
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - r * (b - a), d = a + r * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

// Scan then golden refinement around the best grid point.
template <class F>
double grid_golden_max(F&& f, double lo, double hi, int grid, double tol)
{
    int best = 0;
    double best_val = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= grid; ++i) {
        const double w = lo + (hi - lo) * i / grid;
        const double val = f(w);
        if (val > best_val) {
            best_val = val;
            best = i;
        }
    }
    const double step = (hi - lo) / grid;
    const double a = std::max(lo, lo + (best - 1) * step);
    const double b = std::min(hi, lo + (best + 1) * step);
    return golden_max(f, a, b, tol);
}

bool stable_jacobian(const Eigen::Matrix2d& j) { return j.trace() < 0.0 && j.determinant() > 0.0; }

ResponsePoint make_point(double u, double v, double omega, const EomCoefficients& c, const Eigen::Matrix2d& jac)
{
    ResponsePoint p;
    p.omega = omega;
    p.detuning = omega - c.omega0;
    p.u = u;
    p.v = v;
    // x = u cos ωt + v sin ωt = A cos(ωt + δ) with A e^{iδ} = u − i v
    p.amplitude = std::hypot(u, v);
    p.phase = std::atan2(-v, u);
    p.stable = stable_jacobian(jac);
    return p;
}

} // namespace

EomCoefficients EomCoefficients::from(const ModelParams& params, Family family)
{
    if (!(params.omega0 > 0.0)) throw Error(ErrorKind::Consistency, "omega0 must be positive");
    const double th = theta_for(params, family);
    const double s2 = std::sin(2.0 * th), c2 = std::cos(2.0 * th);
    const double a_plus = 1.0 + c2 + s2;
    const double b = 1.0 - c2;
    const double sin_sq = std::sin(th) * std::sin(th);
    const double g = params.gamma, w0 = params.omega0, U = params.U;
    const double cs = std::cos(th) + std::sin(th);

    EomCoefficients c;
    c.omega0 = w0;
    c.omega_sq = w0 * w0 + cs * cs * s2 * g * g / 2.0;
    c.cubic = 4.0 * w0 * w0 * U / 3.0;
    c.damping = (1.0 + s2) * g;

    const DriveTone* tone = nullptr;
    for (const auto& d : params.drives) {
        if (d.order != 1 || tone != nullptr) {
            throw Error(ErrorKind::UnsupportedDrive, "semiclassical equations take a single linear drive tone");
        }
        tone = &d;
    }
    c.force = tone ? tone->amplitude : 0.0;
    c.drive_omega = tone ? tone->omega : w0;
    c.force_cos = c.force;

    if (is_dressed(family)) {
        c.cubic += sin_sq * a_plus * 2.0 * g * g * U / 3.0;
        c.nl_damping = b * 2.0 * g * U;
        c.force_cos = c.force * (1.0 + sin_sq * a_plus * g * g / (2.0 * w0 * w0));
        c.force_sin_per_omega = b * g * c.force / (2.0 * w0 * w0);
    }
    return c;
}

std::pair<double, double> eom_rhs(const SemiclassicalState& s, const EomCoefficients& c)
{
    const double wt = c.drive_omega * s.t;
    const double a = -c.omega_sq * s.x - c.cubic * s.x * s.x * s.x - c.damping * s.v - c.nl_damping * s.x * s.x * s.v
                     - c.force_cos * std::cos(wt) + c.force_sin() * std::sin(wt);
    return {s.v, a};
}

std::pair<double, double> eom_rhs(const SemiclassicalState& s, const ModelParams& params, Family family)
{
    return eom_rhs(s, EomCoefficients::from(params, family));
}

SemiclassicalState rk4_step(const SemiclassicalState& s, double h, const EomCoefficients& c)
{
    const auto [k1x, k1v] = eom_rhs(s, c);
    const auto [k2x, k2v] = eom_rhs({s.x + 0.5 * h * k1x, s.v + 0.5 * h * k1v, s.t + 0.5 * h}, c);
    const auto [k3x, k3v] = eom_rhs({s.x + 0.5 * h * k2x, s.v + 0.5 * h * k2v, s.t + 0.5 * h}, c);
    const auto [k4x, k4v] = eom_rhs({s.x + h * k3x, s.v + h * k3v, s.t + h}, c);
    return {s.x + h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x), s.v + h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v), s.t + h};
}

double nonlinear_damping_threshold(const ModelParams& params)
{
    const double s2 = std::sin(2.0 * params.theta), b = 1.0 - std::cos(2.0 * params.theta);
    if (params.U <= 0.0 || b <= 0.0) return std::numeric_limits<double>::infinity();
    return std::sqrt((1.0 + s2) / (2.0 * params.U * b));
}

RingdownResult ringdown(const ModelParams& params, double x0, Family family, const RingdownOptions& opts)
{
    if (!params.drives.empty()) throw Error(ErrorKind::Consistency, "ringdown requires F = 0");
    if (!(x0 > 0.0)) throw Error(ErrorKind::Consistency, "ringdown needs a positive initial amplitude");
    if (opts.steps_per_period < 8 || opts.steps_per_period % 2) throw Error(ErrorKind::StepSize, "steps per period must be even and at least 8");
    const EomCoefficients c = EomCoefficients::from(params, family);
    if (!(c.damping > 0.0)) throw Error(ErrorKind::Consistency, "ringdown requires gamma > 0");

    const int P = opts.steps_per_period;
    const double period = 2.0 * kPi / c.omega0;
    const double h = period / P;
    const double duration = opts.duration > 0.0 ? opts.duration : 2.0 * std::log(1e4) / c.damping;
    const int periods = std::max(4, static_cast<int>(std::ceil(duration / period)));
    const int n = periods * P;

    std::vector<double> xs(n + 1), vs(n + 1);
    SemiclassicalState s{x0, 0.0, 0.0};
    xs[0] = s.x;
    vs[0] = s.v;
    for (int k = 1; k <= n; ++k) {
        s = rk4_step(s, h, c);
        if (!std::isfinite(s.x) || !std::isfinite(s.v)) throw Error(ErrorKind::Instability, "ringdown diverged");
        xs[k] = s.x;
        vs[k] = s.v;
    }

    // one-period centred moving average of the quadrature amplitude
    std::vector<double> q(n + 1);
    for (int k = 0; k <= n; ++k) q[k] = std::hypot(xs[k], vs[k] / c.omega0);
    std::vector<double> prefix(n + 2, 0.0);
    for (int k = 0; k <= n; ++k) prefix[k + 1] = prefix[k] + q[k];
    const int half = P / 2;
    auto env_at = [&](int k) { return (prefix[k + half + 1] - prefix[k - half]) / (2 * half + 1); };

    RingdownResult r;
    r.x0 = x0;
    r.gamma_linear = c.damping;
    const int stride = opts.sample_stride > 0 ? opts.sample_stride : std::max(1, P / 20);
    for (int k = half; k + half <= n; k += stride) {
        r.t.push_back(k * h);
        r.x.push_back(xs[k]);
        r.v.push_back(vs[k]);
        r.envelope.push_back(env_at(k));
    }

    // per-period power balance; the window mean of q is the centred envelope
    for (int j = 0; j < periods; ++j) {
        const int k0 = j * P, k1 = (j + 1) * P;
        double v2 = vs[k0] * vs[k0] + vs[k1] * vs[k1];
        for (int k = k0 + 1; k < k1; ++k) v2 += ((k - k0) % 2 ? 4.0 : 2.0) * vs[k] * vs[k];
        v2 *= h / 3.0;
        const double dE = c.energy(xs[k1], vs[k1]) - c.energy(xs[k0], vs[k0]);
        const int kc = k0 + half;
        r.rate_t.push_back(kc * h);
        r.rate_amplitude.push_back(env_at(kc));
        r.rate_power.push_back(v2 > 0.0 ? -dE / v2 : 0.0);
    }
    for (std::size_t j = 0; j + 1 < r.rate_amplitude.size(); ++j) {
        r.rate_envelope.push_back(-2.0 * std::log(r.rate_amplitude[j + 1] / r.rate_amplitude[j]) / period);
    }
    r.rate_envelope.push_back(r.rate_envelope.empty() ? 0.0 : r.rate_envelope.back());

    // Γ_eff from the tail
    const std::size_t m = r.t.size();
    const std::size_t first = static_cast<std::size_t>(std::floor((1.0 - opts.fit_fraction) * static_cast<double>(m)));
    double st = 0, sy = 0, stt = 0, sty = 0;
    const double cnt = static_cast<double>(m - first);
    for (std::size_t i = first; i < m; ++i) {
        const double y = std::log(r.envelope[i]);
        st += r.t[i];
        sy += y;
        stt += r.t[i] * r.t[i];
        sty += r.t[i] * y;
    }
    const double slope = (cnt * sty - st * sy) / (cnt * stt - st * st);
    r.gamma_eff = -2.0 * slope;

    double running_min = r.envelope.front();
    for (double a : r.envelope) {
        running_min = std::min(running_min, a);
        r.max_envelope_rise = std::max(r.max_envelope_rise, a / running_min - 1.0);
    }
    r.monotone = r.max_envelope_rise <= opts.monotone_tolerance;
    return r;
}

ResponsePoint linear_response(const ModelParams& params, double omega, Family family)
{
    if (params.U != 0.0) throw Error(ErrorKind::Consistency, "closed-form response requires U = 0");
    ModelParams p = params;
    p.drives = {{params.drives.empty() ? 0.0 : params.drives.front().amplitude, omega, 1}};
    const EomCoefficients c = EomCoefficients::from(p, family);
    using C = std::complex<double>;
    const C forcing(-c.force_cos, -c.force_sin());
    const C X = forcing / C(c.omega_sq - omega * omega, c.damping * omega);
    ResponsePoint r;
    r.omega = omega;
    r.detuning = omega - c.omega0;
    r.amplitude = std::abs(X);
    r.phase = std::arg(X);
    r.u = X.real();
    r.v = -X.imag();
    r.stable = true;
    return r;
}

ResponseMaximum response_maximum(const ModelParams& params, Family family)
{
    const double w0 = params.omega0;
    auto amp = [&](double w) { return linear_response(params, w, family).amplitude; };
    const double w = grid_golden_max(amp, 0.02 * w0, 3.0 * w0, 1500, 1e-13 * w0);
    ResponseMaximum m;
    m.theta = params.theta;
    m.omega = w;
    m.detuning = w - w0;
    m.amplitude = amp(w);
    return m;
}

double resonance_minimum_angle(const ModelParams& params, Family family, double lo, double hi)
{
    auto neg = [&](double th) {
        ModelParams p = params;
        p.theta = th;
        return -response_maximum(p, family).amplitude;
    };
    return grid_golden_max(neg, lo, hi, 200, 1e-10);
}

SlowFlowEval slow_flow(double u, double v, double omega, const EomCoefficients& c)
{
    SlowFlowEval e;
    const double w2 = omega * omega;
    const double fs = c.force_sin_per_omega * omega;
    double gs = 0, gc = 0, gus = 0, gvs = 0, guc = 0, gvc = 0;
    for (int k = 0; k < kQuadrature; ++k) {
        const double ph = 2.0 * kPi * k / kQuadrature;
        const double cp = std::cos(ph), sp = std::sin(ph);
        const double x = u * cp + v * sp;
        const double xd = omega * (v * cp - u * sp);
        const double f = -c.omega_sq * x - c.cubic * x * x * x - c.damping * xd - c.nl_damping * x * x * xd
                         - c.force_cos * cp + fs * sp;
        const double g = f + w2 * x;
        const double fx = -c.omega_sq - 3.0 * c.cubic * x * x - 2.0 * c.nl_damping * x * xd + w2;
        const double fv = -c.damping - c.nl_damping * x * x;
        const double gu = fx * cp - fv * omega * sp;
        const double gv = fx * sp + fv * omega * cp;
        gs += g * sp;
        gc += g * cp;
        gus += gu * sp;
        gvs += gv * sp;
        guc += gu * cp;
        gvc += gv * cp;
    }
    const double norm = 1.0 / (kQuadrature * omega);
    e.rhs << -gs * norm, gc * norm;
    e.jacobian << -gus * norm, -gvs * norm, guc * norm, gvc * norm;
    return e;
}

Eigen::Vector2d slow_flow_rhs(double u, double v, double omega, const ModelParams& params, Family family)
{
    return slow_flow(u, v, omega, EomCoefficients::from(params, family)).rhs;
}

std::vector<Eigen::Vector2d> amplitude_equation_seeds(double omega, const EomCoefficients& c)
{
    // Averaged balance (D + iG)(u + iv) = F_c − iF_s with D = ω² − ω̃² − ¾κ₃S and
    // G = (Γ + ηS/4)ω, S = u² + v², i.e. (D² + G²)S = F_c² + F_s².
    using C = std::complex<double>;
    const double a0 = omega * omega - c.omega_sq, a1 = -0.75 * c.cubic;
    const double g0 = c.damping * omega, g1 = 0.25 * c.nl_damping * omega;
    const double fs = c.force_sin_per_omega * omega;
    const double k3 = a1 * a1 + g1 * g1, k2 = 2.0 * (a0 * a1 + g0 * g1), k1 = a0 * a0 + g0 * g0;
    const double k0 = -(c.force_cos * c.force_cos + fs * fs);
    std::vector<double> roots;
    if (k3 != 0.0) {
        Eigen::Matrix3d comp = Eigen::Matrix3d::Zero();
        comp(0, 0) = -k2 / k3;
        comp(0, 1) = -k1 / k3;
        comp(0, 2) = -k0 / k3;
        comp(1, 0) = 1.0;
        comp(2, 1) = 1.0;
        const Eigen::Vector3cd ev = comp.eigenvalues();
        for (const C& z : ev)
            if (std::abs(z.imag()) < 1e-8 * (1.0 + std::abs(z)) && z.real() > 0.0) roots.push_back(z.real());
    } else if (k1 != 0.0) {
        roots.push_back(-k0 / k1);
    }
    std::vector<Eigen::Vector2d> seeds;
    for (double S : roots) {
        const C z = C(c.force_cos, -fs) / C(a0 + a1 * S, g0 + g1 * S);
        seeds.emplace_back(z.real(), z.imag());
    }
    return seeds;
}

std::vector<ResponsePoint> fixed_points_at(double omega, const EomCoefficients& c)
{
    const double g_ref = c.damping > 0.0 ? c.damping : 1e-3;
    const double a_ref = std::max(std::abs(c.force), 1e-12) / (g_ref * c.omega0);
    std::vector<Eigen::Vector2d> seeds = amplitude_equation_seeds(omega, c);
    for (int i = 0; i < 8; ++i) {
        const double radius = a_ref * std::pow(10.0, -1.0 + 2.0 * i / 7.0);
        for (int j = 0; j < 4; ++j) {
            const double ang = 2.0 * kPi * (j + 0.125 * i) / 4.0;
            seeds.emplace_back(radius * std::cos(ang), radius * std::sin(ang));
        }
    }
    std::vector<ResponsePoint> found;
    for (const Eigen::Vector2d& seed : seeds) {
        {
            Eigen::Vector2d y = seed;
            bool ok = false;
            for (int it = 0; it < 200; ++it) {
                const SlowFlowEval e = slow_flow(y(0), y(1), omega, c);
                const double res = e.rhs.norm();
                if (res < 1e-12 * (1.0 + a_ref)) {
                    ok = true;
                    break;
                }
                Eigen::Vector2d step = e.jacobian.fullPivLu().solve(-e.rhs);
                if (!step.allFinite()) break;
                double lam = 1.0;
                while (lam > 1e-6 && slow_flow(y(0) + lam * step(0), y(1) + lam * step(1), omega, c).rhs.norm() >= res)
                    lam *= 0.5;
                y += lam * step;
            }
            if (!ok) continue;
            const double a = y.norm();
            const bool dup = std::any_of(found.begin(), found.end(), [&](const ResponsePoint& p) {
                return std::hypot(p.u - y(0), p.v - y(1)) < 1e-7 * (1.0 + a);
            });
            if (!dup) found.push_back(make_point(y(0), y(1), omega, c, slow_flow(y(0), y(1), omega, c).jacobian));
        }
    }
    std::sort(found.begin(), found.end(),
              [](const ResponsePoint& a, const ResponsePoint& b) { return a.amplitude < b.amplitude; });
    return found;
}

namespace {

// segment [a, b] contains 0, half-open so shared vertices count once; the last segment is closed
bool crosses(double a, double b, bool last)
{
    const double lo = std::min(a, b), hi = std::max(a, b);
    return (lo <= 0.0 && 0.0 < hi) || (last && hi == 0.0 && lo <= 0.0) || (lo == 0.0 && hi == 0.0);
}

} // namespace

int ResponseBranch::solutions_at(double omega) const
{
    int n = 0;
    for (std::size_t i = 0; i + 1 < points.size(); ++i)
        if (crosses(points[i].omega - omega, points[i + 1].omega - omega, i + 2 == points.size())) ++n;
    return n;
}

int ResponseBranch::stable_solutions_at(double omega) const
{
    int n = 0;
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        const double a = points[i].omega - omega, b = points[i + 1].omega - omega;
        if (crosses(a, b, i + 2 == points.size())) {
            const auto& near = std::abs(a) <= std::abs(b) ? points[i] : points[i + 1];
            if (near.stable) ++n;
        }
    }
    return n;
}

ResponseBranch response_continuation(const ModelParams& params, double omega_lo, double omega_hi, Family family,
                                     const ContinuationOptions& opts)
{
    if (!(omega_hi > omega_lo) || !(omega_lo > 0.0)) throw Error(ErrorKind::Consistency, "invalid frequency range");
    ModelParams p = params;
    if (p.drives.empty() || p.drives.front().order != 1) {
        throw Error(ErrorKind::UnsupportedDrive, "continuation needs one linear drive tone");
    }
    auto coeffs_at = [&](double w) {
        p.drives.front().omega = w;
        return EomCoefficients::from(p, family);
    };

    ResponseBranch br;
    const auto starts = fixed_points_at(omega_lo, coeffs_at(omega_lo));
    if (starts.empty()) throw Error(ErrorKind::EmptyBranch, "no fixed point found at the start frequency");
    if (starts.size() > 1) {
        br.log.push_back(std::to_string(starts.size()) + " fixed points at the start frequency; continuing the smallest");
    }

    using V3 = Eigen::Vector3d;
    auto residual = [&](const V3& y) { return slow_flow(y(0), y(1), y(2), coeffs_at(y(2))); };
    auto full_jac = [&](const V3& y, const SlowFlowEval& e) {
        Eigen::Matrix<double, 2, 3> J;
        J.leftCols<2>() = e.jacobian;
        const double hw = 1e-6 * std::max(1.0, std::abs(y(2)));
        const Eigen::Vector2d rp = slow_flow(y(0), y(1), y(2) + hw, coeffs_at(y(2) + hw)).rhs;
        const Eigen::Vector2d rm = slow_flow(y(0), y(1), y(2) - hw, coeffs_at(y(2) - hw)).rhs;
        J.col(2) = (rp - rm) / (2.0 * hw);
        return J;
    };
    auto tangent = [&](const Eigen::Matrix<double, 2, 3>& J) {
        V3 t = V3(J.row(0).transpose()).cross(V3(J.row(1).transpose()));
        return V3(t.normalized());
    };

    V3 y(starts.front().u, starts.front().v, omega_lo);
    SlowFlowEval e = residual(y);
    V3 tan = tangent(full_jac(y, e));
    if (tan(2) < 0.0) tan = -tan;
    br.points.push_back(make_point(y(0), y(1), y(2), coeffs_at(y(2)), e.jacobian));

    double ds = opts.ds;
    for (int step = 0; step < opts.max_steps; ++step) {
        bool ok = false;
        V3 ynew;
        SlowFlowEval enew;
        int iters = 0;
        while (!ok) {
            const V3 pred = y + ds * tan;
            ynew = pred;
            for (iters = 0; iters < 20; ++iters) {
                enew = residual(ynew);
                const Eigen::Matrix<double, 2, 3> J = full_jac(ynew, enew);
                Eigen::Matrix3d A;
                A.topRows<2>() = J;
                A.row(2) = tan.transpose();
                Eigen::Vector3d rhs;
                rhs.head<2>() = -enew.rhs;
                rhs(2) = -tan.dot(ynew - pred);
                const V3 dy = A.fullPivLu().solve(rhs);
                if (!dy.allFinite()) break;
                ynew += dy;
                if (dy.norm() < opts.newton_tolerance * (1.0 + ynew.norm())) {
                    enew = residual(ynew);
                    ok = enew.rhs.norm() < 1e-9;
                    break;
                }
            }
            if (!ok) {
                ds *= 0.5;
                if (ds < opts.ds_min) {
                    br.log.push_back("continuation stalled at omega=" + std::to_string(y(2)));
                    return br;
                }
            }
        }
        V3 tnew = tangent(full_jac(ynew, enew));
        if (tnew.dot(tan) < 0.0) tnew = -tnew;
        const ResponsePoint pt = make_point(ynew(0), ynew(1), ynew(2), coeffs_at(ynew(2)), enew.jacobian);
        if (tan(2) * tnew(2) < 0.0) {
            const double w = tan(2) / (tan(2) - tnew(2));
            const V3 yf = y + w * (ynew - y);
            const SlowFlowEval ef = residual(yf);
            br.folds.push_back(make_point(yf(0), yf(1), yf(2), coeffs_at(yf(2)), ef.jacobian));
        }
        br.points.push_back(pt);
        y = ynew;
        tan = tnew;
        if (iters <= 3) ds = std::min(ds * 1.3, opts.ds_max);
        if (y(2) > omega_hi || y(2) < omega_lo) break;
    }
    return br;
}

std::vector<SweepPoint> hysteresis_sweep(const ModelParams& params, const std::vector<double>& omegas, Family family,
                                         SweepDirection direction, const SweepOptions& opts)
{
    if (params.drives.empty() || params.drives.front().order != 1) {
        throw Error(ErrorKind::UnsupportedDrive, "hysteresis sweep needs one linear drive tone");
    }
    if (opts.average_periods > opts.dwell_periods || opts.drift_periods > opts.dwell_periods) {
        throw Error(ErrorKind::Consistency, "averaging window longer than the dwell");
    }
    std::vector<double> order = omegas;
    if (direction == SweepDirection::Backward) std::reverse(order.begin(), order.end());

    ModelParams p = params;
    SemiclassicalState s{0.0, 0.0, 0.0};
    std::vector<SweepPoint> out;
    for (double w : order) {
        p.drives.front().omega = w;
        const EomCoefficients c = EomCoefficients::from(p, family);
        const double period = 2.0 * kPi / w;
        const int m = static_cast<int>(std::ceil(opts.steps_per_period * c.omega0 / w));
        const double h = period / m;
        s.t = 0.0; // phase reference restarts at each frequency
        std::vector<double> per_period(static_cast<std::size_t>(opts.dwell_periods));
        double ac = 0.0, as = 0.0;
        for (int j = 0; j < opts.dwell_periods; ++j) {
            double pc = 0.0, ps = 0.0;
            for (int k = 0; k < m; ++k) {
                const double ph = w * s.t;
                pc += s.x * std::cos(ph);
                ps += s.x * std::sin(ph);
                s = rk4_step(s, h, c);
            }
            if (!std::isfinite(s.x)) throw Error(ErrorKind::Instability, "time-domain sweep diverged");
            per_period[static_cast<std::size_t>(j)] = 2.0 * std::hypot(pc, ps) / m;
            if (j >= opts.dwell_periods - opts.average_periods) {
                ac += pc;
                as += ps;
            }
        }
        SweepPoint sp;
        sp.omega = w;
        sp.amplitude = 2.0 * std::hypot(ac, as) / (static_cast<double>(m) * opts.average_periods);
        const auto tail = per_period.end() - opts.drift_periods;
        const auto [mn, mx] = std::minmax_element(tail, per_period.end());
        sp.drift = sp.amplitude > 0.0 ? (*mx - *mn) / sp.amplitude : 0.0;
        sp.settled = sp.drift <= opts.drift_tolerance;
        out.push_back(sp);
    }
    if (direction == SweepDirection::Backward) std::reverse(out.begin(), out.end());
    return out;
}

} // namespace gcl
