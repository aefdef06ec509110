// Acceptance checks: one PASS/FAIL line per criterion. Pass criterion numbers to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "gcl/dissipator.hpp"
#include "gcl/expcli.hpp"
#include "gcl/observables.hpp"
#include "gcl/propagator.hpp"
#include "gcl/semiclassics.hpp"
#include "test_support.hpp"

using namespace gcl;

namespace {

constexpr double pi = std::numbers::pi;

struct Verdict {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok) pass = false;
        if (!detail.empty()) detail += "; ";
        detail += (ok ? "" : "[x] ") + what;
    }
};

std::string fmt(const char* f, double a)
{
    char b[96];
    std::snprintf(b, sizeof b, f, a);
    return b;
}

std::string fmt(const char* f, double a, double c)
{
    char b[128];
    std::snprintf(b, sizeof b, f, a, c);
    return b;
}

int threads() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

int column(const exp::Table& t, const std::string& name)
{
    const auto it = std::find(t.columns.begin(), t.columns.end(), name);
    if (it == t.columns.end()) throw std::runtime_error("missing column " + name);
    return static_cast<int>(it - t.columns.begin());
}

std::vector<double> col(const exp::Table& t, const std::string& name)
{
    const int c = column(t, name);
    std::vector<double> v;
    for (const auto& r : t.rows) v.push_back(r[c]);
    return v;
}

exp::RunResult run_default(const char* experiment, const std::vector<std::string>& ov = {})
{
    const auto cfg = exp::parse_config(std::string("experiment = ") + experiment + "\n", ov);
    return exp::run_experiment(cfg, threads());
}

// 1. thermal fixed point of the Lindblad family
Verdict thermal_fixed_point()
{
    Verdict v;
    ModelParams p;
    p.family = Family::Lindblad;
    p.theta = pi / 4;
    p.gamma = 0.2;
    p.n_th = 0.3;
    p.dim = 40;
    const auto t0 = std::chrono::steady_clock::now();
    const SteadyStateReport r = steady_state(p, fock_state(p.dim, 2), SteadyStateOptions{});
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const SystemOperators ops = build_system(p);
    const double n = occupation(r.rho, ops.x, ops.p, p.omega0);
    const auto pops = populations(r.rho, ops.h_static);
    double worst = 0.0;
    const double ratio = 0.3 / 1.3;
    for (int k = 0; k < 10; ++k) worst = std::max(worst, std::abs(pops[k + 1].population / pops[k].population / ratio - 1.0));
    v.require(r.converged, "converged from |2>");
    v.require(std::abs(n / 0.3 - 1.0) < 0.01, fmt("<n> = %.6f", n));
    v.require(worst < 0.02, fmt("max |P_{n+1}/P_n / (0.3/1.3) - 1| = %.2e over n < 10", worst));
    v.require(secs < 30.0, fmt("%.1f s", secs));
    return v;
}

// 2. linear ringdown rates
Verdict linear_ringdown()
{
    Verdict v;
    for (double th : {0.1, 0.25, 0.4}) {
        for (Family f : {Family::CL, Family::gCL}) {
            ModelParams p;
            p.gamma = 0.2;
            p.theta = th * pi;
            const RingdownResult r = ringdown(p, 1.0, f);
            const double G = (1.0 + std::sin(2.0 * p.theta)) * p.gamma;
            const double err = std::abs(r.gamma_eff / G - 1.0);
            v.require(err < 0.01, std::string(exp::family_name(f)) + fmt(" theta=%.2fpi err %.1e", th, err));
        }
    }
    return v;
}

// 3. nonlinear ringdown ordering
Verdict nonlinear_ringdown()
{
    Verdict v;
    ModelParams p;
    p.gamma = 0.2;
    p.U = 0.2;
    p.theta = 0.4 * pi;
    const double x0 = 2.0 * nonlinear_damping_threshold(p);
    const RingdownResult g = ringdown(p, x0, Family::gCL);
    const RingdownResult c = ringdown(p, x0, Family::CL);
    const double G = g.gamma_linear;
    v.require(g.rate_power.front() >= 1.25 * G, fmt("gCL initial rate %.3f Gamma (x0 = %.3f)", g.rate_power.front() / G, x0));
    const double a_end = g.rate_amplitude.back();
    double tail = 0.0;
    int used = 0;
    for (std::size_t i = 0; i < g.rate_power.size(); ++i) {
        if (g.rate_amplitude[i] <= 10.0 * a_end) {
            tail = std::max(tail, std::abs(g.rate_power[i] / G - 1.0));
            ++used;
        }
    }
    v.require(used > 0 && tail <= 0.03, fmt("gCL final decade max dev %.2e over %.0f periods", tail, used));
    double cl = 0.0;
    for (double r : c.rate_power) cl = std::max(cl, std::abs(r / G - 1.0));
    v.require(cl <= 0.03, fmt("CL max dev %.2e", cl));
    return v;
}

// 4. response maxima symmetry and the gCL resonance minimum
Verdict response_maxima()
{
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    ModelParams p;
    p.gamma = 0.5;
    p.drives = {{fq_to_F(0.4, 1.0), 1.0, 1}};
    double asym = 0.0;
    for (int k = 0; k <= 10; ++k) {
        ModelParams a = p, b = p;
        a.theta = k * pi / 40;
        b.theta = pi / 2 - a.theta;
        asym = std::max(asym, std::abs(response_maximum(a, Family::CL).amplitude - response_maximum(b, Family::CL).amplitude));
    }
    v.require(asym < 1e-10, fmt("CL |A(th) - A(pi/2 - th)| <= %.1e", asym));
    const double th = resonance_minimum_angle(p, Family::gCL, 0.0, pi / 2);
    v.require(std::abs(th / pi - 0.2) <= 0.02, fmt("gCL minimum at %.4f pi", th / pi));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    v.require(secs < 1.0, fmt("%.2f s", secs));
    return v;
}

// 5. bistability suppression
Verdict bistability()
{
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    ModelParams p;
    p.gamma = 0.2;
    p.U = 3.0 / 8.0;
    p.theta = 0.4 * pi;
    p.drives = {{fq_to_F(0.4, 1.0), 1.0, 1}};
    std::vector<double> om;
    for (int i = 0; i <= 60; ++i) om.push_back(0.8 + 1.2 * i / 60);
    for (Family f : {Family::CL, Family::gCL}) {
        const ResponseBranch b = response_continuation(p, om.front(), om.back(), f);
        int three = 0, multi_stable = 0;
        for (int i = 0; i <= 1200; ++i) {
            const double w = 0.8 + 1.2 * i / 1200;
            three += b.solutions_at(w) == 3 ? 1 : 0;
            multi_stable += b.stable_solutions_at(w) != 1 ? 1 : 0;
        }
        const auto fw = hysteresis_sweep(p, om, f, SweepDirection::Forward);
        const auto bw = hysteresis_sweep(p, om, f, SweepDirection::Backward);
        double sep = 0.0;
        for (std::size_t i = 0; i < om.size(); ++i) {
            sep = std::max(sep, std::abs(fw[i].amplitude - bw[i].amplitude) /
                                    std::max(fw[i].amplitude, bw[i].amplitude));
        }
        if (f == Family::CL) {
            v.require(three > 0 && b.folds.size() == 2,
                      fmt("CL 3-solution window on %.0f of 1201 omegas, %.0f folds", three, b.folds.size()));
            v.require(sep > 0.10, fmt("CL sweep separation %.3f", sep));
        } else {
            v.require(multi_stable == 0, fmt("gCL omegas without exactly one stable solution: %.0f", multi_stable));
            v.require(sep < 0.01, fmt("gCL sweep separation %.2e", sep));
        }
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    v.require(secs < 300.0, fmt("%.1f s", secs));
    return v;
}

// indices where the CL occupation is above half its excursion
std::vector<std::size_t> resonant_window(const std::vector<double>& n)
{
    const double lo = *std::min_element(n.begin(), n.end()), hi = *std::max_element(n.begin(), n.end());
    std::vector<std::size_t> w;
    for (std::size_t i = 0; i < n.size(); ++i)
        if (n[i] >= lo + 0.5 * (hi - lo)) w.push_back(i);
    return w;
}

// 6. fluctuation suppression, linear drive
Verdict fluctuations()
{
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    const exp::RunResult r = run_default("fluctuations");
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto& t = r.table;
    const auto nc = col(t, "n_mean_CL"), nuc = col(t, "nu_geo_mean_CL"), nug = col(t, "nu_geo_mean_gCL");
    const auto rc = col(t, "R_mean_CL"), rg = col(t, "R_mean_gCL"), d = col(t, "detuning_over_U");
    v.require(r.failures == 0, fmt("%.0f failed tasks", r.failures));
    const auto win = resonant_window(nc);
    int above = 0;
    double rdev = 0.0;
    for (std::size_t i : win) {
        above += nug[i] < nuc[i] ? 0 : 1;
        rdev = std::max(rdev, std::abs(rg[i] / rc[i] - 1.0));
    }
    v.require(above == 0, fmt("gCL nu_geo below CL on the window Delta/U in [%.2f, %.2f]", d[win.front()], d[win.back()]));
    const std::size_t pk = std::max_element(nuc.begin(), nuc.end()) - nuc.begin();
    const double red = 1.0 - nug[pk] / nuc[pk];
    v.require(red >= 0.10, fmt("reduction at the CL peak (Delta/U = %.2f) %.2f%%", d[pk], 100.0 * red));
    v.require(rdev <= 0.15, fmt("max |R_gCL/R_CL - 1| = %.3f", rdev));
    v.require(t.rows.size() == 40, fmt("%.0f points", t.rows.size()));
    v.require(secs < 1800.0, fmt("%.0f s", secs));
    return v;
}

// primary peak index and the secondary feature: a second local maximum if there is one,
// else the point of weakest descent on the lower-amplitude flank (a shoulder)
std::pair<std::size_t, std::size_t> peak_and_shoulder(const std::vector<double>& n)
{
    const std::size_t m = n.size();
    const std::size_t pk = std::max_element(n.begin(), n.end()) - n.begin();
    std::size_t best = m;
    for (std::size_t i = 1; i + 1 < m; ++i) {
        if (i != pk && n[i] > n[i - 1] && n[i] >= n[i + 1] && (best == m || n[i] > n[best])) best = i;
    }
    if (best != m) return {pk, best};
    double flattest = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i + 1 < m; ++i) {
        if (i + 1 == pk || i == pk || i == pk + 1) continue;
        const double slope = std::abs(n[i + 1] - n[i - 1]);
        const double curv = n[i + 1] - 2.0 * n[i] + n[i - 1];
        // a shoulder: slope nearly vanishes without a local extremum, curvature changes sign nearby
        if (curv < 0.0 && slope < flattest) {
            flattest = slope;
            best = i;
        }
    }
    return {pk, best};
}

// 7. two-photon reshaping
Verdict parametric()
{
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    const exp::RunResult r = run_default("parametric");
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto& t = r.table;
    const auto nc = col(t, "n_mean_CL"), ng = col(t, "n_mean_gCL"), d = col(t, "detuning_over_U");
    const auto rc = col(t, "R_mean_CL"), rg = col(t, "R_mean_gCL");
    v.require(r.failures == 0, fmt("%.0f failed tasks", r.failures));
    const auto [pc, sc] = peak_and_shoulder(nc);
    const auto [pg, sg] = peak_and_shoulder(ng);
    const bool shapes = sc < nc.size() && sg < ng.size();
    v.require(shapes, fmt("CL peak/shoulder at Delta/U = %.2f / %.2f", d[pc], sc < d.size() ? d[sc] : NAN) +
                          fmt(", gCL at %.2f / %.2f", d[pg], sg < d.size() ? d[sg] : NAN));
    if (shapes) {
        const double base_c = *std::min_element(nc.begin(), nc.end()), base_g = *std::min_element(ng.begin(), ng.end());
        const double primary = (ng[pg] - base_g) / (nc[pc] - base_c);
        const double secondary = (ng[sg] - base_g) / (nc[sc] - base_c);
        v.require(secondary < primary, fmt("gCL/CL secondary %.3f vs primary %.3f", secondary, primary));
    }
    v.require(rg[pc] > rc[pc], fmt("R at the primary peak gCL %.4f vs CL %.4f", rg[pc], rc[pc]));
    v.require(secs < 2700.0, fmt("%.0f s", secs));
    return v;
}

// 8. structural invariants
Verdict structural()
{
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();

    ModelParams d;
    d.dim = 16;
    d.gamma = 0.23;
    d.n_th = 0.4;
    d.U = 0.15;
    d.drives = {{0.6, 0.97, 1}, {0.25, 1.94, 2}};

    {
        ModelParams p = d;
        p.dim = 24;
        p.theta = 0.3 * pi;
        p.family = Family::gCL;
        const EvolveResult e = evolve(p, thermal_state(p.dim, p.n_th), 0.0, 5.0 * drive_period(p));
        v.require(e.max_trace_drift < 1e-8, fmt("trace drift %.1e", e.max_trace_drift));
        v.require(e.max_hermiticity_error < 1e-10, fmt("hermiticity %.1e", e.max_hermiticity_error));
    }

    double group_trace = 0.0, fam0 = 0.0, lind = 0.0;
    for (double th : {0.0, 0.1 * pi, 0.25 * pi, 0.4 * pi, 0.5 * pi}) {
        ModelParams p = d;
        p.theta = th;
        p.family = Family::gCL;
        const auto ctx = LiouvillianContext::build(p);
        const auto spec = DissipatorSpec::from_params(p);
        const auto sys = build_system(p);
        const OperatorMatrix rho = gcltest::random_density(p.dim, p.dim, 11);
        for (TermGroup g : {TermGroup::Unitary, TermGroup::Decoherence, TermGroup::Friction, TermGroup::Nonlinear,
                            TermGroup::Drive})
            group_trace = std::max(group_trace, std::abs(apply_term_group(ctx, spec, g, hamiltonian_at(sys, p, 0.7), rho, 0.7).trace()));
    }
    v.require(group_trace < 1e-11, fmt("per-group trace %.1e", group_trace));
    {
        ModelParams g = d, c = d;
        g.family = Family::gCL;
        c.family = Family::CL;
        const OperatorMatrix rho = gcltest::random_density(d.dim, d.dim, 12);
        const auto sys = build_system(g);
        for (double t : {0.0, 1.3}) {
            const OperatorMatrix h = hamiltonian_at(sys, g, t);
            fam0 = std::max(fam0, gcltest::max_abs(apply_liouvillian(LiouvillianContext::build(g), DissipatorSpec::from_params(g), h, rho, t) -
                                                   apply_liouvillian(LiouvillianContext::build(c), DissipatorSpec::from_params(c), h, rho, t)));
        }
    }
    v.require(fam0 < 1e-12, fmt("gCL(0) - CL(0) %.1e", fam0));
    {
        ModelParams c = d;
        c.family = Family::CL;
        c.theta = pi / 4;
        const auto ctx = LiouvillianContext::build(c);
        const auto sys = build_system(c);
        const OperatorMatrix rho = gcltest::random_density(d.dim, d.dim, 13);
        const OperatorMatrix h = hamiltonian_at(sys, c, 0.4);
        lind = gcltest::max_abs(lindblad_rhs(h, rho, ctx.x, ctx.p, c.gamma, c.omega0, c.c_thermal()) -
                                apply_liouvillian(ctx, DissipatorSpec::from_params(c), h, rho, 0.4));
    }
    v.require(lind < 1e-12, fmt("CL(pi/4) - Lindblad %.1e", lind));

    // first moments for U = 0 against the classical equation of motion
    double qc = 0.0;
    for (Family f : {Family::CL, Family::gCL}) {
        ModelParams p;
        p.dim = 30;
        p.gamma = 0.2;
        p.theta = 0.3 * pi;
        p.family = f;
        p.drives = {{fq_to_F(0.1, 1.0), 1.3, 1}};
        const double x0 = 0.8, p0 = 0.3;
        const auto ops = build_system(p);
        std::vector<std::pair<double, double>> xq;
        EvolveOptions eo;
        eo.record_stride = 20;
        evolve(p, coherent_state(p.dim, p.omega0, x0, p0), 0.0, 6.0 * drive_period(p), eo,
               [&](double t, const DensityMatrix& rho) {
                   if (t == 0.0) xq.clear();
                   xq.emplace_back(t, (rho * ops.x).trace().real());
               });
        const EomCoefficients c = EomCoefficients::from(p, f);
        const double s2 = std::sin(2 * p.theta), c2 = std::cos(2 * p.theta);
        const double a_minus = 1.0 - c2 + s2;
        const double b = f == Family::gCL ? 1.0 - c2 : 0.0;
        // ẋ = ⟨p⟩ − a₋γ⟨x⟩/2 − γFb cos ωt/(2ω₀²)
        SemiclassicalState s{x0, p0 - a_minus * p.gamma * x0 / 2.0 - p.gamma * c.force * b / 2.0, 0.0};
        const double hmax = drive_period(p) / 4000.0;
        for (auto [t, x] : xq) {
            while (s.t < t - 1e-12) s = rk4_step(s, std::min(t - s.t, hmax), c);
            qc = std::max(qc, std::abs(s.x - x));
        }
    }
    v.require(qc < 1e-5, fmt("U=0 quantum-classical <x> %.1e", qc));

    // truncation at a bistable drive point
    {
        double worst = 0.0;
        std::vector<double> vals[2];
        for (int i = 0; i < 2; ++i) {
            const auto r = run_default("fluctuations", {"sweep.values=1.5", "model.family=gCL",
                                                        "numerics.N=" + std::to_string(40 + 10 * i)});
            for (const char* c : {"n_mean_gCL", "nu_geo_mean_gCL", "R_mean_gCL"}) vals[i].push_back(col(r.table, c)[0]);
        }
        for (std::size_t j = 0; j < vals[0].size(); ++j) worst = std::max(worst, std::abs(vals[1][j] / vals[0][j] - 1.0));
        v.require(worst < 0.005, fmt("N 40 -> 50 relative change %.1e", worst));
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    v.require(secs < 300.0, fmt("%.0f s", secs));
    return v;
}

// 9. T_eff nonmonotonicity
Verdict teff()
{
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    const exp::RunResult r = run_default("teff-scan");
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto th = col(r.table, "theta"), tc = col(r.table, "T_eff_CL"), tg = col(r.table, "T_eff_gCL");
    v.require(r.failures == 0, fmt("%.0f failed tasks", r.failures));
    const std::size_t k = std::max_element(tg.begin(), tg.end()) - tg.begin();
    const bool interior = k > 0 && k + 1 < tg.size();
    double peak = th[k];
    if (interior) {
        // vertex of the parabola through the three points around the grid maximum
        const double h = th[k + 1] - th[k];
        const double den = tg[k - 1] - 2.0 * tg[k] + tg[k + 1];
        peak = th[k] + 0.5 * h * (tg[k - 1] - tg[k + 1]) / den;
    }
    v.require(interior && std::abs(peak / pi - 0.16) <= 0.04,
              fmt("gCL T_eff maximum at %.4f pi (grid point %.2f pi)", peak / pi, th[k] / pi));
    bool up = true, down = true;
    for (std::size_t i = 0; i + 1 < tc.size(); ++i) {
        up = up && tc[i + 1] > tc[i];
        down = down && tc[i + 1] < tc[i];
    }
    v.require(up || down, std::string("CL T_eff ") + (up ? "increasing" : down ? "decreasing" : "not monotone"));
    v.require(secs < 1200.0, fmt("%.0f s", secs));
    return v;
}

struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> run;
};

} // namespace

int main(int argc, char** argv)
{
    const std::vector<Criterion> all = {
        {1, "thermal fixed point", thermal_fixed_point},
        {2, "linear ringdown rates", linear_ringdown},
        {3, "nonlinear ringdown ordering", nonlinear_ringdown},
        {4, "response symmetry and asymmetry", response_maxima},
        {5, "bistability suppression", bistability},
        {6, "fluctuation suppression", fluctuations},
        {7, "two-photon reshaping", parametric},
        {8, "structural invariants", structural},
        {9, "T_eff nonmonotonicity", teff},
    };
    std::set<int> pick;
    for (int i = 1; i < argc; ++i) pick.insert(std::atoi(argv[i]));
    int failed = 0;
    for (const auto& c : all) {
        if (!pick.empty() && !pick.count(c.id)) continue;
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail = std::string("exception: ") + e.what();
        }
        failed += v.pass ? 0 : 1;
        std::printf("%s criterion %d (%s): %s\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
