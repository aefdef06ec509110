#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "gcl/errors.hpp"
#include "gcl/semiclassics.hpp"

using namespace gcl;

namespace {

constexpr double pi = std::numbers::pi;

ModelParams fig4(Family fam)
{
    ModelParams p;
    p.gamma = 0.2;
    p.U = 3.0 / 8.0;
    p.theta = 0.4 * pi;
    p.family = fam;
    p.drives = {{fq_to_F(0.4, 1.0), 1.0, 1}};
    return p;
}

// Duffing amplitudes from [(ω̃² − ω² + ¾κA²)² + (Γω)²]A² = F² by sign scanning in A.
std::vector<double> duffing_amplitudes(double w2t, double k3, double G, double F, double w)
{
    auto h = [&](double A) {
        const double d = w2t - w * w + 0.75 * k3 * A * A;
        return (d * d + G * G * w * w) * A * A - F * F;
    };
    std::vector<double> roots;
    const int n = 200000;
    const double amax = 20.0;
    double prev = h(0.0);
    for (int i = 1; i <= n; ++i) {
        const double a = amax * i / n;
        const double cur = h(a);
        if (prev * cur < 0.0) {
            double lo = amax * (i - 1) / n, hi = a;
            for (int k = 0; k < 100; ++k) {
                const double mid = 0.5 * (lo + hi);
                (h(lo) * h(mid) <= 0.0 ? hi : lo) = mid;
            }
            roots.push_back(0.5 * (lo + hi));
        }
        prev = cur;
    }
    return roots;
}

} // namespace

TEST_CASE("equation of motion limits")
{
    ModelParams p;
    p.gamma = 0.17;
    p.U = 0.3;
    p.theta = 0.0;
    p.drives = {{0.8, 1.2, 1}};
    for (double x : {-1.3, 0.4})
        for (double v : {-0.5, 0.9})
            for (double t : {0.0, 0.77}) {
                const auto [dx, dv] = eom_rhs({x, v, t}, p, Family::gCL);
                const double ref = -x - 4.0 * 0.3 / 3.0 * x * x * x - 0.17 * v - 0.8 * std::cos(1.2 * t);
                CHECK(dx == v);
                CHECK(std::abs(dv - ref) < 1e-14);
                CHECK(std::abs(dv - eom_rhs({x, v, t}, p, Family::CL).second) < 1e-14);
            }

    ModelParams q;
    q.gamma = 0.2;
    q.theta = pi / 4.0;
    const EomCoefficients c = EomCoefficients::from(q, Family::gCL);
    CHECK(std::abs(c.damping - 0.4) < 1e-15);
    CHECK(std::abs(c.omega_sq - (1.0 + 0.04)) < 1e-14);
    CHECK(std::abs(eom_rhs({1.0, 0.0, 0.0}, c).second + 1.04) < 1e-14);
    CHECK(std::abs(eom_rhs({0.0, 1.0, 0.0}, c).second + 0.4) < 1e-14);
    const auto z = eom_rhs({0.0, 0.0, 3.0}, c);
    CHECK(z.first == 0.0);
    CHECK(z.second == 0.0);
}

TEST_CASE("CL keeps the frequency shift and drops the dressed terms")
{
    ModelParams p = fig4(Family::gCL);
    const EomCoefficients g = EomCoefficients::from(p, Family::gCL);
    const EomCoefficients c = EomCoefficients::from(p, Family::CL);
    CHECK(g.omega_sq == c.omega_sq);
    CHECK(g.damping == c.damping);
    CHECK(c.nl_damping == 0.0);
    CHECK(c.force_sin() == 0.0);
    CHECK(c.force_cos == c.force);
    CHECK(std::abs(c.cubic - 0.5) < 1e-15);
    CHECK(g.cubic > c.cubic);
    CHECK(g.nl_damping > 0.0);
}

TEST_CASE("energy balance at theta = 0")
{
    ModelParams p;
    p.gamma = 0.1;
    p.U = 0.4;
    const EomCoefficients c = EomCoefficients::from(p, Family::gCL);
    SemiclassicalState s{1.5, 0.0, 0.0};
    const double h = 2 * pi / 2000;
    double diss = 0.0;
    const double e0 = c.energy(s.x, s.v);
    for (int k = 0; k < 20000; ++k) {
        const double v0 = s.v;
        s = rk4_step(s, h, c);
        diss += 0.5 * h * (v0 * v0 + s.v * s.v);
    }
    CHECK(std::abs(c.energy(s.x, s.v) - e0 + p.gamma * diss) < 1e-5);
}

TEST_CASE("linear ringdown rates")
{
    for (double th : {0.0, 0.1 * pi, 0.25 * pi, 0.4 * pi}) {
        ModelParams p;
        p.gamma = 0.2;
        p.theta = th;
        const RingdownResult r = ringdown(p, 1.0, Family::gCL);
        const double G = (1.0 + std::sin(2 * th)) * 0.2;
        CHECK(std::abs(r.gamma_eff / G - 1.0) < 0.01);
        CHECK(r.monotone);
        for (double rate : r.rate_power) CHECK(std::abs(rate / G - 1.0) < 1e-6);
    }
}

TEST_CASE("nonlinear ringdown crosses over to linear damping")
{
    ModelParams p;
    p.gamma = 0.2;
    p.U = 0.2;
    p.theta = 0.4 * pi;
    const double thr = nonlinear_damping_threshold(p);
    CHECK(std::abs(thr - std::sqrt((1 + std::sin(0.8 * pi)) / (0.4 * (1 - std::cos(0.8 * pi))))) < 1e-14);
    const RingdownResult g = ringdown(p, 1.5 * thr, Family::gCL);
    const double G = g.gamma_linear;
    CHECK(g.rate_power.front() > 1.25 * G);
    CHECK(std::abs(g.rate_power.back() / G - 1.0) < 0.03);
    CHECK(std::abs(g.gamma_eff / G - 1.0) < 0.03);
    const RingdownResult c = ringdown(p, 1.5 * thr, Family::CL);
    for (double rate : c.rate_power) CHECK(std::abs(rate / G - 1.0) < 0.03);
}

TEST_CASE("closed-form linear response")
{
    ModelParams p;
    p.gamma = 0.3;
    p.drives = {{0.7, 1.0, 1}};
    const ResponsePoint r = linear_response(p, 1.0, Family::gCL);
    CHECK(std::abs(r.amplitude - 0.7 / 0.3) < 1e-12);
    CHECK(std::abs(r.detuning) < 1e-15);

    p.theta = 0.3 * pi;
    const EomCoefficients c = EomCoefficients::from(p, Family::CL);
    const ResponseMaximum m = response_maximum(p, Family::CL);
    const double G = c.damping;
    CHECK(std::abs(m.amplitude - 0.7 / (G * std::sqrt(c.omega_sq - G * G / 4))) < 1e-10);
    CHECK(std::abs(m.omega - std::sqrt(c.omega_sq - G * G / 2)) < 1e-6);

    ModelParams u = p;
    u.U = 0.1;
    CHECK_THROWS_AS(linear_response(u, 1.0, Family::CL), Error);
}

TEST_CASE("response maxima versus theta")
{
    ModelParams p;
    p.gamma = 0.5;
    p.drives = {{fq_to_F(0.4, 1.0), 1.0, 1}};
    for (double s : {0.03, 0.1, 0.2}) {
        ModelParams a = p, b = p;
        a.theta = (0.25 + s) * pi;
        b.theta = (0.25 - s) * pi;
        CHECK(std::abs(response_maximum(a, Family::CL).amplitude - response_maximum(b, Family::CL).amplitude) < 1e-10);
    }
    const double th = resonance_minimum_angle(p, Family::gCL, 0.0, pi / 2);
    MESSAGE("gCL resonance minimum at theta/pi = " << th / pi);
    CHECK(std::abs(th / pi - 0.2) < 0.02);
    CHECK(std::abs(resonance_minimum_angle(p, Family::CL, 0.0, pi / 2) / pi - 0.25) < 1e-6);
}

TEST_CASE("slow flow")
{
    ModelParams p = fig4(Family::gCL);
    p.drives.front().amplitude = 0.0;
    const Eigen::Vector2d z = slow_flow_rhs(0.0, 0.0, 1.1, p, Family::gCL);
    CHECK(z.norm() == 0.0);

    // linear decay of the quadratures at Γ/2
    ModelParams lin;
    lin.gamma = 0.2;
    lin.theta = 0.1 * pi;
    const EomCoefficients lc = EomCoefficients::from(lin, Family::gCL);
    const SlowFlowEval e = slow_flow(0.3, -0.2, std::sqrt(lc.omega_sq), lc);
    CHECK(std::abs(e.rhs(0) + lc.damping / 2 * 0.3) < 1e-14);
    CHECK(std::abs(e.rhs(1) - lc.damping / 2 * 0.2) < 1e-14);

    // analytic Jacobian against central differences
    const EomCoefficients gc = EomCoefficients::from(fig4(Family::gCL), Family::gCL);
    const double u0 = 0.7, v0 = -0.4, w = 1.3, hh = 1e-6;
    const SlowFlowEval e0 = slow_flow(u0, v0, w, gc);
    const Eigen::Vector2d du = (slow_flow(u0 + hh, v0, w, gc).rhs - slow_flow(u0 - hh, v0, w, gc).rhs) / (2 * hh);
    const Eigen::Vector2d dv = (slow_flow(u0, v0 + hh, w, gc).rhs - slow_flow(u0, v0 - hh, w, gc).rhs) / (2 * hh);
    CHECK((e0.jacobian.col(0) - du).norm() < 1e-8);
    CHECK((e0.jacobian.col(1) - dv).norm() < 1e-8);
}

TEST_CASE("slow-flow fixed points")
{
    ModelParams p;
    p.gamma = 0.25;
    p.theta = 0.35 * pi;
    p.drives = {{0.5, 1.0, 1}};
    for (Family fam : {Family::CL, Family::gCL})
        for (double w : {0.8, 1.0, 1.15}) {
            ModelParams q = p;
            q.drives.front().omega = w;
            const auto pts = fixed_points_at(w, EomCoefficients::from(q, fam));
            REQUIRE(pts.size() == 1);
            const ResponsePoint ref = linear_response(q, w, fam);
            CHECK(std::abs(pts[0].amplitude - ref.amplitude) < 1e-8);
            CHECK(std::abs(pts[0].u - ref.u) < 1e-8);
            CHECK(std::abs(pts[0].v - ref.v) < 1e-8);
        }

    for (double w : {1.2, 1.6, 1.62, 1.9}) {
        ModelParams q = fig4(Family::CL);
        q.drives.front().omega = w;
        const EomCoefficients c = EomCoefficients::from(q, Family::CL);
        const auto pts = fixed_points_at(w, c);
        const auto ref = duffing_amplitudes(c.omega_sq, c.cubic, c.damping, c.force, w);
        REQUIRE(pts.size() == ref.size());
        for (std::size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(pts[i].amplitude - ref[i]) < 1e-8);
    }
}

TEST_CASE("continuation")
{
    const ResponseBranch cl = response_continuation(fig4(Family::CL), 0.8, 2.0, Family::CL);
    CHECK(cl.folds.size() == 2);
    int three = 0;
    for (int i = 0; i <= 120; ++i) {
        const double w = 0.8 + 1.2 * i / 120;
        const int n = cl.solutions_at(w);
        CHECK(n >= 1);
        if (n == 3) {
            ++three;
            CHECK(cl.stable_solutions_at(w) == 2);
        }
    }
    CHECK(three > 0);

    const ResponseBranch g = response_continuation(fig4(Family::gCL), 0.8, 2.0, Family::gCL);
    for (int i = 0; i <= 120; ++i) CHECK(g.stable_solutions_at(0.8 + 1.2 * i / 120) <= 1);
    CHECK(g.folds.empty());

    // every continuation point is a fixed point found from seeds as well
    ModelParams q = fig4(Family::CL);
    for (std::size_t i = 0; i < cl.points.size(); i += 37) {
        const auto& pt = cl.points[i];
        q.drives.front().omega = pt.omega;
        const auto pts = fixed_points_at(pt.omega, EomCoefficients::from(q, Family::CL));
        double best = 1e9;
        for (const auto& f : pts) best = std::min(best, std::abs(f.amplitude - pt.amplitude));
        CHECK(best < 1e-7);
    }

    ModelParams lin;
    lin.gamma = 0.2;
    lin.theta = 0.3 * pi;
    lin.drives = {{0.4, 1.0, 1}};
    const ResponseBranch lb = response_continuation(lin, 0.5, 1.5, Family::gCL);
    double worst = 0.0;
    for (const auto& pt : lb.points) {
        ModelParams q2 = lin;
        worst = std::max(worst, std::abs(pt.amplitude - linear_response(q2, pt.omega, Family::gCL).amplitude));
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("hysteresis sweeps")
{
    std::vector<double> ws;
    for (int i = 0; i <= 24; ++i) ws.push_back(1.3 + 0.5 * i / 24);
    SweepOptions so;
    so.dwell_periods = 200;

    const auto fw = hysteresis_sweep(fig4(Family::CL), ws, Family::CL, SweepDirection::Forward, so);
    const auto bw = hysteresis_sweep(fig4(Family::CL), ws, Family::CL, SweepDirection::Backward, so);
    double sep = 0.0;
    for (std::size_t i = 0; i < ws.size(); ++i)
        sep = std::max(sep, std::abs(fw[i].amplitude - bw[i].amplitude) / std::max(fw[i].amplitude, bw[i].amplitude));
    CHECK(sep > 0.1);

    const auto gf = hysteresis_sweep(fig4(Family::gCL), ws, Family::gCL, SweepDirection::Forward, so);
    const auto gb = hysteresis_sweep(fig4(Family::gCL), ws, Family::gCL, SweepDirection::Backward, so);
    for (std::size_t i = 0; i < ws.size(); ++i) CHECK(std::abs(gf[i].amplitude / gb[i].amplitude - 1.0) < 0.01);

    ModelParams heavy = fig4(Family::CL);
    heavy.gamma = 1.0;
    const auto hf = hysteresis_sweep(heavy, ws, Family::CL, SweepDirection::Forward, so);
    const auto hb = hysteresis_sweep(heavy, ws, Family::CL, SweepDirection::Backward, so);
    for (std::size_t i = 0; i < ws.size(); ++i) CHECK(std::abs(hf[i].amplitude / hb[i].amplitude - 1.0) < 0.01);
    const ResponseBranch hbr = response_continuation(heavy, 0.8, 2.0, Family::CL);
    CHECK(hbr.folds.empty());
}
