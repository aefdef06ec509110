#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "gcl/errors.hpp"
#include "gcl/model.hpp"
#include "test_support.hpp"

using namespace gcl;
using gcltest::max_abs;

TEST_CASE("Kerr potential")
{
    ModelParams p;
    p.dim = 30;
    p.U = 0.0;
    CHECK(max_abs(kerr_potential(p)) == 0.0);
    p.U = 0.2;
    CHECK(std::abs(kerr_potential(p)(0, 0) - cplx(0.05, 0)) < 1e-12);
    p.U = 3.0 / 8.0;
    // coefficient ω₀²U/3 = 1/8 times ⟨0|x⁴|0⟩ = 3/4
    CHECK(std::abs(kerr_potential(p)(0, 0) - cplx(0.125 * 0.75, 0)) < 1e-12);
}

TEST_CASE("harmonic spectrum")
{
    ModelParams p;
    p.dim = 30;
    p.omega0 = 1.4;
    const OperatorMatrix h = hamiltonian_at(p, 3.21);
    Eigen::SelfAdjointEigenSolver<OperatorMatrix> es(h);
    for (int n = 0; n < p.dim - 2; ++n) CHECK(std::abs(es.eigenvalues()(n) - 1.4 * (n + 0.5)) < 1e-9);
}

TEST_CASE("drive term vanishes at a quarter period")
{
    ModelParams p;
    p.dim = 20;
    p.U = 0.1;
    p.drives = {{0.7, 1.1, 1}};
    ModelParams undriven = p;
    undriven.drives.clear();
    const double t = std::numbers::pi / (2.0 * 1.1);
    CHECK(max_abs(hamiltonian_at(p, t) - hamiltonian_at(undriven, 0.0)) < 1e-12);
}

TEST_CASE("Hamiltonian periodicity and hermiticity")
{
    ModelParams p;
    p.dim = 20;
    p.U = 0.2;
    p.drives = {{0.3, 0.9, 2}};
    const SystemOperators ops = build_system(p);
    const double period = 2.0 * std::numbers::pi / 0.9;
    for (double t : {0.0, 0.37, 2.9}) {
        const OperatorMatrix h = hamiltonian_at(ops, p, t);
        CHECK(hermiticity_error(h) < 1e-12);
        CHECK(max_abs(h - hamiltonian_at(ops, p, t + period)) < 1e-12);
    }
}

TEST_CASE("Kerr level spacing grows")
{
    ModelParams p;
    p.dim = 60;
    p.U = 0.2;
    Eigen::SelfAdjointEigenSolver<OperatorMatrix> es(hamiltonian_at(p, 0.0));
    const Eigen::VectorXd e = es.eigenvalues();
    for (int n = 1; n < 12; ++n) CHECK(e(n + 1) - e(n) > e(n) - e(n - 1));
}

TEST_CASE("drive conversions")
{
    CHECK(fq_to_F(0.0, 2.0) == 0.0);
    CHECK(std::abs(fq_to_F(0.4, 1.0) - 0.8 * std::sqrt(2.0)) < 1e-14);
    CHECK(std::abs(fq_to_F(0.4, 1.0) - 1.13137) < 1e-5);
    for (double F : {0.1, 1.3, 7.0}) {
        CHECK(std::abs(fq_to_F(F_to_fq(F, 1.7), 1.7) - F) < 1e-14);
        CHECK(std::abs(G_to_F2(F2_to_G(F, 1.7), 1.7) - F) < 1e-14);
    }
    CHECK(std::abs(G_to_F2(0.1, 1.0) - 0.2) < 1e-15);
}

TEST_CASE("parameter validation")
{
    ModelParams p;
    p.family = Family::Lindblad;
    p.theta = 0.1 * std::numbers::pi;
    try {
        p.validate();
        FAIL("expected a consistency error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Consistency);
    }
    p.theta = std::numbers::pi / 4.0;
    CHECK_NOTHROW(p.validate());

    ModelParams q;
    q.theta = 2.0;
    CHECK_THROWS_AS(q.validate(), Error);
    q.theta = 0.3;
    q.dim = 1;
    CHECK_THROWS_AS(q.validate(), Error);

    ModelParams r;
    r.drives = {{1.0, 1.0, 3}};
    try {
        build_system(r);
        FAIL("expected an unsupported-drive error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::UnsupportedDrive);
    }
}

TEST_CASE("family names")
{
    CHECK(family_from_string("gcl") == Family::gCL);
    CHECK(family_from_string("LINDBLAD") == Family::Lindblad);
    CHECK(family_from_string("CL") == Family::CL);
    CHECK_THROWS_AS(family_from_string("redfield"), ConfigError);
    CHECK(std::string(to_string(Family::gCL)) == "gCL");
}
