// dissipator.cpp: Literal and compiled forms of the gCL / CL / Lindblad Liouvillian

#include "gcl/dissipator.hpp"

#include <cmath>
#include <random>

#include "gcl/errors.hpp"

namespace gcl {

namespace {

const cplx I1{0.0, 1.0};

using Sparse = CompiledLiouvillian::Sparse;
using Triplet = Eigen::Triplet<cplx>;

void require_same_dim(const OperatorMatrix& a, const OperatorMatrix& rho)
{
    if (a.rows() != rho.rows() || a.cols() != rho.cols() || rho.rows() != rho.cols()) {
        throw Error(ErrorKind::DimensionMismatch, "density matrix does not match the operator dimension");
    }
}

Sparse to_sparse(const OperatorMatrix& m)
{
    std::vector<Triplet> trips;
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            if (m(i, j) != cplx(0.0, 0.0)) trips.emplace_back(static_cast<int>(i), static_cast<int>(j), m(i, j));
    Sparse s(m.rows(), m.cols());
    s.setFromTriplets(trips.begin(), trips.end());
    return s;
}

Sparse kron(const Sparse& a, const Sparse& b)
{
    const Eigen::Index br = b.rows(), bc = b.cols();
    std::vector<Triplet> trips;
    trips.reserve(static_cast<std::size_t>(a.nonZeros() * b.nonZeros()));
    for (int i = 0; i < a.outerSize(); ++i)
        for (Sparse::InnerIterator ia(a, i); ia; ++ia)
            for (int k = 0; k < b.outerSize(); ++k)
                for (Sparse::InnerIterator ib(b, k); ib; ++ib)
                    trips.emplace_back(static_cast<int>(ia.row() * br + ib.row()),
                                       static_cast<int>(ia.col() * bc + ib.col()), ia.value() * ib.value());
    Sparse s(a.rows() * br, a.cols() * bc);
    s.setFromTriplets(trips.begin(), trips.end());
    return s;
}

// Superoperators on column-major vec(ρ): vec(AρB) = (Bᵀ ⊗ A) vec(ρ).
struct SuperAlgebra {
    Sparse id;

    explicit SuperAlgebra(int n) : id(n, n) { id.setIdentity(); }

    Sparse left(const OperatorMatrix& a) const { return kron(id, to_sparse(a)); }
    Sparse right(const OperatorMatrix& b) const { return kron(to_sparse(b.transpose()), id); }
    Sparse comm(const OperatorMatrix& a) const { return Sparse(left(a) - right(a)); }
    Sparse acomm(const OperatorMatrix& a) const { return Sparse(left(a) + right(a)); }
};

bool family_has_dressing(Family f) { return f == Family::gCL; }

} // namespace

DissipatorSpec DissipatorSpec::from_params(const ModelParams& params)
{
    DissipatorSpec spec;
    spec.family = params.family;
    spec.theta = params.family == Family::Lindblad ? kLindbladAngle : params.theta;
    spec.gamma = params.gamma;
    spec.c_thermal = params.c_thermal();
    if (!family_has_dressing(params.family)) {
        spec.terms.nonlinear = false;
        spec.terms.drive = false;
    }
    return spec;
}

TermToggles DissipatorSpec::effective_terms() const
{
    TermToggles t = terms;
    if (!family_has_dressing(family)) {
        t.nonlinear = false;
        t.drive = false;
    }
    return t;
}

void DissipatorSpec::validate() const
{
    if (!(gamma >= 0.0)) throw Error(ErrorKind::Consistency, "gamma must be non-negative");
    if (!(c_thermal >= 1.0)) throw Error(ErrorKind::Consistency, "c(T) must be at least 1");
    if (!(theta >= 0.0 && theta <= std::numbers::pi / 2.0 + 1e-15)) {
        throw Error(ErrorKind::Consistency, "theta must lie in [0, pi/2]");
    }
    if (family == Family::Lindblad && std::abs(theta - kLindbladAngle) > kLindbladAngleTolerance) {
        throw Error(ErrorKind::Consistency, "the Lindblad family requires theta = pi/4");
    }
}

AngleCoefficients AngleCoefficients::at(double theta)
{
    const double c2 = std::cos(2.0 * theta);
    const double s2 = std::sin(2.0 * theta);
    AngleCoefficients k;
    k.a_plus = 1.0 + c2 + s2;
    k.a_minus = 1.0 - c2 + s2;
    k.b = 1.0 - c2;
    k.s = s2;
    return k;
}

LiouvillianContext LiouvillianContext::build(const ModelParams& params)
{
    params.validate();
    LiouvillianContext ctx;
    ctx.omega0 = params.omega0;
    const Quadratures q = build_xp(params.dim, params.omega0);
    ctx.x = q.x;
    ctx.p = q.p;
    ctx.v1_prime = kerr_force_derivative(params);
    ctx.drives = params.drives;
    const FockBasis basis{params.dim, params.omega0};
    for (const auto& tone : params.drives) {
        if (tone.order < 1 || tone.order > 2) {
            throw Error(ErrorKind::UnsupportedDrive, "drive order " + std::to_string(tone.order) + " is not supported");
        }
        ctx.drive_lower.push_back(x_power(basis, tone.order - 1));
    }
    ctx.angles = params.family == Family::Lindblad ? AngleCoefficients{2.0, 2.0, 1.0, 1.0}
                                                   : AngleCoefficients::at(params.theta);
    return ctx;
}

OperatorMatrix apply_term_group(const LiouvillianContext& ctx, const DissipatorSpec& spec, TermGroup group,
                                const OperatorMatrix& h, const OperatorMatrix& rho, double t)
{
    require_same_dim(ctx.x, rho);
    const double g = spec.gamma;
    const double w0 = ctx.omega0;
    const double c = spec.c_thermal;
    const AngleCoefficients& k = ctx.angles;
    const int n = ctx.dim();

    switch (group) {
    case TermGroup::Unitary:
        require_same_dim(h, rho);
        return -I1 * commutator(h, rho);
    case TermGroup::Decoherence:
        return -(k.a_plus * g * w0 * c / 4.0) * commutator(ctx.x, commutator(ctx.x, rho))
               - (k.a_minus * g * c / (4.0 * w0)) * commutator(ctx.p, commutator(ctx.p, rho));
    case TermGroup::Friction:
        return (-I1 * k.a_plus * g / 4.0) * commutator(ctx.x, anticommutator(ctx.p, rho))
               + (I1 * k.a_minus * g / 4.0) * commutator(ctx.p, anticommutator(ctx.x, rho));
    case TermGroup::Nonlinear: {
        if (!family_has_dressing(spec.family)) return OperatorMatrix::Zero(n, n);
        const OperatorMatrix iv = I1 * ctx.v1_prime;
        return (g / 4.0) * ((k.b / (w0 * w0)) * commutator(ctx.p, anticommutator(iv, rho))
                            + (I1 * k.s * c / w0) * commutator(ctx.x, commutator(iv, rho)));
    }
    case TermGroup::Drive: {
        OperatorMatrix out = OperatorMatrix::Zero(n, n);
        if (!family_has_dressing(spec.family)) return out;
        for (std::size_t j = 0; j < ctx.drives.size(); ++j) {
            const auto& tone = ctx.drives[j];
            const OperatorMatrix& a = ctx.drive_lower[j];
            const cplx pref = I1 * g * static_cast<double>(tone.order) * tone.amplitude * std::cos(tone.omega * t) / 4.0;
            out += pref * ((k.b / (w0 * w0)) * commutator(ctx.p, anticommutator(a, rho))
                           + (I1 * k.s * c / w0) * commutator(ctx.x, commutator(a, rho)));
        }
        return out;
    }
    }
    throw Error(ErrorKind::Consistency, "unknown term group");
}

OperatorMatrix apply_liouvillian(const LiouvillianContext& ctx, const DissipatorSpec& spec,
                                 const OperatorMatrix& h, const OperatorMatrix& rho, double t)
{
    spec.validate();
    const TermToggles on = spec.effective_terms();
    OperatorMatrix out = OperatorMatrix::Zero(rho.rows(), rho.cols());
    if (on.unitary) out += apply_term_group(ctx, spec, TermGroup::Unitary, h, rho, t);
    if (on.decoherence) out += apply_term_group(ctx, spec, TermGroup::Decoherence, h, rho, t);
    if (on.friction) out += apply_term_group(ctx, spec, TermGroup::Friction, h, rho, t);
    if (on.nonlinear) out += apply_term_group(ctx, spec, TermGroup::Nonlinear, h, rho, t);
    if (on.drive) out += apply_term_group(ctx, spec, TermGroup::Drive, h, rho, t);
    return out;
}

SqueezeSplit squeeze_decomposition(const LiouvillianContext& ctx, const DissipatorSpec& spec,
                                   const OperatorMatrix& rho)
{
    require_same_dim(ctx.x, rho);
    const double g = spec.gamma;
    const double theta = spec.family == Family::Lindblad ? kLindbladAngle : spec.theta;
    SqueezeSplit out;
    out.lambda = (g * std::cos(2.0 * theta) / 4.0) * anticommutator(ctx.x, ctx.p);
    out.hamiltonian_part = -I1 * commutator(out.lambda, rho);
    out.dissipative_part = (-I1 * (1.0 + std::sin(2.0 * theta)) * g / 4.0)
                           * (commutator(ctx.x, anticommutator(ctx.p, rho))
                              - commutator(ctx.p, anticommutator(ctx.x, rho)));
    return out;
}

OperatorMatrix lindblad_rhs(const OperatorMatrix& h, const OperatorMatrix& rho, const OperatorMatrix& x,
                            const OperatorMatrix& p, double gamma, double omega0, double c_thermal)
{
    require_same_dim(h, rho);
    require_same_dim(x, rho);
    require_same_dim(p, rho);
    const OperatorMatrix dissipator =
        -(gamma * omega0 * c_thermal / 4.0) * commutator(x, commutator(x, rho))
        - (gamma * c_thermal / (4.0 * omega0)) * commutator(p, commutator(p, rho))
        - (I1 * gamma / 4.0) * commutator(x, anticommutator(p, rho))
        + (I1 * gamma / 4.0) * commutator(p, anticommutator(x, rho));
    return -I1 * commutator(h, rho) + kLindbladPrefactor * dissipator;
}

CompiledLiouvillian CompiledLiouvillian::compile(const ModelParams& params)
{
    return compile(params, DissipatorSpec::from_params(params));
}

CompiledLiouvillian CompiledLiouvillian::compile(const ModelParams& params, const DissipatorSpec& spec)
{
    spec.validate();
    const LiouvillianContext ctx = LiouvillianContext::build(params);
    const SystemOperators sys = build_system(params);
    const TermToggles on = spec.effective_terms();
    const int n = params.dim;
    const SuperAlgebra alg(n);

    const double g = spec.gamma;
    const double w0 = ctx.omega0;
    const double c = spec.c_thermal;
    const AngleCoefficients& k = ctx.angles;

    const Sparse cx = alg.comm(ctx.x);
    const Sparse cp = alg.comm(ctx.p);

    CompiledLiouvillian out;
    out.dim_ = n;
    out.drives_ = params.drives;
    out.static_ = Sparse(n * n, n * n);

    if (on.unitary) out.static_ += -I1 * alg.comm(sys.h_static);
    if (on.decoherence) {
        out.static_ += Sparse(cx * cx) * cplx(-k.a_plus * g * w0 * c / 4.0);
        out.static_ += Sparse(cp * cp) * cplx(-k.a_minus * g * c / (4.0 * w0));
    }
    if (on.friction) {
        out.static_ += Sparse(cx * alg.acomm(ctx.p)) * (-I1 * k.a_plus * g / 4.0);
        out.static_ += Sparse(cp * alg.acomm(ctx.x)) * (I1 * k.a_minus * g / 4.0);
    }
    if (on.nonlinear) {
        const OperatorMatrix iv = I1 * ctx.v1_prime;
        out.static_ += Sparse(cp * alg.acomm(iv)) * cplx(g / 4.0 * k.b / (w0 * w0));
        out.static_ += Sparse(cx * alg.comm(iv)) * (I1 * g / 4.0 * k.s * c / w0);
    }
    out.static_.prune(cplx(0.0, 0.0));

    for (std::size_t j = 0; j < params.drives.size(); ++j) {
        const auto& tone = params.drives[j];
        Sparse part(n * n, n * n);
        if (on.unitary) part += -I1 * tone.amplitude * alg.comm(sys.drive_ops[j]);
        if (on.drive) {
            const OperatorMatrix& a = ctx.drive_lower[j];
            const cplx pref = I1 * g * static_cast<double>(tone.order) * tone.amplitude / 4.0;
            part += Sparse(cp * alg.acomm(a)) * (pref * k.b / (w0 * w0));
            part += Sparse(cx * alg.comm(a)) * (pref * I1 * k.s * c / w0);
        }
        part.prune(cplx(0.0, 0.0));
        out.tone_parts_.push_back(std::move(part));
    }
    out.radius_ = out.estimate_radius();
    return out;
}

std::size_t CompiledLiouvillian::nonzeros() const
{
    std::size_t total = static_cast<std::size_t>(static_.nonZeros());
    for (const auto& s : tone_parts_) total += static_cast<std::size_t>(s.nonZeros());
    return total;
}

void CompiledLiouvillian::apply(double t, const Vector& in, Vector& out) const
{
    if (in.size() != static_cast<Eigen::Index>(dim_) * dim_) {
        throw Error(ErrorKind::DimensionMismatch, "state vector does not match the Liouvillian");
    }
    out.noalias() = static_ * in;
    for (std::size_t j = 0; j < tone_parts_.size(); ++j) {
        const double f = std::cos(drives_[j].omega * t);
        if (f != 0.0) out.noalias() += f * (tone_parts_[j] * in);
    }
}

OperatorMatrix CompiledLiouvillian::apply(double t, const OperatorMatrix& rho) const
{
    if (rho.rows() != dim_ || rho.cols() != dim_) {
        throw Error(ErrorKind::DimensionMismatch, "density matrix does not match the Liouvillian");
    }
    const Vector in = Eigen::Map<const Vector>(rho.data(), rho.size());
    Vector out(in.size());
    apply(t, in, out);
    return Eigen::Map<const OperatorMatrix>(out.data(), dim_, dim_);
}

Eigen::MatrixXcd CompiledLiouvillian::dense_at(double t) const
{
    Eigen::MatrixXcd m = Eigen::MatrixXcd(static_);
    for (std::size_t j = 0; j < tone_parts_.size(); ++j) {
        m += std::cos(drives_[j].omega * t) * Eigen::MatrixXcd(tone_parts_[j]);
    }
    return m;
}

double CompiledLiouvillian::estimate_radius() const
{
    const Eigen::Index m = static_.rows();
    std::mt19937 rng(12345);
    std::normal_distribution<double> nd;
    Vector v(m);
    for (Eigen::Index i = 0; i < m; ++i) v(i) = cplx(nd(rng), nd(rng));
    v.normalize();
    double rho = 0.0;
    Vector w(m);
    for (int it = 0; it < 200; ++it) {
        w.noalias() = static_ * v;
        const double nrm = w.norm();
        if (nrm == 0.0) break;
        rho = std::max(rho, nrm);
        v = w / nrm;
    }
    double extra = 0.0;
    for (const auto& s : tone_parts_) {
        double row_max = 0.0;
        for (int r = 0; r < s.outerSize(); ++r) {
            double acc = 0.0;
            for (Sparse::InnerIterator itr(s, r); itr; ++itr) acc += std::abs(itr.value());
            row_max = std::max(row_max, acc);
        }
        extra += row_max;
    }
    return rho + extra;
}

} // namespace gcl
