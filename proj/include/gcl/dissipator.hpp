// dissipator.hpp: Liouvillian of the generalized Caldeira–Leggett master equation
//
// L(t)ρ is the sum of five term groups (ℏ = m = 1):
//   unitary      −i[H_S(t), ρ]
//   decoherence  −a₊(γω₀c/4)[x,[x,ρ]] − a₋(γc/4ω₀)[p,[p,ρ]]
//   friction     −i a₊(γ/4)[x,{p,ρ}] + i a₋(γ/4)[p,{x,ρ}]
//   nonlinear    (γ/4)( b/ω₀² [p,{[V1,p],ρ}] + i s c/ω₀ [x,[[V1,p],ρ]] )
//   drive        Σ_n i γ k_n F_n cos(ω_n t)/4 ( b/ω₀² [p,{x^{k_n−1},ρ}] + i s c/ω₀ [x,[x^{k_n−1},ρ]] )
// with a± = 1 ± cos2θ + sin2θ, b = 1 − cos2θ, s = sin2θ and c = 2n_th + 1.
// CL keeps the first three groups; gCL keeps all five.

#pragma once

#include <vector>

#include <Eigen/Sparse>

#include "gcl/fock.hpp"
#include "gcl/model.hpp"

namespace gcl {

struct TermToggles {
    bool unitary = true;
    bool decoherence = true;
    bool friction = true;
    bool nonlinear = true;
    bool drive = true;
};

enum class TermGroup { Unitary, Decoherence, Friction, Nonlinear, Drive };

struct DissipatorSpec {
    Family family = Family::gCL;
    double theta = 0.0;
    double gamma = 0.0;
    double c_thermal = 1.0;
    TermToggles terms;

    /// Family defaults: CL drops the nonlinear and drive groups.
    static DissipatorSpec from_params(const ModelParams& params);

    /// Term switches after the family constraint has been applied.
    TermToggles effective_terms() const;

    void validate() const;
};

struct AngleCoefficients {
    double a_plus = 0.0;
    double a_minus = 0.0;
    double b = 0.0;
    double s = 0.0;

    static AngleCoefficients at(double theta);
};

/// Precomputed operators for one model; immutable and shareable.
struct LiouvillianContext {
    double omega0 = 1.0;
    OperatorMatrix x;
    OperatorMatrix p;
    OperatorMatrix v1_prime;                 // V1'(x); [V1, p] = i V1'
    std::vector<DriveTone> drives;
    std::vector<OperatorMatrix> drive_lower; // x^{k_n − 1}
    AngleCoefficients angles;

    static LiouvillianContext build(const ModelParams& params);
    int dim() const { return static_cast<int>(x.rows()); }
};

/// ∂ρ/∂t from the literal nested commutators, restricted to the enabled groups.
OperatorMatrix apply_liouvillian(const LiouvillianContext& ctx, const DissipatorSpec& spec,
                                 const OperatorMatrix& h, const OperatorMatrix& rho, double t);

/// A single term group regardless of the toggles (family restrictions still apply).
OperatorMatrix apply_term_group(const LiouvillianContext& ctx, const DissipatorSpec& spec, TermGroup group,
                                const OperatorMatrix& h, const OperatorMatrix& rho, double t);

/// Friction group split into −i[Λ, ρ] with Λ = (γ cos2θ/4){x, p} and the remainder
/// −i(1 + sin2θ)(γ/4)([x,{p,ρ}] − [p,{x,ρ}]).
struct SqueezeSplit {
    OperatorMatrix lambda;
    OperatorMatrix hamiltonian_part;
    OperatorMatrix dissipative_part;
};

SqueezeSplit squeeze_decomposition(const LiouvillianContext& ctx, const DissipatorSpec& spec,
                                   const OperatorMatrix& rho);

/// Overall factor multiplying the Lindblad-form dissipator so that it coincides
/// with CL at θ = π/4, where a₊ = a₋ = 2.
inline constexpr double kLindbladPrefactor = 2.0;

/// Lindblad form of the θ = π/4 master equation.
OperatorMatrix lindblad_rhs(const OperatorMatrix& h, const OperatorMatrix& rho, const OperatorMatrix& x,
                            const OperatorMatrix& p, double gamma, double omega0, double c_thermal);

/// The Liouvillian as sparse N²×N² matrices acting on column-major vec(ρ):
/// L(t) = L_static + Σ_n cos(ω_n t) L_n. Assembled from the same commutator
/// algebra as apply_liouvillian; used for time stepping.
class CompiledLiouvillian {
public:
    using Sparse = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;
    using Vector = Eigen::VectorXcd;

    static CompiledLiouvillian compile(const ModelParams& params);
    static CompiledLiouvillian compile(const ModelParams& params, const DissipatorSpec& spec);

    int dim() const { return dim_; }
    std::size_t nonzeros() const;

    /// out = L(t) in; `out` must not alias `in`.
    void apply(double t, const Vector& in, Vector& out) const;
    OperatorMatrix apply(double t, const OperatorMatrix& rho) const;

    Eigen::MatrixXcd dense_at(double t) const;

    /// Upper estimate of the spectral radius of L(t) over a drive cycle, from
    /// power iteration on the static part plus the norms of the drive parts.
    /// Computed once at compile time.
    double spectral_radius_estimate() const { return radius_; }

    const std::vector<DriveTone>& drives() const { return drives_; }
    const Sparse& static_part() const { return static_; }

private:
    int dim_ = 0;
    Sparse static_;
    std::vector<Sparse> tone_parts_;
    std::vector<DriveTone> drives_;
    double radius_ = 0.0;

    double estimate_radius() const;
};

} // namespace gcl
