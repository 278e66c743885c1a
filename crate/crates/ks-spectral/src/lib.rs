//! Numerical laboratory for the spectral analysis of the linearized
//! Keller-Segel operator in parabolic self-similar variables.
//!
//! The operator under study is `𝒜 = 𝒜₀ − b r ∂_r` acting on radial partial-mass
//! perturbations, with `𝒜₀ = ∂_r² − r⁻¹∂_r + r⁻¹∂_r(Q ·)` and
//! `Q(r) = 4r²/(1+r²)`. Its low-lying eigenvalues are `α_n = 2b(1−n+α̃_n)`
//! where `α̃_n = 1/ln b + O(|ln b|⁻²)`: the spectrum is only logarithmically
//! resolved, which makes the problem a stress test for both the
//! matched-asymptotic construction (inner zone `r ≲ ζ₀/√b`, outer Kummer zone)
//! and an independent self-adjoint Sturm-Liouville discretization.
//!
//! Crate layout:
//! - [`special`]: Gamma, digamma, Pochhammer and the two Kummer fundamental
//!   solutions `h_θ`, `h̃_θ`.
//! - [`grid`]: nonuniform radial grids, cubic-exact quadrature, finite
//!   differences.
//! - [`profiles`]: stationary state `U`, partial mass `Q`, the kernel pair
//!   `ψ₀`, `ψ̃₀`, weights, and the problem [`profiles::Parameters`].
//! - [`kernels`]: the operator `𝒜₀`, its explicit inverse, and the iterated
//!   kernels `T_j` with their tail coefficients.
//! - [`inner`]: inner-zone eigenfunctions `φ_n^in` by adaptive ODE
//!   integration plus the explicit refinement series for `n = 0, 1`.
//! - [`outer`]: the outer Kummer problem `(𝒦_θ + P₀)q = 0` on `[z₀, ∞)`.
//! - [`matching`]: the log-derivative mismatch `Θ(b, ᾱ)`, its root `ᾱ_n`,
//!   glued eigenfunctions, and the closed-form eigenvalue predictions.
//! - [`direct`]: independent Sturm-Liouville discretization and tridiagonal
//!   eigensolver (the oracle for all eigenvalue laws).
//! - [`perturb`]: the perturbed operator `𝒜̄ = 𝒜 + ζ⁻¹∂_ζ(P·)` and its
//!   spectral stability diagnostics.
//! - [`nonradial`]: per-harmonic Poisson fields, the mixed scalar product,
//!   the quadratic forms F and G, and the coercivity scan.
//! - [`exec`]: data-parallel map with a sequential fallback (feature
//!   `parallel`).

pub mod direct;
pub mod exec;
pub mod grid;
pub mod inner;
pub mod kernels;
pub mod matching;
pub mod nonradial;
pub mod ode;
pub mod outer;
pub mod perturb;
pub mod profiles;
pub mod special;

use thiserror::Error;

/// Errors reported by the numerical kernels.
#[derive(Debug, Error)]
pub enum KsError {
    #[error("gamma/digamma pole at nonpositive integer argument {0}")]
    SpecialPole(f64),
    #[error("series truncation failed: {0} terms insufficient")]
    SeriesTruncation(usize),
    #[error("floating overflow in {0}")]
    Overflow(&'static str),
    #[error("grid too coarse: {needed} nodes needed, got {got}")]
    GridTooCoarse { needed: usize, got: usize },
    #[error("domain error: {0}")]
    Domain(&'static str),
    #[error("adaptive ODE integration stalled at t = {0} (step below minimum)")]
    Stiffness(f64),
    #[error("asymptotic seed invalid at z_max: residual {0:.3e}")]
    SeedInvalid(f64),
    #[error(
        "no sign change of the mismatch on the root bracket: Θ({lo:.3e}) = {theta_lo:.3e}, \
         Θ({hi:.3e}) = {theta_hi:.3e}"
    )]
    BracketFailed {
        lo: f64,
        hi: f64,
        theta_lo: f64,
        theta_hi: f64,
    },
    #[error("degenerate matching data: denominator below tolerance ({0:.3e})")]
    DegenerateMatching(f64),
    #[error("inverse iteration failed to converge (residual {0:.3e})")]
    EigenConvergence(f64),
    #[error("kernel table accuracy: fitted tail coefficient deviates {0:.1}% from recurrence")]
    KernelTailAccuracy(f64),
    #[error("perturbation potential violates the admissibility bound (M = {0:.3e})")]
    Inadmissible(f64),
    #[error("tail integral does not converge on the grid")]
    TailDivergence,
}

pub type Result<T> = std::result::Result<T, KsError>;
