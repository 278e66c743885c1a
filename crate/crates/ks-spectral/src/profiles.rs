//! Stationary-state profiles, kernel pair, weights, and problem parameters.
//!
//! The stationary state is `U(r) = 8/(1+r²)²` with partial mass
//! `Q(r) = 4r²/(1+r²)`; the kernel of the inner operator `𝒜₀` is spanned by
//! `ψ₀(r) = r²/⟨r⟩⁴` and `ψ̃₀(r) = (r⁴ + 4r²ln r − 1)/⟨r⟩⁴` with `⟨r⟩² = 1+r²`.

use crate::{KsError, Result};

/// Problem constants for one parameter point.
///
/// `b = βν²` controls the parabolic scale, `ζ₀` the artificial matching
/// interface at `R₀ = ζ₀/√b` (`z₀ = ζ₀²/2` in the Kummer variable
/// `z = br²/2`).
#[derive(Debug, Clone, Copy)]
pub struct Parameters {
    pub beta: f64,
    pub nu: f64,
    pub b: f64,
    pub zeta0: f64,
    pub r0_interface: f64,
    pub z0: f64,
    pub n_max: usize,
    pub delta: f64,
}

impl Parameters {
    pub fn new(beta: f64, nu: f64, zeta0: f64, n_max: usize) -> Parameters {
        assert!(beta > 0.0 && nu > 0.0 && nu < 1.0);
        assert!(zeta0 > 0.0 && zeta0 <= 0.5);
        let b = beta * nu * nu;
        Parameters {
            beta,
            nu,
            b,
            zeta0,
            r0_interface: zeta0 / b.sqrt(),
            z0: zeta0 * zeta0 / 2.0,
            n_max,
            delta: 0.1,
        }
    }

    /// ln b (negative for the regimes of interest).
    pub fn ln_b(&self) -> f64 {
        self.b.ln()
    }
}

/// All profile values and first derivatives at one radius.
#[derive(Debug, Clone, Copy)]
pub struct ProfilePoint {
    pub u: f64,
    pub q: f64,
    pub psi0: f64,
    pub psi0_tilde: f64,
    pub du: f64,
    pub dq: f64,
    pub dpsi0: f64,
    pub dpsi0_tilde: f64,
}

/// Stationary state U(r) = 8/(1+r²)².
pub fn u_profile(r: f64) -> f64 {
    let s = 1.0 + r * r;
    8.0 / (s * s)
}

/// dU/dr = −32 r/(1+r²)³.
pub fn du_profile(r: f64) -> f64 {
    let s = 1.0 + r * r;
    -32.0 * r / (s * s * s)
}

/// Partial mass Q(r) = 4r²/(1+r²); satisfies Q' / r = U.
pub fn q_profile(r: f64) -> f64 {
    4.0 * r * r / (1.0 + r * r)
}

/// dQ/dr = 8r/(1+r²)².
pub fn dq_profile(r: f64) -> f64 {
    let s = 1.0 + r * r;
    8.0 * r / (s * s)
}

/// First kernel solution ψ₀(r) = r²/(1+r²)².
pub fn psi0(r: f64) -> f64 {
    let s = 1.0 + r * r;
    r * r / (s * s)
}

/// dψ₀/dr = 2r(1−r²)/(1+r²)³.
pub fn dpsi0(r: f64) -> f64 {
    let s = 1.0 + r * r;
    2.0 * r * (1.0 - r * r) / (s * s * s)
}

/// Second kernel solution ψ̃₀(r) = (r⁴ + 4r² ln r − 1)/(1+r²)²; requires r > 0.
pub fn psi0_tilde(r: f64) -> f64 {
    let s = 1.0 + r * r;
    (r.powi(4) + 4.0 * r * r * r.ln() - 1.0) / (s * s)
}

/// dψ̃₀/dr.
pub fn dpsi0_tilde(r: f64) -> f64 {
    let s = 1.0 + r * r;
    let num = r.powi(4) + 4.0 * r * r * r.ln() - 1.0;
    let dnum = 4.0 * r.powi(3) + 8.0 * r * r.ln() + 4.0 * r;
    dnum / (s * s) - 4.0 * r * num / (s * s * s)
}

/// All profiles and derivatives at one radius. ψ̃₀ needs r > 0 because of the
/// logarithm.
pub fn stationary_profiles(r: f64) -> Result<ProfilePoint> {
    if r < 0.0 {
        return Err(KsError::Domain("profiles need r ≥ 0"));
    }
    if r == 0.0 {
        return Err(KsError::Domain("ψ̃₀ is singular (log) at r = 0"));
    }
    Ok(ProfilePoint {
        u: u_profile(r),
        q: q_profile(r),
        psi0: psi0(r),
        psi0_tilde: psi0_tilde(r),
        du: du_profile(r),
        dq: dq_profile(r),
        dpsi0: dpsi0(r),
        dpsi0_tilde: dpsi0_tilde(r),
    })
}

/// ln ω_b(r) for the self-adjoint weight ω_b with ω_b⁻¹ = r U e^{br²/2}.
pub fn ln_omega_b(b: f64, r: f64) -> f64 {
    -b * r * r / 2.0 - r.ln() - u_profile(r).ln()
}

/// ω_b(r) = e^{−br²/2}/(r U(r)).
pub fn omega_b(b: f64, r: f64) -> f64 {
    ln_omega_b(b, r).exp()
}

/// ρ_b(r) = r⁻² U^{−1/2} e^{−br²/4} (Schrödinger conjugation weight).
pub fn rho_b(b: f64, r: f64) -> f64 {
    (-b * r * r / 4.0).exp() / (r * r * u_profile(r).sqrt())
}

/// Scaled stationary state U_ν(ζ) = 8ν²/(ν²+ζ²)².
pub fn u_nu(nu: f64, zeta: f64) -> f64 {
    let s = nu * nu + zeta * zeta;
    8.0 * nu * nu / (s * s)
}

/// Scaled partial mass Q_ν(ζ) = 4ζ²/(ν²+ζ²).
pub fn q_nu(nu: f64, zeta: f64) -> f64 {
    4.0 * zeta * zeta / (nu * nu + zeta * zeta)
}

/// ω_ν(ζ) = ν² e^{−βζ²/2} / U_ν(ζ).
pub fn omega_nu(beta: f64, nu: f64, zeta: f64) -> f64 {
    nu * nu * (-beta * zeta * zeta / 2.0).exp() / u_nu(nu, zeta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_values() {
        let p = stationary_profiles(1.0).unwrap();
        assert!((p.u - 2.0).abs() < 1e-15);
        assert!((p.q - 2.0).abs() < 1e-15);
        assert!((p.psi0 - 0.25).abs() < 1e-15);
        assert!(p.psi0_tilde.abs() < 1e-15);
    }

    #[test]
    fn weight_identity() {
        for &r in &[0.01, 0.5, 3.0, 40.0] {
            let b = 1e-4;
            let w = omega_b(b, r);
            assert!((w * r * u_profile(r) * (b * r * r / 2.0).exp() - 1.0).abs() < 1e-14);
        }
    }
}
