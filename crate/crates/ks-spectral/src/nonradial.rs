//! Non-radial sector: per-harmonic Poisson fields, the ℳ/ℳ̃ operators,
//! the mixed scalar product, the quadratic forms F and G, the coercivity
//! scan, and the supporting functional inequalities.
//!
//! A field without radial component decomposes over circle harmonics
//! `Y^{(k,i)}` (cos kθ / sin kθ, k ≥ 1) with radial profiles `u_k(r)`. On
//! each harmonic the Laplacian is `Δ^{(k)} = ∂_rr + r⁻¹∂_r − k²r⁻²` and the
//! Newtonian potential has the explicit kernel representation
//! `Φ_u^{(k)}(r) = r^k/(2k)∫_r^∞ u s^{1−k} ds + r^{−k}/(2k)∫_0^r u s^{1+k} ds`.
//! The localized potential is `Φ̃_u = ρ^{−1/2} Φ(u√ρ)` with `ρ = e^{−br²/2}`,
//! and `ℳ̃u = u/U − Φ̃_u`. The localized linearized operator is
//! `ℒ̃u = ∇·(U∇ℳ̃u − byu) − bUy·∇Φ̃_u − (b + b²|y|²/4)UΦ̃_u`,
//! almost self-adjoint for the mixed product
//! `⟨u,v⟩_* = ∫ u√ρ ℳ(v√ρ) dy`:
//! `⟨−ℒ̃u, v⟩_* = F(u,v) + G(u,v) + 2b⟨u,v⟩_*`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::exec;
use crate::grid::Grid;
use crate::profiles::{du_profile, q_profile, u_profile};
use crate::{KsError, Result};

/// One circle-harmonic component: index `k ≥ 1`, parity `i ∈ {1, 2}`
/// (cos/sin), and the radial profile sampled on the shared grid.
#[derive(Debug, Clone)]
pub struct HarmonicComponent {
    pub k: usize,
    pub i: usize,
    pub values: Vec<f64>,
}

/// A field without radial component, on a shared radial grid in the
/// parabolic variable y.
#[derive(Debug, Clone)]
pub struct HarmonicField {
    pub b: f64,
    pub grid: Arc<Grid>,
    pub components: Vec<HarmonicComponent>,
}

/// Angular factor of `∫|Y^{(k,i)}|²` over the circle (k ≥ 1).
pub const ANGULAR: f64 = std::f64::consts::PI;

impl HarmonicField {
    pub fn new(b: f64, grid: Arc<Grid>, components: Vec<HarmonicComponent>) -> HarmonicField {
        assert!(components.iter().all(|c| c.k >= 1), "radial component excluded");
        HarmonicField { b, grid, components }
    }

    /// `√ρ = e^{−br²/4}` at the nodes.
    pub fn sqrt_rho(&self) -> Vec<f64> {
        self.grid
            .nodes
            .iter()
            .map(|&r| (-self.b * r * r / 4.0).exp())
            .collect()
    }

    /// `‖∇u‖²_{L²_ω}` with `ω = ρ/U`, per-harmonic
    /// `π ∫ (u_k′² + k²u_k²/r²) (ρ/U) r dr`.
    pub fn gradient_norm_sq(&self) -> Result<f64> {
        let grid = &self.grid;
        let mut total = 0.0;
        for c in &self.components {
            let du = grid.derivative(&c.values)?;
            let vals: Vec<f64> = grid
                .nodes
                .iter()
                .enumerate()
                .map(|(j, &r)| {
                    let w = (-self.b * r * r / 2.0).exp() / u_profile(r);
                    (du[j] * du[j] + (c.k * c.k) as f64 * c.values[j] * c.values[j] / (r * r))
                        * w
                        * r
                })
                .collect();
            total += ANGULAR * grid.integrate(&vals);
        }
        Ok(total)
    }
}

/// Per-harmonic Poisson potential `(Φ, ∂_rΦ)` with `−Δ^{(k)}Φ = u`.
///
/// For k ≥ 1 both kernel integrals are positive-kernel quadratures; the
/// small-r head of `∫_0^r u s^{1+k} ds` closes with `u ∝ r^k` near the
/// origin, and the large-r tail of `∫_r^∞ u s^{1−k} ds` must be negligible
/// on the grid (decaying fields), else a divergence error is returned.
pub fn poisson_harmonic(k: usize, grid: &Grid, u: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = grid.nodes.len();
    assert_eq!(u.len(), n);
    if k == 0 {
        // Φ = −ln r ∫_0^r u s ds − ∫_r^∞ u ln s · s ds, ∂_rΦ = −r⁻¹∫_0^r u s ds.
        let integrand_in: Vec<f64> = grid.nodes.iter().zip(u).map(|(&s, &us)| us * s).collect();
        let mut inner = grid.cumulative_integral(&integrand_in);
        // Head: u ≈ u(r₀) constant on [0, r₀].
        let head = u[0] * grid.nodes[0] * grid.nodes[0] / 2.0;
        for v in inner.iter_mut() {
            *v += head;
        }
        let integrand_out: Vec<f64> = grid
            .nodes
            .iter()
            .zip(u)
            .map(|(&s, &us)| us * s.ln() * s)
            .collect();
        let outer = grid.suffix_integral(&integrand_out);
        check_tail(&integrand_out)?;
        let phi: Vec<f64> = (0..n)
            .map(|j| -grid.nodes[j].ln() * inner[j] - outer[j])
            .collect();
        let dphi: Vec<f64> = (0..n).map(|j| -inner[j] / grid.nodes[j]).collect();
        return Ok((phi, dphi));
    }
    let kf = k as f64;
    let integrand_in: Vec<f64> = grid
        .nodes
        .iter()
        .zip(u)
        .map(|(&s, &us)| us * s.powi(1 + k as i32))
        .collect();
    let mut inner = grid.cumulative_integral(&integrand_in);
    // Head closure with u(s) ≈ u(r₀)(s/r₀)^k on [0, r₀].
    let head = u[0] * grid.nodes[0] * grid.nodes[0] / (2.0 * kf + 2.0);
    for v in inner.iter_mut() {
        *v += head;
    }
    let integrand_out: Vec<f64> = grid
        .nodes
        .iter()
        .zip(u)
        .map(|(&s, &us)| us * s.powi(1 - k as i32))
        .collect();
    let outer = grid.suffix_integral(&integrand_out);
    check_tail(&integrand_out)?;
    let mut phi = Vec::with_capacity(n);
    let mut dphi = Vec::with_capacity(n);
    for j in 0..n {
        let r = grid.nodes[j];
        let rk = r.powi(k as i32);
        phi.push(rk / (2.0 * kf) * outer[j] + inner[j] / (2.0 * kf * rk));
        dphi.push(rk / r / 2.0 * outer[j] - inner[j] / (2.0 * rk * r));
    }
    Ok((phi, dphi))
}

/// The grid must actually contain the support: the outward kernel integrand
/// has to have decayed at the last nodes.
fn check_tail(integrand: &[f64]) -> Result<()> {
    let sup = integrand.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let n = integrand.len();
    let tail = integrand[n - 3..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if sup > 0.0 && tail > 1e-10 * sup {
        return Err(KsError::TailDivergence);
    }
    Ok(())
}

/// Potentials of the damped profiles: `(Φ(u_k√ρ), ∂_rΦ(u_k√ρ))` per
/// component. These stay bounded in the far field, unlike `Φ̃` itself,
/// and all quadratic-form integrands factor through them.
pub fn damped_potentials(field: &HarmonicField) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let sqrt_rho = field.sqrt_rho();
    field
        .components
        .iter()
        .map(|c| {
            let damped: Vec<f64> =
                c.values.iter().zip(&sqrt_rho).map(|(&u, &s)| u * s).collect();
            poisson_harmonic(c.k, &field.grid, &damped)
        })
        .collect()
}

/// Localized potential `Φ̃_u = ρ^{−1/2}Φ(u√ρ)`, per component, returning
/// `(Φ̃, ∂_rΦ̃)` profiles aligned with the field's components. Only usable
/// where `√ρ` does not underflow; the quadratic forms avoid it.
pub fn truncated_poisson(field: &HarmonicField) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let sqrt_rho = field.sqrt_rho();
    let raw = damped_potentials(field)?;
    let mut out = Vec::with_capacity(raw.len());
    for (phi, dphi) in raw {
        let n = phi.len();
        let mut phit = Vec::with_capacity(n);
        let mut dphit = Vec::with_capacity(n);
        for j in 0..n {
            let r = field.grid.nodes[j];
            let inv = 1.0 / sqrt_rho[j];
            phit.push(inv * phi[j]);
            // ∂_r(ρ^{−1/2}Φ) = ρ^{−1/2}(∂_rΦ + (br/2)Φ).
            dphit.push(inv * (dphi[j] + field.b * r / 2.0 * phi[j]));
        }
        out.push((phit, dphit));
    }
    Ok(out)
}

/// `ℳ̃u_k·√ρ = u_k√ρ/U − Φ(u_k√ρ)` per component (the damped image of
/// `ℳ̃`, bounded in the far field).
fn damped_m_tilde(field: &HarmonicField) -> Result<Vec<Vec<f64>>> {
    let sqrt_rho = field.sqrt_rho();
    let pots = damped_potentials(field)?;
    Ok(field
        .components
        .iter()
        .zip(&pots)
        .map(|(c, (phi, _))| {
            field
                .grid
                .nodes
                .iter()
                .enumerate()
                .map(|(j, &r)| c.values[j] * sqrt_rho[j] / u_profile(r) - phi[j])
                .collect()
        })
        .collect())
}

/// `ℳu = u/U − Φ_u` (untruncated) or `ℳ̃u = u/U − Φ̃_u` (truncated), per
/// component.
pub fn m_apply(field: &HarmonicField, truncated: bool) -> Result<HarmonicField> {
    let potentials: Vec<(Vec<f64>, Vec<f64>)> = if truncated {
        truncated_poisson(field)?
    } else {
        field
            .components
            .iter()
            .map(|c| poisson_harmonic(c.k, &field.grid, &c.values))
            .collect::<Result<_>>()?
    };
    let components = field
        .components
        .iter()
        .zip(&potentials)
        .map(|(c, (phi, _))| {
            let values = field
                .grid
                .nodes
                .iter()
                .enumerate()
                .map(|(j, &r)| c.values[j] / u_profile(r) - phi[j])
                .collect();
            HarmonicComponent {
                k: c.k,
                i: c.i,
                values,
            }
        })
        .collect();
    Ok(HarmonicField {
        b: field.b,
        grid: field.grid.clone(),
        components,
    })
}

/// Mixed product `⟨u,v⟩_* = ∫ u√ρ ℳ(v√ρ) dy = Σ_k π ∫ u_k ℳ̃v_k ρ r dr`,
/// over the shared harmonic support.
pub fn mixed_inner_product(u: &HarmonicField, v: &HarmonicField) -> Result<f64> {
    assert!(Arc::ptr_eq(&u.grid, &v.grid) || u.grid.nodes == v.grid.nodes);
    let w_v = damped_m_tilde(v)?;
    let sqrt_rho = u.sqrt_rho();
    let grid = &u.grid;
    let mut total = 0.0;
    for cu in &u.components {
        for (cv, wv) in v.components.iter().zip(&w_v) {
            if cu.k != cv.k || cu.i != cv.i {
                continue;
            }
            let vals: Vec<f64> = grid
                .nodes
                .iter()
                .enumerate()
                .map(|(j, &r)| cu.values[j] * sqrt_rho[j] * wv[j] * r)
                .collect();
            total += ANGULAR * grid.integrate(&vals);
        }
    }
    Ok(total)
}

/// The quadratic forms of the localized operator.
#[derive(Debug, Clone, Copy)]
pub struct QuadraticForms {
    /// Leading part `F(u,u) = ∫U|∇ℳ̃u|²ρ + b∫(y·∇Φ_U) u ℳ̃u √ρ`.
    pub f: f64,
    /// Lower-order part
    /// `G(u,u) = ∫(2bU y·∇Φ̃_u + (b + b²|y|²/4)UΦ̃_u) ℳ̃u ρ`.
    pub g: f64,
    /// `2b⟨u,u⟩_*`.
    pub mixed: f64,
    /// `F + G + 2b⟨u,u⟩_* = ⟨−ℒ̃u, u⟩_*`.
    pub full: f64,
}

/// Evaluate F, G, and the full form `⟨−ℒ̃u,u⟩_*` by per-harmonic quadrature.
/// The stationary identity `y·∇Φ_U = −Q(r)` closes the F cross term.
pub fn quadratic_forms(u: &HarmonicField) -> Result<QuadraticForms> {
    let grid = &u.grid;
    let pots = damped_potentials(u)?;
    let w_all = damped_m_tilde(u)?;
    let sqrt_rho = u.sqrt_rho();
    let mut f = 0.0;
    let mut g = 0.0;
    // All integrands factor through the damped quantities w = ℳ̃u·√ρ and
    // Φ_d = Φ(u√ρ): e.g. ∂_rℳ̃·√ρ = w′ + (br/2)w, Φ̃·√ρ = Φ_d, so ρ·|∇ℳ̃|²
    // never multiplies an overflowing ρ^{−1/2} by an underflowing √ρ.
    for ((c, (phi, dphi)), w) in u.components.iter().zip(&pots).zip(&w_all) {
        let kf = c.k as f64;
        let dw = grid.derivative(w)?;
        let mut f_vals = Vec::with_capacity(grid.nodes.len());
        let mut g_vals = Vec::with_capacity(grid.nodes.len());
        for (j, &r) in grid.nodes.iter().enumerate() {
            let uu = u_profile(r);
            let dm_damped = dw[j] + u.b * r / 2.0 * w[j];
            let grad_sq = dm_damped * dm_damped + kf * kf * w[j] * w[j] / (r * r);
            // Cross term b∫(y·∇Φ_U)u ℳ̃u ρ with y·∇Φ_U = −Q; the ρ weight
            // (u·ℳ̃·ρ = u·√ρ·w) is what makes F + G + 2b⟨u,u⟩_* reproduce
            // ⟨−ℒ̃u,u⟩_* exactly.
            f_vals.push(
                uu * grad_sq * r - u.b * q_profile(r) * c.values[j] * sqrt_rho[j] * w[j] * r,
            );
            let lower = 2.0 * u.b * uu * r * (dphi[j] + u.b * r / 2.0 * phi[j])
                + (u.b + u.b * u.b * r * r / 4.0) * uu * phi[j];
            g_vals.push(lower * w[j] * r);
        }
        f += ANGULAR * grid.integrate(&f_vals);
        g += ANGULAR * grid.integrate(&g_vals);
    }
    let mixed = 2.0 * u.b * mixed_inner_product(u, u)?;
    Ok(QuadraticForms {
        f,
        g,
        mixed,
        full: f + g + mixed,
    })
}

/// Direct assembly of `ℒ̃u` per harmonic (the oracle for the F/G
/// decomposition):
/// `(ℒ̃u)_k = r⁻¹(rUℳ̃_k′)′ − k²Uℳ̃_k/r² − b(ru_k′ + 2u_k)
///            − bUrΦ̃_k′ − (b + b²r²/4)UΦ̃_k`.
pub fn apply_l_tilde(u: &HarmonicField) -> Result<HarmonicField> {
    let grid = &u.grid;
    let pots = truncated_poisson(u)?;
    let mut components = Vec::with_capacity(u.components.len());
    for (c, (phi, dphi)) in u.components.iter().zip(&pots) {
        let kf = c.k as f64;
        let m_tilde: Vec<f64> = grid
            .nodes
            .iter()
            .enumerate()
            .map(|(j, &r)| c.values[j] / u_profile(r) - phi[j])
            .collect();
        let dm = grid.derivative(&m_tilde)?;
        let flux: Vec<f64> = grid
            .nodes
            .iter()
            .enumerate()
            .map(|(j, &r)| r * u_profile(r) * dm[j])
            .collect();
        let dflux = grid.derivative(&flux)?;
        let du = grid.derivative(&c.values)?;
        let values = grid
            .nodes
            .iter()
            .enumerate()
            .map(|(j, &r)| {
                let uu = u_profile(r);
                dflux[j] / r - kf * kf * uu * m_tilde[j] / (r * r)
                    - u.b * (r * du[j] + 2.0 * c.values[j])
                    - u.b * uu * r * dphi[j]
                    - (u.b + u.b * u.b * r * r / 4.0) * uu * phi[j]
            })
            .collect();
        components.push(HarmonicComponent {
            k: c.k,
            i: c.i,
            values,
        });
    }
    Ok(HarmonicField {
        b: u.b,
        grid: grid.clone(),
        components,
    })
}

/// Default radial grid for non-radial work: log-spaced, reaching past the
/// parabolic scale `1/√b`.
pub fn nonradial_grid(b: f64) -> Arc<Grid> {
    let r_max = (60.0 / b.max(1e-8)).sqrt().max(60.0);
    Grid::geometric(1e-3, r_max, 3000)
}

/// Random smooth radial profile: cubic interpolation through random control
/// values at log-spaced centers, damped by `e^{−r}`.
pub fn random_profile(grid: &Grid, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let centers: Vec<f64> = (0..12).map(|i| -2.0 + 0.4 * i as f64).collect(); // ln r in [−2, 2.4]
    let coeffs: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
    grid.nodes
        .iter()
        .map(|&r| {
            let x = r.ln();
            // Smooth bump interpolation: Gaussian kernels at the centers.
            let mut s = 0.0;
            for (c, a) in centers.iter().zip(&coeffs) {
                let t = (x - c) / 0.4;
                s += a * (-t * t).exp();
            }
            s * (-r).exp() * r // vanish like r at the origin
        })
        .collect()
}

/// Report of the coercivity scan.
#[derive(Debug, Clone)]
pub struct CoercivityReport {
    pub b: f64,
    pub harmonics: usize,
    pub trials: usize,
    /// Rayleigh quotients `⟨−ℒ̃u,u⟩_*/‖∇u‖²_ω` per trial.
    pub quotients: Vec<f64>,
    pub min_quotient: f64,
}

/// Scan random non-radial fields on harmonics `1..=harmonics` for the
/// coercivity quotient, after projecting the k = 1 components against
/// `∂_{y_j}U√ρ` (radial profile `U′(r)√ρ`).
pub fn coercivity_scan(b: f64, harmonics: usize, trials: usize, seed: u64) -> Result<CoercivityReport> {
    assert!(harmonics <= 6 && b <= 1e-2);
    let grid = nonradial_grid(b);
    let quotients: Vec<f64> = exec::map_indices(trials, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t as u64));
        let mut components = Vec::new();
        for k in 1..=harmonics {
            components.push(HarmonicComponent {
                k,
                i: 1,
                values: random_profile(&grid, &mut rng),
            });
        }
        let mut field = HarmonicField::new(b, grid.clone(), components);
        project_out_translations(&mut field);
        let forms = quadratic_forms(&field)?;
        let grad = field.gradient_norm_sq()?;
        Ok(forms.full / grad)
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let min_quotient = quotients.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(CoercivityReport {
        b,
        harmonics,
        trials,
        quotients,
        min_quotient,
    })
}

/// Remove the `∂_{y_j}U√ρ` projections from the k = 1 components:
/// `u₁ ← u₁ − (∫u₁U′√ρ r dr / ∫U′²ρ r dr)·U′√ρ`.
pub fn project_out_translations(field: &mut HarmonicField) {
    let grid = field.grid.clone();
    let sqrt_rho = field.sqrt_rho();
    let target: Vec<f64> = grid
        .nodes
        .iter()
        .zip(&sqrt_rho)
        .map(|(&r, &s)| du_profile(r) * s)
        .collect();
    let tt_vals: Vec<f64> = grid
        .nodes
        .iter()
        .enumerate()
        .map(|(j, &r)| target[j] * target[j] * r)
        .collect();
    let tt = grid.integrate(&tt_vals);
    for c in field.components.iter_mut() {
        if c.k != 1 {
            continue;
        }
        let ut_vals: Vec<f64> = grid
            .nodes
            .iter()
            .enumerate()
            .map(|(j, &r)| c.values[j] * target[j] * r)
            .collect();
        let coef = grid.integrate(&ut_vals) / tt;
        for (v, t) in c.values.iter_mut().zip(&target) {
            *v -= coef * t;
        }
    }
}

/// Worst observed ratios (lhs/rhs up to the unknown constant) for the
/// supporting functional inequalities, over random samples.
#[derive(Debug, Clone)]
pub struct InequalityReport {
    /// (name, worst ratio) pairs; every ratio must be finite.
    pub ratios: Vec<(String, f64)>,
    /// Observed minimum of the `∫U|∇ℳu|²/∫|∇u|²U⁻¹` quotient after
    /// projections (should be bounded below by a positive δ₂).
    pub delta2_observed: f64,
}

/// Evaluate the Appendix inequalities and the `ℳ`-gradient coercivity on
/// `samples` random non-radial fields at the given b.
pub fn functional_inequality_checks(b: f64, samples: usize, seed: u64) -> Result<InequalityReport> {
    let grid = nonradial_grid(b);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: Vec<(String, f64)> = vec![
        ("poincare_nonradial".into(), 0.0),
        ("hardy_l2_rho".into(), 0.0),
        ("generalised_hardy_a0".into(), 0.0),
        ("generalised_hardy_a1".into(), 0.0),
        ("generalised_hardy_a2".into(), 0.0),
        ("hardy_plain".into(), 0.0),
        ("poisson_pointwise".into(), 0.0),
    ];
    let mut delta2 = f64::INFINITY;
    for _ in 0..samples {
        let k = 1 + rng.gen_range(0..3usize);
        let values = random_profile(&grid, &mut rng);
        let mut field = HarmonicField::new(
            b,
            grid.clone(),
            vec![HarmonicComponent { k, i: 1, values }],
        );
        project_out_translations(&mut field);
        let c = &field.components[0];
        let du = grid.derivative(&c.values)?;
        let rho: Vec<f64> = grid.nodes.iter().map(|&r| (-b * r * r / 2.0).exp()).collect();
        let kf = k as f64;
        let grad_sq: Vec<f64> = (0..grid.nodes.len())
            .map(|j| {
                let r = grid.nodes[j];
                du[j] * du[j] + kf * kf * c.values[j] * c.values[j] / (r * r)
            })
            .collect();
        let int =
            |f: &dyn Fn(usize, f64) -> f64| -> f64 {
                let vals: Vec<f64> = grid
                    .nodes
                    .iter()
                    .enumerate()
                    .map(|(j, &r)| f(j, r) * r)
                    .collect();
                ANGULAR * grid.integrate(&vals)
            };

        // Poincaré for non-radial fields with Gaussian weight (z-variable
        // statement evaluated at unit scale via s = √b·r):
        // ∫v²(1+|z|²)e^{−z²/2} ≤ C∫|∇v|²e^{−z²/2}.
        let lhs = int(&|j, r| {
            c.values[j] * c.values[j] * (1.0 + b * r * r) * rho[j] * b
        });
        let rhs = int(&|j, _r| grad_sq[j] * rho[j]);
        update(&mut worst, "poincare_nonradial", lhs / rhs);

        // Hardy with Gaussian weight: ∫(1+|y|²)u²ρ ≤ C∫(1+|y|⁴)|∇u|²ρ.
        let lhs = int(&|j, r| c.values[j] * c.values[j] * (1.0 + r * r) * rho[j]);
        let rhs = int(&|j, r| grad_sq[j] * (1.0 + r * r * r * r) * rho[j]);
        update(&mut worst, "hardy_l2_rho", lhs / rhs);

        // Generalised Hardy at α ∈ {0, 1, 2}:
        // b^α∫u²(1+|y|^{2+2α})ρ ≤ C∫|∇u|²(1+|y|⁴)ρ. (α = 0 reduces to the
        // Gaussian Hardy bound above.)
        for (name, alpha) in [
            ("generalised_hardy_a0", 0.0),
            ("generalised_hardy_a1", 1.0),
            ("generalised_hardy_a2", 2.0),
        ] {
            let lhs = b.powf(alpha)
                * int(&|j, r| {
                    c.values[j] * c.values[j] * (1.0 + r.powf(2.0 + 2.0 * alpha)) * rho[j]
                });
            update(&mut worst, name, lhs / rhs);
        }

        // Plain Hardy: ∫u²(1+|y|²) ≤ C∫|∇u|²(1+|y|⁴).
        let lhs = int(&|j, r| c.values[j] * c.values[j] * (1.0 + r * r));
        let rhs_plain = int(&|j, r| grad_sq[j] * (1.0 + r * r * r * r));
        update(&mut worst, "hardy_plain", lhs / rhs_plain);

        // Pointwise Poisson bound at α = 1:
        // |Φ|² + |y|²|∇Φ|² ≤ C|y|²(1+|y|)^{−2}(1+1_{|y|≤1}|ln y|)∫u²(1+|y|)².
        let (phi, dphi) = poisson_harmonic(k, &grid, &c.values)?;
        let mass = int(&|j, r| c.values[j] * c.values[j] * (1.0 + r) * (1.0 + r));
        let mut worst_pt = 0.0f64;
        for (j, &r) in grid.nodes.iter().enumerate() {
            let lhs = phi[j] * phi[j] + r * r * dphi[j] * dphi[j];
            let envelope = r * r / ((1.0 + r) * (1.0 + r))
                * (1.0 + if r <= 1.0 { r.ln().abs() } else { 0.0 });
            worst_pt = worst_pt.max(lhs / (envelope * mass));
        }
        update(&mut worst, "poisson_pointwise", worst_pt);

        // ℳ-gradient coercivity at b = 0 (untruncated ℳ), after projection:
        // ∫U|∇ℳu|² ≥ δ₂∫|∇u|²/U.
        let mut flat = field.clone();
        flat.b = 0.0;
        let m = m_apply(&flat, false)?;
        let dm = grid.derivative(&m.components[0].values)?;
        let num = int(&|j, r| {
            u_profile(r)
                * (dm[j] * dm[j]
                    + kf * kf * m.components[0].values[j] * m.components[0].values[j] / (r * r))
        });
        let den = int(&|j, r| grad_sq[j] / u_profile(r));
        delta2 = delta2.min(num / den);
    }
    Ok(InequalityReport {
        ratios: worst,
        delta2_observed: delta2,
    })
}

fn update(worst: &mut [(String, f64)], name: &str, value: f64) {
    for (n, v) in worst.iter_mut() {
        if n == name {
            *v = v.max(value);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn poisson_k0_of_u_gives_q_over_r() {
        // −∂_rΦ_U = Q(r)/r (the cumulated mass of U is Q).
        let grid = Grid::geometric(1e-4, 1e4, 4000);
        let u: Vec<f64> = grid.nodes.iter().map(|&r| u_profile(r)).collect();
        let (_, dphi) = poisson_harmonic(0, &grid, &u).unwrap();
        for (j, &r) in grid.nodes.iter().enumerate() {
            if !(0.01..=100.0).contains(&r) {
                continue;
            }
            assert_relative_eq!(-dphi[j], q_profile(r) / r, max_relative = 1e-8);
        }
    }

    #[test]
    fn poisson_solves_helmholtz_per_harmonic() {
        // −Δ^{(k)}Φ = u for a smooth decaying profile, k = 1, 2.
        let grid = Grid::geometric(1e-3, 60.0, 4000);
        for k in [1usize, 2] {
            let u: Vec<f64> = grid
                .nodes
                .iter()
                .map(|&r| r.powi(k as i32) * (-r).exp())
                .collect();
            let (phi, dphi) = poisson_harmonic(k, &grid, &u).unwrap();
            let d2 = grid.second_derivative(&phi).unwrap();
            let dphi_fd = grid.derivative(&phi).unwrap();
            let sup = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (j, &r) in grid.nodes.iter().enumerate() {
                if !(0.01..=20.0).contains(&r) {
                    continue;
                }
                let lap = d2[j] + dphi[j] / r - (k * k) as f64 * phi[j] / (r * r);
                assert!(
                    (lap + u[j]).abs() <= 1e-7 * sup,
                    "k={k} r={r} residual {}",
                    (lap + u[j]).abs() / sup
                );
                // Internal consistency of the analytic derivative.
                assert!((dphi[j] - dphi_fd[j]).abs() <= 1e-6 * sup.max(dphi[j].abs()));
            }
        }
    }

    #[test]
    fn poisson_k1_bump_has_power_law_tails() {
        // Compactly supported bump on [1, 2]: Φ ∝ r below and ∝ 1/r above,
        // with coefficients given by the two moments.
        let grid = Grid::geometric(1e-3, 1e3, 4000);
        let u: Vec<f64> = grid
            .nodes
            .iter()
            .map(|&r| {
                if (1.0..=2.0).contains(&r) {
                    let t = (r - 1.0) * (2.0 - r);
                    t * t
                } else {
                    0.0
                }
            })
            .collect();
        let (phi, _) = poisson_harmonic(1, &grid, &u).unwrap();
        let m_out: f64 = {
            grid.integrate(&u) // ∫ u s^{1−k} ds with k = 1
        };
        let m_in: f64 = {
            let vals: Vec<f64> = grid.nodes.iter().zip(&u).map(|(&s, &f)| f * s * s).collect();
            grid.integrate(&vals)
        };
        let j_lo = grid.nodes.iter().position(|&r| r >= 0.2).unwrap();
        assert_relative_eq!(
            phi[j_lo],
            grid.nodes[j_lo] / 2.0 * m_out,
            max_relative = 1e-8
        );
        let j_hi = grid.nodes.iter().position(|&r| r >= 50.0).unwrap();
        assert_relative_eq!(
            phi[j_hi],
            m_in / (2.0 * grid.nodes[j_hi]),
            max_relative = 1e-8
        );
    }

    #[test]
    fn kernel_of_m_contains_gradient_of_stationary_state() {
        // ∂_{y₁}U is harmonic (1,1) with radial profile U′; ℳ kills it.
        let grid = Grid::geometric(1e-4, 1e4, 6000);
        let values: Vec<f64> = grid.nodes.iter().map(|&r| du_profile(r)).collect();
        let field = HarmonicField::new(
            0.0,
            grid.clone(),
            vec![HarmonicComponent { k: 1, i: 1, values }],
        );
        let m = m_apply(&field, false).unwrap();
        let sup_in: f64 = field.components[0]
            .values
            .iter()
            .enumerate()
            .map(|(j, v)| (v / u_profile(grid.nodes[j])).abs())
            .fold(0.0, f64::max);
        for (j, &r) in grid.nodes.iter().enumerate() {
            if !(0.01..=100.0).contains(&r) {
                continue;
            }
            assert!(
                m.components[0].values[j].abs() <= 1e-6 * sup_in,
                "r={r}: {}",
                m.components[0].values[j].abs() / sup_in
            );
        }
    }

    #[test]
    fn truncated_poisson_satisfies_localized_identity() {
        // ΔΦ̃_u + u − b y·∇Φ̃_u − (b − b²|y|²/4)Φ̃_u = 0. (Direct computation
        // from Δ(e^{br²/4}) = (b + b²r²/4)e^{br²/4}; substituting by·∇Φ̃
        // flips the sign of the b² term.)
        let b = 1e-3;
        let grid = Grid::geometric(1e-3, 120.0, 6000);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let values = random_profile(&grid, &mut rng);
        let field = HarmonicField::new(
            b,
            grid.clone(),
            vec![HarmonicComponent { k: 2, i: 1, values }],
        );
        let pots = truncated_poisson(&field).unwrap();
        let (phi, dphi) = &pots[0];
        let d2 = grid.second_derivative(phi).unwrap();
        let u = &field.components[0].values;
        let sup = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (j, &r) in grid.nodes.iter().enumerate() {
            if !(0.05..=30.0).contains(&r) {
                continue;
            }
            let lap = d2[j] + dphi[j] / r - 4.0 * phi[j] / (r * r);
            let res = lap + u[j] - b * r * dphi[j] - (b - b * b * r * r / 4.0) * phi[j];
            assert!(res.abs() <= 1e-6 * sup, "r={r} res={}", res.abs() / sup);
        }
    }

    #[test]
    fn mixed_product_symmetric_and_nonnegative() {
        let b = 1e-3;
        let grid = nonradial_grid(b);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mk = |rng: &mut ChaCha8Rng| {
            HarmonicField::new(
                b,
                grid.clone(),
                vec![
                    HarmonicComponent {
                        k: 1,
                        i: 1,
                        values: random_profile(&grid, rng),
                    },
                    HarmonicComponent {
                        k: 3,
                        i: 1,
                        values: random_profile(&grid, rng),
                    },
                ],
            )
        };
        let u = mk(&mut rng);
        let v = mk(&mut rng);
        let uv = mixed_inner_product(&u, &v).unwrap();
        let vu = mixed_inner_product(&v, &u).unwrap();
        assert_relative_eq!(uv, vu, max_relative = 1e-8);
        let uu = mixed_inner_product(&u, &u).unwrap();
        assert!(uu >= 0.0, "⟨u,u⟩_* = {uu}");
    }

    #[test]
    fn quadratic_forms_match_l_tilde_oracle() {
        let b = 1e-3;
        let grid = Grid::geometric(1e-3, 250.0, 9000);
        for seed in 0..3u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let field = HarmonicField::new(
                b,
                grid.clone(),
                vec![
                    HarmonicComponent {
                        k: 1,
                        i: 1,
                        values: random_profile(&grid, &mut rng),
                    },
                    HarmonicComponent {
                        k: 2,
                        i: 1,
                        values: random_profile(&grid, &mut rng),
                    },
                ],
            );
            let forms = quadratic_forms(&field).unwrap();
            let lu = apply_l_tilde(&field).unwrap();
            let mut minus_lu = lu;
            for c in minus_lu.components.iter_mut() {
                for v in c.values.iter_mut() {
                    *v = -*v;
                }
            }
            let direct = mixed_inner_product(&minus_lu, &field).unwrap();
            assert_relative_eq!(forms.full, direct, max_relative = 1e-5);
        }
    }

    #[test]
    fn far_field_quotient_approaches_gradient_norm() {
        // Bump at |y| ∈ [R, 2R] with R = 5/√b: Poisson terms are negligible
        // and F/‖∇u‖²_ω → 1.
        let b = 1e-4f64;
        let big_r = 5.0 / b.sqrt();
        let grid = Grid::geometric(1e-3, 40.0 * big_r, 4000);
        let values: Vec<f64> = grid
            .nodes
            .iter()
            .map(|&r| {
                if (big_r..=2.0 * big_r).contains(&r) {
                    let t = (r / big_r - 1.0) * (2.0 - r / big_r);
                    t * t
                } else {
                    0.0
                }
            })
            .collect();
        let field = HarmonicField::new(
            b,
            grid.clone(),
            vec![HarmonicComponent { k: 1, i: 1, values }],
        );
        let forms = quadratic_forms(&field).unwrap();
        let grad = field.gradient_norm_sq().unwrap();
        assert!(
            (forms.f / grad - 1.0).abs() < 0.1,
            "F/grad = {}",
            forms.f / grad
        );
    }

    #[test]
    fn coercivity_positive_at_small_b() {
        let report = coercivity_scan(1e-3, 3, 20, 42).unwrap();
        assert!(
            report.min_quotient > 0.0,
            "min quotient {}",
            report.min_quotient
        );
    }
}
