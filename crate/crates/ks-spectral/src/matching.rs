//! Log-derivative matching of the inner and outer zones.
//!
//! At the interface `R₀ = ζ₀/√b` (`z₀ = ζ₀²/2`) the regular inner branch and
//! the decaying outer branch must share their logarithmic derivative. Since
//! `z = br²/2` gives `z∂_z = (r∂_r)/2`, the mismatch is
//! `Θ(b,ᾱ) = (r∂_r φ^in)(R₀)/(2φ^in(R₀)) − (z∂_z q)(z₀)/q(z₀)`,
//! and the eigenvalue refinement `ᾱ_n` is its root. The glued eigenfunction
//! is continuous by the choice `β₀ = φ^in(R₀)/φ^ex(R₀)` and has a continuous
//! derivative up to the root-finding tolerance.

use std::sync::Arc;

use crate::grid::{Grid, GridFunction};
use crate::inner::{solve_inner, InnerSolution};
use crate::kernels::KernelTable;
use crate::outer::{solve_outer, OuterSolution};
use crate::profiles::Parameters;
use crate::special::{digamma, EULER_GAMMA};
use crate::{KsError, Result};

/// A matched eigenpair: the eigenvalue data and the glued eigenfunction in
/// both the parabolic variable `r` and the original variable `ζ = νr`.
#[derive(Debug, Clone)]
pub struct MatchedEigenpair {
    pub params: Parameters,
    pub n: usize,
    /// ᾱ_n, the root of the mismatch.
    pub alpha_bar_n: f64,
    /// α̃_n = 1/ln b + ᾱ_n.
    pub alpha_tilde_n: f64,
    /// α_n = 2b(1 − n + α̃_n).
    pub alpha_n: f64,
    /// λ_n = α_n/ν² = 2β(1 − n + α̃_n).
    pub lambda_n: f64,
    /// Gluing constant β₀ = φ^in(R₀)/φ^ex(R₀).
    pub beta0: f64,
    pub inner: InnerSolution,
    pub outer: OuterSolution,
    /// Glued eigenfunction of the r-variable on (0, r_max].
    pub phi: GridFunction,
    /// The same eigenfunction in the ζ-variable (ζ = νr).
    pub phi_zeta: GridFunction,
}

/// Default node count for the inner construction grid.
pub const INNER_NODES: usize = 3000;

/// Inner grid `[1e−4, R₀]` plus kernel table through `T_{n_max+1}`.
pub fn build_kernel_table(params: &Parameters) -> Result<(Arc<Grid>, KernelTable)> {
    let grid = Grid::geometric(1e-4, params.r0_interface, INNER_NODES);
    let table = KernelTable::build(params.n_max + 1, params.n_max, &grid)?;
    Ok((grid, table))
}

/// The matching mismatch Θ(b, ᾱ) for mode n.
pub fn mismatch_theta(
    params: &Parameters,
    n: usize,
    alpha_bar: f64,
    table: &KernelTable,
) -> Result<f64> {
    let inner = solve_inner(params, n, alpha_bar, table)?;
    let outer = solve_outer(params, n, alpha_bar)?;
    Ok(inner.log_derivative_half() - outer.log_derivative())
}

/// Root-find ᾱ_n on the bracket `[−50/L², 50/L²]` (`L = |ln b|`) by scanning
/// for sign changes of the mismatch and bisecting to width 1e−12, then glue
/// the eigenfunction.
///
/// θ_n(ᾱ) can cross a pole of Γ (θ_n a non-positive integer) inside the
/// bracket, which also flips the sign of Θ; those crossings are skipped by
/// trying sign-change intervals nearest the closed-form prediction first and
/// rejecting any whose bisection limit keeps a large residual. If no interval
/// works, the bracket is widened once before giving up.
pub fn solve_eigenvalue(params: &Parameters, n: usize, table: &KernelTable) -> Result<MatchedEigenpair> {
    let l = params.ln_b().abs();
    let half_width = 50.0 / (l * l);
    let guess = predicted_alpha_tilde(params, n, 2) - 1.0 / params.ln_b();
    for attempt in 0..2 {
        let w = half_width * (attempt + 1) as f64;
        if let Some(alpha_bar) = scan_and_bisect(params, n, table, -w, w, guess)? {
            return glue_eigenfunction(params, n, alpha_bar, table);
        }
    }
    let w = 2.0 * half_width;
    Err(KsError::BracketFailed {
        lo: -w,
        hi: w,
        theta_lo: mismatch_theta(params, n, -w, table)?,
        theta_hi: mismatch_theta(params, n, w, table)?,
    })
}

/// Scan `[lo, hi]` for sign changes of Θ and bisect the most plausible one.
/// Returns `Ok(None)` when every candidate interval collapses onto a pole.
fn scan_and_bisect(
    params: &Parameters,
    n: usize,
    table: &KernelTable,
    lo: f64,
    hi: f64,
    guess: f64,
) -> Result<Option<f64>> {
    const SCAN_POINTS: usize = 33;
    let mut points = Vec::with_capacity(SCAN_POINTS);
    for i in 0..SCAN_POINTS {
        let a = lo + (hi - lo) * i as f64 / (SCAN_POINTS - 1) as f64;
        points.push((a, mismatch_theta(params, n, a, table)?));
    }
    let mut intervals: Vec<(f64, f64, f64, f64)> = points
        .windows(2)
        .filter(|w| w[0].1 * w[1].1 < 0.0)
        .map(|w| (w[0].0, w[1].0, w[0].1, w[1].1))
        .collect();
    // Try the sign change nearest the closed-form guess first.
    intervals.sort_by(|a, b| {
        let da = (0.5 * (a.0 + a.1) - guess).abs();
        let db = (0.5 * (b.0 + b.1) - guess).abs();
        da.partial_cmp(&db).unwrap()
    });
    for (mut a, mut b, mut theta_a, _) in intervals {
        while b - a > 1e-12 {
            let mid = 0.5 * (a + b);
            let theta_mid = mismatch_theta(params, n, mid, table)?;
            if theta_mid == 0.0 {
                a = mid;
                b = mid;
                break;
            }
            if theta_a * theta_mid < 0.0 {
                b = mid;
            } else {
                a = mid;
                theta_a = theta_mid;
            }
        }
        let root = 0.5 * (a + b);
        // A genuine root has a small residual; a Γ-pole crossing does not.
        if mismatch_theta(params, n, root, table)?.abs() < 1e-6 {
            return Ok(Some(root));
        }
    }
    Ok(None)
}

/// Assemble the glued eigenfunction for a given ᾱ (normally the root).
pub fn glue_eigenfunction(
    params: &Parameters,
    n: usize,
    alpha_bar: f64,
    table: &KernelTable,
) -> Result<MatchedEigenpair> {
    let inner = solve_inner(params, n, alpha_bar, table)?;
    let outer = solve_outer(params, n, alpha_bar)?;
    let q0 = outer.q.values[0];
    if q0.abs() < 1e-300 {
        return Err(KsError::DegenerateMatching(q0));
    }
    let beta0 = inner.end_value / q0;

    // Combined radial grid: the inner nodes, then the outer z-nodes mapped
    // through r = √(2z/b) (the first outer node is the interface R₀ itself).
    let b = params.b;
    let mut nodes = inner.values.grid.nodes.clone();
    let mut values = inner.values.values.clone();
    for (i, &z) in outer.q.grid.nodes.iter().enumerate().skip(1) {
        nodes.push((2.0 * z / b).sqrt());
        values.push(beta0 * outer.q.values[i]);
    }
    let grid = Arc::new(Grid::from_nodes(nodes));
    let phi = GridFunction::new(grid.clone(), values.clone());
    let zeta_nodes: Vec<f64> = grid.nodes.iter().map(|&r| params.nu * r).collect();
    let phi_zeta = GridFunction::new(Arc::new(Grid::from_nodes(zeta_nodes)), values);

    let alpha_tilde = inner.alpha_tilde;
    let alpha_n = inner.alpha;
    Ok(MatchedEigenpair {
        params: *params,
        n,
        alpha_bar_n: alpha_bar,
        alpha_tilde_n: alpha_tilde,
        alpha_n,
        lambda_n: alpha_n / (params.nu * params.nu),
        beta0,
        inner,
        outer,
        phi,
        phi_zeta,
    })
}

impl MatchedEigenpair {
    /// Relative jump of the first derivative across the interface (should be
    /// ≤ 1e−8 after root-finding).
    pub fn derivative_jump(&self) -> f64 {
        // Inner side: r∂_r φ from the integrator endpoint. Outer side:
        // r∂_r = 2z∂_z of β₀ q.
        let inner_side = self.inner.end_r_dphi;
        let z0 = self.outer.q.grid.nodes[0];
        let outer_side = self.beta0 * 2.0 * z0 * self.outer.dq.values[0];
        (inner_side - outer_side).abs() / inner_side.abs().max(1e-300)
    }

    /// Sign changes of the glued eigenfunction above a roundoff floor.
    pub fn zero_count(&self) -> usize {
        let sup = self.phi.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.phi.sign_changes(1e-9 * sup)
    }
}

/// Closed-form eigenvalue prediction: order 1 is `α̃_n = 1/ln b`, order 2
/// adds the refinement `(ln 2 − γ − n)/|ln b|²` (established for n = 0, 1).
pub fn predicted_alpha_tilde(params: &Parameters, n: usize, order: usize) -> f64 {
    let lnb = params.ln_b();
    match order {
        1 => 1.0 / lnb,
        2 => 1.0 / lnb + (2.0f64.ln() - EULER_GAMMA - n as f64) / (lnb * lnb),
        _ => panic!("prediction order must be 1 or 2"),
    }
}

/// α_n from a predicted α̃.
pub fn predicted_alpha(params: &Parameters, n: usize, order: usize) -> f64 {
    2.0 * params.b * (1.0 - n as f64 + predicted_alpha_tilde(params, n, order))
}

/// H_n(ζ₀) = Σ_{i=1}^n c_{n,i} d̂_i ζ₀^{2(i−1)} (so H₁ = −1 with d̂₁ = −1/2).
pub fn h_coefficient(n: usize, zeta0: f64, table: &KernelTable) -> f64 {
    (1..=n)
        .map(|i| table.c[n][i] * table.dhat[i - 1] * zeta0.powi(2 * (i as i32 - 1)))
        .sum()
}

/// K_n(ζ₀) = ζ₀⁻² + Σ_{i=1}^n c_{n,i} ζ₀^{2(i−1)} (d̂_i ln ζ₀ + d_i).
pub fn k_coefficient(n: usize, zeta0: f64, table: &KernelTable) -> f64 {
    1.0 / (zeta0 * zeta0)
        + (1..=n)
            .map(|i| {
                table.c[n][i]
                    * zeta0.powi(2 * (i as i32 - 1))
                    * (table.dhat[i - 1] * zeta0.ln() + table.d[i - 1])
            })
            .sum::<f64>()
}

/// G̃₀(ζ₀) = Σ_{i≥0} ζ₀^{2i}/((2)_i 2^i).
pub fn g0_tilde(zeta0: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0; // ζ₀^{2i}/((2)_i 2^i), ratio ζ₀²/(2(i+2))... built below
    for i in 0..200 {
        sum += term;
        term *= zeta0 * zeta0 / (2.0 * (i as f64 + 2.0));
        if term < 1e-16 * sum {
            break;
        }
    }
    sum
}

/// J₀(ζ₀) = 2lnζ₀ − 1 + Σ_{i≥1} ζ₀^{2i}/((2)_i 2^i) [2lnζ₀ − Ψ(i+2) − γ].
pub fn j0_coefficient(zeta0: f64) -> Result<f64> {
    let lz = zeta0.ln();
    let mut sum = 2.0 * lz - 1.0;
    let mut term = 1.0;
    for i in 1..200usize {
        let fi = i as f64;
        term *= zeta0 * zeta0 / (2.0 * (fi + 1.0));
        let add = term * (2.0 * lz - digamma(fi + 2.0)? - EULER_GAMMA);
        sum += add;
        if add.abs() < 1e-16 * sum.abs() {
            break;
        }
    }
    Ok(sum)
}

/// J₁(ζ₀) = 2lnζ₀ − e₁ − Σ_{i≥1} ζ₀^{2i}/((2)_i i 2^i) [2lnζ₀ − ln2 − 1/i − Ψ(i+2)],
/// with e₁ = ln2 − γ − 1.
pub fn j1_coefficient(zeta0: f64) -> Result<f64> {
    let lz = zeta0.ln();
    let e1 = 2.0f64.ln() - EULER_GAMMA - 1.0;
    let mut sum = 2.0 * lz - e1;
    let mut term = 1.0;
    for i in 1..200usize {
        let fi = i as f64;
        term *= zeta0 * zeta0 / (2.0 * (fi + 1.0));
        let add = -(term / fi) * (2.0 * lz - 2.0f64.ln() - 1.0 / fi - digamma(fi + 2.0)?);
        sum += add;
        if add.abs() < 1e-16 * sum.abs() {
            break;
        }
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inner::leading_expansion_f;

    fn setup(b_target: f64, n_max: usize) -> (Parameters, KernelTable) {
        let nu = (b_target / 0.5).sqrt();
        let params = Parameters::new(0.5, nu, 0.1, n_max);
        let (_, table) = build_kernel_table(&params).unwrap();
        (params, table)
    }

    #[test]
    fn leading_f_interface_values_match_hn_kn() {
        // F_n(R₀) = b(−(ln b/2)H_n(ζ₀) + K_n(ζ₀)) + O(b^{3/2});
        // for n = 1 this is b(ln b/2 + ζ₀⁻² − ln ζ₀ + 2d₁) with d₁ = 1/2.
        let (params, table) = setup(1e-6, 1);
        let f1 = leading_expansion_f(&params, 1, &table);
        let got = *f1.values.last().unwrap() / params.b;
        let h1 = h_coefficient(1, params.zeta0, &table);
        assert!((h1 + 1.0).abs() < 1e-14);
        let k1 = k_coefficient(1, params.zeta0, &table);
        let expected = -params.ln_b() / 2.0 * h1 + k1;
        assert!(
            (got - expected).abs() < 0.01 * expected.abs(),
            "{got} vs {expected}"
        );
        let k1_closed = 1.0 / (params.zeta0 * params.zeta0) - params.zeta0.ln() + 1.0;
        assert!((k1 - k1_closed).abs() < 1e-12);
    }

    #[test]
    fn eigenvalue_n0_matches_refined_prediction() {
        let (params, table) = setup(1e-6, 0);
        let pair = solve_eigenvalue(&params, 0, &table).unwrap();
        let l = params.ln_b().abs();
        let pred2 = predicted_alpha_tilde(&params, 0, 2);
        let dev = (pair.alpha_tilde_n - pred2).abs() * l * l * l;
        assert!(dev < 100.0, "scaled third-order deviation {dev}");
        // Continuity of the derivative at the interface.
        assert!(pair.derivative_jump() < 1e-8, "{}", pair.derivative_jump());
        assert_eq!(pair.zero_count(), 0);
    }

    #[test]
    fn eigenvalue_n1_has_one_zero() {
        let (params, table) = setup(1e-6, 1);
        let pair = solve_eigenvalue(&params, 1, &table).unwrap();
        assert_eq!(pair.zero_count(), 1);
        let pred1 = predicted_alpha_tilde(&params, 1, 1);
        let l = params.ln_b().abs();
        assert!((pair.alpha_tilde_n - pred1).abs() * l * l < 50.0);
    }
}
