//! Inner-zone eigenfunctions `φ_n^in` on `(0, R₀]`.
//!
//! The eigenvalue problem `(𝒜₀ − b r ∂_r)φ = αφ`, `α = 2b(1−n+α̃)`, is
//! integrated in the logarithmic coordinate `t = ln r`, where it reads
//! `φ_tt + (Q − 2 − br²)φ_t + r²(U − α)φ = 0` with bounded coefficients.
//! The regular branch behaves like `r²` at the origin and is seeded by the
//! exact three-term Frobenius series. The solution is compared against its
//! leading matched-asymptotic expansion `F_n = Σ_{j≤n} c_{n,j} b^j T_j` and,
//! for `n = 0, 1`, against the explicit refinement series with digamma
//! coefficients.

use crate::grid::GridFunction;
use crate::kernels::KernelTable;
use crate::ode::integrate_linear_second_order;
use crate::profiles::{q_profile, u_profile, Parameters};
use crate::special::{digamma, EULER_GAMMA};
use crate::{KsError, Result};

/// Inner eigenfunction together with its expansion diagnostics.
#[derive(Debug, Clone)]
pub struct InnerSolution {
    pub params: Parameters,
    pub n: usize,
    /// ᾱ, the refined part of the eigenvalue beyond 1/ln b.
    pub alpha_bar: f64,
    /// α̃ = 1/ln b + ᾱ.
    pub alpha_tilde: f64,
    /// α = 2b(1 − n + α̃).
    pub alpha: f64,
    /// φ sampled on the table grid (nodes ≤ R₀).
    pub values: GridFunction,
    /// dφ/dr on the same nodes.
    pub dvalues: GridFunction,
    /// Coefficient of r² at the origin after normalizing against F_n.
    pub normalization: f64,
    /// F_n = Σ_{j=0}^n c_{n,j} b^j T_j on the same nodes.
    pub leading_f: GridFunction,
    /// φ − F_n − ᾱ b G_n with G_n = −2 Σ_j c_{n,j} b^j T_{j+1}.
    pub residual_e: GridFunction,
    /// φ(R₀) (normalized).
    pub end_value: f64,
    /// (r ∂_r φ)(R₀) (normalized).
    pub end_r_dphi: f64,
}

/// Leading expansion F_n = Σ_{j=0}^n c_{n,j} b^j T_j on the table grid.
pub fn leading_expansion_f(params: &Parameters, n: usize, table: &KernelTable) -> GridFunction {
    assert!(n < table.c.len() && n <= table.j_max);
    let g = &table.grid;
    let mut values = vec![0.0; g.len()];
    let mut bj = 1.0;
    for j in 0..=n {
        let coeff = table.c[n][j] * bj;
        for (v, t) in values.iter_mut().zip(&table.t[j].values) {
            *v += coeff * t;
        }
        bj *= params.b;
    }
    GridFunction::new(g.clone(), values)
}

/// Integrate the regular branch outward from a Frobenius seed at the first
/// grid node and normalize against `F_n` by least squares on `[r_min, 0.05]`.
///
/// The table must live on a grid whose last node is the matching interface
/// `R₀ = ζ₀/√b` and must hold kernels through `T_{n+1}`.
pub fn solve_inner(
    params: &Parameters,
    n: usize,
    alpha_bar: f64,
    table: &KernelTable,
) -> Result<InnerSolution> {
    assert!(params.b <= 1e-2, "inner construction assumes b ≤ 1e-2");
    assert!(n + 1 <= table.j_max, "kernel table too short for G_n");
    let g = &table.grid;
    let r_start = g.nodes[0];
    let r_end = *g.nodes.last().unwrap();
    assert!(
        (r_end - params.r0_interface).abs() < 1e-9 * params.r0_interface,
        "table grid must end at the matching interface R₀"
    );
    let b = params.b;
    let alpha_tilde = 1.0 / params.ln_b() + alpha_bar;
    let alpha = 2.0 * b * (1.0 - n as f64 + alpha_tilde);

    // Exact Frobenius coefficients of the regular branch r²(1 + a₁r² + a₂r⁴).
    let a1 = (alpha + 2.0 * b - 16.0) / 8.0;
    let a2 = (24.0 - a1 * (24.0 - alpha - 4.0 * b)) / 24.0;
    let seed = |r: f64| -> [f64; 2] {
        let r2 = r * r;
        [
            r2 * (1.0 + a1 * r2 + a2 * r2 * r2),
            // t-derivative: r ∂_r of the series.
            r2 * (2.0 + 4.0 * a1 * r2 + 6.0 * a2 * r2 * r2),
        ]
    };

    let coeffs = |t: f64| -> (f64, f64) {
        let r = t.exp();
        let r2 = r * r;
        (
            -r2 * (u_profile(r) - alpha),
            -(q_profile(r) - 2.0 - b * r2),
        )
    };
    let sol = integrate_linear_second_order(
        coeffs,
        r_start.ln(),
        r_end.ln(),
        seed(r_start),
        1e-10,
        1e-14,
        // Grid sampling goes through the cubic Hermite dense output whose
        // O(h^4) interpolation noise is amplified by 1/h_grid^2 under the
        // finite-difference residual oracle; 1e-3 keeps that below 1e-8.
        1e-3,
    )?;

    let mut values = Vec::with_capacity(g.len());
    let mut dvalues = Vec::with_capacity(g.len());
    for &r in &g.nodes {
        let y = sol.eval(r.ln());
        values.push(y[0]);
        dvalues.push(y[1] / r);
    }

    let leading_f = leading_expansion_f(params, n, table);

    // Least-squares scaling of φ onto F_n over the near-origin window.
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &r) in g.nodes.iter().enumerate() {
        if r > 0.05 {
            break;
        }
        num += leading_f.values[i] * values[i];
        den += values[i] * values[i];
    }
    if den == 0.0 {
        return Err(KsError::DegenerateMatching(den));
    }
    let scale = num / den;
    for v in values.iter_mut().chain(dvalues.iter_mut()) {
        *v *= scale;
    }

    // ᾱ-correction part: G_n = −2 Σ_{j=0}^n c_{n,j} b^j T_{j+1}.
    let mut residual = values.clone();
    let mut bj = 1.0;
    for j in 0..=n {
        let coeff = table.c[n][j] * bj;
        for (i, res) in residual.iter_mut().enumerate() {
            *res -= coeff * table.t[j].values[i]
                - 2.0 * alpha_bar * b * coeff * table.t[j + 1].values[i];
        }
        bj *= b;
    }

    let end = sol.last();
    Ok(InnerSolution {
        params: *params,
        n,
        alpha_bar,
        alpha_tilde,
        alpha,
        end_value: scale * end.y[0],
        end_r_dphi: scale * end.y[1],
        values: GridFunction::new(g.clone(), values),
        dvalues: GridFunction::new(g.clone(), dvalues),
        normalization: scale,
        leading_f,
        residual_e: GridFunction::new(g.clone(), residual),
    })
}

impl InnerSolution {
    /// Logarithmic-derivative datum `(r ∂_r φ)/(2φ)` at the interface R₀.
    pub fn log_derivative_half(&self) -> f64 {
        self.end_r_dphi / (2.0 * self.end_value)
    }
}

/// Strict sign changes of the inner eigenfunction, ignoring values below
/// 1e−9 of the sup norm (quadrature/roundoff floor).
pub fn inner_zero_count(sol: &InnerSolution) -> usize {
    let sup = sol
        .values
        .values
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    sol.values.sign_changes(1e-9 * sup)
}

/// The explicit refinement series `(ℛ_n, S_n)` for `n = 0, 1`, truncated at
/// relative tail 1e−14 (at most 500 terms).
///
/// With `p_i = 1/((2)_i 2^i)` and `L = ln b`:
/// - `ℛ₀ = −½ Σ_{i≥1} p_i b^i r^{2i} {L⁻¹[2ln(r+1) − Ψ(i+2) − γ] + 1}`,
/// - `S₀ = ½ Σ_{i≥1} p_i b^i r^{2i} ln(r+1)`,
/// - `ℛ₁ = −½ Σ_{i≥1} (p_i/i) b^i r^{2i} {L⁻¹[2ln(r+1) − 1/i − Ψ(i+2) − γ] + 1 − L⁻¹}`,
/// - `S₁ = −½ Σ_{i≥2} (p_i/i) b^{i−1} r^{2i} ln(r+1)`.
pub fn refined_series(params: &Parameters, n: usize, r: f64) -> Result<(f64, f64)> {
    assert!(n <= 1, "explicit refinement series exist for n = 0, 1 only");
    let b = params.b;
    assert!(b * r * r <= 50.0, "series used outside its convergence zone");
    let inv_l = 1.0 / params.ln_b();
    let lr1 = (r + 1.0).ln();
    let mut rn = 0.0;
    let mut sn = 0.0;
    // p_i b^i r^{2i} built multiplicatively: ratio p_{i}/p_{i-1} = 1/(2(i+1)).
    let mut term = 1.0; // p_0 b^0 r^0 with p_0 = 1
    for i in 1..=500usize {
        let fi = i as f64;
        term *= b * r * r / (2.0 * (fi + 1.0));
        let psi = digamma(fi + 2.0)?;
        let (dr, ds) = if n == 0 {
            (
                -0.5 * term * (inv_l * (2.0 * lr1 - psi - EULER_GAMMA) + 1.0),
                0.5 * term * lr1,
            )
        } else {
            let w = term / fi;
            (
                -0.5 * w * (inv_l * (2.0 * lr1 - 1.0 / fi - psi - EULER_GAMMA) + 1.0 - inv_l),
                if i >= 2 { -0.5 * w / b * lr1 } else { 0.0 },
            )
        };
        rn += dr;
        sn += ds;
        if term < 1e-14 * rn.abs().max(1e-300) && i > 3 {
            return Ok((rn, sn));
        }
    }
    Err(KsError::SeriesTruncation(500))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::kernels::{apply_a, KernelTable};

    fn setup(b_target: f64, n_max: usize) -> (Parameters, KernelTable) {
        let nu = (b_target / 0.5).sqrt();
        let params = Parameters::new(0.5, nu, 0.5, n_max);
        let grid = Grid::geometric(1e-4, params.r0_interface, 3000);
        let table = KernelTable::build(n_max + 1, n_max, &grid).unwrap();
        (params, table)
    }

    #[test]
    fn positivity_and_zero_counts() {
        let (params, table) = setup(1e-6, 1);
        let s0 = solve_inner(&params, 0, 0.0, &table).unwrap();
        assert!(s0.values.values.iter().all(|&v| v > 0.0));
        assert_eq!(inner_zero_count(&s0), 0);
        let s1 = solve_inner(&params, 1, 0.0, &table).unwrap();
        assert_eq!(inner_zero_count(&s1), 1);
        // Zero near r₀ = 1/(√b √(n|ln b|)).
        let sup = s1.values.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let i = s1
            .values
            .values
            .windows(2)
            .position(|w| {
                w[0].abs() > 1e-9 * sup && w[1].abs() > 1e-9 * sup && w[0] * w[1] < 0.0
            })
            .unwrap();
        let r_zero = s1.values.grid.nodes[i];
        let r0 = 1.0 / (params.b.sqrt() * params.ln_b().abs().sqrt());
        assert!(
            (0.5..2.0).contains(&(r_zero / r0)),
            "zero at {r_zero}, predicted {r0}"
        );
    }

    #[test]
    fn ode_residual_small() {
        let (params, table) = setup(1e-6, 0);
        let s = solve_inner(&params, 0, 0.0, &table).unwrap();
        let lhs = apply_a(&s.values, params.b).unwrap();
        // Local scale = the magnitudes of the operator terms (the second
        // derivative alone is ~2φ/r² near the origin, so |φ| alone would be
        // far too strict a yardstick for a finite-difference oracle).
        let g = &s.values.grid;
        let d2 = g.second_derivative(&s.values.values).unwrap();
        for i in 4..g.len() - 4 {
            let r = g.nodes[i];
            let scale = d2[i].abs()
                + ((crate::profiles::q_profile(r) - 1.0) / r * s.dvalues.values[i]).abs()
                + (crate::profiles::u_profile(r) * s.values.values[i]).abs()
                + (params.b * r * s.dvalues.values[i]).abs();
            let res = lhs.values[i] - s.alpha * s.values.values[i];
            assert!(
                res.abs() <= 1e-7 * scale.max(1e-12),
                "residual {res:.3e} vs scale {scale:.3e} at r = {r}"
            );
        }
    }

    #[test]
    fn matches_leading_expansion_near_origin() {
        let (params, table) = setup(1e-6, 0);
        let s = solve_inner(&params, 0, 0.0, &table).unwrap();
        // φ ≈ F₀ = T₀ = ψ₀ deep inside the inner zone.
        let g = &s.values.grid;
        for (i, &r) in g.nodes.iter().enumerate() {
            if r > 1.0 {
                break;
            }
            let dev = (s.values.values[i] - s.leading_f.values[i]).abs();
            assert!(dev < 1e-4 * s.leading_f.values[i].abs().max(1e-12));
        }
    }

    #[test]
    fn refinement_series_partial_sums() {
        let nu = (1e-4f64 / 0.5).sqrt();
        let params = Parameters::new(0.5, nu, 0.1, 0);
        let (r0, _) = refined_series(&params, 0, 10.0).unwrap();
        // Partial-sum oracle with Ψ(m) = −γ + Σ_{k<m} 1/k evaluated exactly.
        let b = params.b;
        let r: f64 = 10.0;
        let inv_l = 1.0 / params.ln_b();
        let lr1 = (r + 1.0f64).ln();
        let mut oracle = 0.0;
        let mut term = 1.0;
        let mut harmonic = 1.0 + 0.5; // Σ_{k<3} 1/k seeds Ψ(3)
        for i in 1..=6usize {
            let fi = i as f64;
            term *= b * r * r / (2.0 * (fi + 1.0));
            let psi = -EULER_GAMMA + harmonic;
            oracle += -0.5 * term * (inv_l * (2.0 * lr1 - psi - EULER_GAMMA) + 1.0);
            harmonic += 1.0 / (fi + 2.0);
        }
        assert!((r0 - oracle).abs() < 1e-10 * oracle.abs());
    }
}
