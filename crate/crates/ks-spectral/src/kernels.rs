//! The inner operator `𝒜₀`, its explicit inverse, and the iterated kernels.
//!
//! `𝒜₀ = ∂_r² − r⁻¹∂_r + r⁻¹∂_r(Q ·)` expands to
//! `𝒜₀ f = f″ + ((Q−1)/r) f′ + U f` since `Q′/r = U`. A particular solution
//! of `𝒜₀ u = f` is
//! `u = ½ψ₀(r)∫_r^1 (ζ⁴+4ζ²lnζ−1)/ζ · f dζ + ½ψ̃₀(r)∫_0^r ζ f dζ`,
//! whose integration limits fix the kernel projection used throughout.
//! The iterated kernels `T_{j+1} = −𝒜₀⁻¹T_j`, `T₀ = ψ₀`, have tails
//! `T_i = r^{2(i−1)}(d̂_i ln r + d_i) + O(r^{2(i−2)}ln^{i+1}r)` whose
//! coefficients obey the closed recurrences implemented in
//! [`tail_coefficients`].

use std::sync::Arc;

use crate::grid::{Grid, GridFunction};
use crate::profiles::{psi0, psi0_tilde, q_profile, u_profile};
use crate::{KsError, Result};

/// Partial mass m_f(ζ) = ∫₀^ζ f(s) s ds (radial reduction of the 2-D ball
/// integral). The head `[0, r_min]` assumes the regular behavior f ∝ r².
pub fn partial_mass(f: &GridFunction) -> GridFunction {
    let g = &f.grid;
    let integrand: Vec<f64> = g.nodes.iter().zip(&f.values).map(|(r, v)| r * v).collect();
    let mut cum = g.cumulative_integral(&integrand);
    // Head [0, r_min] with f ≈ f(r_min) there (f only needs to be
    // integrable against r dr, not to vanish).
    let head = f.values[0] * g.nodes[0] * g.nodes[0] / 2.0;
    for c in &mut cum {
        *c += head;
    }
    GridFunction::new(g.clone(), cum)
}

/// Apply `𝒜₀` with 4th-order finite differences.
pub fn apply_a0(f: &GridFunction) -> Result<GridFunction> {
    let g = &f.grid;
    let d1 = g.derivative(&f.values)?;
    let d2 = g.second_derivative(&f.values)?;
    let values = g
        .nodes
        .iter()
        .enumerate()
        .map(|(i, &r)| d2[i] + (q_profile(r) - 1.0) / r * d1[i] + u_profile(r) * f.values[i])
        .collect();
    Ok(GridFunction::new(g.clone(), values))
}

/// Apply the full inner operator `𝒜 = 𝒜₀ − b r ∂_r`.
pub fn apply_a(f: &GridFunction, b: f64) -> Result<GridFunction> {
    let g = &f.grid;
    let a0 = apply_a0(f)?;
    let d1 = g.derivative(&f.values)?;
    let values = a0
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| v - b * g.nodes[i] * d1[i])
        .collect();
    Ok(GridFunction::new(g.clone(), values))
}

/// Explicit inverse of `𝒜₀` (two-kernel quadrature). Assumes f continuous
/// with f = O(r²) near the origin.
pub fn invert_a0(f: &GridFunction) -> GridFunction {
    let g = &f.grid;
    // I_k(r) = ∫_{r_min}^r (ζ⁴+4ζ²lnζ−1)/ζ · f dζ ; the ∫_r^1 in the formula
    // becomes I_k(1) − I_k(r) and never touches [0, r_min].
    let integrand_k: Vec<f64> = g
        .nodes
        .iter()
        .zip(&f.values)
        .map(|(&z, &v)| (z.powi(4) + 4.0 * z * z * z.ln() - 1.0) / z * v)
        .collect();
    let cum_k = g.cumulative_integral(&integrand_k);
    let ik_at_one = g.interp(&cum_k, 1.0);
    // I₀(r) = ∫₀^r ζ f dζ with the regular head below r_min.
    let integrand_0: Vec<f64> = g.nodes.iter().zip(&f.values).map(|(&z, &v)| z * v).collect();
    let mut cum_0 = g.cumulative_integral(&integrand_0);
    let head = f.values[0] * g.nodes[0] * g.nodes[0] / 4.0;
    for c in &mut cum_0 {
        *c += head;
    }
    let values = g
        .nodes
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            0.5 * psi0(r) * (ik_at_one - cum_k[i]) + 0.5 * psi0_tilde(r) * cum_0[i]
        })
        .collect();
    GridFunction::new(g.clone(), values)
}

/// Tail recurrences: d̂₁ = −1/2, d₁ = 1/2, d̂_{i+1} = −d̂_i/(4i(i+1)),
/// d_{i+1} = (1/8)[(d̂_i − 2i d_i)/i² − (d̂_i − (2i+2)d_i)/(i+1)²].
/// Returns `(d̂, d)` with entry `k` holding the coefficient of index `k+1`.
///
/// The base constant follows from the exact integrals in the `T₁` expansion:
/// `∫₀^r ξψ₀ dξ = ½ln(1+r²) + ½/(1+r²) − ½ = ln r − ½ + O(r⁻²)` and
/// `½ψ₀∫_r^1 (ξ⁴+4ξ²lnξ−1)ψ₀/ξ dξ = −¼ + O(r⁻²ln²r)`, so
/// `T₁ = −(½ψ̃₀(ln r − ½) − ¼) + … = −½ln r + ½ + O(r⁻²ln²r)`.
pub fn tail_coefficients(i_max: usize) -> (Vec<f64>, Vec<f64>) {
    let mut dhat = vec![-0.5];
    let mut d = vec![0.5];
    for i in 1..i_max {
        let fi = i as f64;
        dhat.push(-dhat[i - 1] / (4.0 * fi * (fi + 1.0)));
        d.push(
            ((dhat[i - 1] - 2.0 * fi * d[i - 1]) / (fi * fi)
                - (dhat[i - 1] - (2.0 * fi + 2.0) * d[i - 1]) / ((fi + 1.0) * (fi + 1.0)))
                / 8.0,
        );
    }
    (dhat, d)
}

/// Expansion constants c_{n,j} = 2^j n!/(n−j)! via the recurrence
/// c_{n,0} = 1, c_{n,j+1} = 2(n−j)c_{n,j}.
pub fn c_coefficients(n_max: usize) -> Vec<Vec<f64>> {
    (0..=n_max)
        .map(|n| {
            let mut row = vec![1.0];
            for j in 0..n {
                row.push(2.0 * (n - j) as f64 * row[j]);
            }
            row
        })
        .collect()
}

/// Iterated kernels with tail-fit diagnostics.
#[derive(Debug, Clone)]
pub struct KernelTable {
    pub grid: Arc<Grid>,
    pub j_max: usize,
    /// T_0 … T_{j_max}.
    pub t: Vec<GridFunction>,
    /// dT_j/dr.
    pub dt: Vec<GridFunction>,
    /// Recurrence values d̂_1 … d̂_{j_max} (index 0 ↦ subscript 1).
    pub dhat: Vec<f64>,
    pub d: Vec<f64>,
    /// Tail-fit values regressed from T_j on the outer decade (index 0 ↦ T_1).
    pub dhat_fit: Vec<f64>,
    pub d_fit: Vec<f64>,
    /// c_{n,j} for n ≤ n_max.
    pub c: Vec<Vec<f64>>,
}

impl KernelTable {
    /// Build T_0 … T_{j_max} recursively and fit the tail coefficients on
    /// the decade `[0.05, 0.5]·r_max`. Errors if a fitted d̂_j (j ≤ 3)
    /// deviates more than 5% from the recurrence value.
    pub fn build(j_max: usize, n_max: usize, grid: &Arc<Grid>) -> Result<KernelTable> {
        assert!(j_max <= 6, "quadrature error dominates beyond j = 6");
        let mut t = vec![GridFunction::from_fn(grid, psi0)];
        for j in 0..j_max {
            let next = invert_a0(&t[j]);
            let values = next.values.iter().map(|v| -v).collect();
            t.push(GridFunction::new(grid.clone(), values));
        }
        let dt = t
            .iter()
            .map(|tj| tj.derivative())
            .collect::<Result<Vec<_>>>()?;
        let (dhat, d) = tail_coefficients(j_max.max(1));
        let r_max = *grid.nodes.last().unwrap();
        let mut dhat_fit = Vec::new();
        let mut d_fit = Vec::new();
        for (j, tj) in t.iter().enumerate().skip(1) {
            let (fit_dhat, fit_d) =
                fit_log_tail(tj, 2 * (j as i32 - 1), 0.05 * r_max, 0.5 * r_max);
            dhat_fit.push(fit_dhat);
            d_fit.push(fit_d);
            if j <= 3 {
                let dev = (fit_dhat - dhat[j - 1]).abs() / dhat[j - 1].abs();
                if dev > 0.05 {
                    return Err(KsError::KernelTailAccuracy(100.0 * dev));
                }
            }
        }
        Ok(KernelTable {
            grid: grid.clone(),
            j_max,
            t,
            dt,
            dhat,
            d,
            dhat_fit,
            d_fit,
            c: c_coefficients(n_max),
        })
    }

    /// Θ_j = r ∂_r T_j − 2(j−1) T_j.
    pub fn theta_profile(&self, j: usize) -> GridFunction {
        assert!(j <= self.j_max);
        let g = &self.grid;
        let values = g
            .nodes
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                r * self.dt[j].values[i] - 2.0 * (j as f64 - 1.0) * self.t[j].values[i]
            })
            .collect();
        GridFunction::new(g.clone(), values)
    }

    /// ∫₀^∞ r Θ₀ dr with the O(r⁻⁴) tail corrected from the last node
    /// (should equal 1: it is the limit R²T₀(R)).
    pub fn theta0_mass(&self) -> f64 {
        let theta0 = self.theta_profile(0);
        let g = &self.grid;
        let integrand: Vec<f64> = g
            .nodes
            .iter()
            .zip(&theta0.values)
            .map(|(r, v)| r * v)
            .collect();
        let body = g.integrate(&integrand);
        let r_last = *g.nodes.last().unwrap();
        let tail = theta0.values.last().unwrap() * r_last * r_last / 2.0;
        // Θ₀ ∝ r² below the first node, so ∫₀^{r₀} rΘ₀ ≈ r₀Θ₀(r₀)·r₀/4.
        let head = integrand[0] * g.nodes[0] / 4.0;
        body + tail + head
    }
}

/// Least-squares fit of T_j(r)/r^{2(j−1)} = d̂ ln r + d over `[r_lo, r_hi]`.
///
/// The subleading tail of T_j is a full log-polynomial block
/// `(ln^{j+1}r, …, ln r, 1)/r²`; carrying it in the fit basis keeps it from
/// aliasing into `d̂`, `d` when the window cannot be pushed to very large
/// radius. Logs are centered on the window to condition the normal system.
const FIT_DIM: usize = 7;

fn fit_log_tail(tj: &GridFunction, power: i32, r_lo: f64, r_hi: f64) -> (f64, f64) {
    let x0 = (r_lo.ln() + r_hi.ln()) / 2.0;
    let mut ata = [[0.0f64; FIT_DIM]; FIT_DIM];
    let mut atb = [0.0f64; FIT_DIM];
    for (i, &r) in tj.grid.nodes.iter().enumerate() {
        if r < r_lo || r > r_hi {
            continue;
        }
        let x = r.ln() - x0;
        let y = tj.values[i] / r.powi(power);
        let w = 1.0 / (r * r);
        let phi = [x, 1.0, x * x * x * x * w, x * x * x * w, x * x * w, x * w, w];
        for a in 0..FIT_DIM {
            for b in 0..FIT_DIM {
                ata[a][b] += phi[a] * phi[b];
            }
            atb[a] += phi[a] * y;
        }
    }
    let c = solve_normal(ata, atb);
    // Undo the centering: d̂·(x−x0) + d_centered ⇒ d = d_centered − d̂·x0.
    (c[0], c[1] - c[0] * x0)
}

/// Gaussian elimination with partial pivoting for the tiny normal systems.
fn solve_normal(
    mut a: [[f64; FIT_DIM]; FIT_DIM],
    mut b: [f64; FIT_DIM],
) -> [f64; FIT_DIM] {
    for k in 0..FIT_DIM {
        let p = (k..FIT_DIM)
            .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
            .unwrap();
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..FIT_DIM {
            let f = a[i][k] / a[k][k];
            for j in k..FIT_DIM {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = [0.0; FIT_DIM];
    for k in (0..FIT_DIM).rev() {
        let mut s = b[k];
        for j in k + 1..FIT_DIM {
            s -= a[k][j] * x[j];
        }
        x[k] = s / a[k][k];
    }
    x
}

/// The Wronskian combination (ψ₀ψ̃₀′ − ψ₀′ψ̃₀)·(1+r²)²/r, constant in r.
pub fn kernel_wronskian_scaled(r: f64) -> f64 {
    let s = 1.0 + r * r;
    (psi0(r) * crate::profiles::dpsi0_tilde(r) - crate::profiles::dpsi0(r) * psi0_tilde(r))
        * s
        * s
        / r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recurrence_values() {
        let (dhat, d) = tail_coefficients(3);
        assert!((dhat[0] + 0.5).abs() < 1e-15);
        assert!((d[0] - 0.5).abs() < 1e-15);
        assert!((dhat[1] - 1.0 / 16.0).abs() < 1e-15);
        assert!((d[1] + 7.0 / 64.0).abs() < 1e-15);
        assert!((dhat[2] + dhat[1] / 24.0).abs() < 1e-15);
    }

    #[test]
    fn c_matrix() {
        let c = c_coefficients(2);
        assert_eq!(c[0], vec![1.0]);
        assert_eq!(c[1], vec![1.0, 2.0]);
        assert_eq!(c[2], vec![1.0, 4.0, 8.0]);
    }

    #[test]
    fn partial_mass_of_u_is_q() {
        let g = Grid::geometric(1e-4, 50.0, 5000);
        let u = GridFunction::from_fn(&g, u_profile);
        let m = partial_mass(&u);
        for (i, &r) in g.nodes.iter().enumerate() {
            assert!(
                (m.values[i] - q_profile(r)).abs() < 1e-10,
                "at r = {r}: {} vs {}",
                m.values[i],
                q_profile(r)
            );
        }
    }
}
