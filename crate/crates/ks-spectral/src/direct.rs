//! Independent direct discretization of the linearized operator.
//!
//! `𝒜 = 𝒜₀ − br∂_r` is self-adjoint in `L²(ℝ⁺, ω_b dr)` with
//! `ω_b = e^{−br²/2}/(rU)`, where it takes the Sturm–Liouville form
//! `𝒜f = ω_b⁻¹(ω_b f′)′ + Uf`. A finite-volume scheme on a geometric grid
//! keeps that symmetry exactly on nonuniform nodes: fluxes
//! `ω_{i+1/2}(f_{i+1}−f_i)/h_{i+1/2}` with Dirichlet conditions at both ends
//! (the regular branch vanishes like r² at the origin; the Gaussian weight
//! kills the outer boundary). The symmetrized tridiagonal matrix is
//! diagonalized at the top of the spectrum by Sturm-sequence bisection and
//! inverse iteration. All weights are handled through ln ω_b so the Gaussian
//! tail never underflows.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{Grid, GridFunction};
use crate::matching::MatchedEigenpair;
use crate::profiles::{dpsi0, ln_omega_b, psi0, u_profile, Parameters};
use crate::{KsError, Result};

/// Symmetrized Sturm–Liouville tridiagonal operator on interior nodes.
///
/// The similarity transform `B = M^{1/2} A M^{−1/2}` with the lumped mass
/// `m_i = ω(x_i)(x_{i+1}−x_{i−1})/2` makes the matrix symmetric; eigenvalues
/// are unchanged and an eigenvector `v` of `B` corresponds to the function
/// values `f_i = v_i/√m_i`. Entries are assembled from ratios of exponentials
/// of ln ω so widely graded weights stay finite.
#[derive(Debug, Clone)]
pub struct SlOperator {
    /// Interior nodes (Dirichlet values at the two boundary positions).
    pub nodes: Vec<f64>,
    /// Diagonal of the symmetrized matrix.
    pub diag: Vec<f64>,
    /// Off-diagonal (length `nodes.len() − 1`).
    pub off: Vec<f64>,
    /// ln of the lumped mass weights `m_i`.
    pub ln_mass: Vec<f64>,
    /// Potential at the nodes.
    pub potential: Vec<f64>,
}

/// Assemble the finite-volume Sturm–Liouville discretization of
/// `f ↦ w⁻¹(w f′)′ + u f` on the interior of `[x_lo, x_hi]` with Dirichlet
/// conditions at both ends. `ln_w` is the log of the weight.
pub fn assemble_sturm_liouville(
    nodes: &[f64],
    x_lo: f64,
    x_hi: f64,
    ln_w: impl Fn(f64) -> f64,
    u: impl Fn(f64) -> f64,
) -> SlOperator {
    let n = nodes.len();
    assert!(n >= 3 && x_lo < nodes[0] && x_hi > nodes[n - 1]);
    // Extended coordinates including the Dirichlet boundary positions.
    let x = |i: isize| -> f64 {
        if i < 0 {
            x_lo
        } else if i as usize >= n {
            x_hi
        } else {
            nodes[i as usize]
        }
    };
    let ln_w_mid: Vec<f64> = (0..=n)
        .map(|i| ln_w(0.5 * (x(i as isize - 1) + x(i as isize))))
        .collect();
    let h: Vec<f64> = (0..=n).map(|i| x(i as isize) - x(i as isize - 1)).collect();
    let ln_w_node: Vec<f64> = nodes.iter().map(|&r| ln_w(r)).collect();
    let dx: Vec<f64> = (0..n)
        .map(|i| 0.5 * (x(i as isize + 1) - x(i as isize - 1)))
        .collect();
    let ln_mass: Vec<f64> = (0..n).map(|i| ln_w_node[i] + dx[i].ln()).collect();
    let potential: Vec<f64> = nodes.iter().map(|&r| u(r)).collect();
    let mut diag = Vec::with_capacity(n);
    for i in 0..n {
        // −(c_i + c_{i−1})/m_i + U_i with c_i = ω_{i+1/2}/h_{i+1/2}.
        let left = (ln_w_mid[i] - ln_w_node[i]).exp() / (h[i] * dx[i]);
        let right = (ln_w_mid[i + 1] - ln_w_node[i]).exp() / (h[i + 1] * dx[i]);
        diag.push(-(left + right) + potential[i]);
    }
    let off: Vec<f64> = (0..n - 1)
        .map(|i| (ln_w_mid[i + 1] - 0.5 * (ln_mass[i] + ln_mass[i + 1])).exp() / h[i + 1])
        .collect();
    SlOperator {
        nodes: nodes.to_vec(),
        diag,
        off,
        ln_mass,
        potential,
    }
}

/// Refit the diagonal so that every row is exact on a known near-kernel
/// function `phi` with `(w⁻¹(w phi′)′ + u phi)(x_i) = rhs(x_i)`, and close the
/// left boundary with the regular-branch ghost `f(x_lo) = (phi(x_lo)/phi(x_0)) f_0`
/// instead of a homogeneous Dirichlet value.
///
/// The plain finite-volume scheme carries an O(h²) truncation error on the
/// region where `phi` lives that is independent of the drift scale `b`. The
/// top eigenvalues are O(b), so for small `b` that error acts as a large
/// rank-one perturbation along the `phi` direction and destroys the top of
/// the spectrum long before the gaps (also O(b)) are resolved. Moving the
/// truncation error off the `phi` direction — by absorbing the row residual
/// on `phi` into the potential — keeps the scheme second-order consistent
/// while making the absolute eigenvalue error scale with `b` itself.
pub fn fit_to_kernel(
    op: &mut SlOperator,
    x_lo: f64,
    x_hi: f64,
    ln_w: impl Fn(f64) -> f64,
    phi: impl Fn(f64) -> f64,
    rhs: impl Fn(f64) -> f64,
) {
    let n = op.nodes.len();
    let x = |i: isize| -> f64 {
        if i < 0 {
            x_lo
        } else if i as usize >= n {
            x_hi
        } else {
            op.nodes[i as usize]
        }
    };
    for i in 0..n {
        let xi = op.nodes[i];
        let xm = x(i as isize - 1);
        let xp = x(i as isize + 1);
        let dx = 0.5 * (xp - xm);
        let ln_wi = ln_w(xi);
        let c_l = (ln_w(0.5 * (xm + xi)) - ln_wi).exp() / ((xi - xm) * dx);
        let c_r = (ln_w(0.5 * (xi + xp)) - ln_wi).exp() / ((xp - xi) * dx);
        let (pm, pi, pp) = (phi(xm), phi(xi), phi(xp));
        let diffusion = c_l * (pm - pi) + c_r * (pp - pi);
        let u_fit = (rhs(xi) - diffusion) / pi;
        op.diag[i] += u_fit - op.potential[i];
        op.potential[i] = u_fit;
        if i == 0 {
            op.diag[0] += c_l * pm / pi;
        }
    }
}

impl SlOperator {
    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    /// Matrix-vector product with the symmetrized tridiagonal matrix.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut s = self.diag[i] * v[i];
            if i > 0 {
                s += self.off[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                s += self.off[i] * v[i + 1];
            }
            out[i] = s;
        }
        out
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence via the
    /// LDLᵀ pivots of `B − xI`).
    pub fn count_below(&self, x: f64) -> usize {
        let n = self.dim();
        let mut d = self.diag[0] - x;
        let mut count = usize::from(d < 0.0);
        for i in 1..n {
            let e = self.off[i - 1];
            let denom = if d == 0.0 { f64::MIN_POSITIVE } else { d };
            d = (self.diag[i] - x) - e * e / denom;
            count += usize::from(d < 0.0);
        }
        count
    }

    /// The `k` algebraically largest eigenvalues, descending, each bisected
    /// to full floating-point resolution.
    pub fn top_eigenvalues(&self, k: usize) -> Vec<f64> {
        let n = self.dim();
        assert!(k <= n);
        // Gershgorin bounds.
        let mut lo_all = f64::INFINITY;
        let mut hi_all = f64::NEG_INFINITY;
        for i in 0..n {
            let mut radius = 0.0;
            if i > 0 {
                radius += self.off[i - 1].abs();
            }
            if i + 1 < n {
                radius += self.off[i].abs();
            }
            lo_all = lo_all.min(self.diag[i] - radius);
            hi_all = hi_all.max(self.diag[i] + radius);
        }
        let mut out = Vec::with_capacity(k);
        for j in 0..k {
            let target = n - 1 - j; // ascending index of the j-th largest
            let mut lo = lo_all;
            let mut hi = hi_all;
            // Invariant: count_below(lo) ≤ target < count_below(hi).
            loop {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if self.count_below(mid) <= target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        out
    }

    /// Solve `(B − λI)x = rhs` by tridiagonal LU with partial pivoting.
    fn shifted_solve(&self, lambda: f64, rhs: &[f64]) -> Vec<f64> {
        let n = self.dim();
        // Band storage with one extra superdiagonal for pivoting fill-in.
        let mut d0: Vec<f64> = (0..n).map(|i| self.diag[i] - lambda).collect();
        let mut d1: Vec<f64> = (0..n - 1).map(|i| self.off[i]).collect();
        let mut d2 = vec![0.0; n.saturating_sub(2)];
        let mut x = rhs.to_vec();
        for i in 0..n - 1 {
            // Rows i and i+1 currently read
            //   [d0[i], d1[i], d2[i]]  and  [sub, d0[i+1], d1[i+1]],
            // where `sub` is the original subdiagonal entry (row i may carry
            // fill-in d2[i] from an earlier swap; row i+1 never does yet).
            let sub = self.off[i];
            if sub.abs() > d0[i].abs() {
                let (r0, r1, r2) = (sub, d0[i + 1], if i + 2 < n { d1[i + 1] } else { 0.0 });
                let (s0, s1, s2) = (d0[i], d1[i], if i + 2 < n { d2[i] } else { 0.0 });
                d0[i] = r0;
                d1[i] = r1;
                if i + 2 < n {
                    d2[i] = r2;
                }
                x.swap(i, i + 1);
                let factor = s0 / d0[i];
                d0[i + 1] = s1 - factor * d1[i];
                if i + 2 < n {
                    d1[i + 1] = s2 - factor * d2[i];
                }
                x[i + 1] -= factor * x[i];
            } else {
                let pivot = if d0[i] == 0.0 { f64::MIN_POSITIVE } else { d0[i] };
                let factor = sub / pivot;
                d0[i + 1] -= factor * d1[i];
                if i + 2 < n {
                    d1[i + 1] -= factor * d2[i];
                    d2[i] = 0.0;
                }
                x[i + 1] -= factor * x[i];
            }
        }
        // Back substitution.
        for i in (0..n).rev() {
            let mut s = x[i];
            if i + 1 < n {
                s -= d1[i] * x[i + 1];
            }
            if i + 2 < n {
                s -= d2[i] * x[i + 2];
            }
            let pivot = if d0[i] == 0.0 { f64::MIN_POSITIVE } else { d0[i] };
            x[i] = s / pivot;
        }
        x
    }

    /// Inverse iteration for the eigenvector at `lambda`, kept orthogonal to
    /// previously computed eigenvectors; returns a unit vector in the
    /// symmetrized coordinates. `residual_tol` is the accepted
    /// `‖Bv − λv‖` for a unit vector (scale it with the operator when the
    /// eigenvalues are not O(b), e.g. in the ζ-variable).
    pub fn eigenvector(
        &self,
        lambda: f64,
        previous: &[Vec<f64>],
        residual_tol: f64,
    ) -> Result<Vec<f64>> {
        let n = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(7 + previous.len() as u64);
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut residual = f64::INFINITY;
        for _ in 0..50 {
            for p in previous {
                let dot: f64 = v.iter().zip(p).map(|(a, b)| a * b).sum();
                for i in 0..n {
                    v[i] -= dot * p[i];
                }
            }
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            for a in v.iter_mut() {
                *a /= norm;
            }
            let av = self.apply(&v);
            residual = av
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - lambda * b).powi(2))
                .sum::<f64>()
                .sqrt();
            if residual <= residual_tol {
                // Fix a sign convention: positive near the left end where the
                // regular branch is positive.
                let lead = v.iter().find(|a| a.abs() > 1e-3).copied().unwrap_or(1.0);
                if lead < 0.0 {
                    for a in v.iter_mut() {
                        *a = -*a;
                    }
                }
                return Ok(v);
            }
            v = self.shifted_solve(lambda, &v);
        }
        Err(KsError::EigenConvergence(residual))
    }
}

/// Result of the direct eigensolve: top-of-spectrum eigenvalues of `𝒜` in
/// the parabolic variable (descending), the eigenfunctions as grid functions
/// normalized to unit `ω_b`-norm, and their Gram matrix.
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub params: Parameters,
    /// Richardson-extrapolated eigenvalues of `𝒜` (the ζ-variable rates are
    /// these divided by ν²).
    pub eigenvalues: Vec<f64>,
    /// Raw eigenvalues of the fine-grid matrix (consistent with
    /// `eigenvectors` and `operator`).
    pub raw_eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<GridFunction>,
    /// Symmetrized-coordinate eigenvectors (unit vectors), for diagnostics.
    pub sym_vectors: Vec<Vec<f64>>,
    pub gram: Vec<Vec<f64>>,
    pub node_count: usize,
    pub r_max: f64,
    pub operator: SlOperator,
}

/// Truncation exponent: r_max = √(2K/b) puts the Gaussian weight at e^{−K}.
pub const TRUNCATION_EXPONENT: f64 = 60.0;

/// Default base node count. The kernel-fitted scheme is grid-converged well
/// below this at every ν in the working range; the solver still refines
/// beyond it for the Richardson pair (see [`solve_spectrum`]).
pub fn default_node_count(_params: &Parameters) -> usize {
    4000
}

/// Geometric interior nodes between 1e−4 and √(2K/b).
pub fn spectral_grid_nodes(b: f64, n: usize) -> Vec<f64> {
    let r_max = (2.0 * TRUNCATION_EXPONENT / b).sqrt();
    Grid::geometric(1e-4, r_max, n + 2).nodes[1..=n].to_vec()
}

/// Assemble the discretization of `𝒜` on the given interior nodes, fitted
/// to the kernel pair `𝒜₀ψ₀ = 0`, i.e. `𝒜ψ₀ = −brψ₀′`.
pub fn assemble_discretization(params: &Parameters, nodes: &[f64]) -> SlOperator {
    let b = params.b;
    let x_lo = nodes[0] * nodes[0] / nodes[1];
    let x_hi = nodes[nodes.len() - 1] + (nodes[nodes.len() - 1] - nodes[nodes.len() - 2]);
    let mut op = assemble_sturm_liouville(nodes, x_lo, x_hi, |r| ln_omega_b(b, r), u_profile);
    fit_to_kernel(
        &mut op,
        x_lo,
        x_hi,
        |r| ln_omega_b(b, r),
        psi0,
        |r| -b * r * dpsi0(r),
    );
    op
}

/// Top-`k` eigenpairs of the operator, with Richardson extrapolation.
///
/// The finite-volume eigenvalues converge cleanly at second order in the
/// grid step, but the top eigenvalues are of size `b`, far below the bulk
/// O(δ²) truncation error at affordable node counts. Solving on a doubled
/// pair of grids (`2n` and `4n` nodes with `n` the base count) and combining
/// as `(4λ_fine − λ_coarse)/3` removes the leading error term; eigenvectors
/// and the Gram matrix come from the fine grid.
pub fn solve_spectrum(params: &Parameters, k: usize) -> Result<SpectrumResult> {
    let n = default_node_count(params);
    let coarse = assemble_discretization(params, &spectral_grid_nodes(params.b, 2 * n));
    let fine = assemble_discretization(params, &spectral_grid_nodes(params.b, 4 * n));
    let lambda_coarse = coarse.top_eigenvalues(k);
    solve_spectrum_on(params, fine, k, Some(&lambda_coarse))
}

/// Top-`k` eigenpairs of one assembled operator; if `coarse_eigenvalues` is
/// given, report Richardson-extrapolated eigenvalues alongside the raw ones.
pub fn solve_spectrum_on(
    params: &Parameters,
    operator: SlOperator,
    k: usize,
    coarse_eigenvalues: Option<&[f64]>,
) -> Result<SpectrumResult> {
    solve_spectrum_with_tol(params, operator, k, coarse_eigenvalues, 1e-9)
}

/// [`solve_spectrum_on`] with an explicit eigenvector residual tolerance.
pub fn solve_spectrum_with_tol(
    params: &Parameters,
    operator: SlOperator,
    k: usize,
    coarse_eigenvalues: Option<&[f64]>,
    residual_tol: f64,
) -> Result<SpectrumResult> {
    assert!(k <= 10);
    let raw_eigenvalues = operator.top_eigenvalues(k);
    let eigenvalues: Vec<f64> = match coarse_eigenvalues {
        Some(lc) => raw_eigenvalues
            .iter()
            .zip(lc)
            .map(|(f, c)| (4.0 * f - c) / 3.0)
            .collect(),
        None => raw_eigenvalues.clone(),
    };
    for w in eigenvalues.windows(2) {
        if w[0] <= w[1] {
            return Err(KsError::EigenConvergence(w[0] - w[1]));
        }
    }
    let mut sym_vectors: Vec<Vec<f64>> = Vec::with_capacity(k);
    for &lambda in &raw_eigenvalues {
        let v = operator.eigenvector(lambda, &sym_vectors, residual_tol)?;
        sym_vectors.push(v);
    }
    let grid = Arc::new(Grid::from_nodes(operator.nodes.clone()));
    let eigenvectors: Vec<GridFunction> = sym_vectors
        .iter()
        .map(|v| {
            let values = v
                .iter()
                .zip(&operator.ln_mass)
                .map(|(a, lm)| a * (-0.5 * lm).exp())
                .collect();
            GridFunction::new(grid.clone(), values)
        })
        .collect();
    let gram: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| sym_vectors[i].iter().zip(&sym_vectors[j]).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect();
    Ok(SpectrumResult {
        params: *params,
        eigenvalues,
        raw_eigenvalues,
        eigenvectors,
        sym_vectors,
        gram,
        node_count: operator.nodes.len(),
        r_max: *operator.nodes.last().unwrap(),
        operator,
    })
}

impl SpectrumResult {
    /// Sign changes of mode `n`, counted in the symmetrized (mass-weighted)
    /// coordinates: in plain function coordinates the division by `√m_i`
    /// amplifies roundoff into large spurious oscillations in the Gaussian
    /// tail where the true eigenfunction is below machine precision.
    pub fn mode_zero_count(&self, n: usize) -> usize {
        let v = &self.sym_vectors[n];
        let sup = v.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        let floor = 1e-6 * sup;
        let mut count = 0;
        let mut last = 0.0f64;
        for &a in v {
            if a.abs() <= floor {
                continue;
            }
            if last != 0.0 && a.signum() != last.signum() {
                count += 1;
            }
            last = a;
        }
        count
    }
}

/// Diagnostics tying the direct spectrum to the matched construction.
#[derive(Debug, Clone)]
pub struct DiagnosticsReport {
    /// `c_n = ‖φ_n‖²_ω` for the construction-normalized modes.
    pub c_norms: Vec<f64>,
    /// `c₀·16/|ln b|`.
    pub c0_ratio: f64,
    /// `c₁·16/|ln b|²`.
    pub c1_ratio: f64,
    /// Worst `Rayleigh(g) − λ_{N+1}` over the random trials (should be ≤ 1e−8).
    pub max_rayleigh_excess: f64,
    /// Scaled deviations `|λ_n^direct − α_n^matched|·|ln b|²/(2b)`.
    pub matched_deviation: Vec<f64>,
}

/// Compute the diagnostics: construction-normalized `c_n` norms, the random
/// spectral-gap check with `trials` draws orthogonal to the first
/// `matched.len()` modes, and matched-vs-direct eigenvalue deviations.
pub fn spectral_diagnostics(
    result: &SpectrumResult,
    matched: &[MatchedEigenpair],
    trials: usize,
    seed: u64,
) -> DiagnosticsReport {
    let params = &result.params;
    let l = params.ln_b().abs();
    let n_modes = matched.len();
    assert!(n_modes + 1 <= result.eigenvalues.len());

    // Construction normalization: scale the unit-ω-norm direct eigenvector by
    // its weighted projection onto the matched (T₀-leading normalized)
    // eigenfunction, restricted to the overlap of the two grids. Then
    // c_n = scale², since the direct mode has unit ω-norm.
    let mut c_norms = Vec::with_capacity(n_modes);
    for (n, pair) in matched.iter().enumerate() {
        let phi_direct = &result.eigenvectors[n];
        let r_lo = pair.phi.grid.nodes[0].max(phi_direct.grid.nodes[0]);
        let r_hi = pair.phi.grid.nodes.last().unwrap().min(*phi_direct.grid.nodes.last().unwrap());
        let mut proj = 0.0;
        for (i, &r) in phi_direct.grid.nodes.iter().enumerate() {
            if r < r_lo || r > r_hi {
                continue;
            }
            let m = result.operator.ln_mass[i].exp();
            proj += m * phi_direct.values[i] * pair.phi.interp(r);
        }
        c_norms.push(proj * proj);
    }
    let c0_ratio = c_norms.first().map_or(f64::NAN, |c| c * 16.0 / l);
    let c1_ratio = c_norms.get(1).map_or(f64::NAN, |c| c * 16.0 / (l * l));

    // Spectral gap: smooth random fields orthogonal to the first n_modes
    // eigenvectors must have Rayleigh quotient ≤ λ_{n_modes}.
    let lambda_next = result.raw_eigenvalues[n_modes];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_excess = f64::NEG_INFINITY;
    let dim = result.operator.dim();
    for _ in 0..trials {
        // Random smooth bump combination in the function coordinates, so the
        // quotient lands near the top of the spectrum instead of at the
        // grid-scale bottom.
        let mut f = vec![0.0; dim];
        for _ in 0..6 {
            let amp: f64 = rng.gen_range(-1.0..1.0);
            let center: f64 = rng.gen_range(-2.0..0.6 * (result.r_max).ln());
            let width: f64 = rng.gen_range(0.3..2.0);
            for (i, &r) in result.operator.nodes.iter().enumerate() {
                let t = (r.ln() - center) / width;
                f[i] += amp * (-t * t).exp();
            }
        }
        // To symmetrized coordinates, then project out the computed modes.
        let mut v: Vec<f64> = f
            .iter()
            .zip(&result.operator.ln_mass)
            .map(|(a, lm)| a * (0.5 * lm).exp())
            .collect();
        for p in result.sym_vectors.iter().take(n_modes) {
            let dot: f64 = v.iter().zip(p).map(|(a, b)| a * b).sum();
            for i in 0..dim {
                v[i] -= dot * p[i];
            }
        }
        let vv: f64 = v.iter().map(|a| a * a).sum();
        if vv < 1e-300 {
            continue;
        }
        let av = result.operator.apply(&v);
        let quotient = v.iter().zip(&av).map(|(a, b)| a * b).sum::<f64>() / vv;
        max_excess = max_excess.max(quotient - lambda_next);
    }

    let matched_deviation = matched
        .iter()
        .enumerate()
        .map(|(n, pair)| (result.eigenvalues[n] - pair.alpha_n).abs() * l * l / (2.0 * params.b))
        .collect();

    DiagnosticsReport {
        c_norms,
        c0_ratio,
        c1_ratio,
        max_rayleigh_excess: max_excess,
        matched_deviation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::predicted_alpha_tilde;

    fn params_for(nu: f64) -> Parameters {
        Parameters::new(0.5, nu, 0.1, 3)
    }

    #[test]
    fn kernel_mode_of_a0_when_b_is_zero() {
        // With b = 0 the weight is 1/(rU) and ψ₀ is an exact kernel mode of
        // 𝒜₀, so the top eigenvalue of the truncated problem is ≈ 0 with
        // eigenvector ∝ ψ₀ on the bulk of the domain.
        let nodes = Grid::geometric(1e-4, 500.0, 4002).nodes[1..=4000].to_vec();
        let op = assemble_sturm_liouville(
            &nodes,
            5e-5,
            500.1,
            |r| -(r.ln() + u_profile(r).ln()),
            u_profile,
        );
        let lam = op.top_eigenvalues(1)[0];
        assert!(lam.abs() < 1e-3, "top eigenvalue {lam}");
        let v = op.eigenvector(lam, &[], 1e-9).unwrap();
        // Compare shapes over 0.1 ≤ r ≤ 10.
        let f: Vec<f64> = v
            .iter()
            .zip(&op.ln_mass)
            .map(|(a, lm)| a * (-0.5 * lm).exp())
            .collect();
        let i_ref = nodes.iter().position(|&r| r >= 1.0).unwrap();
        let scale = f[i_ref] / psi0(nodes[i_ref]);
        for (i, &r) in nodes.iter().enumerate() {
            if !(0.1..=10.0).contains(&r) {
                continue;
            }
            let rel = (f[i] / scale - psi0(r)).abs() / psi0(r);
            assert!(rel < 1e-3, "r={r} rel={rel}");
        }
    }

    #[test]
    fn top_eigenvalue_matches_refined_prediction() {
        let params = params_for(1e-3);
        let result = solve_spectrum(&params, 4).unwrap();
        let l = params.ln_b().abs();
        for n in 0..2 {
            let scaled = result.eigenvalues[n] / (2.0 * params.b);
            let pred = 1.0 - n as f64 + predicted_alpha_tilde(&params, n, 2);
            let dev = (scaled - pred).abs() * l * l * l;
            assert!(dev < 100.0, "n={n} scaled third-order deviation {dev}");
        }
        // Ordering, signs and Sturm oscillation.
        assert!(result.eigenvalues[0] > 0.0 && result.eigenvalues[1] < 0.0);
        for n in 0..4 {
            assert_eq!(result.mode_zero_count(n), n, "mode {n}");
        }
        // Self-adjointness: Gram matrix nearly the identity.
        for i in 0..4 {
            for j in 0..4 {
                let g = result.gram[i][j];
                if i == j {
                    assert!((g - 1.0).abs() < 1e-10);
                } else {
                    assert!(g.abs() < 1e-8, "gram[{i}][{j}]={g}");
                }
            }
        }
    }

    #[test]
    fn grid_refinement_stability() {
        // Doubling the base node count moves the extrapolated λ₀ by ≤ 1e−3
        // relative.
        let params = params_for(1e-3);
        let extrapolated = |n: usize| -> f64 {
            let coarse = assemble_discretization(&params, &spectral_grid_nodes(params.b, 2 * n));
            let fine = assemble_discretization(&params, &spectral_grid_nodes(params.b, 4 * n));
            (4.0 * fine.top_eigenvalues(1)[0] - coarse.top_eigenvalues(1)[0]) / 3.0
        };
        let a = extrapolated(4000);
        let b = extrapolated(8000);
        assert!((a - b).abs() <= 1e-3 * a.abs(), "{a} vs {b}");
    }
}
