//! Property tests for the structural invariants: parameter bookkeeping,
//! quadrature exactness, weight identities and the closed-form coefficient
//! recurrences.

use ks_spectral::grid::{Grid, GridFunction};
use ks_spectral::kernels::{c_coefficients, partial_mass, tail_coefficients};
use ks_spectral::profiles::{omega_b, q_profile, u_profile, Parameters};
use ks_spectral::special::{gamma, pochhammer};
use proptest::prelude::*;

proptest! {
    #[test]
    fn parameter_bookkeeping(
        beta in 0.1f64..2.0,
        nu in 1e-6f64..0.1,
        zeta0 in 0.01f64..0.5,
    ) {
        let p = Parameters::new(beta, nu, zeta0, 2);
        prop_assert!((p.b - beta * nu * nu).abs() <= 1e-15 * p.b);
        prop_assert!((p.r0_interface * p.b.sqrt() - zeta0).abs() <= 1e-13 * zeta0);
        prop_assert!((p.z0 - zeta0 * zeta0 / 2.0).abs() <= 1e-15);
    }

    #[test]
    fn geometric_grid_is_increasing_and_cubic_exact(
        r_min in 1e-4f64..1e-2,
        span in 10.0f64..1e4,
        n in 50usize..400,
        c0 in -2.0f64..2.0,
        c1 in -2.0f64..2.0,
        c2 in -2.0f64..2.0,
        c3 in -2.0f64..2.0,
    ) {
        let g = Grid::geometric(r_min, r_min * span, n);
        prop_assert!(g.nodes.windows(2).all(|w| w[1] > w[0]));
        let poly = |r: f64| c0 + r * (c1 + r * (c2 + r * c3));
        let anti = |r: f64| r * (c0 + r * (c1 / 2.0 + r * (c2 / 3.0 + r * c3 / 4.0)));
        let values: Vec<f64> = g.nodes.iter().map(|&r| poly(r)).collect();
        let exact = anti(*g.nodes.last().unwrap()) - anti(g.nodes[0]);
        let scale: f64 = g
            .panel_integrals(&values)
            .iter()
            .fold(exact.abs(), |m, p| m.max(p.abs()));
        prop_assert!((g.integrate(&values) - exact).abs() <= 1e-12 * scale);
    }

    #[test]
    fn weight_inverse_identity(b in 1e-12f64..1e-4, r in 1e-3f64..100.0) {
        let w = omega_b(b, r);
        prop_assert!(w > 0.0);
        let product = w * r * u_profile(r) * (b * r * r / 2.0).exp();
        prop_assert!((product - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn partial_mass_is_monotone_for_nonnegative_input(
        amp in 0.1f64..5.0,
        scale in 0.5f64..10.0,
        power in 1i32..4,
        base in 0.0f64..0.5,
        n in 100usize..300,
    ) {
        // Smooth nonnegative density whose derivatives are bounded relative
        // to its value (the panel rule is cubic-exact, not
        // positivity-preserving, so sharp under-resolved bumps ring).
        let g = Grid::geometric(1e-3, 50.0, n);
        let f = GridFunction::from_fn(&g, |r| {
            amp / (1.0 + (r / scale) * (r / scale)).powi(power) + base
        });
        let total = amp + base;
        let m = partial_mass(&f);
        prop_assert!(m.values.windows(2).all(|w| w[1] >= w[0] - 1e-12 * total));
    }

    #[test]
    fn pochhammer_shift_and_gamma_recurrence(a in 0.1f64..20.0, i in 0usize..12) {
        let shifted = pochhammer(a, i + 1);
        prop_assert!((shifted - pochhammer(a, i) * (a + i as f64)).abs() <= 1e-12 * shifted.abs());
        let g1 = gamma(a + 1.0).unwrap();
        prop_assert!((g1 - a * gamma(a).unwrap()).abs() <= 1e-12 * g1.abs());
    }
}

#[test]
fn coefficient_recurrences() {
    let (dhat, _d) = tail_coefficients(6);
    assert!((dhat[0] + 0.5).abs() < 1e-15);
    for i in 1..6 {
        let fi = i as f64;
        let expected = -dhat[i - 1] / (4.0 * fi * (fi + 1.0));
        assert!((dhat[i] - expected).abs() <= 1e-15 * expected.abs());
    }
    let c = c_coefficients(4);
    for (n, row) in c.iter().enumerate() {
        assert_eq!(row[0], 1.0);
        for j in 0..row.len() - 1 {
            let expected = 2.0 * (n as f64 - j as f64) * row[j];
            assert!((row[j + 1] - expected).abs() <= 1e-14 * expected.abs().max(1.0));
        }
    }
}

#[test]
fn stationary_profile_values() {
    assert_eq!(u_profile(0.0), 8.0);
    assert_eq!(q_profile(0.0), 0.0);
    assert!((u_profile(1.0) - 2.0).abs() < 1e-15);
    assert!((q_profile(1.0) - 2.0).abs() < 1e-15);
}
