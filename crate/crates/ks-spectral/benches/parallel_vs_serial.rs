//! Rayon-parallel vs sequential execution of the embarrassingly parallel
//! workloads: coercivity-style quadratic-form trials and a ν-sweep of
//! small direct spectra.

use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ks_spectral::direct;
use ks_spectral::exec;
use ks_spectral::nonradial::{
    nonradial_grid, quadratic_forms, random_profile, HarmonicComponent, HarmonicField,
};
use ks_spectral::profiles::Parameters;

fn coercivity_trial(b: f64, grid: &std::sync::Arc<ks_spectral::grid::Grid>, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let components = (1..=3)
        .map(|k| HarmonicComponent {
            k,
            i: 1,
            values: random_profile(grid, &mut rng),
        })
        .collect();
    let field = HarmonicField::new(b, grid.clone(), components);
    let forms = quadratic_forms(&field).expect("forms");
    forms.full
}

fn bench_coercivity_trials(c: &mut Criterion) {
    let b = 1e-3;
    let grid = nonradial_grid(b);
    let trials = 24usize;
    let mut group = c.benchmark_group("coercivity_trials");
    group.sample_size(10);
    group.bench_function("parallel", |bench| {
        bench.iter(|| {
            exec::map_indices(trials, |t| coercivity_trial(b, &grid, t as u64))
        })
    });
    group.bench_function("sequential", |bench| {
        bench.iter(|| {
            exec::map_indices_seq(trials, |t| coercivity_trial(b, &grid, t as u64))
        })
    });
    group.finish();
}

fn bench_spectrum_sweep(c: &mut Criterion) {
    let nus = [1e-2f64, 8e-3, 6e-3, 4e-3];
    let solve = |nu: &f64| {
        let params = Parameters::new(0.5, *nu, 0.1, 2);
        let nodes = direct::spectral_grid_nodes(params.b, 1500);
        let op = direct::assemble_discretization(&params, &nodes);
        op.top_eigenvalues(3)
    };
    let mut group = c.benchmark_group("spectrum_sweep");
    group.sample_size(10);
    group.bench_function("parallel", |bench| {
        bench.iter(|| exec::map_collect(&nus, solve))
    });
    group.bench_function("sequential", |bench| {
        bench.iter(|| exec::map_collect_seq(&nus, solve))
    });
    group.finish();
}

criterion_group!(benches, bench_coercivity_trials, bench_spectrum_sweep);
criterion_main!(benches);
