//! Command implementations: each consumes a resolved [`RunConfig`] and
//! writes one report (CSV or JSON) to the configured output.

use serde_json::json;

use ks_spectral::direct::{self, SpectrumResult};
use ks_spectral::matching::{self, MatchedEigenpair};
use ks_spectral::nonradial::coercivity_scan;
use ks_spectral::perturb::{self, PerturbationSpec};
use ks_spectral::profiles::Parameters;
use ks_spectral::{exec, KsError};

use crate::checks;
use crate::config::{Command, Format, RunConfig};
use crate::report::{csv_document, fmt_float, write_output};

/// Failure modes mapped to process exit codes by `main`.
#[derive(Debug)]
pub enum RunError {
    /// Exit 2: a numerical kernel failed; a diagnostic file is written.
    Numerics(KsError),
    /// Exit 3: the invariant suite reported failures (list of report lines).
    Invariant(Vec<String>),
    /// I/O problems are surfaced as numerical-environment failures (exit 2).
    Io(std::io::Error),
}

impl From<KsError> for RunError {
    fn from(e: KsError) -> Self {
        RunError::Numerics(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

pub fn run(cfg: &RunConfig) -> Result<(), RunError> {
    match cfg.command {
        Command::EigenTable => eigen_table(cfg),
        Command::Match => match_report(cfg),
        Command::Profiles => profiles(cfg),
        Command::Perturb => perturb_report(cfg),
        Command::Coercivity => coercivity(cfg),
        Command::Validate => validate(cfg),
    }
}

/// Direct spectrum honoring the `--grid-points` base-count override.
fn solve_spectrum_cfg(
    params: &Parameters,
    k: usize,
    base_override: Option<usize>,
) -> Result<SpectrumResult, KsError> {
    match base_override {
        None => direct::solve_spectrum(params, k),
        Some(n) => {
            let coarse = direct::assemble_discretization(
                params,
                &direct::spectral_grid_nodes(params.b, 2 * n),
            );
            let fine = direct::assemble_discretization(
                params,
                &direct::spectral_grid_nodes(params.b, 4 * n),
            );
            let lc = coarse.top_eigenvalues(k);
            direct::solve_spectrum_on(params, fine, k, Some(&lc))
        }
    }
}

struct SweepPoint {
    params: Parameters,
    spectrum: SpectrumResult,
    table: ks_spectral::kernels::KernelTable,
    pairs: Vec<MatchedEigenpair>,
}

/// One sweep point per ν: direct spectrum plus matched construction,
/// dispatched to the worker pool in input order.
fn sweep(cfg: &RunConfig) -> Result<Vec<SweepPoint>, KsError> {
    let results: Vec<Result<SweepPoint, KsError>> = exec::map_collect(&cfg.nu_list, |&nu| {
        let params = Parameters::new(cfg.beta, nu, cfg.zeta0, cfg.n_max);
        let spectrum = solve_spectrum_cfg(&params, cfg.n_max + 1, cfg.grid_points)?;
        let (_, table) = matching::build_kernel_table(&params)?;
        let pairs = (0..=cfg.n_max)
            .map(|n| matching::solve_eigenvalue(&params, n, &table))
            .collect::<Result<Vec<_>, KsError>>()?;
        Ok(SweepPoint {
            params,
            spectrum,
            table,
            pairs,
        })
    });
    results.into_iter().collect()
}

fn eigen_table(cfg: &RunConfig) -> Result<(), RunError> {
    let points = sweep(cfg)?;
    let header = [
        "beta",
        "nu",
        "b",
        "n",
        "lambda_direct",
        "alpha_matched",
        "alpha_pred_o1",
        "alpha_pred_o2",
        "resid_o1_scaled",
        "resid_o2_scaled",
        "resid_matched_scaled",
    ];
    let mut rows = Vec::new();
    let mut objects = Vec::new();
    for p in &points {
        let l = p.params.ln_b().abs();
        for n in 0..=cfg.n_max {
            let alpha_direct = p.spectrum.eigenvalues[n];
            let lambda_direct = alpha_direct / (p.params.nu * p.params.nu);
            let alpha_matched = p.pairs[n].alpha_n;
            let pred1 = matching::predicted_alpha(&p.params, n, 1);
            let pred2 = matching::predicted_alpha(&p.params, n, 2);
            let two_b = 2.0 * p.params.b;
            let resid1 = (alpha_direct - pred1).abs() / two_b * l * l;
            let resid2 = (alpha_direct - pred2).abs() / two_b * l * l * l;
            let resid_matched = (alpha_matched - alpha_direct).abs() / two_b * l * l;
            rows.push(vec![
                fmt_float(p.params.beta),
                fmt_float(p.params.nu),
                fmt_float(p.params.b),
                n.to_string(),
                fmt_float(lambda_direct),
                fmt_float(alpha_matched),
                fmt_float(pred1),
                fmt_float(pred2),
                fmt_float(resid1),
                fmt_float(resid2),
                fmt_float(resid_matched),
            ]);
            objects.push(json!({
                "beta": p.params.beta,
                "nu": p.params.nu,
                "b": p.params.b,
                "n": n,
                "lambda_direct": lambda_direct,
                "alpha_matched": alpha_matched,
                "alpha_pred_o1": pred1,
                "alpha_pred_o2": pred2,
                "resid_o1_scaled": resid1,
                "resid_o2_scaled": resid2,
                "resid_matched_scaled": resid_matched,
            }));
        }
    }
    let doc = match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => csv_document("kslab eigen-table", &header, &rows),
        Format::Json => serde_json::to_string_pretty(&objects).expect("json") + "\n",
    };
    write_output(cfg.output.as_deref(), &doc)?;
    Ok(())
}

fn match_report(cfg: &RunConfig) -> Result<(), RunError> {
    let points = sweep(cfg)?;
    let mut entries = Vec::new();
    for p in &points {
        for pair in &p.pairs {
            let theta_residual =
                matching::mismatch_theta(&p.params, pair.n, pair.alpha_bar_n, &p.table)?;
            entries.push(json!({
                "beta": p.params.beta,
                "nu": p.params.nu,
                "b": p.params.b,
                "n": pair.n,
                "alpha_bar": pair.alpha_bar_n,
                "alpha_tilde": pair.alpha_tilde_n,
                "alpha": pair.alpha_n,
                "lambda": pair.lambda_n,
                "beta0": pair.beta0,
                "theta_residual": theta_residual,
                "derivative_jump": pair.derivative_jump(),
                "zero_count": pair.zero_count(),
            }));
        }
    }
    let doc = serde_json::to_string_pretty(&entries).expect("json") + "\n";
    write_output(cfg.output.as_deref(), &doc)?;
    Ok(())
}

fn profiles(cfg: &RunConfig) -> Result<(), RunError> {
    let nu = cfg.nu_list[0];
    let params = Parameters::new(cfg.beta, nu, cfg.zeta0, cfg.n_max);
    let (grid, table) = matching::build_kernel_table(&params)?;
    let pairs_res: Vec<Result<MatchedEigenpair, KsError>> =
        exec::map_indices(cfg.n_max + 1, |n| matching::solve_eigenvalue(&params, n, &table));
    let pairs = pairs_res
        .into_iter()
        .collect::<Result<Vec<_>, KsError>>()?;
    let mut header: Vec<String> = vec!["r".into()];
    for j in 0..=table.j_max {
        header.push(format!("t_{j}"));
    }
    for n in 0..=cfg.n_max {
        header.push(format!("phi_{n}"));
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut rows = Vec::new();
    for (i, &r) in grid.nodes.iter().enumerate() {
        let mut row = vec![fmt_float(r)];
        for j in 0..=table.j_max {
            row.push(fmt_float(table.t[j].values[i]));
        }
        for pair in &pairs {
            row.push(fmt_float(pair.phi.interp(r)));
        }
        rows.push(row);
    }
    let doc = csv_document("kslab profiles", &header_refs, &rows);
    write_output(cfg.output.as_deref(), &doc)?;
    Ok(())
}

fn perturb_report(cfg: &RunConfig) -> Result<(), RunError> {
    let n_top = cfg.n_max.min(4);
    let reports: Vec<Result<perturb::StabilityReport, KsError>> =
        exec::map_collect(&cfg.nu_list, |&nu| {
            let params = Parameters::new(cfg.beta, nu, cfg.zeta0, cfg.n_max);
            let nu_tilde = nu * (1.0 + 1.0 / nu.ln().abs());
            let spec = match perturb::default_potential(nu, nu_tilde) {
                Ok(s) => s,
                Err(KsError::Inadmissible(m)) => PerturbationSpec {
                    nu,
                    nu_tilde,
                    admissibility_m: m,
                },
                Err(e) => return Err(e),
            };
            perturb::stability_report(&params, &spec, n_top)
        });
    let mut entries = Vec::new();
    for r in reports {
        let r = r?;
        entries.push(json!({
            "beta": r.params.beta,
            "nu": r.spec.nu,
            "nu_tilde": r.spec.nu_tilde,
            "admissibility_m": r.spec.admissibility_m,
            "lambda": r.lambda,
            "lambda_bar": r.lambda_bar,
            "scaled_eigenvalue_dev": r.scaled_eigenvalue_dev,
            "scaled_eigenfunction_dist": r.scaled_eigenfunction_dist,
        }));
    }
    let doc = serde_json::to_string_pretty(&entries).expect("json") + "\n";
    write_output(cfg.output.as_deref(), &doc)?;
    Ok(())
}

fn coercivity(cfg: &RunConfig) -> Result<(), RunError> {
    const HARMONICS: usize = 4;
    const TRIALS: usize = 100;
    let mut entries = Vec::new();
    for &nu in &cfg.nu_list {
        let b = cfg.beta * nu * nu;
        let report = coercivity_scan(b, HARMONICS, TRIALS, cfg.seed)?;
        let mean = report.quotients.iter().sum::<f64>() / report.quotients.len() as f64;
        let max = report
            .quotients
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        entries.push(json!({
            "beta": cfg.beta,
            "nu": nu,
            "b": b,
            "harmonics": report.harmonics,
            "trials": report.trials,
            "min_quotient": report.min_quotient,
            "mean_quotient": mean,
            "max_quotient": max,
            "quotients": report.quotients,
        }));
    }
    let doc = serde_json::to_string_pretty(&entries).expect("json") + "\n";
    write_output(cfg.output.as_deref(), &doc)?;
    Ok(())
}

fn validate(cfg: &RunConfig) -> Result<(), RunError> {
    let outcomes = checks::run_all(cfg.seed);
    let lines: Vec<String> = outcomes.iter().map(|o| o.line()).collect();
    let doc = lines.join("\n") + "\n";
    write_output(cfg.output.as_deref(), &doc)?;
    if cfg.output.is_some() {
        // Keep the console informative even when writing to a file.
        print!("{doc}");
    }
    if outcomes.iter().any(|o| !o.passed) {
        let failed = outcomes
            .iter()
            .filter(|o| !o.passed)
            .map(|o| o.line())
            .collect();
        return Err(RunError::Invariant(failed));
    }
    Ok(())
}
