//! Run configuration: defaults, key=value config files, flag overrides, and
//! schema validation.

use std::fmt;
use std::path::PathBuf;

/// Subcommand selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    EigenTable,
    Match,
    Profiles,
    Perturb,
    Coercivity,
    Validate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Format::Csv => write!(f, "csv"),
            Format::Json => write!(f, "json"),
        }
    }
}

/// Fully resolved run configuration (defaults < config file < CLI flags).
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub beta: f64,
    /// Sorted descending, all in (0, 0.1].
    pub nu_list: Vec<f64>,
    pub n_max: usize,
    pub zeta0: f64,
    /// Base node count override for the direct discretization.
    pub grid_points: Option<usize>,
    pub output: Option<PathBuf>,
    pub seed: u64,
    pub format: Option<Format>,
}

/// Raw settable fields before validation; every entry optional so that
/// file values and flag values can be layered.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub beta: Option<f64>,
    pub nu_list: Option<Vec<f64>>,
    pub n_max: Option<usize>,
    pub zeta0: Option<f64>,
    pub grid_points: Option<usize>,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// Parse a log-spaced ν grid spec "a:b:count".
pub fn parse_nu_grid(spec: &str) -> Result<Vec<f64>, ConfigError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return err(format!("nu-grid '{spec}' is not of the form a:b:count"));
    }
    let a: f64 = parts[0]
        .parse()
        .map_err(|_| ConfigError(format!("nu-grid endpoint '{}'", parts[0])))?;
    let b: f64 = parts[1]
        .parse()
        .map_err(|_| ConfigError(format!("nu-grid endpoint '{}'", parts[1])))?;
    let count: usize = parts[2]
        .parse()
        .map_err(|_| ConfigError(format!("nu-grid count '{}'", parts[2])))?;
    if count == 0 || a <= 0.0 || b <= 0.0 {
        return err(format!("nu-grid '{spec}' must have positive endpoints and count ≥ 1"));
    }
    if count == 1 {
        return Ok(vec![a]);
    }
    let (la, lb) = (a.ln(), b.ln());
    Ok((0..count)
        .map(|i| (la + (lb - la) * i as f64 / (count - 1) as f64).exp())
        .collect())
}

/// Parse a key=value config file ('#' comments, blank lines ignored).
pub fn parse_config_file(text: &str) -> Result<Overrides, ConfigError> {
    let mut o = Overrides::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return err(format!("line {}: expected key=value, got '{raw}'", lineno + 1));
        };
        let (key, value) = (key.trim(), value.trim());
        let parse_f64 = |v: &str| -> Result<f64, ConfigError> {
            v.parse()
                .map_err(|_| ConfigError(format!("line {}: '{v}' is not a number", lineno + 1)))
        };
        match key {
            "beta" => o.beta = Some(parse_f64(value)?),
            "nu" => {
                let list: Result<Vec<f64>, _> =
                    value.split(',').map(|v| parse_f64(v.trim())).collect();
                o.nu_list = Some(list?);
            }
            "nu_grid" => o.nu_list = Some(parse_nu_grid(value)?),
            "n_max" => {
                o.n_max = Some(value.parse().map_err(|_| {
                    ConfigError(format!("line {}: n_max '{value}'", lineno + 1))
                })?)
            }
            "zeta0" => o.zeta0 = Some(parse_f64(value)?),
            "grid_points" => {
                o.grid_points = Some(value.parse().map_err(|_| {
                    ConfigError(format!("line {}: grid_points '{value}'", lineno + 1))
                })?)
            }
            "seed" => {
                o.seed = Some(value.parse().map_err(|_| {
                    ConfigError(format!("line {}: seed '{value}'", lineno + 1))
                })?)
            }
            "output" => o.output = Some(PathBuf::from(value)),
            "format" => {
                o.format = Some(match value {
                    "csv" => Format::Csv,
                    "json" => Format::Json,
                    other => return err(format!("line {}: format '{other}'", lineno + 1)),
                })
            }
            other => return err(format!("line {}: unknown key '{other}'", lineno + 1)),
        }
    }
    Ok(o)
}

impl Overrides {
    /// Later layers win field by field.
    pub fn layered_over(self, base: Overrides) -> Overrides {
        Overrides {
            beta: self.beta.or(base.beta),
            nu_list: self.nu_list.or(base.nu_list),
            n_max: self.n_max.or(base.n_max),
            zeta0: self.zeta0.or(base.zeta0),
            grid_points: self.grid_points.or(base.grid_points),
            output: self.output.or(base.output),
            seed: self.seed.or(base.seed),
            format: self.format.or(base.format),
        }
    }

    /// Fill defaults and validate the schema.
    pub fn resolve(self, command: Command) -> Result<RunConfig, ConfigError> {
        let beta = self.beta.unwrap_or(0.5);
        let mut nu_list = self.nu_list.unwrap_or_else(|| vec![1e-3]);
        let n_max = self.n_max.unwrap_or(2);
        let zeta0 = self.zeta0.unwrap_or(0.1);

        if !beta.is_finite() || beta <= 0.0 || beta > 10.0 {
            return err(format!("beta = {beta} outside (0, 10]"));
        }
        if nu_list.is_empty() {
            return err("empty nu list");
        }
        for &nu in &nu_list {
            if !nu.is_finite() || nu <= 0.0 || nu > 0.1 {
                return err(format!("nu = {nu} outside (0, 0.1]"));
            }
        }
        nu_list.sort_by(|a, b| b.partial_cmp(a).unwrap());
        nu_list.dedup();
        if n_max > 4 {
            return err(format!("n_max = {n_max} exceeds the supported maximum 4"));
        }
        if !(zeta0 > 0.0 && zeta0 <= 0.5) {
            return err(format!("zeta0 = {zeta0} outside (0, 0.5]"));
        }
        match (command, self.format) {
            (Command::Match | Command::Perturb | Command::Coercivity, Some(Format::Csv)) => {
                return err("this command reports structured diagnostics; only format=json is supported");
            }
            (Command::Profiles, Some(Format::Json)) => {
                return err("profiles emits plot-ready columns; only format=csv is supported");
            }
            _ => {}
        }
        if let Some(g) = self.grid_points {
            if !(100..=100_000).contains(&g) {
                return err(format!("grid_points = {g} outside [100, 100000]"));
            }
        }
        Ok(RunConfig {
            command,
            beta,
            nu_list,
            n_max,
            zeta0,
            grid_points: self.grid_points,
            output: self.output,
            seed: self.seed.unwrap_or(42),
            format: self.format,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nu_grid_is_log_spaced() {
        let g = parse_nu_grid("1e-2:1e-5:4").unwrap();
        assert_eq!(g.len(), 4);
        for w in g.windows(2) {
            assert!((w[0] / w[1] - 10.0).abs() < 1e-9);
        }
        assert!((g[1] - 1e-3).abs() < 1e-12);
        assert!((g[3] - 1e-5).abs() < 1e-18);
    }

    #[test]
    fn config_file_round_trip() {
        let text = "# comment\nbeta = 0.5\nnu = 1e-3, 1e-4\nn_max=1\nformat=json\n";
        let o = parse_config_file(text).unwrap();
        let cfg = o.resolve(Command::Match).unwrap();
        assert_eq!(cfg.nu_list, vec![1e-3, 1e-4]);
        assert_eq!(cfg.n_max, 1);
        assert_eq!(cfg.format, Some(Format::Json));
    }

    #[test]
    fn out_of_range_nu_rejected() {
        let o = Overrides {
            nu_list: Some(vec![0.5]),
            ..Overrides::default()
        };
        assert!(o.resolve(Command::EigenTable).is_err());
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(parse_config_file("betta = 0.5\n").is_err());
    }
}
