//! Command-line front end and file formats for the `qng-core` witnesses.
//!
//! Subcommands emit CSV tables (12 significant digits) or JSON reports.
//! Every output is a deterministic function of the command line and seed.

pub mod cli;
pub mod io;

mod classify;
mod curve;
mod depth;
mod scan;
mod simulate;

use std::io::Write;

use qng_core::measurement::QuadState;
use qng_core::states::{
    apply_loss_pmf, photon_added_thermal_pmf_auto, GaussianSpec, NoiseSpec, PhotonPmf,
};
use serde_json::Value;

use cli::{Cli, Command, Format};
use io::Table;

pub use curve::curve_table;
pub use depth::depth_table;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] qng_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 2 for bad input, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) | CliError::Core(_) => 2,
            _ => 1,
        }
    }
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Invalid(msg.into()))
}

/// Result of one subcommand in both output shapes.
#[derive(Debug, Clone)]
pub struct Output {
    pub table: Table,
    pub json: Value,
    pub default_format: Format,
    /// Some reported result is physically impossible.
    pub nonphysical: bool,
    /// The command ran but its check did not pass (a scan counterexample).
    pub failed: bool,
}

impl Output {
    pub fn table(table: Table) -> Self {
        let json = table.to_json();
        Self {
            table,
            json,
            default_format: Format::Csv,
            nonphysical: false,
            failed: false,
        }
    }

    pub fn report(json: Value, table: Table) -> Self {
        Self {
            table,
            json,
            default_format: Format::Json,
            nonphysical: false,
            failed: false,
        }
    }

    pub fn render(&self, format: Option<Format>) -> Result<String, CliError> {
        match format.unwrap_or(self.default_format) {
            Format::Csv => self.table.to_csv(),
            Format::Json => Ok(serde_json::to_string_pretty(&self.json)? + "\n"),
        }
    }
}

pub fn execute(command: &Command) -> Result<Output, CliError> {
    match command {
        Command::Curve(a) => curve::run(a),
        Command::Classify(a) => classify::run(a),
        Command::Depth(a) => depth::run(a),
        Command::Simulate(a) => simulate::run(a),
        Command::Scan(a) => scan::run(a),
    }
}

/// Runs the parsed command line, writes the output, and returns the exit
/// status: 0 success, 1 failed check or I/O error, 2 invalid input,
/// 3 nonphysical result under `--strict`.
pub fn run(cli: &Cli) -> i32 {
    let out = match execute(&cli.command) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("qng: {e}");
            return e.exit_code();
        }
    };
    let text = match out.render(cli.format) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("qng: {e}");
            return e.exit_code();
        }
    };
    let written = match &cli.output {
        Some(path) => std::fs::write(path, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("qng: {e}");
        return 1;
    }
    if cli.strict && out.nonphysical {
        eprintln!("qng: nonphysical result");
        return 3;
    }
    if out.failed {
        return 1;
    }
    0
}

fn parse_fields(spec: &str, name: &str, want: &[usize]) -> Result<Vec<f64>, CliError> {
    let fields: Vec<&str> = spec.split(':').skip(1).collect();
    if !want.contains(&fields.len()) {
        return invalid(format!("{name} expects {want:?} numeric fields, got {spec:?}"));
    }
    fields
        .iter()
        .map(|f| {
            f.parse::<f64>()
                .map_err(|_| CliError::Invalid(format!("not a number in {spec:?}: {f:?}")))
        })
        .collect()
}

fn count_field(x: f64, what: &str) -> Result<u32, CliError> {
    if x >= 0.0 && x.fract() == 0.0 && x <= u32::MAX as f64 {
        Ok(x as u32)
    } else {
        invalid(format!("{what} must be a non-negative integer"))
    }
}

/// `poisson:<mean>`, `thermal:<mean>` or `additive:<mean>:<variance>`.
pub fn parse_noise(spec: &str) -> Result<NoiseSpec, CliError> {
    let kind = spec.split(':').next().unwrap_or_default();
    let noise = match kind {
        "poisson" => NoiseSpec::poissonian(parse_fields(spec, kind, &[1])?[0])?,
        "thermal" => NoiseSpec::thermal(parse_fields(spec, kind, &[1])?[0])?,
        "additive" => {
            let f = parse_fields(spec, kind, &[2])?;
            NoiseSpec::new(f[0], f[1])?
        }
        _ => return invalid(format!("unknown noise {spec:?}")),
    };
    Ok(noise)
}

/// State description for the samplers; see `simulate --help`.
pub fn parse_state(spec: &str) -> Result<QuadState, CliError> {
    let kind = spec.split(':').next().unwrap_or_default();
    let state = match kind {
        "vacuum" => {
            parse_fields(spec, kind, &[0])?;
            QuadState::Gaussian(GaussianSpec::vacuum())
        }
        "coherent" => {
            let f = parse_fields(spec, kind, &[1, 2])?;
            QuadState::Gaussian(GaussianSpec::coherent(f[0], f.get(1).copied().unwrap_or(0.0))?)
        }
        "thermal" => QuadState::Gaussian(GaussianSpec::thermal(parse_fields(spec, kind, &[1])?[0])?),
        "squeezed" => {
            let f = parse_fields(spec, kind, &[1, 2])?;
            QuadState::Gaussian(GaussianSpec::squeezed_vacuum(
                f[0],
                f.get(1).copied().unwrap_or(0.0),
            )?)
        }
        "gaussian" => {
            let f = parse_fields(spec, kind, &[5])?;
            QuadState::Gaussian(GaussianSpec::new(f[0], f[1], f[2], f[3], f[4])?)
        }
        "fock" => {
            let n = count_field(parse_fields(spec, kind, &[1])?[0], "photon number")?;
            QuadState::fock(n as usize)
        }
        "lossy_fock" => {
            let f = parse_fields(spec, kind, &[2])?;
            let n = count_field(f[0], "photon number")?;
            QuadState::NumberDiagonal(apply_loss_pmf(&PhotonPmf::fock(n as usize), f[1])?)
        }
        "pats" => {
            let f = parse_fields(spec, kind, &[2])?;
            let k = count_field(f[0], "added photons")?;
            QuadState::NumberDiagonal(photon_added_thermal_pmf_auto(k, f[1])?)
        }
        _ => return invalid(format!("unknown state {spec:?}")),
    };
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_specs() {
        let n = parse_noise("poisson:0.2").unwrap();
        assert_eq!((n.m_noise, n.s2_noise), (0.2, 0.2));
        let n = parse_noise("thermal:1").unwrap();
        assert_eq!((n.m_noise, n.s2_noise), (1.0, 2.0));
        let n = parse_noise("additive:0.1:0.3").unwrap();
        assert_eq!((n.m_noise, n.s2_noise), (0.1, 0.3));
        assert!(parse_noise("poisson").is_err());
        assert!(parse_noise("poisson:x").is_err());
        assert!(parse_noise("poisson:-1").is_err());
        assert!(parse_noise("shot:1").is_err());
    }

    #[test]
    fn state_specs() {
        assert_eq!(parse_state("vacuum").unwrap().moments().m, 0.0);
        assert!((parse_state("coherent:1").unwrap().moments().s2 - 1.0).abs() < 1e-12);
        assert!((parse_state("lossy_fock:1:0.8").unwrap().moments().s2 - 0.16).abs() < 1e-12);
        assert!((parse_state("fock:3").unwrap().moments().m - 3.0).abs() < 1e-12);
        assert!(parse_state("fock:1.5").is_err());
        assert!(parse_state("vacuum:1").is_err());
        assert!(parse_state("squeezed:-1").is_err());
        assert!(parse_state("cat:2").is_err());
    }
}
