//! Run configuration: command-line flags layered over an optional JSON file.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use psitwist::analysis::cases::{Suite, CERTIFICATE_BUDGET, DEFAULT_SAMPLES, DEFAULT_SEED};
use psitwist::analysis::parse_c_range;
use psitwist::expr::ScalarField;
use psitwist::twist::CERTIFICATE_TOL;

pub const DEFAULT_SCAN_SAMPLES: u64 = 10_000;
/// Ambient dimension of `S^6`.
const AMBIENT: usize = 7;

#[derive(Debug, Parser)]
#[command(name = "psitwist", version, about = "Twisted almost complex structures: checks, certificates and scans")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a property/case suite and report every check.
    Verify(Flags),
    /// Search for a witness that `J^psi` is not integrable for `A_{f,c}` on `S^6`.
    Certify(Flags),
    /// Extreme eigenvalues of the curvature operator over a range of `c`.
    Scan(Flags),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Flags shared by all subcommands. Unused ones are rejected per command.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Flags {
    /// Suite name: all, s3s3, r4, sphere-props, twist-props.
    #[arg(long)]
    pub suite: Option<String>,
    /// Scalar field in x1..x7, e.g. "x1*x2".
    #[arg(long = "f")]
    pub f: Option<String>,
    #[arg(long = "c", allow_negative_numbers = true)]
    pub c: Option<f64>,
    /// Range `A:B:STEP`.
    #[arg(long = "c-range", allow_hyphen_values = true)]
    pub c_range: Option<String>,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Certificate threshold on the nearly Kahler criterion.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// JSON file with any of the fields above (snake_case keys).
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl Flags {
    /// Fills every unset field from `other`.
    fn or(self, other: Flags) -> Flags {
        Flags {
            suite: self.suite.or(other.suite),
            f: self.f.or(other.f),
            c: self.c.or(other.c),
            c_range: self.c_range.or(other.c_range),
            samples: self.samples.or(other.samples),
            seed: self.seed.or(other.seed),
            tol: self.tol.or(other.tol),
            out: self.out.or(other.out),
            format: self.format.or(other.format),
            config: self.config,
        }
    }

    /// Flags override the config file, which overrides defaults.
    pub fn resolve(self) -> Result<Flags, String> {
        match &self.config {
            Some(path) => {
                let file = read_config(path)?;
                Ok(self.or(file))
            }
            None => Ok(self),
        }
    }
}

fn read_config(path: &Path) -> Result<Flags, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub path: Option<PathBuf>,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub suite: Suite,
    pub samples: u64,
    pub seed: u64,
    pub output: Output,
}

#[derive(Debug, Clone)]
pub struct CertifyConfig {
    pub f: ScalarField,
    pub c: f64,
    pub samples: u64,
    pub seed: u64,
    pub tol: f64,
    pub output: Output,
}

#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub f: ScalarField,
    pub c_values: Vec<f64>,
    pub samples: u64,
    pub seed: u64,
    pub output: Output,
}

fn reject(command: &str, name: &str, present: bool) -> Result<(), String> {
    if present {
        Err(format!("{command} does not take --{name}"))
    } else {
        Ok(())
    }
}

fn positive_samples(n: Option<u64>, default: u64) -> Result<u64, String> {
    match n.unwrap_or(default) {
        0 => Err("--samples must be positive".into()),
        n => Ok(n),
    }
}

fn field(src: Option<&str>) -> Result<ScalarField, String> {
    let src = src.ok_or("missing --f")?;
    let f = ScalarField::parse(src).map_err(|e| {
        let caret = " ".repeat(e.column.saturating_sub(1));
        format!("{e}\n  {src}\n  {caret}^")
    })?;
    if f.arity() > AMBIENT {
        return Err(format!("{src:?} uses x{} but S^6 has coordinates x1..x{AMBIENT}", f.arity()));
    }
    Ok(f)
}

impl VerifyConfig {
    pub fn from_flags(flags: Flags) -> Result<Self, String> {
        reject("verify", "f", flags.f.is_some())?;
        reject("verify", "c", flags.c.is_some())?;
        reject("verify", "c-range", flags.c_range.is_some())?;
        reject("verify", "tol", flags.tol.is_some())?;
        let suite = flags.suite.as_deref().unwrap_or("all").parse::<Suite>().map_err(|e| e.to_string())?;
        Ok(VerifyConfig {
            suite,
            samples: positive_samples(flags.samples, DEFAULT_SAMPLES)?,
            seed: flags.seed.unwrap_or(DEFAULT_SEED),
            output: Output {
                path: flags.out,
                format: flags.format.unwrap_or(Format::Json),
            },
        })
    }
}

impl CertifyConfig {
    pub fn from_flags(flags: Flags) -> Result<Self, String> {
        reject("certify", "suite", flags.suite.is_some())?;
        reject("certify", "c-range", flags.c_range.is_some())?;
        let f = field(flags.f.as_deref())?;
        let c = flags.c.ok_or("missing --c")?;
        if !c.is_finite() {
            return Err(format!("--c must be finite, got {c}"));
        }
        let tol = flags.tol.unwrap_or(CERTIFICATE_TOL);
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(format!("--tol must be positive, got {tol}"));
        }
        Ok(CertifyConfig {
            f,
            c,
            samples: positive_samples(flags.samples, CERTIFICATE_BUDGET)?,
            seed: flags.seed.unwrap_or(DEFAULT_SEED),
            tol,
            output: Output {
                path: flags.out,
                format: flags.format.unwrap_or(Format::Json),
            },
        })
    }
}

impl ScanConfig {
    pub fn from_flags(flags: Flags) -> Result<Self, String> {
        reject("scan", "suite", flags.suite.is_some())?;
        reject("scan", "tol", flags.tol.is_some())?;
        let f = field(flags.f.as_deref().or(Some("x1*x2")))?;
        let c_values = match (flags.c_range.as_deref(), flags.c) {
            (Some(_), Some(_)) => return Err("give either --c or --c-range, not both".into()),
            (Some(r), None) => parse_c_range(r).map_err(|e| e.to_string())?,
            (None, Some(c)) if c.is_finite() => vec![c],
            (None, Some(c)) => return Err(format!("--c must be finite, got {c}")),
            (None, None) => return Err("missing --c-range".into()),
        };
        Ok(ScanConfig {
            f,
            c_values,
            samples: positive_samples(flags.samples, DEFAULT_SCAN_SAMPLES)?,
            seed: flags.seed.unwrap_or(DEFAULT_SEED),
            output: Output {
                path: flags.out,
                format: flags.format.unwrap_or(Format::Csv),
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config() {
        let file = Flags {
            suite: Some("r4".into()),
            seed: Some(1),
            samples: Some(7),
            ..Flags::default()
        };
        let cli = Flags {
            seed: Some(9),
            ..Flags::default()
        };
        let v = VerifyConfig::from_flags(cli.or(file)).unwrap();
        assert_eq!(v.suite, Suite::R4);
        assert_eq!(v.seed, 9);
        assert_eq!(v.samples, 7);
    }

    #[test]
    fn defaults_apply() {
        let v = VerifyConfig::from_flags(Flags::default()).unwrap();
        assert_eq!(v.suite, Suite::All);
        assert_eq!(v.seed, DEFAULT_SEED);
        assert_eq!(v.output.format, Format::Json);
    }

    #[test]
    fn config_rejects_unknown_keys() {
        assert!(serde_json::from_str::<Flags>(r#"{"sead": 3}"#).is_err());
        let f: Flags = serde_json::from_str(r#"{"f": "x1", "c_range": "2:3:1", "format": "csv"}"#).unwrap();
        assert_eq!(f.format, Some(Format::Csv));
    }

    #[test]
    fn parse_error_points_at_column() {
        let e = field(Some("x1*")).unwrap_err();
        assert!(e.contains("column 4"), "{e}");
        assert!(e.ends_with("   ^"), "{e}");
    }

    #[test]
    fn certify_needs_c() {
        let flags = Flags {
            f: Some("x1".into()),
            ..Flags::default()
        };
        assert!(CertifyConfig::from_flags(flags).is_err());
    }
}
