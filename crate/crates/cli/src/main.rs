//! `psitwist` command-line front end.
//!
//! Exit codes: 0 success or certificate, 1 failed checks or inconclusive
//! search, 2 usage or input error.

mod config;

use std::fmt::Write as _;
use std::process::ExitCode;

use clap::Parser;
use psitwist::analysis::cases::run_suite;
use psitwist::analysis::report::{reports_to_csv, reports_to_json};
use psitwist::analysis::scan::eigen_scan_csv;
use psitwist::analysis::{certificate_search, eigen_scan, CertificateOutcome, EigenScanResult};

use config::{CertifyConfig, Cli, Command, Format, Output, ScanConfig, VerifyConfig};

const SUCCESS: u8 = 0;
const NEGATIVE: u8 = 1;
const USAGE: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // clap already uses 2 for usage errors and 0 for --help
        Err(e) => e.exit(),
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(USAGE)
        }
    }
}

fn run(command: Command) -> Result<u8, String> {
    match command {
        Command::Verify(flags) => verify(VerifyConfig::from_flags(flags.resolve()?)?),
        Command::Certify(flags) => certify(CertifyConfig::from_flags(flags.resolve()?)?),
        Command::Scan(flags) => scan(ScanConfig::from_flags(flags.resolve()?)?),
    }
}

fn write_out(output: &Output, body: &str) -> Result<(), String> {
    if let Some(path) = &output.path {
        std::fs::write(path, body).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }
    Ok(())
}

fn verify(cfg: VerifyConfig) -> Result<u8, String> {
    let reports = run_suite(cfg.suite, cfg.samples, cfg.seed).map_err(|e| e.to_string())?;
    let mut all_pass = true;
    for r in &reports {
        print!("{}", r.table());
        all_pass &= r.passed();
    }
    let failed: usize = reports.iter().map(|r| r.failures().count()).sum();
    let total: usize = reports.iter().map(|r| r.checks.len()).sum();
    println!("{} of {total} checks passed", total - failed);
    let body = match cfg.output.format {
        Format::Json => reports_to_json(&reports) + "\n",
        Format::Csv => reports_to_csv(&reports),
    };
    write_out(&cfg.output, &body)?;
    Ok(if all_pass { SUCCESS } else { NEGATIVE })
}

fn outcome_csv(o: &CertificateOutcome) -> String {
    let mut s = String::from("outcome,f,c,seed,sample_index,residual,sampled_residual,integrability_residual\n");
    match o {
        CertificateOutcome::Certificate(c) => {
            let _ = writeln!(
                s,
                "certificate,\"{}\",{:.16e},{},{},{:.16e},{:.16e},{:.16e}",
                c.f, c.c, c.seed, c.sample_index, c.residual, c.sampled_residual, c.integrability_residual
            );
        }
        CertificateOutcome::Inconclusive { samples, best_residual } => {
            let _ = writeln!(s, "inconclusive,,,,{samples},{best_residual:.16e},,");
        }
    }
    s
}

fn certify(cfg: CertifyConfig) -> Result<u8, String> {
    let outcome = certificate_search(&cfg.f, cfg.c, cfg.samples, cfg.seed, cfg.tol).map_err(|e| e.to_string())?;
    let body = match cfg.output.format {
        Format::Json => serde_json::to_string_pretty(&outcome).expect("outcome serializes") + "\n",
        Format::Csv => outcome_csv(&outcome),
    };
    print!("{body}");
    write_out(&cfg.output, &body)?;
    Ok(match outcome {
        CertificateOutcome::Certificate(_) => SUCCESS,
        CertificateOutcome::Inconclusive { .. } => NEGATIVE,
    })
}

fn scan(cfg: ScanConfig) -> Result<u8, String> {
    let rows: Vec<EigenScanResult> = eigen_scan(&cfg.f, &cfg.c_values, cfg.samples, cfg.seed);
    let body = match cfg.output.format {
        Format::Json => serde_json::to_string_pretty(&rows).expect("rows serialize") + "\n",
        Format::Csv => eigen_scan_csv(&rows),
    };
    print!("{body}");
    write_out(&cfg.output, &body)?;
    Ok(SUCCESS)
}
