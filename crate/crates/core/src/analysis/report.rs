//! Machine-readable case reports.
//!
//! JSON numbers carry 17 significant digits; non-finite values become `null`.
//! CSV rows are `case,check,residual,tolerance,pass`.

use std::fmt::Write as _;

use nalgebra::DVector;
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::sampling;

pub(crate) fn sig17<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        RawValue::from_string(format!("{x:.16e}"))
            .map_err(serde::ser::Error::custom)?
            .serialize(s)
    } else {
        s.serialize_none()
    }
}

pub(crate) fn sig17_vec<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&Sig17(*x))?;
    }
    seq.end()
}

pub(crate) fn sig17_opt_vec<S: Serializer>(v: &Option<Vec<f64>>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => sig17_vec(v, s),
        None => s.serialize_none(),
    }
}

pub(crate) fn sig17_opt<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(x) => sig17(x, s),
        None => s.serialize_none(),
    }
}

/// An `f64` that serializes with [`sig17`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sig17(pub f64);

impl Serialize for Sig17 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        sig17(&self.0, s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// Pass iff `value <= tolerance`.
    AtMost,
    /// Pass iff `value > tolerance`.
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    #[serde(serialize_with = "sig17")]
    pub value: f64,
    #[serde(serialize_with = "sig17")]
    pub tolerance: f64,
    pub comparison: Comparison,
    pub pass: bool,
    #[serde(serialize_with = "sig17_opt_vec", skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<f64>>,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            value,
            tolerance,
            comparison: Comparison::AtMost,
            pass: value <= tolerance,
            witness: None,
        }
    }

    pub fn above(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            value,
            tolerance: threshold,
            comparison: Comparison::Above,
            pass: value > threshold,
            witness: None,
        }
    }

    /// Attaches a witness point, kept only when the check fails.
    pub fn with_witness(mut self, w: &DVector<f64>) -> Self {
        if !self.pass {
            self.witness = Some(w.iter().copied().collect());
        }
        self
    }

    pub fn verdict(&self) -> &'static str {
        if self.pass {
            "pass"
        } else {
            "FAIL"
        }
    }
}

/// Maximum of `value(i)` over `0..samples` as an `AtMost` check, with the
/// sample point of the maximum as witness on failure.
pub fn sampled_max<P, V>(name: &str, tolerance: f64, samples: u64, point: P, value: V) -> Check
where
    P: Fn(u64) -> DVector<f64>,
    V: Fn(u64) -> f64 + Sync,
{
    // NaN must not hide behind the reduction
    let m = sampling::par_max(samples, |i| {
        let v = value(i);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    });
    match m {
        Some(e) => Check::at_most(name, e.value, tolerance).with_witness(&point(e.index)),
        None => Check::at_most(name, 0.0, tolerance),
    }
}

/// Minimum of `value(i)` as an `Above` check.
pub fn sampled_min_above<P, V>(name: &str, threshold: f64, samples: u64, point: P, value: V) -> Check
where
    P: Fn(u64) -> DVector<f64>,
    V: Fn(u64) -> f64 + Sync,
{
    let m = sampling::par_min(samples, |i| {
        let v = value(i);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    });
    match m {
        Some(e) => Check::above(name, e.value, threshold).with_witness(&point(e.index)),
        None => Check::above(name, f64::NAN, threshold),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseReport {
    pub case: String,
    pub seed: u64,
    pub samples: u64,
    pub checks: Vec<Check>,
}

impl CaseReport {
    pub fn new(case: impl Into<String>, seed: u64, samples: u64) -> Self {
        CaseReport {
            case: case.into(),
            seed,
            samples,
            checks: Vec::new(),
        }
    }

    pub fn push(&mut self, check: Check) {
        debug_assert!(
            self.checks.iter().all(|c| c.name != check.name),
            "duplicate check {}",
            check.name
        );
        self.checks.push(check);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn csv_rows(&self, out: &mut String) {
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{},{},{:.16e},{:.16e},{}",
                self.case, c.name, c.value, c.tolerance, c.pass
            );
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        self.csv_rows(&mut s);
        s
    }

    /// Human-readable table with 9 significant digits.
    pub fn table(&self) -> String {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(5).max(5);
        let mut s = format!("== {} (seed {}, samples {})\n", self.case, self.seed, self.samples);
        for c in &self.checks {
            let op = match c.comparison {
                Comparison::AtMost => "<=",
                Comparison::Above => "> ",
            };
            let _ = writeln!(
                s,
                "  {:<width$}  {:>16.8e} {} {:<15.8e}  {}",
                c.name,
                c.value,
                op,
                c.tolerance,
                c.verdict()
            );
        }
        s
    }
}

pub const CSV_HEADER: &str = "case,check,residual,tolerance,pass\n";

/// Serializes several reports as one JSON array.
pub fn reports_to_json(reports: &[CaseReport]) -> String {
    serde_json::to_string_pretty(reports).expect("reports serialize")
}

pub fn reports_to_csv(reports: &[CaseReport]) -> String {
    let mut s = String::from(CSV_HEADER);
    for r in reports {
        r.csv_rows(&mut s);
    }
    s
}
