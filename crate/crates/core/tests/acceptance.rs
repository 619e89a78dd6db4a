//! The twelve acceptance criteria, one line each.
//!
//! Run with `cargo test --release -p psitwist --test acceptance -- --nocapture`.

use psitwist::analysis::cases::{case_r4_kahler, case_s3s3, sphere_props, twist_props, DEFAULT_SEED};
use psitwist::analysis::scan::{eigen_scan_s6, adjoint_classification_suite, parse_c_range};
use psitwist::analysis::{CaseReport, Check};

const SEED: u64 = DEFAULT_SEED;
const SAMPLES: u64 = 100;
const EIGEN_SAMPLES: u64 = 100_000;
const CLASSIFICATION_CASES: u64 = 500;

struct Criterion {
    id: usize,
    title: &'static str,
    checks: Vec<Check>,
}

impl Criterion {
    fn pass(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }

    fn line(&self) -> String {
        let mut s = format!("criterion {:>2} {}  {}", self.id, if self.pass() { "PASS" } else { "FAIL" }, self.title);
        for c in self.checks.iter().filter(|c| !c.pass) {
            s.push_str(&format!("\n      {} = {:.8e} (tolerance {:.8e})", c.name, c.value, c.tolerance));
        }
        s
    }
}

/// Checks of `report` whose names satisfy `select`, renamed with the case.
fn pick(report: &CaseReport, select: impl Fn(&str) -> bool) -> Vec<Check> {
    report
        .checks
        .iter()
        .filter(|c| select(&c.name))
        .map(|c| Check {
            name: format!("{}/{}", report.case, c.name),
            ..c.clone()
        })
        .collect()
}

fn named(report: &CaseReport, names: &[&str]) -> Vec<Check> {
    let found = pick(report, |n| names.contains(&n));
    assert_eq!(found.len(), names.len(), "{} lacks one of {names:?}", report.case);
    found
}

fn eigen_checks() -> Vec<Check> {
    let mut out = Vec::new();
    for c in [5.0, -5.0] {
        let row = &eigen_scan_s6(&[c], EIGEN_SAMPLES, SEED)[0];
        assert!(row.valid);
        out.push(Check::at_most(format!("closed_form_c{c}"), row.closed_form_error.unwrap(), 1e-9));
        out.push(Check::at_most(format!("a_min_c{c}"), (row.a_min.unwrap() - (c - 1.5)).abs(), 1e-3));
        out.push(Check::at_most(format!("a_max_c{c}"), (row.a_max.unwrap() - (c + 1.5)).abs(), 1e-3));
    }
    let threshold = 9.0 + 1.5 * 35f64.sqrt();
    let rows = eigen_scan_s6(&parse_c_range("16:20:0.5").unwrap(), 10_000, SEED);
    let first = rows.iter().position(|r| r.bh_flag);
    let bracket = match first {
        Some(k) if k > 0 && rows[k..].iter().all(|r| r.bh_flag) => {
            let (lo, hi) = (rows[k - 1].c, rows[k].c);
            if lo < threshold && threshold <= hi && hi - lo <= 0.5 {
                0.0
            } else {
                1.0
            }
        }
        _ => 1.0,
    };
    out.push(Check::at_most("bh_transition_bracket", bracket, 0.0));
    out
}

#[test]
fn acceptance() {
    let s3s3 = case_s3s3(SEED).unwrap();
    let r4 = case_r4_kahler(2.0, SAMPLES, SEED).unwrap();
    let sphere = sphere_props(SAMPLES, SEED).unwrap();
    let twist = twist_props(SAMPLES, SEED).unwrap();
    let classes = adjoint_classification_suite(CLASSIFICATION_CASES, SEED).unwrap();

    let criteria = vec![
        Criterion {
            id: 1,
            title: "Christoffel symbols of S^3 x S^3 match the table",
            checks: named(
                &s3s3,
                &["christoffel_table", "christoffel_nonzero_count_defect", "christoffel_3_12", "christoffel_6_24"],
            ),
        },
        Criterion {
            id: 2,
            title: "twisted S^3 x S^3 structure is integrable with dc = 0, untwisted is not",
            checks: named(&s3s3, &["nijenhuis_twisted_max", "dc_max", "nijenhuis_untwisted_max"]),
        },
        Criterion {
            id: 3,
            title: "twisted Levi-Civita formula equals Koszul for 20 constant psi",
            checks: named(&twist, &["levi_civita_general_vs_koszul"]),
        },
        Criterion {
            id: 4,
            title: "curvature transformation laws on S^6 and R^4, R^4 twisted flatness",
            checks: [
                named(&twist, &["curvature_endo_law", "curvature_operator_law"]),
                named(&r4, &["curvature_endo_law", "curvature_operator_law", "twisted_flatness"]),
            ]
            .concat(),
        },
        Criterion {
            id: 5,
            title: "round curvature operator is the identity on S^6 and S^4",
            checks: named(&sphere, &["curvature_operator_identity_s6", "curvature_operator_identity_s4"]),
        },
        Criterion {
            id: 6,
            title: "Hessian agrees with the geodesic oracle and the x1 x2 closed form",
            checks: named(&sphere, &["hessian_geodesic_oracle", "hessian_x1x2_closed_form"]),
        },
        Criterion {
            id: 7,
            title: "Codazzi suite on S^6 for x1 x2, x1, x1^2 x3",
            checks: pick(&sphere, |n| {
                ["codazzi_tensor_", "psi_symmetric_", "trace_identity_", "d_eta_a_"]
                    .iter()
                    .any(|p| n.starts_with(p))
            }),
        },
        Criterion {
            id: 8,
            title: "eigenvalue scan: closed form, extremes c -+ 3/2 at 1e5 samples, pinching threshold",
            checks: eigen_checks(),
        },
        Criterion {
            id: 9,
            title: "nonintegrability certificates within 1e4 samples, both criteria above threshold",
            checks: pick(&twist, |n| n.starts_with("certificate_")),
        },
        Criterion {
            id: 10,
            title: "Nijenhuis twist identity on Lie frames and on S^6",
            checks: pick(&twist, |n| n.starts_with("nijenhuis_twist_identity_")),
        },
        Criterion {
            id: 11,
            title: "Nijenhuis nondegeneracy on S^6 and (nabla_X J)(JY) = -N_J(X, Y)/4",
            checks: named(
                &sphere,
                &[
                    "kernel_check_north_pole",
                    "kernel_check_north_pole_failed",
                    "kernel_check_random_failed",
                    "nijenhuis_nabla_j_identity",
                ],
            ),
        },
        Criterion {
            id: 12,
            title: "self/skew-adjoint classification of 500 random maps",
            checks: vec![
                Check::at_most("classification/untested", (CLASSIFICATION_CASES - classes.tested) as f64, 0.0),
                Check::at_most("classification/misclassified", classes.misclassified as f64, 0.0),
                Check::at_most("classification/relative_residual", classes.max_relative_residual, 1e-8),
            ],
        },
    ];

    // the certificate corpus has five entries, two checks each
    assert_eq!(criteria[8].checks.len(), 10);
    assert_eq!(criteria[6].checks.len(), 12);
    assert_eq!(criteria[9].checks.len(), 4);

    for c in &criteria {
        println!("{}", c.line());
    }
    let failed: Vec<usize> = criteria.iter().filter(|c| !c.pass()).map(|c| c.id).collect();
    println!("{} of {} criteria passed", criteria.len() - failed.len(), criteria.len());
    assert!(failed.is_empty(), "failed criteria {failed:?}");
}
