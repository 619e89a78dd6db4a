//! The case studies and property suites behind `verify`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use super::report::{sampled_max, CaseReport, Check};
use super::scan::{
    anticommutation_scan, eigen_scan_s6, adjoint_class_failures_on_s6, adjoint_classification_suite, max_self_adjoint_defect,
    nonintegrability_certificate, skew_adjoint_scan,
};
use super::AnalysisError;
use crate::chart::chart_curvature;
use crate::expr::{DerivativeTable, ScalarField};
use crate::field::{ConstantTwist, FieldJet, Geometry, TwistField};
use crate::flat::{complex_scalar_twist, standard_j, Flat, FlatCodazziMap};
use crate::lie::{invariant_d, nijenhuis, s3s3, AlternatingForm, LieGeometry};
use crate::multilinear::{Endo, TwoForm};
use crate::sampling::{gaussian_vector, rng_for};
use crate::sphere::{
    g2_membership, geodesic_hessian, hessian_g, nijenhuis_kernel_check, CodazziMap, Sphere, SpherePoint,
    TangentVector,
};
use crate::twist::{CodazziTwist, ComplexVector, TwistedMatrices, Twisted, CERTIFICATE_TOL, CODAZZI_TOL, INTEGRABLE_TOL};

pub const DEFAULT_SAMPLES: u64 = 100;
pub const DEFAULT_SEED: u64 = 42;
/// `c` used for the flat example when none is given.
pub const DEFAULT_R4_C: f64 = 2.0;

/// `(f, c)` pairs of the Codazzi corpus on `S^6`.
pub const S6_CORPUS: [(&str, f64); 3] = [("x1*x2", 5.0), ("x1", 3.0), ("x1^2*x3", 10.0)];
/// `(f, c)` pairs that must yield nonintegrability certificates.
pub const CERTIFICATE_CORPUS: [(&str, f64); 5] = [("x1*x2", 5.0), ("x1*x2", -5.0), ("x1", 3.0), ("x1^2*x3", 10.0), ("0", 1.0)];
pub const CERTIFICATE_BUDGET: u64 = 10_000;

/// Polynomials for the Hessian oracle.
pub const HESSIAN_CORPUS: [&str; 6] = ["x1*x2", "x1", "x1^2*x3", "x2*x3^2 + x1", "x1*x2*x3 - x4^2", "3*x5^3 - x6*x7 + 2"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    All,
    S3S3,
    R4,
    SphereProps,
    TwistProps,
}

impl Suite {
    pub const NAMES: [&'static str; 5] = ["all", "s3s3", "r4", "sphere-props", "twist-props"];
}

impl FromStr for Suite {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(Suite::All),
            "s3s3" => Ok(Suite::S3S3),
            "r4" => Ok(Suite::R4),
            "sphere-props" => Ok(Suite::SphereProps),
            "twist-props" => Ok(Suite::TwistProps),
            _ => Err(AnalysisError::InvalidParameter(format!(
                "unknown suite {s:?} (expected one of {})",
                Suite::NAMES.join(", ")
            ))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Suite::All => "all",
            Suite::S3S3 => "s3s3",
            Suite::R4 => "r4",
            Suite::SphereProps => "sphere-props",
            Suite::TwistProps => "twist-props",
        };
        f.write_str(s)
    }
}

pub fn run_suite(suite: Suite, samples: u64, seed: u64) -> Result<Vec<CaseReport>, AnalysisError> {
    if samples == 0 {
        return Err(AnalysisError::InvalidParameter("sample count must be positive".into()));
    }
    Ok(match suite {
        Suite::All => vec![
            case_s3s3(seed)?,
            case_r4_kahler(DEFAULT_R4_C, samples, seed)?,
            sphere_props(samples, seed)?,
            twist_props(samples, seed)?,
        ],
        Suite::S3S3 => vec![case_s3s3(seed)?],
        Suite::R4 => vec![case_r4_kahler(DEFAULT_R4_C, samples, seed)?],
        Suite::SphereProps => vec![sphere_props(samples, seed)?],
        Suite::TwistProps => vec![twist_props(samples, seed)?],
    })
}

fn scalar(src: &str) -> ScalarField {
    ScalarField::parse(src).expect("built-in expression parses")
}

fn basis(n: usize, i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(n);
    v[i] = 1.0;
    v
}

fn random_matrix(n: usize, rng: &mut impl rand::Rng) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| gaussian_vector(rng, 1)[0])
}

/// Random rotation of `R^n` from the QR factor of a Gaussian matrix.
pub fn random_rotation(n: usize, rng: &mut impl rand::Rng) -> DMatrix<f64> {
    let mut q = random_matrix(n, rng).qr().q();
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

/// Random invertible `psi = 1.5 id + 0.4 G` with Gaussian `G`.
pub fn random_constant_psi(n: usize, seed: u64, index: u64) -> DMatrix<f64> {
    let mut rng = rng_for(seed, index);
    DMatrix::identity(n, n) * 1.5 + random_matrix(n, &mut rng) * 0.4
}

/// Unit random tangent vectors at `p`.
fn unit_tangents<G: Geometry>(g: &G, p: &DVector<f64>, seed: u64, index: u64, k: usize) -> Vec<DVector<f64>> {
    let mut rng = rng_for(seed, index);
    (0..k).map(|_| g.random_tangent(p, &mut rng).normalize()).collect()
}

/// The `S^3 x S^3` example: the Christoffel table, the nearly Kahler
/// structure, the integrable SKT twist and the automorphism contrast.
pub fn case_s3s3(seed: u64) -> Result<CaseReport, AnalysisError> {
    let st = s3s3::structure();
    let frame = st.frame();
    let conn = st.connection();
    let n = 6;
    let mut r = CaseReport::new("s3s3", seed, 1);

    let mut expected = vec![0.0; n * n * n];
    for &(k, i, j, v) in s3s3::CHRISTOFFEL.iter() {
        expected[((k - 1) * n + (i - 1)) * n + (j - 1)] = v;
    }
    let mut deviation: f64 = 0.0;
    let mut nonzero = 0;
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let c = conn.coefficient(k, i, j);
                deviation = deviation.max((c - expected[(k * n + i) * n + j]).abs());
                if c.abs() > 1e-12 {
                    nonzero += 1;
                }
            }
        }
    }
    r.push(Check::at_most("christoffel_table", deviation, 1e-10));
    r.push(Check::at_most("christoffel_nonzero_count_defect", (nonzero as f64 - 36.0).abs(), 0.0));
    r.push(Check::at_most("christoffel_3_12", (conn.coefficient(2, 0, 1) - 0.5).abs(), 1e-10));
    r.push(Check::at_most("christoffel_6_24", (conn.coefficient(5, 1, 3) + 1.0 / 6.0).abs(), 1e-10));
    r.push(Check::at_most("levi_civita_metric_defect", conn.metric_defect(st.metric()), 1e-12));
    r.push(Check::at_most("levi_civita_torsion_defect", conn.torsion_defect(frame), 1e-12));
    r.push(Check::at_most("nearly_kahler_defect", st.nearly_kahler_defect(), 1e-10));

    // (1/3) d omega = nabla omega on the untwisted structure
    let g = st.metric().matrix();
    let omega = AlternatingForm::from_two_form(st.omega());
    let d_omega = invariant_d(conn, &omega)?;
    let mut nk1: f64 = 0.0;
    for i in 0..n {
        let nj = st.nabla_j(i);
        for j in 0..n {
            for k in 0..n {
                let nabla = (&nj * basis(n, j)).dot(&(g * basis(n, k)));
                nk1 = nk1.max((d_omega.component(&[i, j, k]) / 3.0 - nabla).abs());
            }
        }
    }
    r.push(Check::at_most("nearly_kahler_d_omega_identity", nk1, 1e-10));

    let nj = nijenhuis(frame, st.complex_structure())?;
    r.push(Check::above("nijenhuis_untwisted_max", nj.max_norm(), 0.1));

    let psi = s3s3::psi();
    let psi_inv = psi.inverse()?;
    let twisted_j = psi.matrix() * st.complex_structure().matrix() * psi_inv.matrix();
    let twisted_endo = Endo::new(twisted_j.clone())?;
    let nt = nijenhuis(frame, &twisted_endo)?;
    r.push(Check::at_most("nijenhuis_twisted_max", nt.max_norm(), INTEGRABLE_TOL));

    let base = TwistedMatrices::new(g.clone(), st.complex_structure().matrix().clone());
    let tw = base
        .twist(psi_inv.matrix())
        .ok_or_else(|| AnalysisError::InvalidParameter("psi is singular".into()))?;
    r.push(Check::at_most("twisted_structure_defect", tw.defect(&DMatrix::identity(n, n)), 1e-10));

    let omega_psi = AlternatingForm::from_two_form(&TwoForm::new(tw.omega.clone())?);
    let d_omega_psi = invariant_d(conn, &omega_psi)?;
    r.push(Check::above("d_omega_twisted_max", d_omega_psi.max_abs(), 1e-3));
    let frame_vectors: Vec<DVector<f64>> = (0..n).map(|a| &twisted_j * basis(n, a)).collect();
    let c = AlternatingForm::from_fn(n, 3, |idx| {
        d_omega_psi.eval(&[
            frame_vectors[idx[0]].clone(),
            frame_vectors[idx[1]].clone(),
            frame_vectors[idx[2]].clone(),
        ])
    });
    let dc = invariant_d(conn, &c)?;
    r.push(Check::at_most("dc_max", dc.max_abs(), 1e-9));

    // conjugation by a Lie algebra automorphism diag(R, R)
    let mut rng = rng_for(seed, 0);
    let rot = random_rotation(3, &mut rng);
    let mut phi = DMatrix::zeros(n, n);
    phi.view_mut((0, 0), (3, 3)).copy_from(&rot);
    phi.view_mut((3, 3), (3, 3)).copy_from(&rot);
    let phi_inv = phi.transpose();
    let mut bracket_defect: f64 = 0.0;
    let mut equivariance: f64 = 0.0;
    let conj_j = Endo::new(&phi * st.complex_structure().matrix() * &phi_inv)?;
    let conj_table = nijenhuis(frame, &conj_j)?;
    for a in 0..n {
        for b in 0..n {
            let (x, y) = (basis(n, a), basis(n, b));
            let lhs = &phi * frame.bracket(&x, &y);
            bracket_defect = bracket_defect.max((lhs - frame.bracket(&(&phi * &x), &(&phi * &y))).amax());
            let moved = conj_table.eval(&(&phi * &x), &(&phi * &y));
            equivariance = equivariance.max((moved - &phi * nj.get(a, b)).amax());
        }
    }
    r.push(Check::at_most("automorphism_bracket_defect", bracket_defect, 1e-12));
    r.push(Check::at_most("automorphism_nijenhuis_equivariance", equivariance, 1e-10));
    let conj_twisted = nijenhuis(frame, &Endo::new(&phi * &twisted_j * &phi_inv)?)?;
    r.push(Check::at_most("automorphism_twisted_nijenhuis_max", conj_twisted.max_norm(), INTEGRABLE_TOL));
    // a generic linear map is not an automorphism and does not keep N = 0
    let l = DMatrix::identity(n, n) + random_matrix(n, &mut rng) * 0.3;
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| AnalysisError::InvalidParameter("contrast map is singular".into()))?;
    let generic = nijenhuis(frame, &Endo::new(&l * &twisted_j * &l_inv)?)?;
    r.push(Check::above("generic_conjugation_nijenhuis_max", generic.max_norm(), 1e-3));
    Ok(r)
}

/// Closed forms of the flat example with `alpha = c - sin x1 sin x3`,
/// `beta = cos x1 cos x3`: `(psi^{-1}, J^psi, g^psi, omega^psi)`.
pub fn r4_closed_forms(c: f64, p: &DVector<f64>) -> [DMatrix<f64>; 4] {
    let a = c - p[0].sin() * p[2].sin();
    let b = p[0].cos() * p[2].cos();
    let d = a * a - b * b;
    let psi_inv = DMatrix::from_row_slice(4, 4, &[a, 0.0, b, 0.0, 0.0, c, 0.0, 0.0, b, 0.0, a, 0.0, 0.0, 0.0, 0.0, c]);
    #[rustfmt::skip]
    let j = DMatrix::from_row_slice(4, 4, &[
        0.0, -c * a / d, 0.0, c * b / d,
        a / c, 0.0, b / c, 0.0,
        0.0, c * b / d, 0.0, -c * a / d,
        b / c, 0.0, a / c, 0.0,
    ]);
    let (s, t) = (a * a + b * b, 2.0 * a * b);
    let g = DMatrix::from_row_slice(4, 4, &[s, 0.0, t, 0.0, 0.0, c * c, 0.0, 0.0, t, 0.0, s, 0.0, 0.0, 0.0, 0.0, c * c]);
    // c a (dx1^dx2 + dx3^dx4) + c b (dx1^dx4 - dx2^dx3)
    let mut w = DMatrix::zeros(4, 4);
    for (i, j, v) in [(0, 1, c * a), (2, 3, c * a), (0, 3, c * b), (1, 2, -c * b)] {
        w[(i, j)] = v;
        w[(j, i)] = -v;
    }
    [psi_inv, j, g, w]
}

/// The flat Kahler example on `R^4` with `f = sin x1 sin x3`.
pub fn case_r4_kahler(c: f64, samples: u64, seed: u64) -> Result<CaseReport, AnalysisError> {
    if !(c > 1.0) {
        return Err(AnalysisError::InvalidParameter(format!("the R^4 example needs c > 1, got {c}")));
    }
    let f = scalar("sin(x1)*sin(x3)");
    let map = FlatCodazziMap::new(&f, c, 4)?;
    let flat = Flat::kahler(4);
    let twist = Twisted::new(&flat, &map);
    let ct = twist.verify_codazzi(samples, seed)?;
    let mut r = CaseReport::new(format!("r4_kahler_c{c}"), seed, samples);
    r.push(Check::at_most("codazzi_sampled", ct.evidence().1, CODAZZI_TOL));

    let point = |i: u64| flat.sample_point(seed, i);
    let closed = |i: u64, k: usize| -> f64 {
        let p = point(i);
        let forms = r4_closed_forms(c, &p);
        let m = match twist.matrices(&p) {
            Ok(m) => m,
            Err(_) => return f64::INFINITY,
        };
        let computed = [twist.psi_inv(&p).value, m.j, m.g, m.omega];
        (&computed[k] - &forms[k]).amax()
    };
    for (k, name) in ["closed_form_psi_inv", "closed_form_j_psi", "closed_form_g_psi", "closed_form_omega_psi"]
        .iter()
        .enumerate()
    {
        r.push(sampled_max(name, 1e-12, samples, point, |i| closed(i, k)));
    }
    let h = std::f64::consts::FRAC_PI_2;
    let corner = DVector::from_vec(vec![h, 0.0, h, 0.0]);
    r.push(Check::at_most(
        "psi_inv_11_at_half_pi",
        (twist.psi_inv(&corner).value[(0, 0)] - (c - 1.0)).abs(),
        1e-14,
    ));

    let vectors = |i: u64| unit_tangents(&flat, &point(i), seed ^ 0x44, i, 3);
    r.push(sampled_max("d_omega_twisted", CODAZZI_TOL, samples, point, |i| {
        let v = vectors(i);
        ct.d_omega_direct(&point(i), &v[0], &v[1], &v[2]).map_or(f64::INFINITY, f64::abs)
    }));
    r.push(sampled_max("d_omega_formula_residual", CODAZZI_TOL, samples, point, |i| {
        let (p, v) = (point(i), vectors(i));
        match (ct.d_omega(&p, &v[0], &v[1], &v[2]), ct.d_omega_direct(&p, &v[0], &v[1], &v[2])) {
            (Ok(a), Ok(b)) => (a - b).abs(),
            _ => f64::INFINITY,
        }
    }));
    r.push(sampled_max("nabla_twisted_j", CODAZZI_TOL, samples, point, |i| {
        ct.nabla_twisted_j(&point(i), &vectors(i)[0]).map_or(f64::INFINITY, |m| m.amax())
    }));
    r.push(sampled_max("twisted_flatness", 1e-8, samples, point, |i| {
        ct.chart_curvature(&point(i), true).map_or(f64::INFINITY, |c| c.operator().amax())
    }));
    push_curvature_laws(&mut r, &ct, samples, point);
    r.push(sampled_max("lc_torsion_defect", CODAZZI_TOL, samples, point, |i| {
        let v = vectors(i);
        ct.lc_torsion_defect(&point(i), &v[0], &v[1]).unwrap_or(f64::INFINITY)
    }));
    r.push(sampled_max("lc_metric_defect", CODAZZI_TOL, samples, point, |i| {
        let v = vectors(i);
        ct.lc_metric_defect(&point(i), &v[0], &v[1], &v[2]).unwrap_or(f64::INFINITY)
    }));
    r.push(sampled_max("nijenhuis_twisted_max", INTEGRABLE_TOL, samples, point, |i| {
        ct.nijenhuis_twisted_max(&point(i)).unwrap_or(f64::INFINITY)
    }));
    for (name, holomorphic) in [("nk_10_identity", true), ("nk_01_identity", false)] {
        r.push(sampled_max(name, INTEGRABLE_TOL, samples, point, |i| {
            let p = point(i);
            let Ok(im) = ct.complex_structure(&p).map(|j| j.value) else {
                return f64::INFINITY;
            };
            let cx: Vec<ComplexVector> = vectors(i)
                .iter()
                .map(|w| {
                    if holomorphic {
                        ComplexVector::type_10(&im, w)
                    } else {
                        ComplexVector::type_01(&im, w)
                    }
                })
                .collect();
            ct.nk_10_identity(&p, &cx[0], &cx[1], &cx[2]).map_or(f64::INFINITY, |z| z.norm())
        }));
    }
    r.push(sampled_max("eta_antisymmetric_part", 1e-12, samples, point, |i| twist.eta_a(&point(i)).value.amax()));
    r.push(sampled_max("d_eta_a", CODAZZI_TOL, samples, point, |i| {
        let v = vectors(i);
        twist.d_eta_a(&point(i), &v[0], &v[1], &v[2]).abs()
    }));
    Ok(r)
}

fn push_curvature_laws<G, T, P>(r: &mut CaseReport, ct: &CodazziTwist<'_, G, T>, samples: u64, point: P)
where
    G: Geometry + ?Sized,
    T: TwistField + ?Sized,
    P: Fn(u64) -> DVector<f64> + Sync,
{
    r.push(sampled_max("curvature_endo_law", 1e-7, samples, &point, |i| {
        ct.curvature_endo_residual(&point(i)).unwrap_or(f64::INFINITY)
    }));
    r.push(sampled_max("curvature_operator_law", 1e-7, samples, &point, |i| {
        ct.curvature_operators(&point(i))
            .map_or(f64::INFINITY, |(a, b)| (a - b).amax())
    }));
    r.push(sampled_max("curvature_operator_self_adjoint", 1e-9, samples, &point, |i| {
        ct.curvature_op_self_adjoint_defect(&point(i)).unwrap_or(f64::INFINITY)
    }));
}

fn s6_map(f: &str, c: f64) -> Result<CodazziMap, AnalysisError> {
    Ok(CodazziMap::new(&scalar(f), c, 6)?)
}

/// Properties of the round sphere backend and the Codazzi maps on it.
pub fn sphere_props(samples: u64, seed: u64) -> Result<CaseReport, AnalysisError> {
    let s6 = Sphere::s6();
    let mut r = CaseReport::new("sphere_props", seed, samples);
    let point = |i: u64| s6.sample_point(seed, i);

    // Rm of the round metric from the chart against the closed form
    r.push(sampled_max("round_rm", 1e-8, samples, point, |i| {
        let p = point(i);
        let Some(chart) = chart_curvature::<_, ConstantTwist>(&s6, None, &p) else {
            return f64::INFINITY;
        };
        let t = s6.tangent_basis(&p);
        let v: Vec<DVector<f64>> = unit_tangents(&s6, &p, seed ^ 0x77, i, 4);
        let c: Vec<DVector<f64>> = v.iter().map(|w| t.transpose() * w).collect();
        let mut rm = 0.0;
        for a in 0..6 {
            for b in 0..6 {
                for k in 0..6 {
                    for l in 0..6 {
                        rm += c[0][a] * c[1][b] * c[2][k] * c[3][l] * chart.rm(a, b, k, l);
                    }
                }
            }
        }
        let expected = v[1].dot(&v[2]) * v[0].dot(&v[3]) - v[0].dot(&v[2]) * v[1].dot(&v[3]);
        (rm - expected).abs()
    }));
    for n in [6usize, 4] {
        let s = Sphere::new(n);
        let d = n * (n - 1) / 2;
        r.push(sampled_max(
            &format!("curvature_operator_identity_s{n}"),
            1e-9,
            samples,
            |i| s.sample_point(seed, i),
            |i| {
                chart_curvature::<_, ConstantTwist>(&s, None, &s.sample_point(seed, i))
                    .map_or(f64::INFINITY, |c| (c.operator() - DMatrix::identity(d, d)).amax())
            },
        ));
    }

    // Hessian against the geodesic oracle
    let fields: Vec<(ScalarField, DerivativeTable)> = HESSIAN_CORPUS
        .iter()
        .map(|src| {
            let f = scalar(src);
            let t = DerivativeTable::new(&f, 7);
            (f, t)
        })
        .collect();
    let hess = |i: u64| -> Option<(f64, f64, f64)> {
        let (f, table) = &fields[(i % fields.len() as u64) as usize];
        let p = point(i);
        let v = unit_tangents(&s6, &p, seed ^ 0x4e55, i, 2);
        let base = SpherePoint::new(p.clone()).ok()?;
        let x = TangentVector::new(base.clone(), v[0].clone()).ok()?;
        let y = TangentVector::new(base, v[1].clone()).ok()?;
        let hxx = hessian_g(table, &x, &x).ok()?;
        let sym = (hessian_g(table, &x, &y).ok()? - hessian_g(table, &y, &x).ok()?).abs();
        Some((hxx, geodesic_hessian(f, &p, &v[0]), sym))
    };
    let hess_samples = samples.max(200);
    r.push(sampled_max("hessian_geodesic_oracle", 1e-8, hess_samples, point, |i| {
        hess(i).map_or(f64::INFINITY, |(a, b, _)| (a - b).abs())
    }));
    r.push(sampled_max("hessian_symmetry", 1e-12, hess_samples, point, |i| {
        hess(i).map_or(f64::INFINITY, |(_, _, s)| s)
    }));
    let x1x2 = DerivativeTable::new(&scalar("x1*x2"), 7);
    r.push(sampled_max("hessian_x1x2_closed_form", 1e-10, samples, point, |i| {
        let p = point(i);
        let v = unit_tangents(&s6, &p, seed ^ 0x1212, i, 1).remove(0);
        let Ok(base) = SpherePoint::new(p.clone()) else {
            return f64::INFINITY;
        };
        let Ok(x) = TangentVector::new(base, v.clone()) else {
            return f64::INFINITY;
        };
        let h = hessian_g(&x1x2, &x, &x).unwrap_or(f64::INFINITY);
        (h - 2.0 * (v[0] * v[1] - p[0] * p[1])).abs()
    }));

    // the Codazzi corpus
    for (f, c) in S6_CORPUS {
        let map = s6_map(f, c)?;
        let twist = Twisted::new(&s6, &map);
        let tag = f.replace(['*', '^'], "");
        let vectors = |i: u64| unit_tangents(&s6, &point(i), seed ^ 0xc0, i, 3);
        r.push(sampled_max(&format!("codazzi_tensor_{tag}"), 1e-8, samples, point, |i| {
            let v = vectors(i);
            map.tensor().codazzi_residual(&point(i), &v[0], &v[1], &v[2]).abs()
        }));
        r.push(sampled_max(&format!("codazzi_endomorphism_{tag}"), 1e-8, samples, point, |i| {
            let v = vectors(i);
            twist.codazzi_defect(&point(i), &v[0], &v[1]).norm()
        }));
        r.push(Check::at_most(
            format!("psi_symmetric_{tag}"),
            max_self_adjoint_defect(&twist, samples, seed),
            1e-10,
        ));
        r.push(sampled_max(&format!("trace_identity_{tag}"), 1e-8, samples, point, |i| {
            let p = point(i);
            let mut rng = rng_for(seed ^ 0xf4, i);
            let q = random_rotation(6, &mut rng);
            let frame = s6.tangent_basis(&p) * q;
            twist.trace_residual(&p, &vectors(i)[0], &frame).abs()
        }));
        r.push(sampled_max(&format!("d_eta_a_{tag}"), 1e-8, samples, point, |i| {
            let v = vectors(i);
            twist.d_eta_a(&point(i), &v[0], &v[1], &v[2]).abs()
        }));
        r.push(Check::above(
            format!("anticommutator_min_{tag}"),
            anticommutation_scan(&scalar(f), c, samples, seed)?,
            1e-3,
        ));
    }

    // the nearly Kahler structure of S^6
    let id = ConstantTwist::identity(7);
    let base = CodazziTwist::assume(Twisted::new(&s6, &id));
    let vectors = |i: u64| unit_tangents(&s6, &point(i), seed ^ 0x6a, i, 3);
    r.push(sampled_max("nearly_kahler_defect", 1e-10, samples, point, |i| {
        base.nearly_kahler_defect(&point(i)).unwrap_or(f64::INFINITY)
    }));
    r.push(sampled_max("d_omega_type_identity", 1e-8, samples, point, |i| {
        let p = point(i);
        let v = vectors(i);
        let j = s6.complex_structure(&p).expect("S^6 has J").value;
        let a = base.d_omega_direct(&p, &v[0], &(&j * &v[1]), &(&j * &v[2]));
        let b = base.d_omega_direct(&p, &v[0], &v[1], &v[2]);
        match (a, b) {
            (Ok(a), Ok(b)) => (a + b).abs(),
            _ => f64::INFINITY,
        }
    }));
    r.push(sampled_max("d_omega_nabla_omega_identity", 1e-8, samples, point, |i| {
        let p = point(i);
        let v = vectors(i);
        let d = base.d_omega_direct(&p, &v[0], &v[1], &v[2]).unwrap_or(f64::INFINITY);
        let nabla = base.nabla_j(&p, &v[0]).map_or(f64::INFINITY, |m| (m * &v[1]).dot(&v[2]));
        (d / 3.0 - nabla).abs()
    }));
    r.push(sampled_max("nijenhuis_nabla_j_identity", 1e-8, samples, point, |i| {
        let p = point(i);
        let v = vectors(i);
        let j = s6.complex_structure(&p).expect("S^6 has J").value;
        let lhs = base.nabla_j(&p, &v[0]).map(|m| m * (&j * &v[1]));
        let n = base.nijenhuis_base(&p, &v[0], &v[1]);
        match (lhs, n) {
            (Ok(l), Ok(n)) => (l + n * 0.25).norm(),
            _ => f64::INFINITY,
        }
    }));
    let north = SpherePoint::new(basis(7, 6))?;
    let k = nijenhuis_kernel_check(&north, &basis(7, 0))?;
    r.push(Check::at_most("kernel_check_north_pole", k.kernel_angle, 1e-8));
    r.push(Check::at_most("kernel_check_north_pole_failed", if k.passed { 0.0 } else { 1.0 }, 0.0));
    let kernel_fail = |i: u64| -> f64 {
        let p = point(i);
        let x = unit_tangents(&s6, &p, seed ^ 0x3e, i, 1).remove(0);
        match nijenhuis_kernel_check(&SpherePoint::normalized(p), &x) {
            Ok(k) if k.passed => 0.0,
            _ => 1.0,
        }
    };
    r.push(sampled_max("kernel_check_random_failed", 0.0, samples, point, kernel_fail));

    r.push(Check::at_most(
        "g2_identity_member",
        if g2_membership(&DMatrix::identity(7, 7))? { 0.0 } else { 1.0 },
        0.0,
    ));
    let mut rng = rng_for(seed, 7);
    let rot = random_rotation(7, &mut rng);
    r.push(Check::at_most(
        "g2_random_rotation_rejected",
        if g2_membership(&rot)? { 1.0 } else { 0.0 },
        0.0,
    ));

    // the eigenvalue example for c = 5
    let scan = &eigen_scan_s6(&[5.0], samples.max(1000), seed)[0];
    let c = 5.0;
    r.push(Check::at_most("eigen_closed_form", scan.closed_form_error.unwrap_or(f64::INFINITY), 1e-9));
    let a_excess = (c - 1.5 - scan.a_min.unwrap_or(f64::NEG_INFINITY)).max(scan.a_max.unwrap_or(f64::INFINITY) - c - 1.5);
    r.push(Check::at_most("eigen_a_within_range", a_excess.max(0.0), 1e-9));
    let l_excess = (scan.bound_min.unwrap_or(f64::INFINITY) - scan.lambda_min.unwrap_or(f64::NEG_INFINITY))
        .max(scan.lambda_max.unwrap_or(f64::INFINITY) - scan.bound_max.unwrap_or(f64::NEG_INFINITY));
    r.push(Check::at_most("eigen_curvature_within_bounds", l_excess.max(0.0), 1e-9));

    // self-adjointness dichotomy applied to psi of the S^6 map
    let map = s6_map("x1*x2", 5.0)?;
    r.push(Check::at_most(
        "classification_psi_self_adjoint_failures",
        adjoint_class_failures_on_s6(&map, samples, seed)? as f64,
        0.0,
    ));

    // skew-adjoint candidates are not Codazzi
    let rows = skew_adjoint_scan(samples, seed);
    let min = rows.iter().map(|row| row.max_residual).fold(f64::INFINITY, f64::min);
    r.push(Check::above("skew_adjoint_candidates_min_defect", min, 1e-3));
    Ok(r)
}

/// Properties of the twist machinery across backends.
pub fn twist_props(samples: u64, seed: u64) -> Result<CaseReport, AnalysisError> {
    let mut r = CaseReport::new("twist_props", seed, samples);

    // twisting twice composes
    let mut functoriality: f64 = 0.0;
    for i in 0..samples.min(50) {
        let mut rng = rng_for(seed ^ 0xf0, i);
        let n = 6;
        let j = standard_j(n);
        let a = random_matrix(n, &mut rng);
        let g = a.transpose() * a + DMatrix::identity(n, n);
        // J must be g-orthogonal; average g over J
        let g = (&g + j.transpose() * &g * &j) * 0.5;
        let base = TwistedMatrices::new(g, j);
        let phi = random_constant_psi(n, seed ^ 0xf1, i);
        let psi = random_constant_psi(n, seed ^ 0xf2, i);
        let inv = |m: &DMatrix<f64>| m.clone().try_inverse().expect("near identity");
        let twice = base.twist(&inv(&phi)).and_then(|t| t.twist(&inv(&psi)));
        let once = base.twist(&inv(&(&psi * &phi)));
        functoriality = match (twice, once) {
            (Some(a), Some(b)) => functoriality
                .max((a.g - b.g).amax())
                .max((a.j - b.j).amax())
                .max((a.omega - b.omega).amax()),
            _ => f64::INFINITY,
        };
    }
    r.push(Check::at_most("twist_functoriality", functoriality, 1e-10));

    // the general twisted Levi-Civita formula against the Koszul formula of h on the S^3 x S^3 frame
    let st = s3s3::structure();
    let geom = LieGeometry::from_structure(&st);
    let e = geom.identity_point();
    let lie_count = 20;
    let lie_point = |_: u64| e.clone();
    r.push(sampled_max("levi_civita_general_vs_koszul", 1e-9, lie_count, lie_point, |k| {
        let psi = ConstantTwist::from_psi(&random_constant_psi(6, seed ^ 0x1c, k)).expect("invertible");
        let tw = Twisted::new(&geom, &psi);
        let f = |a: usize| FieldJet::constant(geom.frame().basis(a));
        let mut worst: f64 = 0.0;
        for i in 0..6 {
            for j in 0..6 {
                for l in 0..6 {
                    let lhs = tw.koszul(&e, &f(i), &f(j), &f(l));
                    let rhs = tw.lc_general(&e, &f(i), &f(j), &geom.frame().basis(l));
                    worst = worst.max(rhs.map_or(f64::INFINITY, |v| (lhs - v).abs()));
                }
            }
        }
        worst
    }));
    r.push(sampled_max("nijenhuis_twist_identity_lie", 1e-9, lie_count, lie_point, |k| {
        let psi = ConstantTwist::from_psi(&random_constant_psi(6, seed ^ 0x41, k)).expect("invertible");
        let tw = Twisted::new(&geom, &psi);
        let mut worst: f64 = 0.0;
        for a in 0..6 {
            for b in a + 1..6 {
                let res = tw.nijenhuis_twist_residual(&e, &geom.frame().basis(a), &geom.frame().basis(b));
                worst = worst.max(res.unwrap_or(f64::INFINITY));
            }
        }
        worst
    }));

    // S^6 Codazzi maps
    let s6 = Sphere::s6();
    let point = |i: u64| s6.sample_point(seed, i);
    let identity_samples = samples.min(50);
    for (f, c) in S6_CORPUS {
        let map = s6_map(f, c)?;
        let tw = Twisted::new(&s6, &map);
        let tag = f.replace(['*', '^'], "");
        r.push(sampled_max(&format!("nijenhuis_twist_identity_s6_{tag}"), 1e-7, identity_samples, point, |i| {
            let v = unit_tangents(&s6, &point(i), seed ^ 0x42, i, 2);
            tw.nijenhuis_twist_residual(&point(i), &v[0], &v[1]).unwrap_or(f64::INFINITY)
        }));
    }

    let map = s6_map("x1*x2", 5.0)?;
    let tw = Twisted::new(&s6, &map);
    let ct = tw.verify_codazzi(samples, seed)?;
    r.push(Check::at_most("codazzi_sampled_s6", ct.evidence().1, CODAZZI_TOL));
    push_curvature_laws(&mut r, &ct, samples, point);
    let vectors = |i: u64| unit_tangents(&s6, &point(i), seed ^ 0x28, i, 3);
    r.push(sampled_max("d_omega_formula_residual_s6", CODAZZI_TOL, samples, point, |i| {
        let (p, v) = (point(i), vectors(i));
        match (ct.d_omega(&p, &v[0], &v[1], &v[2]), ct.d_omega_direct(&p, &v[0], &v[1], &v[2])) {
            (Ok(a), Ok(b)) => (a - b).abs(),
            _ => f64::INFINITY,
        }
    }));
    r.push(sampled_max("lc_torsion_defect_s6", CODAZZI_TOL, samples, point, |i| {
        let v = vectors(i);
        ct.lc_torsion_defect(&point(i), &v[0], &v[1]).unwrap_or(f64::INFINITY)
    }));
    r.push(sampled_max("lc_metric_defect_s6", CODAZZI_TOL, samples, point, |i| {
        let v = vectors(i);
        ct.lc_metric_defect(&point(i), &v[0], &v[1], &v[2]).unwrap_or(f64::INFINITY)
    }));
    // the two integrability criteria are negatives of each other
    r.push(sampled_max("criteria_agreement_s6", 1e-9, samples, point, |i| {
        let (p, v) = (point(i), vectors(i));
        match (ct.integrability_tensor(&p, &v[0], &v[1]), ct.nk_criterion(&p, &v[0], &v[1])) {
            (Ok(a), Ok(b)) => (&a + &b).norm() / (1.0 + a.norm()),
            _ => f64::INFINITY,
        }
    }));
    r.push(sampled_max("self_adjointness_s6", 1e-10, samples, point, |i| {
        tw.self_adjoint_defect(&point(i)).unwrap_or(f64::INFINITY)
    }));

    // psi = lambda id on S^6: closed-form commutator
    let lambda = 1.7;
    let scalar_psi = ConstantTwist::scalar(7, lambda);
    let sct = CodazziTwist::assume(Twisted::new(&s6, &scalar_psi));
    r.push(sampled_max("scalar_commutator_closed_form", 1e-12, samples, point, |i| {
        let p = point(i);
        let z = vectors(i).remove(0);
        let j = s6.complex_structure(&p).expect("S^6 has J").value;
        let (Ok(m), Ok(nj)) = (sct.commutator_obstruction(&p, &z), sct.nabla_j(&p, &z)) else {
            return f64::INFINITY;
        };
        let t = s6.tangent_basis(&p);
        (m - t.transpose() * (j * nj * (-4.0 * lambda)) * &t).amax()
    }));
    r.push(sampled_max("scalar_d_omega_scaling", 1e-12, samples, point, |i| {
        let (p, v) = (point(i), vectors(i));
        let twisted = sct.d_omega_direct(&p, &v[0], &v[1], &v[2]);
        let plain = CodazziTwist::assume(Twisted::new(&s6, &ConstantTwist::identity(7))).d_omega_direct(&p, &v[0], &v[1], &v[2]);
        match (twisted, plain) {
            (Ok(a), Ok(b)) => (a - b / lambda.powi(2)).abs(),
            _ => f64::INFINITY,
        }
    }));

    // flat Kahler: psi = a id + b J
    let flat = Flat::kahler(4);
    let (a, b) = (1.3, 0.6);
    let j4 = standard_j(4);
    let cpsi = ConstantTwist::from_psi(&complex_scalar_twist(a, b, &j4)).expect("invertible");
    let ftw = Twisted::new(&flat, &cpsi);
    let origin = DVector::zeros(4);
    r.push(Check::at_most(
        "eta_a_complex_scalar",
        (ftw.eta_a(&origin).value - j4.transpose() * (-b / (a * a + b * b))).amax(),
        1e-14,
    ));
    r.push(sampled_max("d_eta_a_complex_scalar", 1e-12, samples, |i| flat.sample_point(seed, i), |i| {
        let p = flat.sample_point(seed, i);
        let v = unit_tangents(&flat, &p, seed ^ 0xe7, i, 3);
        ftw.d_eta_a(&p, &v[0], &v[1], &v[2]).abs()
    }));
    let asym = ftw.self_adjoint_defect(&origin)?;
    r.push(Check::at_most("flat_contrast_asymmetry", (asym - 2.0 * b.abs()).abs(), 1e-12));

    // nonintegrability certificates
    for (f, c) in CERTIFICATE_CORPUS {
        let tag = format!("{}_c{c}", f.replace(['*', '^'], ""));
        let outcome = nonintegrability_certificate(&scalar(f), c, CERTIFICATE_BUDGET, seed)?;
        let (res, other) = outcome
            .certificate()
            .map_or((0.0, 0.0), |cert| (cert.residual, cert.integrability_residual));
        r.push(Check::above(format!("certificate_{tag}"), res, CERTIFICATE_TOL));
        r.push(Check::above(format!("certificate_integrability_{tag}"), other, CERTIFICATE_TOL));
    }

    // the self/skew-adjoint dichotomy
    let summary = adjoint_classification_suite(500, seed)?;
    r.push(Check::at_most("classification_misclassified", summary.misclassified as f64, 0.0));
    r.push(Check::at_most("classification_relative_residual", summary.max_relative_residual, 1e-8));
    r.push(Check::above("classification_tested", summary.tested as f64, 450.0));
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for name in Suite::NAMES {
            assert_eq!(name.parse::<Suite>().unwrap().to_string(), name);
        }
        assert!("bogus".parse::<Suite>().is_err());
    }

    #[test]
    fn r4_rejects_small_c() {
        assert!(matches!(case_r4_kahler(1.0, 5, 0), Err(AnalysisError::InvalidParameter(_))));
    }

    #[test]
    fn r4_closed_forms_are_consistent() {
        let p = DVector::from_vec(vec![0.3, -1.0, 2.0, 0.5]);
        let [f, j, g, w] = r4_closed_forms(3.0, &p);
        let psi = f.clone().try_inverse().unwrap();
        assert!((&psi * standard_j(4) * &f - &j).amax() < 1e-12);
        assert!((f.transpose() * &f - &g).amax() < 1e-12);
        assert!((j.transpose() * &g - &w).amax() < 1e-12);
    }
}
