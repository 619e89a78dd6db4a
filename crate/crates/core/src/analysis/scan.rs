//! Scans over sample points: extreme eigenvalues on `S^6`, nonintegrability
//! certificates and the adjointness scans.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use super::report::{sig17, sig17_opt, sig17_vec};
use super::AnalysisError;
use crate::expr::ScalarField;
use crate::field::{in_tangent_basis, EndoJet, FieldFn, Geometry, TwistField};
use crate::multilinear::{lemma_sa_classify, AdjointClass, Endo, Metric};
use crate::sampling::{self, gaussian_vector, rng_for};
use crate::sphere::{cross_matrix, CodazziMap, Sphere, DEFAULT_SCREEN_SAMPLES, SCREEN_SEED};
use crate::twist::{CodazziTwist, Twisted, CERTIFICATE_TOL};

/// Threshold of the Bor/Hernandez-Lamoneda pinching condition.
pub const BH_RATIO: f64 = 7.0 / 5.0;
/// Iteration cap of the projected ascent used to sharpen witnesses.
pub const REFINE_ITERATIONS: usize = 50;

/// `|c|` above which the analytic bound ratio drops below 7/5.
pub fn bh_threshold() -> f64 {
    9.0 + 1.5 * 35f64.sqrt()
}

/// Extreme eigenvalues of `psi^c` on `S^6` for `f = x1 x2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenScanResult {
    #[serde(serialize_with = "sig17")]
    pub c: f64,
    /// `A_{f,c}` passed the nondegeneracy screen (and `|c| > 3/2` for
    /// `x1 x2`); all other fields are `None` otherwise.
    pub valid: bool,
    pub samples: u64,
    /// Extremes of the eigenvalues of `psi^{-1}` (those of `A`).
    #[serde(serialize_with = "sig17_opt")]
    pub a_min: Option<f64>,
    #[serde(serialize_with = "sig17_opt")]
    pub a_max: Option<f64>,
    /// Extremes of the curvature operator of `h^c`, i.e. of `psi^*`.
    #[serde(serialize_with = "sig17_opt")]
    pub lambda_min: Option<f64>,
    #[serde(serialize_with = "sig17_opt")]
    pub lambda_max: Option<f64>,
    /// `1/(|c| + 3/2)^2` and `1/(|c| - 3/2)^2`.
    #[serde(serialize_with = "sig17_opt")]
    pub bound_min: Option<f64>,
    #[serde(serialize_with = "sig17_opt")]
    pub bound_max: Option<f64>,
    /// Largest pointwise deviation of the sampled spectrum of `A` from the
    /// closed form.
    #[serde(serialize_with = "sig17_opt")]
    pub closed_form_error: Option<f64>,
    /// Pinching condition evaluated on the analytic bounds.
    pub bh_flag: bool,
    /// Pinching condition evaluated on the sampled extremes.
    pub bh_flag_sampled: bool,
}

impl EigenScanResult {
    pub const CSV_HEADER: &'static str =
        "c,valid,samples,a_min,a_max,lambda_min,lambda_max,bound_min,bound_max,closed_form_error,bh_flag,bh_flag_sampled\n";

    pub fn csv_row(&self) -> String {
        let f = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:.16e}"));
        format!(
            "{:.16e},{},{},{},{},{},{},{},{},{},{},{}\n",
            self.c,
            self.valid,
            self.samples,
            f(self.a_min),
            f(self.a_max),
            f(self.lambda_min),
            f(self.lambda_max),
            f(self.bound_min),
            f(self.bound_max),
            f(self.closed_form_error),
            self.bh_flag,
            self.bh_flag_sampled
        )
    }
}

pub fn eigen_scan_csv(rows: &[EigenScanResult]) -> String {
    let mut s = String::from(EigenScanResult::CSV_HEADER);
    for r in rows {
        s.push_str(&r.csv_row());
    }
    s
}

/// Spectrum of `A_{x1 x2, c}` on `T_p S^6`: `c - 2 p1 p2 +- s` and
/// `c - p1 p2` four times, with `s = sqrt((1 - p1^2)(1 - p2^2))`.
pub fn x1x2_spectrum(c: f64, p: &DVector<f64>) -> Vec<f64> {
    let (p1, p2) = (p[0], p[1]);
    let s = ((1.0 - p1 * p1) * (1.0 - p2 * p2)).max(0.0).sqrt();
    let mut ev = vec![c - 2.0 * p1 * p2 - s, c - 2.0 * p1 * p2 + s];
    ev.extend(std::iter::repeat_n(c - p1 * p2, 4));
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// Extremes of `1 / (a_i a_j)`, `i < j`: the spectrum of `psi^*` on two-forms.
fn pair_extremes(ev: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..ev.len() {
        for j in i + 1..ev.len() {
            let v = 1.0 / (ev[i] * ev[j]);
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    (lo, hi)
}

/// Tangent eigenpair of `psi^{-1}` with the smallest (or largest) eigenvalue;
/// the vector is returned in ambient coordinates.
fn eigenpair(map: &CodazziMap, sphere: &Sphere, p: &DVector<f64>, largest: bool) -> (f64, DVector<f64>) {
    let t = sphere.tangent_basis(p);
    let f = map.psi_inv(p).value;
    let ft = t.transpose() * f * &t;
    let e = SymmetricEigen::new((&ft + ft.transpose()) * 0.5);
    let mut k = 0;
    for i in 1..e.eigenvalues.len() {
        let better = if largest {
            e.eigenvalues[i] > e.eigenvalues[k]
        } else {
            e.eigenvalues[i] < e.eigenvalues[k]
        };
        if better {
            k = i;
        }
    }
    (e.eigenvalues[k], &t * e.eigenvectors.column(k))
}

/// Projected gradient ascent (descent when `largest` is false) of an extreme
/// eigenvalue of `psi^{-1}` over the sphere, with step halving.
pub fn refine_eigenvalue(map: &CodazziMap, p0: &DVector<f64>, largest: bool) -> (f64, DVector<f64>) {
    let sphere = map.sphere();
    let sign = if largest { 1.0 } else { -1.0 };
    let mut p = p0.clone();
    let (mut value, mut u) = eigenpair(map, &sphere, &p, largest);
    let mut step = 0.5;
    for _ in 0..REFINE_ITERATIONS {
        // d lambda / d w = u^T (D_w F) u for a simple eigenvalue
        let derivs = map.psi_inv(&p).derivs;
        let mut g = DVector::from_fn(p.len(), |a, _| u.dot(&(&derivs[a] * &u)));
        g -= &p * g.dot(&p);
        if g.norm() < 1e-15 {
            break;
        }
        loop {
            let q = (&p + &g * (sign * step)).normalize();
            let (v, w) = eigenpair(map, &sphere, &q, largest);
            if sign * (v - value) > 0.0 {
                p = q;
                value = v;
                u = w;
                break;
            }
            step *= 0.5;
            if step < 1e-14 {
                break;
            }
        }
        if step < 1e-14 {
            break;
        }
    }
    (value, p)
}

/// Eigenvalue scan of `psi^c` for `f = x1 x2` on `S^6` at each `c`.
pub fn eigen_scan_s6(c_values: &[f64], samples: u64, seed: u64) -> Vec<EigenScanResult> {
    let f = ScalarField::parse("x1*x2").expect("literal parses");
    eigen_scan(&f, c_values, samples, seed)
}

/// Eigenvalue scan for an arbitrary `f`. The closed-form columns and the
/// analytic bounds are only filled in for `f = x1 x2`; for other fields the
/// pinching flag falls back to the sampled extremes.
pub fn eigen_scan(f: &ScalarField, c_values: &[f64], samples: u64, seed: u64) -> Vec<EigenScanResult> {
    c_values.iter().map(|&c| eigen_scan_one(f, c, samples, seed)).collect()
}

fn eigen_scan_one(f: &ScalarField, c: f64, samples: u64, seed: u64) -> EigenScanResult {
    let invalid = EigenScanResult {
        c,
        valid: false,
        samples,
        a_min: None,
        a_max: None,
        lambda_min: None,
        lambda_max: None,
        bound_min: None,
        bound_max: None,
        closed_form_error: None,
        bh_flag: false,
        bh_flag_sampled: false,
    };
    let closed_form = f.is_x1_times_x2();
    if closed_form && c.abs() <= 1.5 {
        return invalid;
    }
    let Ok(map) = CodazziMap::with_screening(f, c, 6, DEFAULT_SCREEN_SAMPLES.min(samples.max(1)), SCREEN_SEED) else {
        return invalid;
    };
    let sphere = map.sphere();
    struct Acc {
        a: (f64, u64, f64, u64),
        lam: (f64, f64),
        err: f64,
    }
    let one = |i: u64| {
        let p = sphere.sample_point(seed, i);
        let ev = map.eigenvalues(&p);
        let err = if closed_form {
            let closed = x1x2_spectrum(c, &p);
            ev.iter().zip(&closed).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        } else {
            0.0
        };
        Acc {
            a: (ev[0], i, ev[5], i),
            lam: pair_extremes(&ev),
            err,
        }
    };
    let merge = |x: Acc, y: Acc| {
        let lo = if y.a.0 < x.a.0 || (y.a.0 == x.a.0 && y.a.1 < x.a.1) {
            (y.a.0, y.a.1)
        } else {
            (x.a.0, x.a.1)
        };
        let hi = if y.a.2 > x.a.2 || (y.a.2 == x.a.2 && y.a.3 < x.a.3) {
            (y.a.2, y.a.3)
        } else {
            (x.a.2, x.a.3)
        };
        Acc {
            a: (lo.0, lo.1, hi.0, hi.1),
            lam: (x.lam.0.min(y.lam.0), x.lam.1.max(y.lam.1)),
            err: x.err.max(y.err),
        }
    };
    let Some(acc) = (0..samples).into_par_iter().map(one).reduce_with(merge) else {
        return invalid;
    };
    let (mut a_min, mut a_max) = (acc.a.0, acc.a.2);
    let (mut lam_min, mut lam_max) = acc.lam;
    for (index, largest) in [(acc.a.1, false), (acc.a.3, true)] {
        let (_, p) = refine_eigenvalue(&map, &sphere.sample_point(seed, index), largest);
        let ev = map.eigenvalues(&p);
        a_min = a_min.min(ev[0]);
        a_max = a_max.max(ev[5]);
        let (lo, hi) = pair_extremes(&ev);
        lam_min = lam_min.min(lo);
        lam_max = lam_max.max(hi);
    }
    let sampled_flag = lam_min > 0.0 && lam_max / lam_min < BH_RATIO;
    let (bound_min, bound_max, bh_flag) = if closed_form {
        let lo = 1.0 / (c.abs() + 1.5).powi(2);
        let hi = 1.0 / (c.abs() - 1.5).powi(2);
        (Some(lo), Some(hi), hi / lo < BH_RATIO)
    } else {
        (None, None, sampled_flag)
    };
    EigenScanResult {
        c,
        valid: true,
        samples,
        a_min: Some(a_min),
        a_max: Some(a_max),
        lambda_min: Some(lam_min),
        lambda_max: Some(lam_max),
        bound_min,
        bound_max,
        closed_form_error: closed_form.then_some(acc.err),
        bh_flag,
        bh_flag_sampled: sampled_flag,
    }
}

/// Parses `A:B:STEP` into the values `A, A + STEP, ...` up to `B`.
pub fn parse_c_range(s: &str) -> Result<Vec<f64>, AnalysisError> {
    let bad = || AnalysisError::InvalidParameter(format!("range {s:?} is not A:B:STEP with STEP > 0 and A <= B"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let (a, b, step) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0) || !(a <= b) || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    let count = ((b - a) / step + 1e-9).floor() as u64 + 1;
    Ok((0..count).map(|k| a + step * k as f64).collect())
}

/// A sampled configuration certifying that `J^psi` is not integrable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub f: String,
    #[serde(serialize_with = "sig17")]
    pub c: f64,
    pub seed: u64,
    pub sample_index: u64,
    #[serde(serialize_with = "sig17_vec")]
    pub witness: Vec<f64>,
    #[serde(serialize_with = "sig17_vec")]
    pub x: Vec<f64>,
    #[serde(serialize_with = "sig17_vec")]
    pub y: Vec<f64>,
    /// `|(nabla_X J) K Y - (nabla_Y J) K X|` after refinement.
    #[serde(serialize_with = "sig17")]
    pub residual: f64,
    /// The same before refinement.
    #[serde(serialize_with = "sig17")]
    pub sampled_residual: f64,
    /// Norm of the Codazzi integrability tensor at the witness.
    #[serde(serialize_with = "sig17")]
    pub integrability_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum CertificateOutcome {
    Certificate(Certificate),
    Inconclusive {
        samples: u64,
        #[serde(serialize_with = "sig17")]
        best_residual: f64,
    },
}

impl CertificateOutcome {
    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            CertificateOutcome::Certificate(c) => Some(c),
            CertificateOutcome::Inconclusive { .. } => None,
        }
    }
}

const CERTIFICATE_STREAM: u64 = 0xce27;
const CERTIFICATE_CHUNK: u64 = 512;

fn certificate_sample(sphere: &Sphere, seed: u64, i: u64) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
    let p = sphere.sample_point(seed, i);
    let mut rng = rng_for(seed ^ CERTIFICATE_STREAM, i);
    let x = sphere.random_tangent(&p, &mut rng).normalize();
    let y = sphere.random_tangent(&p, &mut rng).normalize();
    (p, x, y)
}

/// Searches `budget` sampled `(p, X, Y)` for the first configuration where the
/// nearly Kahler criterion exceeds [`CERTIFICATE_TOL`], then sharpens it by
/// ascent over unit `X`, `Y` at fixed `p`.
pub fn nonintegrability_certificate(
    f: &ScalarField,
    c: f64,
    budget: u64,
    seed: u64,
) -> Result<CertificateOutcome, AnalysisError> {
    certificate_search(f, c, budget, seed, CERTIFICATE_TOL)
}

/// [`nonintegrability_certificate`] with a custom acceptance threshold.
pub fn certificate_search(
    f: &ScalarField,
    c: f64,
    budget: u64,
    seed: u64,
    threshold: f64,
) -> Result<CertificateOutcome, AnalysisError> {
    if !(threshold > 0.0) {
        return Err(AnalysisError::InvalidParameter(format!("threshold must be positive, got {threshold}")));
    }
    let map = CodazziMap::new(f, c, 6)?;
    let sphere = map.sphere();
    // A_{f,c} is Codazzi by construction
    let twist = CodazziTwist::assume(Twisted::new(&sphere, &map));
    let residual = |i: u64| {
        let (p, x, y) = certificate_sample(&sphere, seed, i);
        twist.nk_criterion(&p, &x, &y).map(|v| v.norm()).unwrap_or(f64::NAN)
    };
    let mut best = f64::NAN;
    let mut start = 0;
    while start < budget {
        let end = (start + CERTIFICATE_CHUNK).min(budget);
        let values: Vec<f64> = (start..end).into_par_iter().map(residual).collect();
        for (k, &v) in values.iter().enumerate() {
            if !(v <= best) {
                best = if best.is_nan() { v } else { best.max(v) };
            }
            if v > threshold {
                let i = start + k as u64;
                let (p, x, y) = certificate_sample(&sphere, seed, i);
                let (x, y, r) = refine_pair(&twist, &p, x, y);
                let integrability = twist.integrability_tensor(&p, &x, &y)?.norm();
                return Ok(CertificateOutcome::Certificate(Certificate {
                    f: f.to_string(),
                    c,
                    seed,
                    sample_index: i,
                    witness: p.iter().copied().collect(),
                    x: x.iter().copied().collect(),
                    y: y.iter().copied().collect(),
                    residual: r,
                    sampled_residual: v,
                    integrability_residual: integrability,
                }));
            }
        }
        start = end;
    }
    Ok(CertificateOutcome::Inconclusive {
        samples: budget,
        best_residual: if best.is_nan() { 0.0 } else { best },
    })
}

/// Ascent of `|R(x, y)|^2` over unit tangent `x`, `y`, where `R` is bilinear.
fn refine_pair<G, T>(twist: &CodazziTwist<'_, G, T>, p: &DVector<f64>, x: DVector<f64>, y: DVector<f64>) -> (DVector<f64>, DVector<f64>, f64)
where
    G: Geometry + ?Sized,
    T: TwistField + ?Sized,
{
    let t = twist.geometry().tangent_basis(p);
    let r = |x: &DVector<f64>, y: &DVector<f64>| twist.nk_criterion(p, x, y).unwrap_or_else(|_| DVector::zeros(p.len()));
    let (mut x, mut y) = (x, y);
    let mut rv = r(&x, &y);
    let mut value = rv.norm();
    let mut step = 0.5;
    for _ in 0..REFINE_ITERATIONS {
        let mut gx = DVector::zeros(p.len());
        let mut gy = DVector::zeros(p.len());
        for b in 0..t.ncols() {
            let tb: DVector<f64> = t.column(b).into();
            gx += &tb * r(&tb, &y).dot(&rv);
            gy += &tb * r(&x, &tb).dot(&rv);
        }
        gx -= &x * gx.dot(&x);
        gy -= &y * gy.dot(&y);
        let scale = (gx.norm_squared() + gy.norm_squared()).sqrt();
        if scale < 1e-15 {
            break;
        }
        let (gx, gy) = (gx / scale, gy / scale);
        loop {
            let nx = (&x + &gx * step).normalize();
            let ny = (&y + &gy * step).normalize();
            let nr = r(&nx, &ny);
            if nr.norm() > value {
                x = nx;
                y = ny;
                value = nr.norm();
                rv = nr;
                break;
            }
            step *= 0.5;
            if step < 1e-12 {
                break;
            }
        }
        if step < 1e-12 {
            break;
        }
    }
    (x, y, value)
}

/// Largest `||psi - psi^dagger||` on tangent spaces over sampled points.
pub fn max_self_adjoint_defect<G, T>(twist: &Twisted<'_, G, T>, samples: u64, seed: u64) -> f64
where
    G: Geometry + ?Sized,
    T: TwistField + ?Sized,
{
    sampling::par_max(samples, |i| {
        twist
            .self_adjoint_defect(&twist.geometry().sample_point(seed, i))
            .unwrap_or(f64::INFINITY)
    })
    .map_or(0.0, |e| e.value)
}

/// [`max_self_adjoint_defect`] for the map of `A_{f,c}` on `S^6`.
pub fn self_adjointness_scan(f: &ScalarField, c: f64, samples: u64, seed: u64) -> Result<f64, AnalysisError> {
    let map = CodazziMap::new(f, c, 6)?;
    let sphere = map.sphere();
    Ok(max_self_adjoint_defect(&Twisted::new(&sphere, &map), samples, seed))
}

/// Number of sampled points where the classifier does not call `psi` of the
/// `S^6` map self-adjoint.
pub fn adjoint_class_failures_on_s6(map: &CodazziMap, samples: u64, seed: u64) -> Result<u64, AnalysisError> {
    let sphere = map.sphere();
    let g = Metric::identity(6);
    let mut wrong = 0;
    for i in 0..samples {
        let p = sphere.sample_point(seed, i);
        let psi = in_tangent_basis(&sphere, &p, &map.psi(&p).value);
        let class = lemma_sa_classify(&g, &Endo::new(psi).map_err(AnalysisError::from)?)?;
        if class.class != AdjointClass::SelfAdjoint {
            wrong += 1;
        }
    }
    Ok(wrong)
}

/// Outcome of the randomized check of the self/skew-adjoint dichotomy.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationSummary {
    pub tested: u64,
    pub misclassified: u64,
    /// Largest residual of the chosen class relative to `||F||`.
    pub max_relative_residual: f64,
    /// Generic endomorphisms that were (correctly) reported as not
    /// satisfying the hypothesis.
    pub generic_rejected: u64,
    pub generic_tested: u64,
}

fn random_spd(n: usize, rng: &mut impl rand::Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| gaussian_vector(rng, 1)[0]);
    a.transpose() * a + DMatrix::identity(n, n) * 0.5
}

/// Random `F` that are self-adjoint (all dimensions 3..=7) or skew-adjoint
/// (even dimensions) for random metrics, run through the classifier.
pub fn adjoint_classification_suite(count: u64, seed: u64) -> Result<ClassificationSummary, AnalysisError> {
    let dims = [3usize, 4, 5, 6, 7];
    let mut summary = ClassificationSummary {
        tested: 0,
        misclassified: 0,
        max_relative_residual: 0.0,
        generic_rejected: 0,
        generic_tested: 0,
    };
    for i in 0..count {
        let mut rng = rng_for(seed, i);
        let n = dims[(i % dims.len() as u64) as usize];
        let gm = random_spd(n, &mut rng);
        let g = Metric::new(gm.clone())?;
        let g_inv = g.inverse().clone();
        let b = DMatrix::from_fn(n, n, |_, _| gaussian_vector(&mut rng, 1)[0]);
        let skew = n.is_multiple_of(2) && (i / dims.len() as u64) % 2 == 1;
        let expected = if skew {
            AdjointClass::SkewAdjoint
        } else {
            AdjointClass::SelfAdjoint
        };
        let f = if skew {
            &g_inv * (&b - b.transpose())
        } else {
            &g_inv * (&b + b.transpose()) + DMatrix::identity(n, n) * 0.1
        };
        let Ok(class) = lemma_sa_classify(&g, &Endo::new(f)?) else {
            // near-singular draw; skip it without counting
            continue;
        };
        summary.tested += 1;
        if class.class != expected {
            summary.misclassified += 1;
        }
        let r = match expected {
            AdjointClass::SkewAdjoint => class.skew_residual,
            _ => class.self_residual,
        };
        summary.max_relative_residual = summary.max_relative_residual.max(r / class.norm);

        let generic = DMatrix::from_fn(n, n, |_, _| gaussian_vector(&mut rng, 1)[0]) + DMatrix::identity(n, n) * 3.0;
        if let Ok(c) = lemma_sa_classify(&g, &Endo::new(generic)?) {
            summary.generic_tested += 1;
            if c.class == AdjointClass::NotApplicable {
                summary.generic_rejected += 1;
            }
        }
    }
    Ok(summary)
}

/// Skew-adjoint candidate fields on `S^n` for the exclusion scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SkewCandidate {
    /// `psi^{-1} = P K P + p p^T` with a fixed random antisymmetric `K`.
    ProjectedConstant,
    /// `psi^{-1} = J + p p^T` on `S^6`.
    ComplexStructure,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkewScanRow {
    pub n: usize,
    pub candidate: SkewCandidate,
    /// Largest sampled Codazzi defect `|(nabla_X F) Y - (nabla_Y F) X|`
    /// for unit `X`, `Y`.
    #[serde(serialize_with = "sig17")]
    pub max_residual: f64,
}

fn projected_field(k: DMatrix<f64>) -> impl Fn(&DVector<f64>) -> EndoJet + Sync {
    move |p: &DVector<f64>| {
        let big = p.len();
        let id = DMatrix::identity(big, big);
        let proj = &id - p * p.transpose();
        let derivs = (0..big)
            .map(|a| {
                let e = id.column(a).into_owned();
                let dp = -(&e * p.transpose() + p * e.transpose());
                &dp * &k * &proj + &proj * &k * &dp - &dp
            })
            .collect();
        EndoJet {
            value: &proj * &k * &proj + p * p.transpose(),
            derivs,
        }
    }
}

fn j_field(p: &DVector<f64>) -> EndoJet {
    let id = DMatrix::identity(7, 7);
    let derivs = (0..7)
        .map(|a| {
            let e: DVector<f64> = id.column(a).into_owned();
            cross_matrix(&e) + &e * p.transpose() + p * e.transpose()
        })
        .collect();
    EndoJet {
        value: cross_matrix(p) + p * p.transpose(),
        derivs,
    }
}

fn max_codazzi_defect<G, T>(twist: &Twisted<'_, G, T>, samples: u64, seed: u64) -> f64
where
    G: Geometry,
    T: TwistField + ?Sized,
{
    let geom = twist.geometry();
    sampling::par_max(samples, |i| {
        let p = geom.sample_point(seed, i);
        let mut rng = rng_for(seed ^ 0x5e3, i);
        let x = geom.random_tangent(&p, &mut rng).normalize();
        let y = geom.random_tangent(&p, &mut rng).normalize();
        twist.codazzi_defect(&p, &x, &y).norm()
    })
    .map_or(0.0, |e| e.value)
}

/// Codazzi defects of skew-adjoint candidate fields on `S^n`, `n` in
/// `{3, 4, 6}`. The claim being probed is that none of them is Codazzi.
pub fn skew_adjoint_scan(samples: u64, seed: u64) -> Vec<SkewScanRow> {
    let mut rows = Vec::new();
    for n in [3usize, 4, 6] {
        let mut rng = rng_for(seed, n as u64);
        let b = DMatrix::from_fn(n + 1, n + 1, |_, _| gaussian_vector(&mut rng, 1)[0]);
        let field = FieldFn(projected_field(&b - b.transpose()));
        let sphere = Sphere::new(n);
        rows.push(SkewScanRow {
            n,
            candidate: SkewCandidate::ProjectedConstant,
            max_residual: max_codazzi_defect(&Twisted::new(&sphere, &field), samples, seed),
        });
    }
    let sphere = Sphere::s6();
    let field = FieldFn(j_field);
    rows.push(SkewScanRow {
        n: 6,
        candidate: SkewCandidate::ComplexStructure,
        max_residual: max_codazzi_defect(&Twisted::new(&sphere, &field), samples, seed),
    });
    rows
}

/// Smallest sampled `||psi J + J psi||` on `T_p S^6` for the map of
/// `A_{f,c}`; zero would mean `psi` anticommutes with `J` somewhere.
pub fn anticommutation_scan(f: &ScalarField, c: f64, samples: u64, seed: u64) -> Result<f64, AnalysisError> {
    let map = CodazziMap::new(f, c, 6)?;
    let sphere = map.sphere();
    let twist = Twisted::new(&sphere, &map);
    Ok(sampling::par_min(samples, |i| {
        let p = sphere.sample_point(seed, i);
        let j = sphere.complex_structure(&p).expect("S^6 has J").value;
        let psi = twist.psi(&p).map(|m| m.value);
        match psi {
            Ok(psi) => in_tangent_basis(&sphere, &p, &(&psi * &j + &j * &psi)).amax(),
            Err(_) => f64::NAN,
        }
    })
    .map_or(f64::NAN, |e| e.value))
}

/// For random tangent-preserving, non-Codazzi fields `psi^{-1} = P M(q) P +
/// q q^T` on `S^6`, the largest sampled `|N_{J^psi}|` on basis pairs. Reported
/// as data only.
pub fn random_twist_profile(fields: u64, samples: u64, seed: u64) -> Vec<f64> {
    let sphere = Sphere::s6();
    (0..fields)
        .map(|k| {
            let mut rng = rng_for(seed ^ 0x9a7, k);
            let b = DMatrix::from_fn(7, 7, |_, _| gaussian_vector(&mut rng, 1)[0]);
            let m0 = &b + b.transpose() + DMatrix::identity(7, 7) * 8.0;
            let lin: Vec<DMatrix<f64>> = (0..7)
                .map(|_| DMatrix::from_fn(7, 7, |_, _| gaussian_vector(&mut rng, 1)[0]))
                .collect();
            let field = FieldFn(move |p: &DVector<f64>| {
                let id = DMatrix::identity(7, 7);
                let proj = &id - p * p.transpose();
                let mut m = m0.clone();
                for a in 0..7 {
                    m += &lin[a] * p[a];
                }
                let derivs = (0..7)
                    .map(|a| {
                        let e = id.column(a).into_owned();
                        let dp = -(&e * p.transpose() + p * e.transpose());
                        &dp * &m * &proj + &proj * &lin[a] * &proj + &proj * &m * &dp - &dp
                    })
                    .collect();
                EndoJet {
                    value: &proj * &m * &proj + p * p.transpose(),
                    derivs,
                }
            });
            let twist = Twisted::new(&sphere, &field);
            sampling::par_max(samples, |i| {
                twist
                    .nijenhuis_twisted_max(&sphere.sample_point(seed, i))
                    .unwrap_or(f64::NAN)
            })
            .map_or(f64::NAN, |e| e.value)
        })
        .collect()
}
