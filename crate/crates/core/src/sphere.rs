//! Calculus on the round unit sphere `S^n` embedded in `R^{n+1}`.
//!
//! Tangent fields are ambient vector fields tangent along the sphere; their
//! Levi-Civita derivative is the tangential projection of the ambient
//! directional derivative.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::expr::{DerivativeTable, ScalarField};
use crate::field::{nijenhuis_fields, ChartJets, EndoJet, FieldJet, Geometry, TwistField};
use crate::jet::{Jet, Scalar};
use crate::multilinear::{spectral_norm, WedgeSpace};
use crate::sampling;

pub const UNIT_TOL: f64 = 1e-12;
pub const TANGENT_TOL: f64 = 1e-10;
/// Smallest admissible `|eigenvalue|` of `A_{f,c}` during screening.
pub const DEGENERACY_TOL: f64 = 1e-8;
pub const DEFAULT_SCREEN_SAMPLES: u64 = 10_000;
pub const SCREEN_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SphereError {
    #[error("point is not on the unit sphere (|p| = {0})")]
    NotUnit(f64),
    #[error("vector is not tangent (p.v = {0:e})")]
    NotTangent(f64),
    #[error("tangent vectors have different base points")]
    MismatchedBase,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("tangent vector is too short (|X| = {0:e})")]
    TooShort(f64),
    #[error("expression uses x{arity} but the ambient space has {ambient} coordinates")]
    Arity { arity: usize, ambient: usize },
    #[error("Codazzi tensor is degenerate near {witness:?} (eigenvalue {eigenvalue:e}): {reason}")]
    Degenerate {
        witness: Vec<f64>,
        eigenvalue: f64,
        reason: String,
    },
    #[error("matrix is singular")]
    Singular,
}

/// A unit vector in `R^{n+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePoint(DVector<f64>);

impl SpherePoint {
    pub fn new(p: DVector<f64>) -> Result<Self, SphereError> {
        let norm = p.norm();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(SphereError::NotUnit(norm));
        }
        Ok(SpherePoint(p))
    }

    /// Normalizes a nonzero vector.
    pub fn normalized(p: DVector<f64>) -> Self {
        let n = p.norm();
        SpherePoint(p / n)
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.0
    }
}

/// A vector tangent to the sphere at `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    base: SpherePoint,
    v: DVector<f64>,
}

impl TangentVector {
    pub fn new(base: SpherePoint, v: DVector<f64>) -> Result<Self, SphereError> {
        if v.len() != base.0.len() {
            return Err(SphereError::DimensionMismatch {
                expected: base.0.len(),
                found: v.len(),
            });
        }
        let d = base.0.dot(&v);
        if d.abs() > TANGENT_TOL * v.norm().max(1.0) {
            return Err(SphereError::NotTangent(d));
        }
        Ok(TangentVector { base, v })
    }

    pub fn base(&self) -> &SpherePoint {
        &self.base
    }

    pub fn vector(&self) -> &DVector<f64> {
        &self.v
    }
}

/// `w - (w.p) p`.
pub fn project(p: &SpherePoint, w: &DVector<f64>) -> TangentVector {
    let v = w - p.coords() * p.coords().dot(w);
    TangentVector {
        base: p.clone(),
        v,
    }
}

/// `nabla_X Y` for a tangent field `Y` given by its ambient jet at the base
/// point of `X`.
pub fn levi_civita_sphere(x: &TangentVector, y: &FieldJet) -> Result<TangentVector, SphereError> {
    let p = x.base.coords();
    let d = p.dot(&y.value);
    if d.abs() > TANGENT_TOL * y.value.norm().max(1.0) {
        return Err(SphereError::NotTangent(d));
    }
    Ok(project(&x.base, &y.derivative(&x.v)))
}

/// The round sphere `S^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sphere {
    n: usize,
}

impl Sphere {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        Sphere { n }
    }

    pub fn s6() -> Self {
        Sphere { n: 6 }
    }

    /// Canonical extension `q -> v - (v.q) q` of a tangent vector.
    pub fn canonical_extension(p: &DVector<f64>, v: &DVector<f64>) -> FieldJet {
        let vp = v.dot(p);
        let n = p.len();
        FieldJet {
            value: v - p * vp,
            jac: -(p * v.transpose()) - DMatrix::identity(n, n) * vp,
        }
    }
}

impl Geometry for Sphere {
    fn ambient_dim(&self) -> usize {
        self.n + 1
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn sample_point(&self, seed: u64, index: u64) -> DVector<f64> {
        sampling::unit_vector(&mut sampling::rng_for(seed, index), self.n + 1)
    }

    fn tangent_basis(&self, p: &DVector<f64>) -> DMatrix<f64> {
        // Householder reflection sending the last axis to -+p; its other
        // columns span the tangent space.
        let big = self.n + 1;
        let s = if p[self.n] >= 0.0 { 1.0 } else { -1.0 };
        let mut u = p.clone();
        u[self.n] += s;
        let h = DMatrix::identity(big, big) - &u * u.transpose() * (2.0 / u.norm_squared());
        h.columns(0, self.n).into_owned()
    }

    fn metric(&self, _p: &DVector<f64>) -> EndoJet {
        EndoJet::identity(self.n + 1)
    }

    fn complex_structure(&self, p: &DVector<f64>) -> Option<EndoJet> {
        (self.n == 6).then(|| standard_j6(p))
    }

    fn extend(&self, p: &DVector<f64>, v: &DVector<f64>) -> FieldJet {
        Sphere::canonical_extension(p, v)
    }

    fn covariant(&self, p: &DVector<f64>, w: &DVector<f64>, y: &FieldJet) -> DVector<f64> {
        let d = y.derivative(w);
        &d - p * p.dot(&d)
    }

    fn curvature(&self, _p: &DVector<f64>, x: &DVector<f64>, y: &DVector<f64>) -> DMatrix<f64> {
        // R(X,Y)Z = g(Y,Z) X - g(X,Z) Y
        x * y.transpose() - y * x.transpose()
    }

    fn chart(&self, p: &DVector<f64>, x: &[Jet]) -> Option<ChartJets> {
        let t = self.tangent_basis(p);
        let big = self.n + 1;
        let y: Vec<Jet> = (0..big)
            .map(|a| {
                let mut s = Jet::constant(p[a]);
                for (i, xi) in x.iter().enumerate() {
                    s = s + xi.scale(t[(a, i)]);
                }
                s
            })
            .collect();
        let mut r2 = Jet::constant(0.0);
        for ya in &y {
            r2 = r2 + *ya * *ya;
        }
        let r = r2.sqrt();
        let point: Vec<Jet> = y.iter().map(|ya| *ya / r).collect();
        let coordinate_fields = (0..self.n)
            .map(|i| {
                let mut dot = Jet::constant(0.0);
                for a in 0..big {
                    dot = dot + point[a].scale(t[(a, i)]);
                }
                (0..big)
                    .map(|a| (Jet::constant(t[(a, i)]) - point[a] * dot) / r)
                    .collect()
            })
            .collect();
        Some(ChartJets {
            point,
            coordinate_fields,
        })
    }
}

fn check_arity(f: &ScalarField, ambient: usize) -> Result<(), SphereError> {
    if f.arity() > ambient {
        return Err(SphereError::Arity {
            arity: f.arity(),
            ambient,
        });
    }
    Ok(())
}

fn eval_table(t: &DerivativeTable, p: &DVector<f64>) -> (f64, DVector<f64>, DMatrix<f64>) {
    let x = p.as_slice();
    let n = p.len();
    let f = t.f.eval(x);
    let g = DVector::from_fn(n, |i, _| t.grad[i].eval(x));
    let h = DMatrix::from_fn(n, n, |i, j| t.hess[i][j].eval(x));
    (f, g, h)
}

/// Intrinsic Hessian `Hess_R f(X,Y) - (p . grad f)(X.Y)`.
pub fn hessian_g(
    f: &DerivativeTable,
    x: &TangentVector,
    y: &TangentVector,
) -> Result<f64, SphereError> {
    if x.base != y.base {
        return Err(SphereError::MismatchedBase);
    }
    let p = x.base.coords();
    if f.dim() != p.len() {
        return Err(SphereError::DimensionMismatch {
            expected: p.len(),
            found: f.dim(),
        });
    }
    let (_, g, h) = eval_table(f, p);
    Ok(x.v.dot(&(&h * &y.v)) - p.dot(&g) * x.v.dot(&y.v))
}

/// `d^2/dt^2 f(cos t p + sin t v)` at `t = 0` by symbolic differentiation in
/// `t`, rescaled so the result is `Hess(v, v)` for any length of `v`.
pub fn geodesic_hessian(f: &ScalarField, p: &DVector<f64>, v: &DVector<f64>) -> f64 {
    let len = v.norm();
    if len == 0.0 {
        return 0.0;
    }
    let u = v / len;
    let t = ScalarField::coordinate(0);
    let curve: Vec<ScalarField> = (0..p.len())
        .map(|i| {
            ScalarField::constant(p[i])
                .mul(&t.cos())
                .add(&ScalarField::constant(u[i]).mul(&t.sin()))
        })
        .collect();
    let restricted = f.substitute(&curve);
    restricted.derivative(0).derivative(0).eval(&[0.0]) * len * len
}

/// The Codazzi tensor `A_{f,c} = Hess f + (f + c) g` on the round sphere.
#[derive(Debug, Clone)]
pub struct CodazziTensor {
    table: DerivativeTable,
    c: f64,
}

impl CodazziTensor {
    pub fn new(f: &ScalarField, c: f64, n: usize) -> Result<Self, SphereError> {
        check_arity(f, n + 1)?;
        Ok(CodazziTensor {
            table: DerivativeTable::new(f, n + 1),
            c,
        })
    }

    pub fn table(&self) -> &DerivativeTable {
        &self.table
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// `A_q(u, v)` for `u, v` tangent at `q`, on any scalar type.
    fn eval_generic<T: Scalar>(&self, q: &[T], u: &[T], v: &[T]) -> T {
        let n = q.len();
        let mut huv = T::zero();
        let mut qg = T::zero();
        let mut uv = T::zero();
        for a in 0..n {
            qg = qg + q[a] * self.table.grad[a].eval(q);
            uv = uv + u[a] * v[a];
            for b in 0..n {
                huv = huv + u[a] * self.table.hess[a][b].eval(q) * v[b];
            }
        }
        huv - qg * uv + (self.table.f.eval(q) + T::from_f64(self.c)) * uv
    }

    pub fn eval(&self, p: &DVector<f64>, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        self.eval_generic(p.as_slice(), x.as_slice(), y.as_slice())
    }

    /// `(nabla_X A)(Y, Z)`: the derivative along `X` of `A(Y~, Z~)` for
    /// canonical extensions, which are parallel at `p`.
    pub fn covariant(&self, p: &DVector<f64>, x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>) -> f64 {
        let q = Jet::variables(p.as_slice());
        let ext = |v: &DVector<f64>| -> Vec<Jet> {
            let mut vq = Jet::constant(0.0);
            for a in 0..q.len() {
                vq = vq + q[a].scale(v[a]);
            }
            (0..q.len()).map(|a| Jet::constant(v[a]) - vq * q[a]).collect()
        };
        let val = self.eval_generic(&q, &ext(y), &ext(z));
        (0..p.len()).map(|a| val.grad(a) * x[a]).sum()
    }

    /// `(nabla_X A)(Y, Z) - (nabla_Y A)(X, Z)`.
    pub fn codazzi_residual(&self, p: &DVector<f64>, x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>) -> f64 {
        self.covariant(p, x, y, z) - self.covariant(p, y, x, z)
    }
}

/// Outcome of the nondegeneracy screen run at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Screening {
    pub samples: u64,
    pub min_abs_eigenvalue: f64,
    pub positive_eigenvalues: usize,
}

/// The `g`-Codazzi map `psi` with `A_{f,c}(X, Y) = g(psi^{-1} X, Y)`.
///
/// `psi^{-1}` is extended to the ambient space as
/// `F(q) = P H P + (f + c - q.grad f) P + q q^T` with `P = I - q q^T`, which
/// preserves tangent spaces and fixes the normal direction.
#[derive(Debug, Clone)]
pub struct CodazziMap {
    tensor: CodazziTensor,
    n: usize,
    screening: Screening,
}

impl CodazziMap {
    pub fn new(f: &ScalarField, c: f64, n: usize) -> Result<Self, SphereError> {
        Self::with_screening(f, c, n, DEFAULT_SCREEN_SAMPLES, SCREEN_SEED)
    }

    pub fn with_screening(
        f: &ScalarField,
        c: f64,
        n: usize,
        samples: u64,
        seed: u64,
    ) -> Result<Self, SphereError> {
        let tensor = CodazziTensor::new(f, c, n)?;
        let unscreened = CodazziMap {
            tensor,
            n,
            screening: Screening {
                samples: 0,
                min_abs_eigenvalue: f64::INFINITY,
                positive_eigenvalues: 0,
            },
        };
        let screening = unscreened.screen(f, samples, seed)?;
        Ok(CodazziMap {
            screening,
            ..unscreened
        })
    }

    pub fn tensor(&self) -> &CodazziTensor {
        &self.tensor
    }

    pub fn screening(&self) -> &Screening {
        &self.screening
    }

    pub fn sphere(&self) -> Sphere {
        Sphere::new(self.n)
    }

    /// Eigenvalues of `psi^{-1}` on `T_p`, ascending.
    pub fn eigenvalues(&self, p: &DVector<f64>) -> Vec<f64> {
        let s = self.sphere();
        let t = s.tangent_basis(p);
        let f = self.f_matrix(p);
        let ft = t.transpose() * f * &t;
        let ft = (&ft + ft.transpose()) * 0.5;
        let mut ev: Vec<f64> = ft.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    fn f_matrix(&self, p: &DVector<f64>) -> DMatrix<f64> {
        let big = self.n + 1;
        let (f, g, h) = eval_table(&self.tensor.table, p);
        let proj = DMatrix::identity(big, big) - p * p.transpose();
        let s = f + self.tensor.c - p.dot(&g);
        &proj * h * &proj + &proj * s + p * p.transpose()
    }

    fn screen(&self, f: &ScalarField, samples: u64, seed: u64) -> Result<Screening, SphereError> {
        let s = self.sphere();
        let big = self.n + 1;
        let eigen = |p: &DVector<f64>| self.eigenvalues(p);
        let path = |a: &DVector<f64>, b: &DVector<f64>, t: f64| {
            let v = a * (1.0 - t) + b * t;
            let norm = v.norm();
            v / norm
        };
        if f.is_x1_times_x2() && big >= 3 && self.tensor.c.abs() <= 1.5 {
            // eigenvalues fill [c - 3/2, c + 3/2]; the two points below sit on
            // either side of zero
            let r = std::f64::consts::FRAC_1_SQRT_2;
            let mut a = DVector::zeros(big);
            a[0] = r;
            a[1] = r;
            let mut b = DVector::zeros(big);
            b[0] = r;
            b[1] = -r;
            let reason = "analytic bound |c| <= 3/2";
            for p in [&a, &b] {
                let (m, _) = inertia(&eigen(p));
                if m < DEGENERACY_TOL {
                    return Err(degenerate(p, m, reason));
                }
            }
            return Err(bisect_crossing(&a, &b, &eigen, &path, reason));
        }
        screen_samples(samples, |i| s.sample_point(seed, i), &eigen, &path)
    }
}

/// Smallest `|eigenvalue|` and number of positive eigenvalues.
fn inertia(ev: &[f64]) -> (f64, usize) {
    let min_abs = ev.iter().fold(f64::INFINITY, |a, b| a.min(b.abs()));
    (min_abs, ev.iter().filter(|&&e| e > 0.0).count())
}

fn degenerate(p: &DVector<f64>, eigenvalue: f64, reason: &str) -> SphereError {
    SphereError::Degenerate {
        witness: p.iter().copied().collect(),
        eigenvalue,
        reason: reason.to_string(),
    }
}

/// Bisects `path(a, b, t)` for the point where the inertia changes.
fn bisect_crossing<E, P>(a: &DVector<f64>, b: &DVector<f64>, eigen: &E, path: &P, reason: &str) -> SphereError
where
    E: Fn(&DVector<f64>) -> Vec<f64>,
    P: Fn(&DVector<f64>, &DVector<f64>, f64) -> DVector<f64>,
{
    let ka = inertia(&eigen(a)).1;
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if inertia(&eigen(&path(a, b, mid))).1 == ka {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let w = path(a, b, 0.5 * (lo + hi));
    let m = inertia(&eigen(&w)).0;
    degenerate(&w, m, reason)
}

/// Rejects a symmetric field whose eigenvalues come near zero or whose
/// inertia differs between samples; in the latter case the witness is located
/// by bisection between the two samples.
pub(crate) fn screen_samples<S, E, P>(samples: u64, sample: S, eigen: &E, path: &P) -> Result<Screening, SphereError>
where
    S: Fn(u64) -> DVector<f64>,
    E: Fn(&DVector<f64>) -> Vec<f64>,
    P: Fn(&DVector<f64>, &DVector<f64>, f64) -> DVector<f64>,
{
    let first = sample(0);
    let (m0, k0) = inertia(&eigen(&first));
    if m0 < DEGENERACY_TOL {
        return Err(degenerate(&first, m0, "near-zero eigenvalue"));
    }
    let mut min_abs = m0;
    for i in 1..samples {
        let p = sample(i);
        let (m, k) = inertia(&eigen(&p));
        if m < DEGENERACY_TOL {
            return Err(degenerate(&p, m, "near-zero eigenvalue"));
        }
        if k != k0 {
            return Err(bisect_crossing(&first, &p, eigen, path, "inertia changes between samples"));
        }
        min_abs = min_abs.min(m);
    }
    Ok(Screening {
        samples,
        min_abs_eigenvalue: min_abs,
        positive_eigenvalues: k0,
    })
}

impl TwistField for CodazziMap {
    fn psi_inv(&self, p: &DVector<f64>) -> EndoJet {
        let big = self.n + 1;
        let t = &self.tensor.table;
        let (f, g, h) = eval_table(t, p);
        let x = p.as_slice();
        let id = DMatrix::identity(big, big);
        let proj = &id - p * p.transpose();
        let s = f + self.tensor.c - p.dot(&g);
        let value = &proj * &h * &proj + &proj * s + p * p.transpose();
        let derivs = (0..big)
            .map(|a| {
                let mut w = DVector::zeros(big);
                w[a] = 1.0;
                let dp = -(&w * p.transpose() + p * w.transpose());
                let dh = DMatrix::from_fn(big, big, |i, j| t.third[i][j][a].eval(x));
                let ds = -p.dot(&(&h * &w));
                &dp * &h * &proj + &proj * dh * &proj + &proj * &h * &dp + &proj * ds + &dp * s
                    + (&w * p.transpose() + p * w.transpose())
            })
            .collect();
        EndoJet { value, derivs }
    }

    fn psi_inv_jets(&self, q: &[Jet]) -> Option<Vec<Vec<Jet>>> {
        let big = self.n + 1;
        let t = &self.tensor.table;
        let f = t.f.eval(q);
        let g: Vec<Jet> = (0..big).map(|i| t.grad[i].eval(q)).collect();
        let h: Vec<Vec<Jet>> = (0..big)
            .map(|i| (0..big).map(|j| t.hess[i][j].eval(q)).collect())
            .collect();
        let mut qg = Jet::constant(0.0);
        for a in 0..big {
            qg = qg + q[a] * g[a];
        }
        let s = f + Jet::constant(self.tensor.c) - qg;
        let proj: Vec<Vec<Jet>> = (0..big)
            .map(|i| {
                (0..big)
                    .map(|j| Jet::constant(if i == j { 1.0 } else { 0.0 }) - q[i] * q[j])
                    .collect()
            })
            .collect();
        let php = crate::field::jet_matmul(&crate::field::jet_matmul(&proj, &h), &proj);
        Some(
            (0..big)
                .map(|i| {
                    (0..big)
                        .map(|j| php[i][j] + proj[i][j] * s + q[i] * q[j])
                        .collect()
                })
                .collect(),
        )
    }
}

/// Lines of the Fano plane (1-based): `e_a x e_b = e_c` for each listed
/// `(a, b, c)` and its cyclic shifts.
pub const CAYLEY_TRIPLES: [(usize, usize, usize); 7] = [
    (1, 2, 3),
    (1, 4, 5),
    (2, 4, 6),
    (3, 4, 7),
    (1, 7, 6),
    (2, 5, 7),
    (3, 6, 5),
];

/// Structure constants `eps[a][b][c]` with `(e_a x e_b) = sum_c eps e_c`.
fn epsilon() -> [[[f64; 7]; 7]; 7] {
    let mut e = [[[0.0; 7]; 7]; 7];
    for &(a, b, c) in &CAYLEY_TRIPLES {
        let (a, b, c) = (a - 1, b - 1, c - 1);
        for (x, y, z) in [(a, b, c), (b, c, a), (c, a, b)] {
            e[x][y][z] = 1.0;
            e[y][x][z] = -1.0;
        }
    }
    e
}

pub fn cross7(u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    assert_eq!(u.len(), 7);
    assert_eq!(v.len(), 7);
    let e = epsilon();
    DVector::from_fn(7, |c, _| {
        let mut s = 0.0;
        for a in 0..7 {
            for b in 0..7 {
                s += e[a][b][c] * u[a] * v[b];
            }
        }
        s
    })
}

/// Matrix of `v -> q x v`.
pub fn cross_matrix(q: &DVector<f64>) -> DMatrix<f64> {
    let e = epsilon();
    DMatrix::from_fn(7, 7, |c, b| (0..7).map(|a| e[a][b][c] * q[a]).sum())
}

/// `J_q v = q x v` with its ambient derivatives `D_w J = [w x]`.
pub fn standard_j6(p: &DVector<f64>) -> EndoJet {
    EndoJet {
        value: cross_matrix(p),
        derivs: (0..7)
            .map(|a| {
                let mut w = DVector::zeros(7);
                w[a] = 1.0;
                cross_matrix(&w)
            })
            .collect(),
    }
}

/// Result of [`nijenhuis_kernel_check`] with the quantities it decided on.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelCheck {
    pub passed: bool,
    pub singular_values: Vec<f64>,
    /// Sine of the largest principal angle between the numerical kernel and
    /// `span{X, JX}`.
    pub kernel_angle: f64,
}

/// Whether `Y -> N_J(X, Y)` on `T_p S^6` has rank 4 with kernel
/// `span{X, JX}`.
pub fn nijenhuis_kernel_check(p: &SpherePoint, x: &DVector<f64>) -> Result<KernelCheck, SphereError> {
    let s6 = Sphere::s6();
    let pc = p.coords();
    if pc.len() != 7 {
        return Err(SphereError::DimensionMismatch {
            expected: 7,
            found: pc.len(),
        });
    }
    let xt = TangentVector::new(p.clone(), x.clone())?;
    let norm = xt.v.norm();
    if norm < 1e-10 {
        return Err(SphereError::TooShort(norm));
    }
    let t = s6.tangent_basis(pc);
    let j = standard_j6(pc);
    let xe = s6.extend(pc, x);
    let mut m = DMatrix::zeros(6, 6);
    for b in 0..6 {
        let ye = s6.extend(pc, &t.column(b).into());
        let nv = nijenhuis_fields(&s6, &j, &xe, &ye);
        m.set_column(b, &(t.transpose() * nv));
    }
    let svd = m.svd(false, true);
    let mut order: Vec<usize> = (0..6).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].partial_cmp(&svd.singular_values[a]).unwrap());
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let v_t = svd.v_t.expect("requested");
    let kernel = DMatrix::from_fn(6, 2, |r, c| v_t[(order[4 + c], r)]);
    // orthonormal basis of span{X, JX} in tangent coordinates
    let xc = t.transpose() * x;
    let jxc = t.transpose() * (&j.value * x);
    let u = DMatrix::from_columns(&[xc.normalize(), jxc.normalize()]);
    let residual = &u - &kernel * (kernel.transpose() * &u);
    let angle = spectral_norm(&residual);
    let scale = sv[0].max(f64::MIN_POSITIVE);
    let rank4 = sv[3] > 1e-6 * scale && sv[4] < 1e-8 * scale && sv[5] < 1e-8 * scale;
    Ok(KernelCheck {
        passed: rank4 && angle < 1e-8,
        singular_values: sv,
        kernel_angle: angle,
    })
}

/// The curvature operator of the round `S^n` on two-forms: the identity.
pub fn round_curvature_operator(n: usize) -> DMatrix<f64> {
    let d = WedgeSpace::new(n).len();
    DMatrix::identity(d, d)
}

/// Whether `F` preserves the cross product on all basis pairs (and is then
/// orthogonal, as every element of `G_2` is).
pub fn g2_membership(f: &DMatrix<f64>) -> Result<bool, SphereError> {
    if f.nrows() != 7 || f.ncols() != 7 {
        return Err(SphereError::DimensionMismatch {
            expected: 7,
            found: f.nrows(),
        });
    }
    if f.determinant().abs() <= 1e-12 {
        return Err(SphereError::Singular);
    }
    let scale = f.amax().max(1.0);
    let basis = |i: usize| {
        let mut v = DVector::zeros(7);
        v[i] = 1.0;
        v
    };
    for a in 0..7 {
        for b in a + 1..7 {
            let lhs = f * cross7(&basis(a), &basis(b));
            let rhs = cross7(&f.column(a).into(), &f.column(b).into());
            if (lhs - rhs).amax() > 1e-10 * scale * scale {
                return Ok(false);
            }
        }
    }
    let orth = (f.transpose() * f - DMatrix::identity(7, 7)).amax();
    Ok(orth < 1e-10)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(i: usize, n: usize) -> DVector<f64> {
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        v
    }

    #[test]
    fn projection_examples() {
        let p = SpherePoint::new(e(6, 7)).unwrap();
        assert_eq!(project(&p, &e(0, 7)).vector(), &e(0, 7));
        assert_eq!(project(&p, &e(6, 7)).vector().norm(), 0.0);
        assert!(SpherePoint::new(e(0, 7) * 2.0).is_err());
        assert!(TangentVector::new(p, e(6, 7)).is_err());
    }

    #[test]
    fn tangent_basis_is_orthonormal_and_tangent() {
        let s = Sphere::s6();
        for i in 0..20 {
            let p = s.sample_point(1, i);
            let t = s.tangent_basis(&p);
            assert!((t.transpose() * &t - DMatrix::identity(6, 6)).amax() < 1e-14);
            assert!((t.transpose() * &p).amax() < 1e-14);
        }
        let t = s.tangent_basis(&e(6, 7));
        assert!((t.transpose() * e(6, 7)).amax() < 1e-15);
    }

    #[test]
    fn cayley_table_values() {
        assert_eq!(cross7(&e(0, 7), &e(1, 7)), e(2, 7));
        assert_eq!(cross7(&e(1, 7), &e(0, 7)), -e(2, 7));
        assert_eq!(cross7(&e(2, 7), &e(3, 7)), e(6, 7));
    }

    #[test]
    fn j6_at_north_pole() {
        let p = e(6, 7);
        let j = standard_j6(&p).value;
        let t = Sphere::s6().tangent_basis(&p);
        let jt = t.transpose() * &j * &t;
        assert!((&jt * &jt + DMatrix::identity(6, 6)).amax() < 1e-14);
        assert!((j * &p).amax() == 0.0);
    }

    #[test]
    fn x1x2_hessian_closed_form() {
        let f = ScalarField::parse("x1*x2").unwrap();
        let t = DerivativeTable::new(&f, 7);
        let s = Sphere::s6();
        let p = s.sample_point(3, 0);
        let v = s.tangent_basis(&p).column(0).into_owned();
        let sp = SpherePoint::new(p.clone()).unwrap();
        let tv = TangentVector::new(sp, v.clone()).unwrap();
        let h = hessian_g(&t, &tv, &tv).unwrap();
        assert!((h - 2.0 * (v[0] * v[1] - p[0] * p[1])).abs() < 1e-14);
        assert!((geodesic_hessian(&f, &p, &v) - h).abs() < 1e-13);
    }

    #[test]
    fn degenerate_codazzi_map_is_rejected_with_witness() {
        let f = ScalarField::parse("x1*x2").unwrap();
        match CodazziMap::new(&f, 1.0, 6) {
            Err(SphereError::Degenerate { witness, eigenvalue, .. }) => {
                let w = DVector::from_vec(witness);
                assert!((w.norm() - 1.0).abs() < 1e-12);
                assert!(eigenvalue < 1e-8);
            }
            other => panic!("expected degeneracy, got {other:?}"),
        }
    }

    #[test]
    fn constant_field_gives_scalar_map() {
        let f = ScalarField::constant(0.0);
        let map = CodazziMap::with_screening(&f, 2.0, 6, 50, 1).unwrap();
        let p = Sphere::s6().sample_point(9, 9);
        let ev = map.eigenvalues(&p);
        assert!(ev.iter().all(|x| (x - 2.0).abs() < 1e-14));
    }
}
