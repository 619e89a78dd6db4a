//! Twisting an almost Hermitian structure `(g, J, omega)` by a field of
//! automorphisms `psi`:
//!
//! `g^psi = g(psi^{-1} ., psi^{-1} .)`, `J^psi = psi J psi^{-1}`,
//! `omega^psi = omega(psi^{-1} ., psi^{-1} .)`.
//!
//! Everything here works on any [`Geometry`] backend. Operations that rely on
//! `psi` being `g`-Codazzi live on [`CodazziTwist`], which can only be built
//! from sampled evidence.

use std::ops::Deref;

use nalgebra::{Complex, DMatrix, DVector};
use thiserror::Error;

use crate::chart::{chart_curvature, ChartCurvature};
use crate::field::{endo_covariant_matrix, in_tangent_basis, nijenhuis_fields, tangent_projector, EndoJet, FieldJet, Geometry, TwistField};
use crate::multilinear::{asymmetry, wedge_operator, Endo, Metric, TwoForm};
use crate::sampling;

/// Relative tolerance for the sampled Codazzi condition.
pub const CODAZZI_TOL: f64 = 1e-8;
/// Below this a sampled Nijenhuis tensor is consistent with zero.
pub const INTEGRABLE_TOL: f64 = 1e-9;
/// Above this a sampled obstruction certifies nonintegrability.
pub const CERTIFICATE_TOL: f64 = 1e-4;
pub const NEARLY_KAHLER_TOL: f64 = 1e-8;
pub const SELF_ADJOINT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TwistError {
    #[error("psi is singular at the evaluation point")]
    Singular,
    #[error("the backend has no almost complex structure")]
    NoComplexStructure,
    #[error("the backend or twist has no jet chart")]
    NoChart,
    #[error("base structure is not nearly Kahler (defect {0:e})")]
    NotNearlyKahler(f64),
    #[error("psi is not self-adjoint (defect {0:e})")]
    NotSelfAdjoint(f64),
    #[error("twisted structure is not integrable at this point (|N| = {0:e})")]
    NotIntegrable(f64),
    #[error("psi does not preserve tangent spaces (defect {0:e})")]
    NotTangentPreserving(f64),
    #[error("Codazzi condition fails near {witness:?} (residual {residual:e})")]
    NotCodazzi { residual: f64, witness: Vec<f64> },
}

/// Twisted pointwise data as plain matrices: `g`, `J` and `omega = J^T g`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwistedMatrices {
    pub g: DMatrix<f64>,
    pub j: DMatrix<f64>,
    pub omega: DMatrix<f64>,
}

impl TwistedMatrices {
    pub fn new(g: DMatrix<f64>, j: DMatrix<f64>) -> Self {
        let omega = j.transpose() * &g;
        TwistedMatrices { g, j, omega }
    }

    /// Twist by the automorphism with inverse `psi_inv`.
    pub fn twist(&self, psi_inv: &DMatrix<f64>) -> Option<TwistedMatrices> {
        let psi = psi_inv.clone().try_inverse()?;
        Some(TwistedMatrices {
            g: psi_inv.transpose() * &self.g * psi_inv,
            j: &psi * &self.j * psi_inv,
            omega: psi_inv.transpose() * &self.omega * psi_inv,
        })
    }

    /// Largest defect of `J^2 = -1`, `g(J., J.) = g` and `omega = g(J., .)`
    /// on the span of the columns of `t`.
    pub fn defect(&self, t: &DMatrix<f64>) -> f64 {
        let jt = &self.j * t;
        let jsq = (&self.j * &jt + t).amax();
        let compat = (jt.transpose() * &self.g * &jt - t.transpose() * &self.g * t).amax();
        let omega = (t.transpose() * (&self.omega - self.j.transpose() * &self.g) * t).amax();
        jsq.max(compat).max(omega)
    }
}

/// A complex tangent vector `re + i im`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector {
    pub re: DVector<f64>,
    pub im: DVector<f64>,
}

impl ComplexVector {
    /// `(v - i I v) / 2`, of type (1,0) for the complex structure `I`.
    pub fn type_10(i: &DMatrix<f64>, v: &DVector<f64>) -> Self {
        ComplexVector {
            re: v * 0.5,
            im: -(i * v) * 0.5,
        }
    }

    /// `(v + i I v) / 2`.
    pub fn type_01(i: &DMatrix<f64>, v: &DVector<f64>) -> Self {
        ComplexVector {
            re: v * 0.5,
            im: (i * v) * 0.5,
        }
    }

    pub fn map(&self, a: &DMatrix<f64>) -> ComplexVector {
        ComplexVector {
            re: a * &self.re,
            im: a * &self.im,
        }
    }

    fn parts(&self) -> [(&DVector<f64>, Complex<f64>); 2] {
        [(&self.re, Complex::new(1.0, 0.0)), (&self.im, Complex::new(0.0, 1.0))]
    }
}

/// Complex-multilinear extension of a real trilinear map.
pub fn complexify3<F>(x: &ComplexVector, y: &ComplexVector, z: &ComplexVector, f: F) -> Complex<f64>
where
    F: Fn(&DVector<f64>, &DVector<f64>, &DVector<f64>) -> f64,
{
    let mut s = Complex::new(0.0, 0.0);
    for (a, ca) in x.parts() {
        for (b, cb) in y.parts() {
            for (c, cc) in z.parts() {
                s += ca * cb * cc * f(a, b, c);
            }
        }
    }
    s
}

/// `dbeta(X,Y,Z)` for a two-form field given by its ambient matrix jet, from
/// the invariant formula with brackets.
pub fn exterior_d2<G: Geometry + ?Sized>(
    geom: &G,
    beta: &EndoJet,
    x: &FieldJet,
    y: &FieldJet,
    z: &FieldJet,
) -> f64 {
    let b = &beta.value;
    let ev = |u: &DVector<f64>, v: &DVector<f64>| u.dot(&(b * v));
    // directional derivative of beta(U, V) along W
    let along = |w: &FieldJet, u: &FieldJet, v: &FieldJet| {
        u.value.dot(&(beta.directional(&w.value) * &v.value)) + ev(&u.derivative(&w.value), &v.value)
            + ev(&u.value, &v.derivative(&w.value))
    };
    along(x, y, z) - along(y, x, z) + along(z, x, y) - ev(&geom.bracket(x, y), &z.value)
        + ev(&geom.bracket(x, z), &y.value)
        - ev(&geom.bracket(y, z), &x.value)
}

/// The `psi`-twist of a backend's structure.
pub struct Twisted<'a, G: ?Sized, T: ?Sized> {
    geom: &'a G,
    psi: &'a T,
}

impl<G: ?Sized, T: ?Sized> Clone for Twisted<'_, G, T> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<G: ?Sized, T: ?Sized> Copy for Twisted<'_, G, T> {}

impl<'a, G, T> Twisted<'a, G, T>
where
    G: Geometry + ?Sized,
    T: TwistField + ?Sized,
{
    pub fn new(geom: &'a G, psi: &'a T) -> Self {
        Twisted { geom, psi }
    }

    pub fn geometry(&self) -> &'a G {
        self.geom
    }

    pub fn twist_field(&self) -> &'a T {
        self.psi
    }

    pub fn psi_inv(&self, p: &DVector<f64>) -> EndoJet {
        self.psi.psi_inv(p)
    }

    pub fn psi(&self, p: &DVector<f64>) -> Result<EndoJet, TwistError> {
        self.psi.psi_inv(p).inverse().ok_or(TwistError::Singular)
    }

    fn base_j(&self, p: &DVector<f64>) -> Result<EndoJet, TwistError> {
        self.geom.complex_structure(p).ok_or(TwistError::NoComplexStructure)
    }

    /// `h = F^T g F` with `F = psi^{-1}`.
    pub fn metric(&self, p: &DVector<f64>) -> EndoJet {
        let f = self.psi_inv(p);
        f.transpose().compose(&self.geom.metric(p)).compose(&f)
    }

    pub fn complex_structure(&self, p: &DVector<f64>) -> Result<EndoJet, TwistError> {
        Ok(self.psi(p)?.compose(&self.base_j(p)?).compose(&self.psi_inv(p)))
    }

    pub fn base_omega(&self, p: &DVector<f64>) -> Result<EndoJet, TwistError> {
        Ok(self.base_j(p)?.transpose().compose(&self.geom.metric(p)))
    }

    pub fn omega(&self, p: &DVector<f64>) -> Result<EndoJet, TwistError> {
        let f = self.psi_inv(p);
        Ok(f.transpose().compose(&self.base_omega(p)?).compose(&f))
    }

    pub fn matrices(&self, p: &DVector<f64>) -> Result<TwistedMatrices, TwistError> {
        Ok(TwistedMatrices {
            g: self.metric(p).value,
            j: self.complex_structure(p)?.value,
            omega: self.omega(p)?.value,
        })
    }

    pub fn base_matrices(&self, p: &DVector<f64>) -> Result<TwistedMatrices, TwistError> {
        Ok(TwistedMatrices::new(self.geom.metric(p).value, self.base_j(p)?.value))
    }

    fn h(&self, p: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        u.dot(&(self.metric(p).value * v))
    }

    /// Ambient matrix of `nabla^g_w psi^{-1}`.
    pub fn nabla_psi_inv(&self, p: &DVector<f64>, w: &DVector<f64>) -> DMatrix<f64> {
        endo_covariant_matrix(self.geom, p, w, &self.psi_inv(p))
    }

    /// Ambient matrix of `nabla^g_w J`.
    pub fn nabla_j(&self, p: &DVector<f64>, w: &DVector<f64>) -> Result<DMatrix<f64>, TwistError> {
        Ok(endo_covariant_matrix(self.geom, p, w, &self.base_j(p)?))
    }

    /// `2 h(nabla^h_X Y, z)` from `nabla^g` and `nabla^g psi^{-1}`, valid for
    /// any invertible `psi`.
    pub fn lc_general(&self, p: &DVector<f64>, x: &FieldJet, y: &FieldJet, z: &DVector<f64>) -> Result<f64, TwistError> {
        let psi = self.psi(p)?.value;
        let (xv, yv) = (&x.value, &y.value);
        let a = |w: &DVector<f64>, v: &DVector<f64>| &psi * (self.nabla_psi_inv(p, w) * v);
        let h = |u: &DVector<f64>, v: &DVector<f64>| self.h(p, u, v);
        Ok(2.0 * h(&self.geom.covariant(p, xv, y), z) + h(&a(xv, yv), z) + h(&a(yv, xv), z) + h(&a(xv, z), yv)
            - h(&a(z, xv), yv)
            + h(&a(yv, z), xv)
            - h(&a(z, yv), xv))
    }

    /// `2 h(nabla^h_X Y, Z)` by the Koszul formula on `h` itself.
    pub fn koszul(&self, p: &DVector<f64>, x: &FieldJet, y: &FieldJet, z: &FieldJet) -> f64 {
        let hj = self.metric(p);
        let h = |u: &DVector<f64>, v: &DVector<f64>| u.dot(&(&hj.value * v));
        let along = |w: &FieldJet, u: &FieldJet, v: &FieldJet| {
            u.value.dot(&(hj.directional(&w.value) * &v.value))
                + h(&u.derivative(&w.value), &v.value)
                + h(&u.value, &v.derivative(&w.value))
        };
        let br = |u: &FieldJet, v: &FieldJet| self.geom.bracket(u, v);
        along(x, y, z) + along(y, x, z) - along(z, x, y) + h(&br(x, y), &z.value)
            - h(&br(x, z), &y.value)
            - h(&br(y, z), &x.value)
    }

    /// `nabla^h_X Y` solved from the Koszul formula over the tangent basis.
    pub fn koszul_vector(&self, p: &DVector<f64>, x: &FieldJet, y: &FieldJet) -> DVector<f64> {
        let t = self.geom.tangent_basis(p);
        let hm = self.metric(p).value;
        let gram = t.transpose() * &hm * &t;
        let rhs = DVector::from_fn(t.ncols(), |b, _| {
            let z = self.geom.extend(p, &t.column(b).into());
            0.5 * self.koszul(p, x, y, &z)
        });
        let c = gram.lu().solve(&rhs).expect("twisted metric is nondegenerate");
        t * c
    }

    /// `psi^{-1}[psi X, psi Y] - [X, Y]`.
    pub fn rho(&self, p: &DVector<f64>, x: &FieldJet, y: &FieldJet) -> Result<DVector<f64>, TwistError> {
        let psi = self.psi(p)?;
        let f = self.psi_inv(p).value;
        Ok(f * self.geom.bracket(&psi.apply(x), &psi.apply(y)) - self.geom.bracket(x, y))
    }

    /// `S^psi(U, V)` from the given field extensions.
    pub fn s_tensor_fields(&self, p: &DVector<f64>, u: &FieldJet, v: &FieldJet) -> Result<DVector<f64>, TwistError> {
        let j = self.base_j(p)?;
        let ju = j.apply(u);
        let jv = j.apply(v);
        Ok(&j.value * self.rho(p, &ju, v)? + &j.value * self.rho(p, u, &jv)? + self.rho(p, u, v)?
            - self.rho(p, &ju, &jv)?)
    }

    /// `S^psi(u, v)` using the backend's canonical extensions.
    pub fn s_tensor(&self, p: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>, TwistError> {
        self.s_tensor_fields(p, &self.geom.extend(p, u), &self.geom.extend(p, v))
    }

    /// `N_J(x, y)` of the base structure.
    pub fn nijenhuis_base(&self, p: &DVector<f64>, x: &DVector<f64>, y: &DVector<f64>) -> Result<DVector<f64>, TwistError> {
        let j = self.base_j(p)?;
        Ok(nijenhuis_fields(self.geom, &j, &self.geom.extend(p, x), &self.geom.extend(p, y)))
    }

    /// `N_{J^psi}(x, y)`.
    pub fn nijenhuis_twisted(&self, p: &DVector<f64>, x: &DVector<f64>, y: &DVector<f64>) -> Result<DVector<f64>, TwistError> {
        let i = self.complex_structure(p)?;
        Ok(nijenhuis_fields(self.geom, &i, &self.geom.extend(p, x), &self.geom.extend(p, y)))
    }

    /// Largest `|N_{J^psi}(t_a, t_b)|` over the tangent basis.
    pub fn nijenhuis_twisted_max(&self, p: &DVector<f64>) -> Result<f64, TwistError> {
        let t = self.geom.tangent_basis(p);
        let mut m: f64 = 0.0;
        for a in 0..t.ncols() {
            for b in a + 1..t.ncols() {
                let n = self.nijenhuis_twisted(p, &t.column(a).into(), &t.column(b).into())?;
                m = m.max(n.norm());
            }
        }
        Ok(m)
    }

    /// `|psi^{-1} N_{J^psi}(x, y) - N_J(U, V) - S^psi(U, V)|` with
    /// `U = psi^{-1} x`, `V = psi^{-1} y`.
    pub fn nijenhuis_twist_residual(&self, p: &DVector<f64>, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64, TwistError> {
        let f = self.psi_inv(p).value;
        let lhs = &f * self.nijenhuis_twisted(p, x, y)?;
        let u = &f * x;
        let v = &f * y;
        let rhs = self.nijenhuis_base(p, &u, &v)? + self.s_tensor(p, &u, &v)?;
        Ok((lhs - rhs).norm())
    }

    /// `eta = g(psi^{-1} ., .)` as the matrix `F^T g`.
    pub fn eta(&self, p: &DVector<f64>) -> EndoJet {
        self.psi_inv(p).transpose().compose(&self.geom.metric(p))
    }

    /// Antisymmetric part of `eta`.
    pub fn eta_a(&self, p: &DVector<f64>) -> EndoJet {
        let e = self.eta(p);
        e.add(&e.transpose().scale(-1.0)).scale(0.5)
    }

    /// `d eta_a (x, y, z)` with canonical extensions.
    pub fn d_eta_a(&self, p: &DVector<f64>, x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>) -> f64 {
        let e = |v: &DVector<f64>| self.geom.extend(p, v);
        exterior_d2(self.geom, &self.eta_a(p), &e(x), &e(y), &e(z))
    }

    /// `d omega^psi (x, y, z)` by direct exterior differentiation.
    pub fn d_omega_direct(&self, p: &DVector<f64>, x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>) -> Result<f64, TwistError> {
        let e = |v: &DVector<f64>| self.geom.extend(p, v);
        Ok(exterior_d2(self.geom, &self.omega(p)?, &e(x), &e(y), &e(z)))
    }

    /// `Tr(nabla_x psi^{-1}) - sum_j g((nabla_{e_j} psi^{-1}) e_j, x)` for a
    /// `g`-orthonormal tangent frame given as columns.
    pub fn trace_residual(&self, p: &DVector<f64>, x: &DVector<f64>, frame: &DMatrix<f64>) -> f64 {
        let g = self.geom.metric(p).value;
        let lhs = in_tangent_basis(self.geom, p, &self.nabla_psi_inv(p, x)).trace();
        let rhs: f64 = frame
            .column_iter()
            .map(|e| {
                let e: DVector<f64> = e.into();
                (self.nabla_psi_inv(p, &e) * &e).dot(&(&g * x))
            })
            .sum();
        lhs - rhs
    }

    /// `(nabla_x psi^{-1}) y - (nabla_y psi^{-1}) x`.
    pub fn codazzi_defect(&self, p: &DVector<f64>, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        self.nabla_psi_inv(p, x) * y - self.nabla_psi_inv(p, y) * x
    }

    /// Size of the normal component of `psi^{-1}` applied to tangent vectors.
    pub fn tangent_defect(&self, p: &DVector<f64>) -> f64 {
        let t = self.geom.tangent_basis(p);
        let n = self.geom.ambient_dim();
        let normal = DMatrix::identity(n, n) - tangent_projector(self.geom, p);
        (normal * self.psi_inv(p).value * t).amax()
    }

    /// `||psi - psi^dagger||` on `T_p` in an orthonormal basis.
    pub fn self_adjoint_defect(&self, p: &DVector<f64>) -> Result<f64, TwistError> {
        let psi = in_tangent_basis(self.geom, p, &self.psi(p)?.value);
        Ok((&psi - psi.transpose()).amax())
    }

    /// Matrix of `psi` on `T_p` in the orthonormal tangent basis.
    pub fn psi_tangent(&self, p: &DVector<f64>) -> Result<DMatrix<f64>, TwistError> {
        Ok(in_tangent_basis(self.geom, p, &self.psi(p)?.value))
    }

    /// Curvature of `h` from a jet chart (of `g` itself when `twisted` is
    /// false).
    pub fn chart_curvature(&self, p: &DVector<f64>, twisted: bool) -> Result<ChartCurvature, TwistError> {
        if twisted {
            chart_curvature(self.geom, Some(self.psi), p).ok_or(TwistError::NoChart)
        } else {
            chart_curvature::<G, T>(self.geom, None, p).ok_or(TwistError::NoChart)
        }
    }
}

impl<'a, G, T> Twisted<'a, G, T>
where
    G: Geometry,
    T: TwistField + ?Sized,
{
    /// Samples the Codazzi condition on random unit tangent pairs; on success
    /// the returned handle unlocks the Codazzi-only formulas.
    pub fn verify_codazzi(&self, samples: u64, seed: u64) -> Result<CodazziTwist<'a, G, T>, TwistError> {
        if let Some(e) = sampling::par_max(samples, |i| self.tangent_defect(&self.geom.sample_point(seed, i))) {
            if e.value > CODAZZI_TOL {
                return Err(TwistError::NotTangentPreserving(e.value));
            }
        }
        let residual = |i: u64| {
            let p = self.geom.sample_point(seed, i);
            let mut rng = sampling::rng_for(seed ^ 0x0c0d_a221, i);
            let x = self.geom.random_tangent(&p, &mut rng).normalize();
            let y = self.geom.random_tangent(&p, &mut rng).normalize();
            let scale = self.psi_inv(&p).value.amax().max(1.0);
            self.codazzi_defect(&p, &x, &y).norm() / scale
        };
        let worst = sampling::par_max(samples, residual);
        if let Some(e) = worst {
            if !(e.value <= CODAZZI_TOL) {
                return Err(TwistError::NotCodazzi {
                    residual: e.value,
                    witness: self.geom.sample_point(seed, e.index).iter().copied().collect(),
                });
            }
        }
        Ok(CodazziTwist {
            inner: *self,
            samples,
            max_residual: worst.map_or(0.0, |e| e.value),
        })
    }
}

/// A twist whose Codazzi property has been checked at sampled points.
pub struct CodazziTwist<'a, G: ?Sized, T: ?Sized> {
    inner: Twisted<'a, G, T>,
    samples: u64,
    max_residual: f64,
}

impl<'a, G: ?Sized, T: ?Sized> Deref for CodazziTwist<'a, G, T> {
    type Target = Twisted<'a, G, T>;
    fn deref(&self) -> &Self::Target {
        &self.inner
    }
}

impl<'a, G, T> CodazziTwist<'a, G, T>
where
    G: Geometry + ?Sized,
    T: TwistField + ?Sized,
{
    /// For fields whose Codazzi property is known exactly (the `A_{f,c}`
    /// family), skipping the sampled check.
    pub fn assume(inner: Twisted<'a, G, T>) -> Self {
        CodazziTwist {
            inner,
            samples: 0,
            max_residual: 0.0,
        }
    }

    pub fn evidence(&self) -> (u64, f64) {
        (self.samples, self.max_residual)
    }

    /// `nabla^h_X Y = psi nabla^g_X (psi^{-1} Y)`.
    pub fn lc(&self, p: &DVector<f64>, x: &DVector<f64>, y: &FieldJet) -> Result<DVector<f64>, TwistError> {
        let psi = self.psi(p)?.value;
        Ok(psi * self.geom.covariant(p, x, &self.psi_inv(p).apply(y)))
    }

    /// `|nabla^h_X Y - nabla^h_Y X - [X, Y]|` for canonical extensions.
    pub fn lc_torsion_defect(&self, p: &DVector<f64>, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64, TwistError> {
        let xe = self.geom.extend(p, x);
        let ye = self.geom.extend(p, y);
        Ok((self.lc(p, x, &ye)? - self.lc(p, y, &xe)? - self.geom.bracket(&xe, &ye)).norm())
    }

    /// `|X h(Y,Z) - h(nabla^h_X Y, Z) - h(Y, nabla^h_X Z)|`.
    pub fn lc_metric_defect(&self, p: &DVector<f64>, x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>) -> Result<f64, TwistError> {
        let hj = self.metric(p);
        let h = |u: &DVector<f64>, v: &DVector<f64>| u.dot(&(&hj.value * v));
        let ye = self.geom.extend(p, y);
        let ze = self.geom.extend(p, z);
        let xh = y.dot(&(hj.directional(x) * z)) + h(&ye.derivative(x), z) + h(y, &ze.derivative(x));
        Ok((xh - h(&self.lc(p, x, &ye)?, z) - h(y, &self.lc(p, x, &ze)?)).abs())
    }

    /// Matrix of `nabla^h_w J^psi` on the tangent basis, via the Codazzi
    /// connection formula.
    pub fn nabla_twisted_j(&self, p: &DVector<f64>, w: &DVector<f64>) -> Result<DMatrix<f64>, TwistError> {
        let i = self.complex_structure(p)?;
        let t = self.geom.tangent_basis(p);
        let mut cols = DMatrix::zeros(t.nrows(), t.ncols());
        for b in 0..t.ncols() {
            let ye = self.geom.extend(p, &t.column(b).into());
            let v = self.lc(p, w, &i.apply(&ye))? - &i.value * self.lc(p, w, &ye)?;
            cols.set_column(b, &v);
        }
        Ok(cols)
    }

    /// Largest entry of `R^h(t_a, t_b) - psi R^g(t_a, t_b) psi^{-1}` over
    /// tangent basis pairs, with `R^h` from the jet chart.
    pub fn curvature_endo_residual(&self, p: &DVector<f64>) -> Result<f64, TwistError> {
        let chart = self.chart_curvature(p, true)?;
        let t = self.geom.tangent_basis(p);
        let psi = self.psi(p)?.value;
        let f = self.psi_inv(p).value;
        let mut worst: f64 = 0.0;
        for a in 0..t.ncols() {
            for b in a + 1..t.ncols() {
                let r = self.geom.curvature(p, &t.column(a).into(), &t.column(b).into());
                let conj = in_tangent_basis(self.geom, p, &(&psi * r * &f));
                worst = worst.max((conj - chart.endo(a, b)).amax());
            }
        }
        Ok(worst)
    }

    /// `(R^h, R^g psi^*)` as operators on two-forms at `p`.
    pub fn curvature_operators(&self, p: &DVector<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>), TwistError> {
        let rh = self.chart_curvature(p, true)?.operator();
        let rg = self.chart_curvature(p, false)?.operator();
        let w = wedge_operator(&Endo::new(self.psi_tangent(p)?).map_err(|_| TwistError::Singular)?);
        Ok((rh, rg * w))
    }

    /// `R^h(gamma)` for a two-form in the tangent basis.
    pub fn curvature_op_twisted(&self, p: &DVector<f64>, gamma: &TwoForm) -> Result<TwoForm, TwistError> {
        let (rh, _) = self.curvature_operators(p)?;
        Ok(TwoForm::from_coefficients(gamma.dim(), &(rh * gamma.coefficients())))
    }

    /// Defect of `R^h` from self-adjointness for the metric `h^{-1}` on
    /// two-forms.
    pub fn curvature_op_self_adjoint_defect(&self, p: &DVector<f64>) -> Result<f64, TwistError> {
        let chart = self.chart_curvature(p, true)?;
        let h = Metric::new(chart.metric().clone()).map_err(|_| TwistError::Singular)?;
        Ok(asymmetry(&(h.wedge2_forms() * chart.operator())))
    }

    /// `d omega^psi (x, y, z)` as the cyclic sum of `(nabla_x omega)(F y, F z)`.
    pub fn d_omega(&self, p: &DVector<f64>, x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>) -> Result<f64, TwistError> {
        let f = self.psi_inv(p).value;
        let g = self.geom.metric(p).value;
        let nw = |w: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>| -> Result<f64, TwistError> {
            Ok((self.nabla_j(p, w)? * (&f * u)).dot(&(&g * (&f * v))))
        };
        Ok(nw(x, y, z)? + nw(y, z, x)? + nw(z, x, y)?)
    }

    /// `rho(X, Y)` through the Codazzi shortcut
    /// `nabla_{psi X} Y - nabla_{psi Y} X - [X, Y]`.
    pub fn rho_codazzi(&self, p: &DVector<f64>, x: &FieldJet, y: &FieldJet) -> Result<DVector<f64>, TwistError> {
        let psi = self.psi(p)?.value;
        Ok(self.geom.covariant(p, &(&psi * &x.value), y) - self.geom.covariant(p, &(&psi * &y.value), x)
            - self.geom.bracket(x, y))
    }

    /// `J(nabla_{psi x} J) y - J(nabla_{psi y} J) x - (nabla_{psi J x} J) y + (nabla_{psi J y} J) x`.
    pub fn integrability_tensor(&self, p: &DVector<f64>, x: &DVector<f64>, y: &DVector<f64>) -> Result<DVector<f64>, TwistError> {
        let j = self.base_j(p)?.value;
        let psi = self.psi(p)?.value;
        let nj = |w: DVector<f64>| self.nabla_j(p, &(&psi * w));
        Ok(&j * (nj(x.clone())? * y) - &j * (nj(y.clone())? * x) - nj(&j * x)? * y + nj(&j * y)? * x)
    }

    /// Largest `|(nabla_a J) b + (nabla_b J) a|` over tangent basis pairs.
    pub fn nearly_kahler_defect(&self, p: &DVector<f64>) -> Result<f64, TwistError> {
        let t = self.geom.tangent_basis(p);
        let mut worst: f64 = 0.0;
        for a in 0..t.ncols() {
            let ta: DVector<f64> = t.column(a).into();
            for b in a..t.ncols() {
                let tb: DVector<f64> = t.column(b).into();
                let d = self.nabla_j(p, &ta)? * &tb + self.nabla_j(p, &tb)? * &ta;
                worst = worst.max(d.norm());
            }
        }
        Ok(worst)
    }

    fn require_nearly_kahler(&self, p: &DVector<f64>) -> Result<(), TwistError> {
        let d = self.nearly_kahler_defect(p)?;
        if d > NEARLY_KAHLER_TOL {
            return Err(TwistError::NotNearlyKahler(d));
        }
        Ok(())
    }

    /// `K = J psi + psi J`.
    pub fn k_operator(&self, p: &DVector<f64>) -> Result<DMatrix<f64>, TwistError> {
        let j = self.base_j(p)?.value;
        let psi = self.psi(p)?.value;
        Ok(&j * &psi + &psi * &j)
    }

    /// `(nabla_x J) K y - (nabla_y J) K x` on a nearly Kahler base.
    pub fn nk_criterion(&self, p: &DVector<f64>, x: &DVector<f64>, y: &DVector<f64>) -> Result<DVector<f64>, TwistError> {
        self.require_nearly_kahler(p)?;
        let k = self.k_operator(p)?;
        Ok(self.nabla_j(p, x)? * (&k * y) - self.nabla_j(p, y)? * (&k * x))
    }

    /// `(nabla_z J) K - K (nabla_z J)` on `T_p`, for self-adjoint `psi` on a
    /// nearly Kahler base.
    pub fn commutator_obstruction(&self, p: &DVector<f64>, z: &DVector<f64>) -> Result<DMatrix<f64>, TwistError> {
        self.require_nearly_kahler(p)?;
        let sa = self.self_adjoint_defect(p)?;
        if sa > SELF_ADJOINT_TOL {
            return Err(TwistError::NotSelfAdjoint(sa));
        }
        let k = self.k_operator(p)?;
        let nj = self.nabla_j(p, z)?;
        Ok(in_tangent_basis(self.geom, p, &(&nj * &k - &k * &nj)))
    }

    /// `(nabla_x omega)(F y, F z) + (nabla_y omega)(F z, F x)` for complex
    /// arguments, where the twisted structure is integrable at `p`.
    pub fn nk_10_identity(
        &self,
        p: &DVector<f64>,
        x: &ComplexVector,
        y: &ComplexVector,
        z: &ComplexVector,
    ) -> Result<Complex<f64>, TwistError> {
        let n = self.nijenhuis_twisted_max(p)?;
        if n > INTEGRABLE_TOL {
            return Err(TwistError::NotIntegrable(n));
        }
        let f = self.psi_inv(p).value;
        let g = self.geom.metric(p).value;
        let term = |a: &DVector<f64>, b: &DVector<f64>, c: &DVector<f64>| {
            self.nabla_j(p, a).map(|m| (m * (&f * b)).dot(&(&g * (&f * c))))
        };
        let real = |a: &DVector<f64>, b: &DVector<f64>, c: &DVector<f64>| {
            term(a, b, c).unwrap_or(f64::NAN) + term(b, c, a).unwrap_or(f64::NAN)
        };
        Ok(complexify3(x, y, z, real))
    }

    /// Cyclic-sum form of `d omega^psi` on complexified arguments.
    pub fn d_omega_complex(&self, p: &DVector<f64>, x: &ComplexVector, y: &ComplexVector, z: &ComplexVector) -> Complex<f64> {
        complexify3(x, y, z, |a, b, c| self.d_omega(p, a, b, c).unwrap_or(f64::NAN))
    }
}
