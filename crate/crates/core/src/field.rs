//! First-order jets of vector and endomorphism fields, and the backend
//! interface shared by Lie frames, round spheres and flat space.
//!
//! Fields live in an ambient coordinate space of dimension `N`: the embedding
//! space for spheres, the coordinates for flat space, and frame coefficients
//! for Lie groups. Derivatives are taken along the ambient basis (along the
//! frame vectors for Lie groups).

use nalgebra::{DMatrix, DVector};

use crate::jet::Jet;
use crate::sampling;

/// Value and ambient Jacobian of a vector field at a point; `jac * w` is the
/// directional derivative along `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldJet {
    pub value: DVector<f64>,
    pub jac: DMatrix<f64>,
}

impl FieldJet {
    pub fn constant(value: DVector<f64>) -> Self {
        let n = value.len();
        FieldJet {
            value,
            jac: DMatrix::zeros(n, n),
        }
    }

    pub fn derivative(&self, w: &DVector<f64>) -> DVector<f64> {
        &self.jac * w
    }

    pub fn add(&self, other: &FieldJet) -> FieldJet {
        FieldJet {
            value: &self.value + &other.value,
            jac: &self.jac + &other.jac,
        }
    }

    pub fn sub(&self, other: &FieldJet) -> FieldJet {
        FieldJet {
            value: &self.value - &other.value,
            jac: &self.jac - &other.jac,
        }
    }

    pub fn scale(&self, s: f64) -> FieldJet {
        FieldJet {
            value: &self.value * s,
            jac: &self.jac * s,
        }
    }
}

/// Value and ambient partial derivatives of an endomorphism field.
#[derive(Debug, Clone, PartialEq)]
pub struct EndoJet {
    pub value: DMatrix<f64>,
    /// `derivs[a]` is the derivative along the `a`-th ambient basis vector.
    pub derivs: Vec<DMatrix<f64>>,
}

impl EndoJet {
    pub fn constant(value: DMatrix<f64>) -> Self {
        let n = value.nrows();
        EndoJet {
            derivs: vec![DMatrix::zeros(n, n); n],
            value,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::constant(DMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.value.nrows()
    }

    pub fn directional(&self, w: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (a, d) in self.derivs.iter().enumerate() {
            if w[a] != 0.0 {
                m += d * w[a];
            }
        }
        m
    }

    /// The field `q -> A(q) Y(q)`.
    pub fn apply(&self, y: &FieldJet) -> FieldJet {
        let mut jac = &self.value * &y.jac;
        for (a, d) in self.derivs.iter().enumerate() {
            let col = d * &y.value;
            let mut c = jac.column_mut(a);
            c += col;
        }
        FieldJet {
            value: &self.value * &y.value,
            jac,
        }
    }

    pub fn compose(&self, other: &EndoJet) -> EndoJet {
        EndoJet {
            value: &self.value * &other.value,
            derivs: self
                .derivs
                .iter()
                .zip(&other.derivs)
                .map(|(da, db)| da * &other.value + &self.value * db)
                .collect(),
        }
    }

    pub fn add(&self, other: &EndoJet) -> EndoJet {
        EndoJet {
            value: &self.value + &other.value,
            derivs: self
                .derivs
                .iter()
                .zip(&other.derivs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> EndoJet {
        EndoJet {
            value: &self.value * s,
            derivs: self.derivs.iter().map(|d| d * s).collect(),
        }
    }

    pub fn transpose(&self) -> EndoJet {
        EndoJet {
            value: self.value.transpose(),
            derivs: self.derivs.iter().map(|d| d.transpose()).collect(),
        }
    }

    /// Pointwise inverse with `D(A^{-1}) = -A^{-1} (DA) A^{-1}`.
    pub fn inverse(&self) -> Option<EndoJet> {
        let inv = self.value.clone().try_inverse()?;
        let derivs = self.derivs.iter().map(|d| -(&inv * d * &inv)).collect();
        Some(EndoJet { value: inv, derivs })
    }
}

/// Pieces of a local chart around `p` evaluated on jets of the chart
/// coordinates: the point and the coordinate vector fields, in ambient
/// coordinates. At the chart origin the coordinate fields equal the tangent
/// basis of the backend.
pub struct ChartJets {
    pub point: Vec<Jet>,
    pub coordinate_fields: Vec<Vec<Jet>>,
}

/// A Riemannian backend with exact first derivatives of its canonical fields.
pub trait Geometry: Sync {
    fn ambient_dim(&self) -> usize;

    /// Intrinsic dimension.
    fn dim(&self) -> usize;

    fn sample_point(&self, seed: u64, index: u64) -> DVector<f64>;

    /// Columns form a `g`-orthonormal basis of the tangent space.
    fn tangent_basis(&self, p: &DVector<f64>) -> DMatrix<f64>;

    /// `g` as an ambient matrix field.
    fn metric(&self, p: &DVector<f64>) -> EndoJet;

    fn complex_structure(&self, p: &DVector<f64>) -> Option<EndoJet>;

    /// A field through `v` at `p` whose covariant derivative vanishes at `p`
    /// and whose brackets with other such extensions vanish at `p` (up to the
    /// structure bracket on Lie frames).
    fn extend(&self, p: &DVector<f64>, v: &DVector<f64>) -> FieldJet;

    /// Extra bracket term for constant-coefficient fields (Lie frames).
    fn structure_bracket(&self, _u: &DVector<f64>, _v: &DVector<f64>) -> Option<DVector<f64>> {
        None
    }

    /// `[A, B]` at the point where both jets are taken.
    fn bracket(&self, a: &FieldJet, b: &FieldJet) -> DVector<f64> {
        let mut v = &b.jac * &a.value - &a.jac * &b.value;
        if let Some(s) = self.structure_bracket(&a.value, &b.value) {
            v += s;
        }
        v
    }

    /// `nabla_w Y` for a tangent `w`.
    fn covariant(&self, p: &DVector<f64>, w: &DVector<f64>, y: &FieldJet) -> DVector<f64>;

    /// `R^g(X, Y)` as an ambient matrix (meaningful on tangent vectors).
    fn curvature(&self, p: &DVector<f64>, x: &DVector<f64>, y: &DVector<f64>) -> DMatrix<f64>;

    fn chart(&self, _p: &DVector<f64>, _x: &[Jet]) -> Option<ChartJets> {
        None
    }

    /// Normal-free random tangent vector at `p`.
    fn random_tangent<R: rand::Rng>(&self, p: &DVector<f64>, rng: &mut R) -> DVector<f64>
    where
        Self: Sized,
    {
        self.tangent_basis(p) * sampling::gaussian_vector(rng, self.dim())
    }
}

/// Ambient matrix projecting onto the tangent space along its
/// `g`-orthogonal complement.
pub fn tangent_projector<G: Geometry + ?Sized>(geom: &G, p: &DVector<f64>) -> DMatrix<f64> {
    let t = geom.tangent_basis(p);
    &t * t.transpose() * geom.metric(p).value
}

/// Matrix of an ambient endomorphism restricted to the tangent space,
/// expressed in the orthonormal tangent basis.
pub fn in_tangent_basis<G: Geometry + ?Sized>(
    geom: &G,
    p: &DVector<f64>,
    a: &DMatrix<f64>,
) -> DMatrix<f64> {
    let t = geom.tangent_basis(p);
    t.transpose() * geom.metric(p).value * a * t
}

/// `g(u, v)` at `p`.
pub fn inner<G: Geometry + ?Sized>(geom: &G, p: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    u.dot(&(geom.metric(p).value * v))
}

/// `(nabla_w A) y = nabla_w (A Y) - A nabla_w Y` with `Y` the canonical
/// extension of `y`.
pub fn endo_covariant<G: Geometry + ?Sized>(
    geom: &G,
    p: &DVector<f64>,
    w: &DVector<f64>,
    a: &EndoJet,
    y: &DVector<f64>,
) -> DVector<f64> {
    let ye = geom.extend(p, y);
    geom.covariant(p, w, &a.apply(&ye)) - &a.value * geom.covariant(p, w, &ye)
}

/// Ambient matrix of `nabla_w A`, vanishing on the normal space.
pub fn endo_covariant_matrix<G: Geometry + ?Sized>(
    geom: &G,
    p: &DVector<f64>,
    w: &DVector<f64>,
    a: &EndoJet,
) -> DMatrix<f64> {
    let t = geom.tangent_basis(p);
    let n = geom.ambient_dim();
    let mut image = DMatrix::zeros(n, t.ncols());
    for b in 0..t.ncols() {
        image.set_column(b, &endo_covariant(geom, p, w, a, &t.column(b).into()));
    }
    image * t.transpose() * geom.metric(p).value
}

/// `N_J(X, Y)` for field jets on a backend with an almost complex structure.
pub fn nijenhuis_fields<G: Geometry + ?Sized>(
    geom: &G,
    j: &EndoJet,
    x: &FieldJet,
    y: &FieldJet,
) -> DVector<f64> {
    let jx = j.apply(x);
    let jy = j.apply(y);
    &j.value * geom.bracket(&jx, y) + &j.value * geom.bracket(x, &jy) + geom.bracket(x, y)
        - geom.bracket(&jx, &jy)
}

/// A field of automorphisms `psi`, specified through `psi^{-1}`.
pub trait TwistField: Sync {
    fn psi_inv(&self, p: &DVector<f64>) -> EndoJet;

    fn psi(&self, p: &DVector<f64>) -> EndoJet {
        self.psi_inv(p)
            .inverse()
            .expect("twist field is invertible at evaluation points")
    }

    /// `psi^{-1}` evaluated on a jet-valued ambient point, for chart
    /// computations that need second derivatives.
    fn psi_inv_jets(&self, _q: &[Jet]) -> Option<Vec<Vec<Jet>>> {
        None
    }
}

/// A constant automorphism field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantTwist {
    psi_inv: DMatrix<f64>,
}

impl ConstantTwist {
    pub fn from_psi(psi: &DMatrix<f64>) -> Option<Self> {
        Some(ConstantTwist {
            psi_inv: psi.clone().try_inverse()?,
        })
    }

    pub fn from_psi_inv(psi_inv: DMatrix<f64>) -> Self {
        ConstantTwist { psi_inv }
    }

    pub fn identity(n: usize) -> Self {
        ConstantTwist {
            psi_inv: DMatrix::identity(n, n),
        }
    }

    /// `psi = lambda * id`.
    pub fn scalar(n: usize, lambda: f64) -> Self {
        ConstantTwist {
            psi_inv: DMatrix::identity(n, n) / lambda,
        }
    }
}

impl TwistField for ConstantTwist {
    fn psi_inv(&self, _p: &DVector<f64>) -> EndoJet {
        EndoJet::constant(self.psi_inv.clone())
    }

    fn psi_inv_jets(&self, _q: &[Jet]) -> Option<Vec<Vec<Jet>>> {
        let n = self.psi_inv.nrows();
        Some(
            (0..n)
                .map(|i| (0..n).map(|j| Jet::constant(self.psi_inv[(i, j)])).collect())
                .collect(),
        )
    }
}

/// A twist field given by a closure returning `psi^{-1}` with derivatives.
pub struct FieldFn<F>(pub F);

impl<F> TwistField for FieldFn<F>
where
    F: Fn(&DVector<f64>) -> EndoJet + Sync,
{
    fn psi_inv(&self, p: &DVector<f64>) -> EndoJet {
        (self.0)(p)
    }
}

/// Product of jet-valued matrices.
pub fn jet_matmul(a: &[Vec<Jet>], b: &[Vec<Jet>]) -> Vec<Vec<Jet>> {
    let n = a.len();
    let m = b[0].len();
    let inner = b.len();
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let mut s = Jet::constant(0.0);
                    for k in 0..inner {
                        s = s + a[i][k] * b[k][j];
                    }
                    s
                })
                .collect()
        })
        .collect()
}

pub fn jet_matvec(a: &[Vec<Jet>], v: &[Jet]) -> Vec<Jet> {
    a.iter()
        .map(|row| {
            let mut s = Jet::constant(0.0);
            for (x, y) in row.iter().zip(v) {
                s = s + *x * *y;
            }
            s
        })
        .collect()
}

pub fn jet_dot(u: &[Jet], v: &[Jet]) -> Jet {
    let mut s = Jet::constant(0.0);
    for (x, y) in u.iter().zip(v) {
        s = s + *x * *y;
    }
    s
}
