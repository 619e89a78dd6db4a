//! Pointwise multilinear algebra on a single inner-product space.
//!
//! Vectors are column vectors in a fixed basis `e_1..e_n`; covectors are
//! column vectors of components in the dual basis. Two-forms and operators on
//! the second exterior power use the ordered-pair basis `(i, j)`, `i < j`, in
//! lexicographic order.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Symmetry tolerance for metrics and forms.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Tolerance for identity checks between independently computed quantities.
pub const IDENTITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebraError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("matrix is not antisymmetric (max defect {0:e})")]
    NotAntisymmetric(f64),
    #[error("endomorphism is singular (|det| = {0:e})")]
    Singular(f64),
    #[error("classification needs dimension >= 3, got {0}")]
    DimensionTooSmall(usize),
    #[error("endomorphism is both self- and skew-adjoint within tolerance")]
    AmbiguousClassification,
}

fn check_square(m: &DMatrix<f64>) -> Result<usize, AlgebraError> {
    if m.nrows() != m.ncols() {
        return Err(AlgebraError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

fn check_dim(expected: usize, found: usize) -> Result<(), AlgebraError> {
    if expected != found {
        return Err(AlgebraError::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Largest absolute entry of `m - m^T`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).amax()
}

/// Largest absolute entry of `m + m^T`.
pub fn antisymmetry_defect(m: &DMatrix<f64>) -> f64 {
    (m + m.transpose()).amax()
}

/// Spectral norm (largest singular value).
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .fold(0.0f64, |a, &b| a.max(b))
}

/// A positive definite inner product.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    g: DMatrix<f64>,
    inv: DMatrix<f64>,
}

impl Metric {
    pub fn new(g: DMatrix<f64>) -> Result<Self, AlgebraError> {
        check_square(&g)?;
        let asym = asymmetry(&g);
        if asym > SYMMETRY_TOL * g.amax().max(1.0) {
            return Err(AlgebraError::NotSymmetric(asym));
        }
        let sym = (&g + g.transpose()) * 0.5;
        let chol = sym
            .clone()
            .cholesky()
            .ok_or(AlgebraError::NotPositiveDefinite)?;
        Ok(Metric {
            inv: chol.inverse(),
            g: sym,
        })
    }

    pub fn identity(n: usize) -> Self {
        Metric {
            g: DMatrix::identity(n, n),
            inv: DMatrix::identity(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inv
    }

    pub fn inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        u.dot(&(&self.g * v))
    }

    /// Columns form a basis orthonormal for this metric.
    pub fn orthonormal_basis(&self) -> DMatrix<f64> {
        // g = L L^T  =>  columns of L^{-T} are orthonormal.
        let l = self.g.clone().cholesky().expect("validated").l();
        l.transpose()
            .try_inverse()
            .expect("cholesky factor is invertible")
    }

    /// The metric `g(psi^{-1} ., psi^{-1} .)`.
    pub fn twisted(&self, psi: &Endo) -> Result<Metric, AlgebraError> {
        let inv = psi.inverse()?;
        Metric::new(inv.matrix().transpose() * &self.g * inv.matrix())
    }

    /// Induced inner product on the second exterior power of the space,
    /// `<e_i^e_j, e_k^e_l> = g_ik g_jl - g_il g_jk`.
    pub fn wedge2_vectors(&self) -> DMatrix<f64> {
        wedge2_gram(&self.g)
    }

    /// Induced inner product on two-forms (from the inverse metric).
    pub fn wedge2_forms(&self) -> DMatrix<f64> {
        wedge2_gram(&self.inv)
    }
}

fn wedge2_gram(m: &DMatrix<f64>) -> DMatrix<f64> {
    let w = WedgeSpace::new(m.nrows());
    let d = w.len();
    DMatrix::from_fn(d, d, |a, b| {
        let (i, j) = w.pair(a);
        let (k, l) = w.pair(b);
        m[(i, k)] * m[(j, l)] - m[(i, l)] * m[(j, k)]
    })
}

/// A linear endomorphism acting on column vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Endo {
    m: DMatrix<f64>,
}

impl Endo {
    pub fn new(m: DMatrix<f64>) -> Result<Self, AlgebraError> {
        check_square(&m)?;
        Ok(Endo { m })
    }

    pub fn identity(n: usize) -> Self {
        Endo {
            m: DMatrix::identity(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.m * v
    }

    pub fn compose(&self, other: &Endo) -> Endo {
        Endo {
            m: &self.m * &other.m,
        }
    }

    pub fn determinant(&self) -> f64 {
        self.m.determinant()
    }

    pub fn is_invertible(&self) -> bool {
        self.determinant().abs() > 1e-12
    }

    pub fn inverse(&self) -> Result<Endo, AlgebraError> {
        let det = self.determinant();
        if det.abs() <= 1e-12 {
            return Err(AlgebraError::Singular(det.abs()));
        }
        let m = self
            .m
            .clone()
            .try_inverse()
            .ok_or(AlgebraError::Singular(det.abs()))?;
        Ok(Endo { m })
    }
}

/// An antisymmetric bilinear form.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoForm {
    m: DMatrix<f64>,
}

impl TwoForm {
    pub fn new(m: DMatrix<f64>) -> Result<Self, AlgebraError> {
        check_square(&m)?;
        let defect = antisymmetry_defect(&m);
        if defect > SYMMETRY_TOL * m.amax().max(1.0) {
            return Err(AlgebraError::NotAntisymmetric(defect));
        }
        Ok(TwoForm {
            m: (&m - m.transpose()) * 0.5,
        })
    }

    /// Builds a form from its coefficients in the `theta_i ^ theta_j` basis.
    pub fn from_coefficients(n: usize, coeffs: &DVector<f64>) -> Self {
        let w = WedgeSpace::new(n);
        let mut m = DMatrix::zeros(n, n);
        for (a, &(i, j)) in w.pairs().iter().enumerate() {
            m[(i, j)] = coeffs[a];
            m[(j, i)] = -coeffs[a];
        }
        TwoForm { m }
    }

    /// `theta_i ^ theta_j` for 0-based `i != j`.
    pub fn basis(n: usize, i: usize, j: usize) -> Self {
        let mut m = DMatrix::zeros(n, n);
        m[(i, j)] = 1.0;
        m[(j, i)] = -1.0;
        TwoForm { m }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn eval(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        u.dot(&(&self.m * v))
    }

    pub fn coefficients(&self) -> DVector<f64> {
        let w = WedgeSpace::new(self.dim());
        DVector::from_iterator(w.len(), w.pairs().iter().map(|&(i, j)| self.m[(i, j)]))
    }
}

/// Index bookkeeping for the second exterior power of an `n`-dimensional space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WedgeSpace {
    n: usize,
    pairs: Vec<(usize, usize)>,
}

impl WedgeSpace {
    pub fn new(n: usize) -> Self {
        let pairs = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        WedgeSpace { n, pairs }
    }

    pub fn base_dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn pair(&self, index: usize) -> (usize, usize) {
        self.pairs[index]
    }

    /// Position of the pair `(i, j)`, `i < j`.
    pub fn index(&self, i: usize, j: usize) -> Option<usize> {
        if i >= j || j >= self.n {
            return None;
        }
        // rows before i contribute (n-1) + (n-2) + ... + (n-i)
        Some(i * (2 * self.n - i - 1) / 2 + (j - i - 1))
    }
}

/// `v -> g(v, .)`.
pub fn musical_flat(g: &Metric, v: &DVector<f64>) -> Result<DVector<f64>, AlgebraError> {
    check_dim(g.dim(), v.len())?;
    Ok(g.matrix() * v)
}

/// Inverse of [`musical_flat`].
pub fn musical_sharp(g: &Metric, a: &DVector<f64>) -> Result<DVector<f64>, AlgebraError> {
    check_dim(g.dim(), a.len())?;
    Ok(g.inverse() * a)
}

/// Sharp for the twisted metric `h = g(psi^{-1} ., psi^{-1} .)` computed as
/// `psi o sharp_g o psi^*`.
pub fn sharp_twisted(
    g: &Metric,
    psi: &Endo,
    a: &DVector<f64>,
) -> Result<DVector<f64>, AlgebraError> {
    check_dim(g.dim(), psi.dim())?;
    check_dim(g.dim(), a.len())?;
    psi.inverse()?;
    let pulled = psi.matrix().transpose() * a;
    Ok(psi.matrix() * musical_sharp(g, &pulled)?)
}

/// Adjoint with respect to `g`: `g(F x, y) = g(x, F^dagger y)`.
pub fn adjoint(g: &Metric, f: &Endo) -> Result<Endo, AlgebraError> {
    check_dim(g.dim(), f.dim())?;
    Endo::new(g.inverse() * f.matrix().transpose() * g.matrix())
}

/// `(psi^* b)(x, y) = b(psi x, psi y)`.
pub fn wedge_pullback(psi: &Endo, b: &TwoForm) -> Result<TwoForm, AlgebraError> {
    check_dim(psi.dim(), b.dim())?;
    let m = psi.matrix().transpose() * b.matrix() * psi.matrix();
    Ok(TwoForm {
        m: (&m - m.transpose()) * 0.5,
    })
}

/// Matrix of the pullback `psi^*` on two-form coefficients.
///
/// Column `(k, l)` holds the coefficients of `psi^*(theta_k ^ theta_l)`.
pub fn wedge_operator(psi: &Endo) -> DMatrix<f64> {
    let p = psi.matrix();
    let w = WedgeSpace::new(psi.dim());
    let d = w.len();
    DMatrix::from_fn(d, d, |a, b| {
        let (i, j) = w.pair(a);
        let (k, l) = w.pair(b);
        p[(k, i)] * p[(l, j)] - p[(l, i)] * p[(k, j)]
    })
}

/// Matrix of `F_2(v ^ w) = F v ^ F w` on bivectors.
pub fn wedge_power(f: &Endo) -> DMatrix<f64> {
    let m = f.matrix();
    let w = WedgeSpace::new(f.dim());
    let d = w.len();
    DMatrix::from_fn(d, d, |a, b| {
        let (i, j) = w.pair(a);
        let (k, l) = w.pair(b);
        m[(i, k)] * m[(j, l)] - m[(j, k)] * m[(i, l)]
    })
}

/// Adjoint of an operator on a space with Gram matrix `gram`.
pub fn operator_adjoint(gram: &DMatrix<f64>, op: &DMatrix<f64>) -> DMatrix<f64> {
    let inv = gram.clone().try_inverse().expect("Gram matrix is invertible");
    inv * op.transpose() * gram
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdjointClass {
    SelfAdjoint,
    SkewAdjoint,
    NotApplicable,
}

/// Result of [`lemma_sa_classify`] with the residuals it was decided on.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub class: AdjointClass,
    /// Defect of `(F^dagger)_2` from self-adjointness on bivectors.
    pub wedge_defect: f64,
    /// `||F - F^dagger||` in a g-orthonormal frame.
    pub self_residual: f64,
    /// `||F + F^dagger||` in a g-orthonormal frame.
    pub skew_residual: f64,
    pub norm: f64,
}

/// If `F^*` is self-adjoint on two-forms then `F` is self- or skew-adjoint
/// (dimension >= 3). Returns which one, or `NotApplicable` when the
/// hypothesis fails.
pub fn lemma_sa_classify(g: &Metric, f: &Endo) -> Result<Classification, AlgebraError> {
    check_dim(g.dim(), f.dim())?;
    if f.dim() < 3 {
        return Err(AlgebraError::DimensionTooSmall(f.dim()));
    }
    f.inverse()?;

    let fd = adjoint(g, f)?;
    let fd2 = wedge_power(&fd);
    let gram = g.wedge2_vectors();
    // self-adjoint on bivectors  <=>  gram * op symmetric
    let gm = &gram * &fd2;
    let scale = gram.amax() * fd2.amax();
    let wedge_defect = asymmetry(&gm) / scale.max(f64::MIN_POSITIVE);

    let basis = g.orthonormal_basis();
    let hat = basis
        .clone()
        .try_inverse()
        .expect("orthonormal basis is invertible")
        * f.matrix()
        * &basis;
    let norm = spectral_norm(&hat);
    let self_residual = spectral_norm(&(&hat - hat.transpose()));
    let skew_residual = spectral_norm(&(&hat + hat.transpose()));

    let class = if wedge_defect > IDENTITY_TOL {
        AdjointClass::NotApplicable
    } else {
        let tol = IDENTITY_TOL * norm;
        if self_residual < tol && skew_residual < tol {
            return Err(AlgebraError::AmbiguousClassification);
        }
        if self_residual <= skew_residual {
            AdjointClass::SelfAdjoint
        } else {
            AdjointClass::SkewAdjoint
        }
    };
    Ok(Classification {
        class,
        wedge_defect,
        self_residual,
        skew_residual,
        norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn standard_j4() -> DMatrix<f64> {
        let mut j = DMatrix::zeros(4, 4);
        j[(1, 0)] = 1.0;
        j[(0, 1)] = -1.0;
        j[(3, 2)] = 1.0;
        j[(2, 3)] = -1.0;
        j
    }

    #[test]
    fn flat_identity_metric_and_frame_block() {
        let g = Metric::identity(4);
        let e1 = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(musical_flat(&g, &e1).unwrap(), e1);

        let g = Metric::new(dmatrix![4.0 / 3.0]).unwrap();
        let v = DVector::from_vec(vec![1.0]);
        assert!((musical_flat(&g, &v).unwrap()[0] - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn metric_validation() {
        assert!(matches!(
            Metric::new(dmatrix![1.0, 0.5; 0.0, 1.0]),
            Err(AlgebraError::NotSymmetric(_))
        ));
        assert_eq!(
            Metric::new(dmatrix![1.0, 0.0; 0.0, -1.0]),
            Err(AlgebraError::NotPositiveDefinite)
        );
        let g = Metric::identity(3);
        let v = DVector::zeros(2);
        assert_eq!(
            musical_flat(&g, &v),
            Err(AlgebraError::DimensionMismatch {
                expected: 3,
                found: 2
            })
        );
    }

    #[test]
    fn twisted_sharp_scalar_example() {
        // psi = 2 id, g = id: h = g/4 so sharp_h = 4 sharp_g.
        let g = Metric::identity(3);
        let psi = Endo::new(DMatrix::identity(3, 3) * 2.0).unwrap();
        let a = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let s = sharp_twisted(&g, &psi, &a).unwrap();
        assert!((s - DVector::from_vec(vec![4.0, 0.0, 0.0])).amax() < 1e-15);
        let h = g.twisted(&psi).unwrap();
        assert!((musical_sharp(&h, &a).unwrap()[0] - 4.0).abs() < 1e-14);

        let singular = Endo::new(DMatrix::zeros(3, 3)).unwrap();
        assert!(matches!(
            sharp_twisted(&g, &singular, &a),
            Err(AlgebraError::Singular(_))
        ));
    }

    #[test]
    fn adjoint_of_a_id_plus_b_j_on_flat_kahler() {
        let (a, b) = (1.5, -0.7);
        let j = standard_j4();
        let psi = Endo::new(DMatrix::identity(4, 4) * a + &j * b).unwrap();
        let adj = adjoint(&Metric::identity(4), &psi).unwrap();
        let expected = DMatrix::identity(4, 4) * a - &j * b;
        assert!((adj.matrix() - expected).amax() < 1e-15);
    }

    #[test]
    fn wedge_index_is_a_bijection() {
        for n in 1..8 {
            let w = WedgeSpace::new(n);
            assert_eq!(w.len(), n * (n - 1) / 2);
            for (a, &(i, j)) in w.pairs().iter().enumerate() {
                assert_eq!(w.index(i, j), Some(a));
            }
            assert_eq!(w.index(0, 0), None);
        }
    }

    #[test]
    fn induced_metric_of_orthonormal_frame_is_identity() {
        let g = Metric::identity(5);
        assert_eq!(g.wedge2_vectors(), DMatrix::identity(10, 10));
        assert_eq!(g.wedge2_forms(), DMatrix::identity(10, 10));
    }

    #[test]
    fn wedge_pullback_scaling_and_operator_agree() {
        let n = 4;
        let b = TwoForm::from_coefficients(n, &DVector::from_fn(6, |i, _| i as f64 - 2.5));
        let scaled = wedge_pullback(&Endo::new(DMatrix::identity(n, n) * 3.0).unwrap(), &b)
            .unwrap();
        assert!((scaled.matrix() - b.matrix() * 9.0).amax() < 1e-14);

        let psi = Endo::new(DMatrix::from_fn(n, n, |i, j| ((i * 3 + j * 7) % 5) as f64 - 2.0))
            .unwrap();
        let direct = wedge_pullback(&psi, &b).unwrap().coefficients();
        let via_op = wedge_operator(&psi) * b.coefficients();
        assert!((direct - via_op).amax() < 1e-12);
    }

    #[test]
    fn classifier_simple_cases() {
        let g = Metric::identity(4);
        let spd = Endo::new(dmatrix![
            2.0, 0.3, 0.0, 0.1;
            0.3, 1.0, 0.2, 0.0;
            0.0, 0.2, 3.0, 0.4;
            0.1, 0.0, 0.4, 1.5
        ])
        .unwrap();
        assert_eq!(
            lemma_sa_classify(&g, &spd).unwrap().class,
            AdjointClass::SelfAdjoint
        );

        let j = Endo::new(standard_j4()).unwrap();
        // J_2 is symmetric on bivectors
        let j2 = wedge_power(&j);
        assert!(asymmetry(&j2) < 1e-15);
        assert_eq!(
            lemma_sa_classify(&g, &j).unwrap().class,
            AdjointClass::SkewAdjoint
        );

        let shear = Endo::new(dmatrix![
            1.0, 2.0, 0.0, 0.0;
            0.0, 1.0, 0.0, 0.0;
            0.0, 0.0, 1.0, 0.0;
            0.0, 0.0, 0.0, 1.0
        ])
        .unwrap();
        assert_eq!(
            lemma_sa_classify(&g, &shear).unwrap().class,
            AdjointClass::NotApplicable
        );

        let small = Endo::identity(2);
        assert_eq!(
            lemma_sa_classify(&Metric::identity(2), &small),
            Err(AlgebraError::DimensionTooSmall(2))
        );
        let singular = Endo::new(DMatrix::zeros(3, 3)).unwrap();
        assert!(matches!(
            lemma_sa_classify(&Metric::identity(3), &singular),
            Err(AlgebraError::Singular(_))
        ));
    }
}
