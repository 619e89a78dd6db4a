//! Left-invariant geometry on a Lie group, described entirely by structure
//! constants in a fixed frame `e_0..e_{n-1}` of the Lie algebra.
//!
//! Indices are 0-based throughout; the JSON loader accepts the 1-based
//! convention used in documents.

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;
use thiserror::Error;

use crate::field::{EndoJet, FieldJet, Geometry};
use crate::multilinear::{AlgebraError, Endo, Metric, TwoForm, IDENTITY_TOL};

/// Jacobi identity tolerance at construction.
pub const JACOBI_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LieError {
    #[error("structure constants are not antisymmetric at [e{i}, e{j}] (defect {defect:e})")]
    NotAntisymmetric { i: usize, j: usize, defect: f64 },
    #[error("Jacobi identity fails on (e{i}, e{j}, e{k}) with residual {residual:e}")]
    Jacobi {
        i: usize,
        j: usize,
        k: usize,
        residual: f64,
    },
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("bracket coefficient list has length {found}, expected {expected}")]
    CoefficientLength { expected: usize, found: usize },
    #[error("invalid frame document: {0}")]
    Document(String),
    #[error("endomorphism does not square to -id (defect {0:e})")]
    NotAlmostComplex(f64),
    #[error("metric is not J-invariant (defect {0:e})")]
    NotCompatible(f64),
    #[error("exterior derivative implemented for degrees 2 and 3, got {0}")]
    FormDegree(usize),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Structure constants `[e_i, e_j] = sum_k c[k][i][j] e_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LieFrame {
    n: usize,
    c: Vec<f64>,
}

impl LieFrame {
    /// `c[k][i][j]`; validated for antisymmetry and the Jacobi identity.
    pub fn new(c: Vec<Vec<Vec<f64>>>) -> Result<Self, LieError> {
        let n = c.len();
        let mut flat = vec![0.0; n * n * n];
        for (k, ck) in c.iter().enumerate() {
            if ck.len() != n {
                return Err(LieError::CoefficientLength {
                    expected: n,
                    found: ck.len(),
                });
            }
            for (i, row) in ck.iter().enumerate() {
                if row.len() != n {
                    return Err(LieError::CoefficientLength {
                        expected: n,
                        found: row.len(),
                    });
                }
                for (j, &v) in row.iter().enumerate() {
                    flat[(k * n + i) * n + j] = v;
                }
            }
        }
        Self::validated(n, flat)
    }

    /// Builds from a list of brackets `[e_i, e_j] = coeffs`, filling in
    /// `[e_j, e_i]` by antisymmetry. Brackets not listed are zero.
    pub fn from_brackets(n: usize, brackets: &[(usize, usize, Vec<f64>)]) -> Result<Self, LieError> {
        let mut flat = vec![0.0; n * n * n];
        for (i, j, coeffs) in brackets {
            let (i, j) = (*i, *j);
            for idx in [i, j] {
                if idx >= n {
                    return Err(LieError::IndexOutOfRange { index: idx, dim: n });
                }
            }
            if coeffs.len() != n {
                return Err(LieError::CoefficientLength {
                    expected: n,
                    found: coeffs.len(),
                });
            }
            for (k, &v) in coeffs.iter().enumerate() {
                flat[(k * n + i) * n + j] = v;
                flat[(k * n + j) * n + i] = -v;
            }
        }
        Self::validated(n, flat)
    }

    /// Parses `{"dim": n, "brackets": [[i, j, [c_1, ..., c_n]], ...]}` with
    /// 1-based indices.
    pub fn from_json(text: &str) -> Result<Self, LieError> {
        #[derive(Deserialize)]
        struct Doc {
            dim: usize,
            #[serde(default)]
            brackets: Vec<(usize, usize, Vec<f64>)>,
        }
        let doc: Doc =
            serde_json::from_str(text).map_err(|e| LieError::Document(e.to_string()))?;
        let mut zero_based = Vec::with_capacity(doc.brackets.len());
        for (i, j, coeffs) in doc.brackets {
            if i == 0 || j == 0 {
                return Err(LieError::Document("indices are 1-based".into()));
            }
            zero_based.push((i - 1, j - 1, coeffs));
        }
        Self::from_brackets(doc.dim, &zero_based)
    }

    pub fn abelian(n: usize) -> Self {
        LieFrame {
            n,
            c: vec![0.0; n * n * n],
        }
    }

    /// `su(2)` with `[e_0, e_1] = e_2` and cyclic.
    pub fn su2() -> Self {
        Self::from_brackets(
            3,
            &[
                (0, 1, vec![0.0, 0.0, 1.0]),
                (1, 2, vec![1.0, 0.0, 0.0]),
                (2, 0, vec![0.0, 1.0, 0.0]),
            ],
        )
        .expect("su(2) is a Lie algebra")
    }

    /// Direct sum of two Lie algebras; the first frame comes first.
    pub fn direct_sum(&self, other: &LieFrame) -> LieFrame {
        let n = self.n + other.n;
        let mut c = vec![0.0; n * n * n];
        for k in 0..self.n {
            for i in 0..self.n {
                for j in 0..self.n {
                    c[(k * n + i) * n + j] = self.structure(k, i, j);
                }
            }
        }
        let o = self.n;
        for k in 0..other.n {
            for i in 0..other.n {
                for j in 0..other.n {
                    c[((k + o) * n + i + o) * n + j + o] = other.structure(k, i, j);
                }
            }
        }
        LieFrame { n, c }
    }

    fn validated(n: usize, c: Vec<f64>) -> Result<Self, LieError> {
        let frame = LieFrame { n, c };
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let defect = (frame.structure(k, i, j) + frame.structure(k, j, i)).abs();
                    if defect > JACOBI_TOL {
                        return Err(LieError::NotAntisymmetric { i, j, defect });
                    }
                }
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let (ei, ej, ek) = (frame.basis(i), frame.basis(j), frame.basis(k));
                    let sum = frame.bracket(&frame.bracket(&ei, &ej), &ek)
                        + frame.bracket(&frame.bracket(&ej, &ek), &ei)
                        + frame.bracket(&frame.bracket(&ek, &ei), &ej);
                    let residual = sum.amax();
                    if residual > JACOBI_TOL {
                        return Err(LieError::Jacobi { i, j, k, residual });
                    }
                }
            }
        }
        Ok(frame)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `c^k_{ij}`.
    pub fn structure(&self, k: usize, i: usize, j: usize) -> f64 {
        self.c[(k * self.n + i) * self.n + j]
    }

    pub fn basis(&self, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(self.n);
        v[i] = 1.0;
        v
    }

    /// Bracket of two constant-coefficient vectors.
    pub fn bracket(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        DVector::from_fn(n, |k, _| {
            let mut s = 0.0;
            for i in 0..n {
                if u[i] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    s += self.structure(k, i, j) * u[i] * v[j];
                }
            }
            s
        })
    }

    /// Structure constants in the frame `b_a = sum_i basis[(i, a)] e_i`.
    pub fn change_frame(&self, basis: &DMatrix<f64>) -> Result<LieFrame, LieError> {
        let n = self.n;
        let inv = Endo::new(basis.clone())?.inverse()?;
        let mut c = vec![0.0; n * n * n];
        for a in 0..n {
            for b in 0..n {
                let br = inv.matrix() * self.bracket(&basis.column(a).into(), &basis.column(b).into());
                for k in 0..n {
                    c[(k * n + a) * n + b] = br[k];
                }
            }
        }
        // a change of basis preserves the Jacobi identity exactly
        Ok(LieFrame { n, c })
    }
}

/// Levi-Civita coefficients `nabla_{e_i} e_j = sum_k gamma[k][i][j] e_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Connection {
    n: usize,
    /// `along[i]` has entry `(k, j)` equal to `gamma[k][i][j]`.
    along: Vec<DMatrix<f64>>,
}

impl Connection {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn coefficient(&self, k: usize, i: usize, j: usize) -> f64 {
        self.along[i][(k, j)]
    }

    /// Matrix of `Y -> nabla_{e_i} Y` on constant-coefficient fields.
    pub fn along_basis(&self, i: usize) -> &DMatrix<f64> {
        &self.along[i]
    }

    pub fn along(&self, w: &DVector<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            if w[i] != 0.0 {
                m += &self.along[i] * w[i];
            }
        }
        m
    }

    /// `nabla_X Y` for constant-coefficient `X`, `Y`.
    pub fn covariant(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        self.along(x) * y
    }

    /// Largest `|g(nabla_i e_j, e_k) + g(e_j, nabla_i e_k)|`.
    pub fn metric_defect(&self, g: &Metric) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            let m = g.matrix() * &self.along[i];
            worst = worst.max((&m + m.transpose()).amax());
        }
        worst
    }

    /// Largest component of `nabla_i e_j - nabla_j e_i - [e_i, e_j]`.
    pub fn torsion_defect(&self, frame: &LieFrame) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in 0..self.n {
                let t = self.along[i].column(j) - self.along[j].column(i)
                    - frame.bracket(&frame.basis(i), &frame.basis(j));
                worst = worst.max(t.amax());
            }
        }
        worst
    }
}

/// The Levi-Civita connection of an invariant metric, from the Koszul
/// formula with the derivative terms dropped.
pub fn koszul_connection(frame: &LieFrame, g: &Metric) -> Result<Connection, LieError> {
    let n = frame.dim();
    if g.dim() != n {
        return Err(AlgebraError::DimensionMismatch {
            expected: n,
            found: g.dim(),
        }
        .into());
    }
    let gm = g.matrix();
    // lowered[k][i][j] = g([e_i, e_j], e_k)
    let lower = |i: usize, j: usize, k: usize| -> f64 {
        (0..n).map(|m| frame.structure(m, i, j) * gm[(m, k)]).sum()
    };
    let mut along = vec![DMatrix::zeros(n, n); n];
    for i in 0..n {
        for j in 0..n {
            let rhs = DVector::from_fn(n, |k, _| {
                0.5 * (lower(i, j, k) - lower(i, k, j) - lower(j, k, i))
            });
            let col = g.inverse() * rhs;
            along[i].set_column(j, &col);
        }
    }
    Ok(Connection { n, along })
}

fn check_index(i: usize, n: usize) -> Result<(), LieError> {
    if i >= n {
        return Err(LieError::IndexOutOfRange { index: i, dim: n });
    }
    Ok(())
}

/// Matrix of `nabla_{e_i} A` for an invariant endomorphism `A`.
pub fn covariant_derivative_endo(
    conn: &Connection,
    a: &Endo,
    i: usize,
) -> Result<Endo, LieError> {
    check_index(i, conn.dim())?;
    let g = conn.along_basis(i);
    Ok(Endo::new(g * a.matrix() - a.matrix() * g)?)
}

/// `R(e_i, e_j)` as a matrix acting on frame coefficients.
pub fn curvature_endo(
    conn: &Connection,
    frame: &LieFrame,
    i: usize,
    j: usize,
) -> Result<Endo, LieError> {
    let n = conn.dim();
    check_index(i, n)?;
    check_index(j, n)?;
    let (gi, gj) = (conn.along_basis(i), conn.along_basis(j));
    let mut r = gi * gj - gj * gi;
    for k in 0..n {
        let c = frame.structure(k, i, j);
        if c != 0.0 {
            r -= conn.along_basis(k) * c;
        }
    }
    Ok(Endo::new(r)?)
}

/// An alternating multilinear form stored as its full table of values on
/// basis tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct AlternatingForm {
    n: usize,
    k: usize,
    values: Vec<f64>,
}

impl AlternatingForm {
    pub fn zeros(n: usize, k: usize) -> Self {
        AlternatingForm {
            n,
            k,
            values: vec![0.0; n.pow(k as u32)],
        }
    }

    pub fn from_two_form(w: &TwoForm) -> Self {
        let n = w.dim();
        let mut f = Self::zeros(n, 2);
        for i in 0..n {
            for j in 0..n {
                f.values[i * n + j] = w.matrix()[(i, j)];
            }
        }
        f
    }

    /// Alternating form from an arbitrary multilinear evaluator on basis
    /// tuples (antisymmetrized).
    pub fn from_fn(n: usize, k: usize, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut out = Self::zeros(n, k);
        let mut idx = vec![0usize; k];
        for flat in 0..out.values.len() {
            let mut r = flat;
            for slot in (0..k).rev() {
                idx[slot] = r % n;
                r /= n;
            }
            out.values[flat] = f(&idx);
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    fn offset(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn component(&self, idx: &[usize]) -> f64 {
        self.values[self.offset(idx)]
    }

    /// Multilinear evaluation on arbitrary vectors.
    pub fn eval(&self, args: &[DVector<f64>]) -> f64 {
        assert_eq!(args.len(), self.k);
        let mut total = 0.0;
        let mut idx = vec![0usize; self.k];
        for flat in 0..self.values.len() {
            let v = self.values[flat];
            if v == 0.0 {
                continue;
            }
            let mut r = flat;
            for slot in (0..self.k).rev() {
                idx[slot] = r % self.n;
                r /= self.n;
            }
            let mut prod = v;
            for (slot, &i) in idx.iter().enumerate() {
                prod *= args[slot][i];
            }
            total += prod;
        }
        total
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, b| a.max(b.abs()))
    }

    /// Largest deviation from total antisymmetry under adjacent swaps.
    pub fn antisymmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        let mut idx = vec![0usize; self.k];
        for flat in 0..self.values.len() {
            let mut r = flat;
            for slot in (0..self.k).rev() {
                idx[slot] = r % self.n;
                r /= self.n;
            }
            for s in 0..self.k.saturating_sub(1) {
                let mut sw = idx.clone();
                sw.swap(s, s + 1);
                worst = worst.max((self.values[flat] + self.component(&sw)).abs());
            }
        }
        worst
    }

    /// Components on strictly increasing index tuples.
    pub fn coefficients(&self) -> Vec<(Vec<usize>, f64)> {
        let mut out = Vec::new();
        let mut idx: Vec<usize> = (0..self.k).collect();
        if self.k > self.n {
            return out;
        }
        loop {
            out.push((idx.clone(), self.component(&idx)));
            // next combination
            let mut s = self.k;
            loop {
                if s == 0 {
                    return out;
                }
                s -= 1;
                if idx[s] < self.n - self.k + s {
                    idx[s] += 1;
                    for t in s + 1..self.k {
                        idx[t] = idx[t - 1] + 1;
                    }
                    break;
                }
                if s == 0 {
                    return out;
                }
            }
        }
    }
}

/// Exterior derivative of an invariant form of degree 2 or 3 using the
/// torsion-free connection:
/// `d b(X_0..X_k) = sum_a (-1)^a (nabla_{X_a} b)(.., X_a omitted, ..)`.
pub fn invariant_d(conn: &Connection, form: &AlternatingForm) -> Result<AlternatingForm, LieError> {
    let k = form.degree();
    if k != 2 && k != 3 {
        return Err(LieError::FormDegree(k));
    }
    let n = form.dim();
    if conn.dim() != n {
        return Err(AlgebraError::DimensionMismatch {
            expected: n,
            found: conn.dim(),
        }
        .into());
    }
    // (nabla_i b)(e_{j_1}, ..) = -sum_s b(.., nabla_i e_{j_s}, ..)
    let nabla = |i: usize, rest: &[usize]| -> f64 {
        let g = conn.along_basis(i);
        let mut total = 0.0;
        let mut idx = rest.to_vec();
        for s in 0..rest.len() {
            let j = rest[s];
            for m in 0..n {
                let c = g[(m, j)];
                if c != 0.0 {
                    idx[s] = m;
                    total -= c * form.component(&idx);
                }
            }
            idx[s] = j;
        }
        total
    };
    Ok(AlternatingForm::from_fn(n, k + 1, |idx| {
        let mut total = 0.0;
        for a in 0..=k {
            let rest: Vec<usize> = idx
                .iter()
                .enumerate()
                .filter(|(s, _)| *s != a)
                .map(|(_, &v)| v)
                .collect();
            let sign = if a % 2 == 0 { 1.0 } else { -1.0 };
            total += sign * nabla(idx[a], &rest);
        }
        total
    }))
}

/// Values `N(e_i, e_j)` of a Nijenhuis tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct NijenhuisTable {
    n: usize,
    values: Vec<DVector<f64>>,
}

impl NijenhuisTable {
    pub fn get(&self, i: usize, j: usize) -> &DVector<f64> {
        &self.values[i * self.n + j]
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Bilinear extension to arbitrary vectors.
    pub fn eval(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                let c = x[i] * y[j];
                if c != 0.0 {
                    out += self.get(i, j) * c;
                }
            }
        }
        out
    }

    /// Largest Euclidean norm of `N(e_i, e_j)` over frame pairs.
    pub fn max_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.norm()))
    }
}

fn check_almost_complex(j: &Endo) -> Result<(), LieError> {
    let n = j.dim();
    let defect = (j.matrix() * j.matrix() + DMatrix::identity(n, n)).amax();
    if defect > IDENTITY_TOL {
        return Err(LieError::NotAlmostComplex(defect));
    }
    Ok(())
}

/// `N(X, Y) = J[JX, Y] + J[X, JY] + [X, Y] - [JX, JY]` for invariant `J`.
pub fn nijenhuis(frame: &LieFrame, j: &Endo) -> Result<NijenhuisTable, LieError> {
    let n = frame.dim();
    if j.dim() != n {
        return Err(AlgebraError::DimensionMismatch {
            expected: n,
            found: j.dim(),
        }
        .into());
    }
    check_almost_complex(j)?;
    let jm = j.matrix();
    let mut values = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            let (x, y) = (frame.basis(a), frame.basis(b));
            let (jx, jy) = (jm * &x, jm * &y);
            let v = jm * frame.bracket(&jx, &y) + jm * frame.bracket(&x, &jy)
                + frame.bracket(&x, &y)
                - frame.bracket(&jx, &jy);
            values.push(v);
        }
    }
    Ok(NijenhuisTable { n, values })
}

/// Invariant almost Hermitian structure `(g, J, omega)` on a Lie frame.
#[derive(Debug, Clone)]
pub struct InvariantStructure {
    frame: LieFrame,
    g: Metric,
    j: Endo,
    omega: TwoForm,
    conn: Connection,
}

impl InvariantStructure {
    pub fn new(frame: LieFrame, g: Metric, j: Endo) -> Result<Self, LieError> {
        let n = frame.dim();
        for d in [g.dim(), j.dim()] {
            if d != n {
                return Err(AlgebraError::DimensionMismatch {
                    expected: n,
                    found: d,
                }
                .into());
            }
        }
        check_almost_complex(&j)?;
        let gm = g.matrix();
        let jm = j.matrix();
        let compat = (jm.transpose() * gm * jm - gm).amax();
        if compat > IDENTITY_TOL {
            return Err(LieError::NotCompatible(compat));
        }
        // omega(X, Y) = g(JX, Y)
        let omega = TwoForm::new(jm.transpose() * gm)?;
        let conn = koszul_connection(&frame, &g)?;
        Ok(InvariantStructure {
            frame,
            g,
            j,
            omega,
            conn,
        })
    }

    pub fn frame(&self) -> &LieFrame {
        &self.frame
    }

    pub fn metric(&self) -> &Metric {
        &self.g
    }

    pub fn complex_structure(&self) -> &Endo {
        &self.j
    }

    pub fn omega(&self) -> &TwoForm {
        &self.omega
    }

    pub fn connection(&self) -> &Connection {
        &self.conn
    }

    /// Matrix of `nabla_{e_i} J`.
    pub fn nabla_j(&self, i: usize) -> DMatrix<f64> {
        covariant_derivative_endo(&self.conn, &self.j, i)
            .expect("index in range")
            .matrix()
            .clone()
    }

    /// Largest component of `(nabla_i J) e_j + (nabla_j J) e_i`.
    pub fn nearly_kahler_defect(&self) -> f64 {
        let n = self.frame.dim();
        let nj: Vec<DMatrix<f64>> = (0..n).map(|i| self.nabla_j(i)).collect();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let s = nj[i].column(j) + nj[j].column(i);
                worst = worst.max(s.amax());
            }
        }
        worst
    }
}

pub fn nearly_kahler_check(structure: &InvariantStructure) -> bool {
    structure.nearly_kahler_defect() <= IDENTITY_TOL
}

/// The standard nearly Kähler structure on `S^3 x S^3`, frame
/// `(e_1, e_2, e_3, f_1, f_2, f_3)` mapped to indices `0..6`.
pub mod s3s3 {
    use super::*;

    pub fn frame() -> LieFrame {
        LieFrame::su2().direct_sum(&LieFrame::su2())
    }

    pub fn metric() -> Metric {
        let mut g = DMatrix::zeros(6, 6);
        for i in 0..3 {
            g[(i, i)] = 4.0 / 3.0;
            g[(i + 3, i + 3)] = 4.0 / 3.0;
            g[(i, i + 3)] = -2.0 / 3.0;
            g[(i + 3, i)] = -2.0 / 3.0;
        }
        Metric::new(g).expect("positive definite")
    }

    pub fn complex_structure() -> Endo {
        let s = 3f64.sqrt();
        let mut j = DMatrix::zeros(6, 6);
        for i in 0..3 {
            // J e_i = -(e_i + 2 f_i)/sqrt3
            j[(i, i)] = -1.0 / s;
            j[(i + 3, i)] = -2.0 / s;
            // J f_i = (2 e_i + f_i)/sqrt3
            j[(i, i + 3)] = 2.0 / s;
            j[(i + 3, i + 3)] = 1.0 / s;
        }
        Endo::new(j).expect("square")
    }

    pub fn structure() -> InvariantStructure {
        InvariantStructure::new(frame(), metric(), complex_structure())
            .expect("standard structure is almost Hermitian")
    }

    /// The explicit automorphism whose twist is integrable.
    pub fn psi() -> Endo {
        let h = 3f64.sqrt() / 2.0;
        let mut p = DMatrix::zeros(6, 6);
        p[(0, 0)] = 1.0; // e1 -> e1
        p[(3, 1)] = 1.0; // e2 -> f1
        p[(2, 2)] = 1.0; // e3 -> e3
        p[(0, 3)] = -0.5; // f1 -> -e1/2 - sqrt3/2 e2
        p[(1, 3)] = -h;
        p[(3, 4)] = -0.5; // f2 -> -f1/2 - sqrt3/2 f2
        p[(4, 4)] = -h;
        p[(2, 5)] = -0.5; // f3 -> -e3/2 - sqrt3/2 f3
        p[(5, 5)] = -h;
        Endo::new(p).expect("square")
    }

    const H: f64 = 0.5;
    const S: f64 = 1.0 / 6.0;

    /// Nonzero Christoffel symbols as `(k, i, j, value)` with 1-based
    /// indices, meaning `nabla_{e_i} e_j` has `e_k` component `value`.
    pub const CHRISTOFFEL: [(usize, usize, usize, f64); 36] = [
        (3, 1, 2, H), (2, 1, 3, -H), (3, 1, 5, -S), (6, 1, 5, S), (2, 1, 6, S), (5, 1, 6, -S),
        (3, 2, 1, -H), (1, 2, 3, H), (3, 2, 4, S), (6, 2, 4, -S), (1, 2, 6, -S), (4, 2, 6, S),
        (2, 3, 1, H), (1, 3, 2, -H), (2, 3, 4, -S), (5, 3, 4, S), (1, 3, 5, S), (4, 3, 5, -S),
        (3, 4, 2, S), (6, 4, 2, -S), (2, 4, 3, -S), (5, 4, 3, S), (6, 4, 5, H), (5, 4, 6, -H),
        (3, 5, 1, -S), (6, 5, 1, S), (1, 5, 3, S), (4, 5, 3, -S), (6, 5, 4, -H), (4, 5, 6, H),
        (2, 6, 1, S), (5, 6, 1, -S), (1, 6, 2, -S), (4, 6, 2, S), (5, 6, 4, H), (4, 6, 5, -H),
    ];
}

/// A Lie frame with an invariant metric (and optionally `J`) viewed as a
/// backend for the generic twist machinery. The single evaluation point is
/// the identity; fields are expressed by their frame coefficients.
#[derive(Debug, Clone)]
pub struct LieGeometry {
    frame: LieFrame,
    g: Metric,
    j: Option<Endo>,
    conn: Connection,
    basis: DMatrix<f64>,
}

impl LieGeometry {
    pub fn new(frame: LieFrame, g: Metric, j: Option<Endo>) -> Result<Self, LieError> {
        let conn = koszul_connection(&frame, &g)?;
        let basis = g.orthonormal_basis();
        Ok(LieGeometry {
            frame,
            g,
            j,
            conn,
            basis,
        })
    }

    pub fn from_structure(s: &InvariantStructure) -> Self {
        LieGeometry::new(s.frame.clone(), s.g.clone(), Some(s.j.clone()))
            .expect("structure is valid")
    }

    pub fn frame(&self) -> &LieFrame {
        &self.frame
    }

    pub fn connection(&self) -> &Connection {
        &self.conn
    }

    pub fn metric_tensor(&self) -> &Metric {
        &self.g
    }

    pub fn identity_point(&self) -> DVector<f64> {
        DVector::zeros(self.frame.dim())
    }
}

impl Geometry for LieGeometry {
    fn ambient_dim(&self) -> usize {
        self.frame.dim()
    }

    fn dim(&self) -> usize {
        self.frame.dim()
    }

    fn sample_point(&self, _seed: u64, _index: u64) -> DVector<f64> {
        self.identity_point()
    }

    fn tangent_basis(&self, _p: &DVector<f64>) -> DMatrix<f64> {
        self.basis.clone()
    }

    fn metric(&self, _p: &DVector<f64>) -> EndoJet {
        EndoJet::constant(self.g.matrix().clone())
    }

    fn complex_structure(&self, _p: &DVector<f64>) -> Option<EndoJet> {
        self.j.as_ref().map(|j| EndoJet::constant(j.matrix().clone()))
    }

    fn extend(&self, _p: &DVector<f64>, v: &DVector<f64>) -> FieldJet {
        FieldJet::constant(v.clone())
    }

    fn structure_bracket(&self, u: &DVector<f64>, v: &DVector<f64>) -> Option<DVector<f64>> {
        Some(self.frame.bracket(u, v))
    }

    fn covariant(&self, _p: &DVector<f64>, w: &DVector<f64>, y: &FieldJet) -> DVector<f64> {
        y.derivative(w) + self.conn.covariant(w, &y.value)
    }

    fn curvature(&self, _p: &DVector<f64>, x: &DVector<f64>, y: &DVector<f64>) -> DMatrix<f64> {
        let n = self.frame.dim();
        let mut r = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let c = x[i] * y[j];
                if c != 0.0 {
                    r += curvature_endo(&self.conn, &self.frame, i, j)
                        .expect("in range")
                        .matrix()
                        * c;
                }
            }
        }
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn su2_koszul_is_half_bracket() {
        let frame = LieFrame::su2();
        let conn = koszul_connection(&frame, &Metric::identity(3)).unwrap();
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let expected = 0.5 * frame.structure(k, i, j);
                    assert!((conn.coefficient(k, i, j) - expected).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn abelian_frame_is_flat() {
        let frame = LieFrame::abelian(4);
        let g = Metric::new(DMatrix::from_fn(4, 4, |i, j| if i == j { 2.0 } else { 0.3 })).unwrap();
        let conn = koszul_connection(&frame, &g).unwrap();
        for i in 0..4 {
            assert_eq!(conn.along_basis(i).amax(), 0.0);
            for j in 0..4 {
                assert_eq!(curvature_endo(&conn, &frame, i, j).unwrap().matrix().amax(), 0.0);
            }
        }
    }

    #[test]
    fn jacobi_violation_is_rejected() {
        // [e0,e1] = e1, [e1,e2] = e0, [e0,e2] = 0 is not a Lie algebra
        let err = LieFrame::from_brackets(
            3,
            &[(0, 1, vec![0.0, 1.0, 0.0]), (1, 2, vec![1.0, 0.0, 0.0])],
        )
        .unwrap_err();
        assert!(matches!(err, LieError::Jacobi { .. }));
    }

    #[test]
    fn json_loader_matches_builtin() {
        let doc = r#"{"dim": 3, "brackets": [[1, 2, [0, 0, 1]], [2, 3, [1, 0, 0]], [3, 1, [0, 1, 0]]]}"#;
        assert_eq!(LieFrame::from_json(doc).unwrap(), LieFrame::su2());
        assert!(matches!(
            LieFrame::from_json(r#"{"dim": 2, "brackets": [[0, 1, [0, 0]]]}"#),
            Err(LieError::Document(_))
        ));
        assert!(matches!(
            LieFrame::from_json(r#"{"dim": 2, "brackets": [[1, 3, [0, 0]]]}"#),
            Err(LieError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn form_degree_is_checked() {
        let conn = koszul_connection(&LieFrame::su2(), &Metric::identity(3)).unwrap();
        let f = AlternatingForm::zeros(3, 1);
        assert_eq!(invariant_d(&conn, &f), Err(LieError::FormDegree(1)));
    }

    #[test]
    fn coefficients_enumerate_increasing_tuples() {
        let f = AlternatingForm::zeros(6, 3);
        let c = f.coefficients();
        assert_eq!(c.len(), 20);
        assert_eq!(c[0].0, vec![0, 1, 2]);
        assert_eq!(c[19].0, vec![3, 4, 5]);
    }

    #[test]
    fn s3s3_data_is_consistent() {
        let st = s3s3::structure();
        assert!(nearly_kahler_check(&st));
        assert!(s3s3::psi().is_invertible());
    }
}
