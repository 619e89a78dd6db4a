//! Euclidean space `R^n` in its standard coordinates, optionally with a
//! constant complex structure.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::expr::{DerivativeTable, ScalarField};
use crate::field::{ChartJets, EndoJet, FieldJet, Geometry, TwistField};
use crate::jet::Jet;
use crate::sampling;
use crate::sphere::{screen_samples, SphereError, DEFAULT_SCREEN_SAMPLES, SCREEN_SEED};

/// Flat `R^n` with `g = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct Flat {
    n: usize,
    j: Option<DMatrix<f64>>,
}

impl Flat {
    pub fn new(n: usize) -> Self {
        Flat { n, j: None }
    }

    /// `C^{n/2}` with `J d_1 = d_2, J d_3 = d_4, ...`.
    pub fn kahler(n: usize) -> Self {
        assert!(n % 2 == 0);
        Flat {
            n,
            j: Some(standard_j(n)),
        }
    }

    pub fn with_complex_structure(j: DMatrix<f64>) -> Self {
        Flat {
            n: j.nrows(),
            j: Some(j),
        }
    }

    pub fn j(&self) -> Option<&DMatrix<f64>> {
        self.j.as_ref()
    }
}

pub fn standard_j(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(n, n);
    for k in (0..n).step_by(2) {
        j[(k + 1, k)] = 1.0;
        j[(k, k + 1)] = -1.0;
    }
    j
}

impl Geometry for Flat {
    fn ambient_dim(&self) -> usize {
        self.n
    }

    fn dim(&self) -> usize {
        self.n
    }

    /// Uniform in `[-pi, pi]^n`.
    fn sample_point(&self, seed: u64, index: u64) -> DVector<f64> {
        let mut rng = sampling::rng_for(seed, index);
        let pi = std::f64::consts::PI;
        DVector::from_fn(self.n, |_, _| rng.random_range(-pi..pi))
    }

    fn tangent_basis(&self, _p: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::identity(self.n, self.n)
    }

    fn metric(&self, _p: &DVector<f64>) -> EndoJet {
        EndoJet::identity(self.n)
    }

    fn complex_structure(&self, _p: &DVector<f64>) -> Option<EndoJet> {
        self.j.clone().map(EndoJet::constant)
    }

    fn extend(&self, _p: &DVector<f64>, v: &DVector<f64>) -> FieldJet {
        FieldJet::constant(v.clone())
    }

    fn covariant(&self, _p: &DVector<f64>, w: &DVector<f64>, y: &FieldJet) -> DVector<f64> {
        &y.jac * w
    }

    fn curvature(&self, _p: &DVector<f64>, _x: &DVector<f64>, _y: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::zeros(self.n, self.n)
    }

    fn chart(&self, p: &DVector<f64>, x: &[Jet]) -> Option<ChartJets> {
        let point = (0..self.n).map(|a| Jet::constant(p[a]) + x[a]).collect();
        let coordinate_fields = (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|a| Jet::constant(if a == i { 1.0 } else { 0.0 }))
                    .collect()
            })
            .collect();
        Some(ChartJets {
            point,
            coordinate_fields,
        })
    }
}

/// The `g`-Codazzi map of `A_{f,c} = Hess f + c g` on flat space:
/// `psi^{-1} = Hess f + c I`.
#[derive(Debug, Clone)]
pub struct FlatCodazziMap {
    table: DerivativeTable,
    c: f64,
    n: usize,
}

impl FlatCodazziMap {
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
        if f.arity() > n {
            return Err(SphereError::Arity {
                arity: f.arity(),
                ambient: n,
            });
        }
        let map = FlatCodazziMap {
            table: DerivativeTable::new(f, n),
            c,
            n,
        };
        let flat = Flat::new(n);
        let eigen = |p: &DVector<f64>| map.psi_inv_matrix(p).symmetric_eigenvalues().iter().copied().collect();
        let path = |a: &DVector<f64>, b: &DVector<f64>, t: f64| a * (1.0 - t) + b * t;
        screen_samples(samples, |i| flat.sample_point(seed, i), &eigen, &path)?;
        Ok(map)
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn psi_inv_matrix(&self, p: &DVector<f64>) -> DMatrix<f64> {
        let x = p.as_slice();
        DMatrix::from_fn(self.n, self.n, |i, j| self.table.hess[i][j].eval(x))
            + DMatrix::identity(self.n, self.n) * self.c
    }
}

impl TwistField for FlatCodazziMap {
    fn psi_inv(&self, p: &DVector<f64>) -> EndoJet {
        let x = p.as_slice();
        EndoJet {
            value: self.psi_inv_matrix(p),
            derivs: (0..self.n)
                .map(|a| DMatrix::from_fn(self.n, self.n, |i, j| self.table.third[i][j][a].eval(x)))
                .collect(),
        }
    }

    fn psi_inv_jets(&self, q: &[Jet]) -> Option<Vec<Vec<Jet>>> {
        let h = (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| {
                        let d = if i == j { self.c } else { 0.0 };
                        self.table.hess[i][j].eval(q) + Jet::constant(d)
                    })
                    .collect()
            })
            .collect();
        Some(h)
    }
}

/// `psi = a id + b J`, the complex-linear twist of flat Kahler space.
pub fn complex_scalar_twist(a: f64, b: f64, j: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::identity(j.nrows(), j.nrows()) * a + j * b
}
