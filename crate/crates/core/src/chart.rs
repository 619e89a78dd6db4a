//! Curvature of `h = g(psi^{-1} ., psi^{-1} .)` from second-order jets of its
//! components in a local chart. Independent of the connection formulas used
//! elsewhere, so it serves as the reference for the curvature laws.

use nalgebra::{DMatrix, DVector};

use crate::field::{jet_dot, jet_matvec, Geometry, TwistField};
use crate::jet::{Jet, Scalar};
use crate::multilinear::WedgeSpace;

/// Christoffel symbols and Riemann tensor of a metric at a chart origin.
///
/// Index conventions: `R(d_i, d_j) d_k = sum_l R[l][i][j][k] d_l` with
/// `R(X,Y) = [nabla_X, nabla_Y] - nabla_[X,Y]`, and
/// `Rm(X,Y,Z,W) = h(R(X,Y)Z, W)`.
#[derive(Debug, Clone)]
pub struct ChartCurvature {
    n: usize,
    h: DMatrix<f64>,
    h_inv: DMatrix<f64>,
    christoffel: Vec<f64>,
    riemann: Vec<f64>,
}

impl ChartCurvature {
    /// From jets of the metric components `h_ij(x)` around `x = 0`.
    pub fn from_metric_jets(h: &[Vec<Jet>]) -> Option<Self> {
        let n = h.len();
        let h0 = DMatrix::from_fn(n, n, |i, j| h[i][j].value());
        let h_inv = h0.clone().try_inverse()?;
        let d = |a: usize, b: usize, i: usize| h[a][b].grad(i);
        let dd = |a: usize, b: usize, i: usize, j: usize| h[a][b].hess(i, j);
        let idx3 = |a: usize, b: usize, c: usize| (a * n + b) * n + c;
        // c[m][j][k] = d_j h_mk + d_k h_mj - d_m h_jk
        let mut c = vec![0.0; n * n * n];
        for m in 0..n {
            for j in 0..n {
                for k in 0..n {
                    c[idx3(m, j, k)] = d(m, k, j) + d(m, j, k) - d(j, k, m);
                }
            }
        }
        let mut gamma = vec![0.0; n * n * n];
        for l in 0..n {
            for j in 0..n {
                for k in 0..n {
                    gamma[idx3(l, j, k)] = 0.5 * (0..n).map(|m| h_inv[(l, m)] * c[idx3(m, j, k)]).sum::<f64>();
                }
            }
        }
        // d_i Gamma^l_jk
        let mut dgamma = vec![0.0; n * n * n * n];
        for i in 0..n {
            let dh = DMatrix::from_fn(n, n, |a, b| d(a, b, i));
            let dh_inv = -(&h_inv * dh * &h_inv);
            for l in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let mut s = 0.0;
                        for m in 0..n {
                            let dc = dd(m, k, i, j) + dd(m, j, i, k) - dd(j, k, i, m);
                            s += dh_inv[(l, m)] * c[idx3(m, j, k)] + h_inv[(l, m)] * dc;
                        }
                        dgamma[((i * n + l) * n + j) * n + k] = 0.5 * s;
                    }
                }
            }
        }
        let dg = |i: usize, l: usize, j: usize, k: usize| dgamma[((i * n + l) * n + j) * n + k];
        let mut riemann = vec![0.0; n * n * n * n];
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let mut r = dg(i, l, j, k) - dg(j, l, i, k);
                        for m in 0..n {
                            r += gamma[idx3(l, i, m)] * gamma[idx3(m, j, k)]
                                - gamma[idx3(l, j, m)] * gamma[idx3(m, i, k)];
                        }
                        riemann[((l * n + i) * n + j) * n + k] = r;
                    }
                }
            }
        }
        Some(ChartCurvature {
            n,
            h: h0,
            h_inv,
            christoffel: gamma,
            riemann,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Metric components at the origin.
    pub fn metric(&self) -> &DMatrix<f64> {
        &self.h
    }

    /// `Gamma^l_jk` at the origin.
    pub fn christoffel(&self, l: usize, j: usize, k: usize) -> f64 {
        self.christoffel[(l * self.n + j) * self.n + k]
    }

    pub fn riemann(&self, l: usize, i: usize, j: usize, k: usize) -> f64 {
        self.riemann[((l * self.n + i) * self.n + j) * self.n + k]
    }

    /// Matrix of `R(d_i, d_j)` in the chart basis.
    pub fn endo(&self, i: usize, j: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |l, k| self.riemann(l, i, j, k))
    }

    pub fn rm(&self, i: usize, j: usize, a: usize, b: usize) -> f64 {
        (0..self.n).map(|l| self.riemann(l, i, j, a) * self.h[(l, b)]).sum()
    }

    /// The curvature operator on two-forms in the basis `dx_i ^ dx_j`
    /// (`i < j`): column `(k,l)` holds the image of `dx_k ^ dx_l`. The round
    /// unit sphere gives the identity.
    pub fn operator(&self) -> DMatrix<f64> {
        let w = WedgeSpace::new(self.n);
        let n = self.n;
        DMatrix::from_fn(w.len(), w.len(), |r, col| {
            let (i, j) = w.pair(r);
            let (k, l) = w.pair(col);
            let mut s = 0.0;
            for a in 0..n {
                for b in 0..n {
                    s -= self.h_inv[(k, a)] * self.h_inv[(l, b)] * self.rm(i, j, a, b);
                }
            }
            s
        })
    }
}

/// Curvature of `g^psi` (of `g` when `psi` is `None`) at `p`, in the chart
/// whose coordinate fields at the origin are the backend's tangent basis.
///
/// Requires a backend chart, a constant ambient metric and, for a twist,
/// jet evaluation of `psi^{-1}`.
pub fn chart_curvature<G, T>(geom: &G, psi: Option<&T>, p: &DVector<f64>) -> Option<ChartCurvature>
where
    G: Geometry + ?Sized,
    T: TwistField + ?Sized,
{
    let n = geom.dim();
    let x = Jet::variables(&vec![0.0; n]);
    let chart = geom.chart(p, &x)?;
    let gm = geom.metric(p).value;
    let big = geom.ambient_dim();
    let f = match psi {
        Some(t) => Some(t.psi_inv_jets(&chart.point)?),
        None => None,
    };
    let gj: Vec<Vec<Jet>> = (0..big)
        .map(|a| (0..big).map(|b| Jet::constant(gm[(a, b)])).collect())
        .collect();
    let pushed: Vec<Vec<Jet>> = chart
        .coordinate_fields
        .iter()
        .map(|v| match &f {
            Some(f) => jet_matvec(f, v),
            None => v.clone(),
        })
        .collect();
    let h: Vec<Vec<Jet>> = (0..n)
        .map(|i| {
            let gi = jet_matvec(&gj, &pushed[i]);
            (0..n).map(|j| jet_dot(&gi, &pushed[j])).collect()
        })
        .collect();
    ChartCurvature::from_metric_jets(&h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ConstantTwist;
    use crate::flat::Flat;
    use crate::sphere::Sphere;

    #[test]
    fn round_sphere_operator_is_identity() {
        for n in [2usize, 4, 6] {
            let s = Sphere::new(n);
            let p = s.sample_point(11, n as u64);
            let c = chart_curvature::<_, ConstantTwist>(&s, None, &p).unwrap();
            let d = WedgeSpace::new(n).len();
            assert!((c.operator() - DMatrix::identity(d, d)).amax() < 1e-12);
            assert!((c.metric() - DMatrix::identity(n, n)).amax() < 1e-14);
        }
    }

    #[test]
    fn chart_endo_matches_backend_curvature() {
        let s = Sphere::s6();
        let p = s.sample_point(2, 5);
        let t = s.tangent_basis(&p);
        let c = chart_curvature::<_, ConstantTwist>(&s, None, &p).unwrap();
        for (i, j) in [(0, 1), (2, 5), (3, 4)] {
            let r = s.curvature(&p, &t.column(i).into(), &t.column(j).into());
            assert!((t.transpose() * r * &t - c.endo(i, j)).amax() < 1e-12);
        }
    }

    #[test]
    fn scaled_sphere_has_scaled_operator() {
        let s = Sphere::new(4);
        let p = s.sample_point(3, 0);
        let psi = ConstantTwist::scalar(5, 2.0);
        let c = chart_curvature(&s, Some(&psi), &p).unwrap();
        assert!((c.operator() - DMatrix::identity(6, 6) * 4.0).amax() < 1e-11);
    }

    #[test]
    fn flat_space_is_flat() {
        let c = chart_curvature::<_, ConstantTwist>(&Flat::new(3), None, &DVector::zeros(3)).unwrap();
        assert!(c.operator().amax() == 0.0);
    }
}
