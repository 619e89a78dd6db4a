use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use psitwist::analysis::scan::{parse_c_range, x1x2_spectrum};
use psitwist::expr::{DerivativeTable, ScalarField};
use psitwist::lie::{invariant_d, koszul_connection, nijenhuis, s3s3, AlternatingForm};
use psitwist::multilinear::{
    adjoint, lemma_sa_classify, musical_flat, musical_sharp, operator_adjoint, sharp_twisted, wedge_power,
    AdjointClass, Endo, Metric, TwoForm,
};
use psitwist::sphere::{geodesic_hessian, hessian_g, CodazziMap, SpherePoint, TangentVector};

fn matrix(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0..1.0f64, n * n).prop_map(move |v| DMatrix::from_vec(n, n, v))
}

fn spd(n: usize) -> impl Strategy<Value = Metric> {
    matrix(n).prop_map(move |a| Metric::new(a.transpose() * a + DMatrix::identity(n, n) * 0.5).unwrap())
}

/// Metric and endomorphism of the same dimension in `3..=7`.
fn metric_and_endo() -> impl Strategy<Value = (Metric, DMatrix<f64>)> {
    (3usize..=7).prop_flat_map(|n| (spd(n), matrix(n)))
}

fn unit(v: Vec<f64>) -> DVector<f64> {
    let v = DVector::from_vec(v);
    let n = v.norm();
    if n < 1e-3 {
        let mut e = DVector::zeros(v.len());
        e[0] = 1.0;
        e
    } else {
        v / n
    }
}

fn sphere_point(n: usize) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-1.0..1.0f64, n + 1).prop_map(unit)
}

fn tangent_at(p: &DVector<f64>, w: Vec<f64>) -> DVector<f64> {
    let w = DVector::from_vec(w);
    let t = &w - p * p.dot(&w);
    if t.norm() < 1e-3 {
        // any tangent direction will do
        let mut e = DVector::zeros(p.len());
        let k = if p[0].abs() < 0.9 { 0 } else { 1 };
        e[k] = 1.0;
        (&e - p * p.dot(&e)).normalize()
    } else {
        t.normalize()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn sharp_inverts_flat((g, v) in (2usize..=7).prop_flat_map(|n| (spd(n), prop::collection::vec(-5.0..5.0f64, n)))) {
        let v = DVector::from_vec(v);
        let back = musical_sharp(&g, &musical_flat(&g, &v).unwrap()).unwrap();
        prop_assert!((back - &v).amax() <= 1e-12 * (1.0 + v.amax()));
    }

    #[test]
    fn twisted_sharp_is_inverse_of_twisted_metric((g, m) in metric_and_endo(), a in prop::collection::vec(-1.0..1.0f64, 7)) {
        let n = g.dim();
        let psi = Endo::new(m + DMatrix::identity(n, n) * 3.0).unwrap();
        let a = DVector::from_vec(a[..n].to_vec());
        let h = g.twisted(&psi).unwrap();
        let direct = h.inverse() * &a;
        let twisted = sharp_twisted(&g, &psi, &a).unwrap();
        prop_assert!((direct - &twisted).amax() <= 1e-10 * (1.0 + twisted.amax()));
    }

    #[test]
    fn wedge_power_commutes_with_adjoint((g, m) in metric_and_endo()) {
        let f = Endo::new(m).unwrap();
        let lhs = operator_adjoint(&g.wedge2_vectors(), &wedge_power(&f));
        let rhs = wedge_power(&adjoint(&g, &f).unwrap());
        prop_assert!((&lhs - &rhs).amax() <= 1e-12 * (1.0 + rhs.amax()));
    }

    #[test]
    fn self_adjoint_maps_classify((g, m) in metric_and_endo()) {
        let n = g.dim();
        let f = g.inverse() * (&m + m.transpose()) + DMatrix::identity(n, n) * 0.1;
        let Ok(class) = lemma_sa_classify(&g, &Endo::new(f).unwrap()) else {
            return Ok(());
        };
        prop_assert_eq!(class.class, AdjointClass::SelfAdjoint);
        prop_assert!(class.self_residual <= 1e-8 * class.norm);
    }

    #[test]
    fn skew_adjoint_maps_classify((g, m) in (2usize..=3).prop_flat_map(|k| (spd(2 * k), matrix(2 * k)))) {
        let f = g.inverse() * (&m - m.transpose());
        let Ok(class) = lemma_sa_classify(&g, &Endo::new(f).unwrap()) else {
            return Ok(());
        };
        prop_assert_eq!(class.class, AdjointClass::SkewAdjoint);
        prop_assert!(class.skew_residual <= 1e-8 * class.norm);
    }

    #[test]
    fn nijenhuis_is_tensorial(m in matrix(6)) {
        let frame = s3s3::frame();
        let j = s3s3::complex_structure();
        let b = m * 0.3 + DMatrix::identity(6, 6);
        let b_inv = b.clone().try_inverse().unwrap();
        let moved = frame.change_frame(&b).unwrap();
        let j_moved = Endo::new(&b_inv * j.matrix() * &b).unwrap();
        let n0 = nijenhuis(&frame, &j).unwrap();
        let n1 = nijenhuis(&moved, &j_moved).unwrap();
        for a in 0..6 {
            for c in 0..6 {
                let expected = &b_inv * n0.eval(&b.column(a).into(), &b.column(c).into());
                prop_assert!((n1.get(a, c) - &expected).amax() <= 1e-10 * (1.0 + expected.amax()));
            }
        }
    }

    #[test]
    fn d_squared_vanishes(coeffs in prop::collection::vec(-1.0..1.0f64, 15)) {
        let frame = s3s3::frame();
        let conn = koszul_connection(&frame, &s3s3::metric()).unwrap();
        let form = AlternatingForm::from_two_form(&TwoForm::from_coefficients(6, &DVector::from_vec(coeffs)));
        let dd = invariant_d(&conn, &invariant_d(&conn, &form).unwrap()).unwrap();
        prop_assert!(dd.max_abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn hessian_matches_geodesic_oracle(
        a in -2.0..2.0f64,
        b in -2.0..2.0f64,
        c in -2.0..2.0f64,
        p in sphere_point(6),
        w in prop::collection::vec(-1.0..1.0f64, 7),
        u in prop::collection::vec(-1.0..1.0f64, 7),
    ) {
        let f = ScalarField::parse(&format!("{a}*x1*x2 + {b}*x3^2*x5 + {c}*x7")).unwrap();
        let table = DerivativeTable::new(&f, 7);
        let v = tangent_at(&p, w);
        let y = tangent_at(&p, u);
        let base = SpherePoint::new(p.clone()).unwrap();
        let tv = TangentVector::new(base.clone(), v.clone()).unwrap();
        let ty = TangentVector::new(base, y).unwrap();
        let h = hessian_g(&table, &tv, &tv).unwrap();
        prop_assert!((h - geodesic_hessian(&f, &p, &v)).abs() <= 1e-8);
        let sym = hessian_g(&table, &tv, &ty).unwrap() - hessian_g(&table, &ty, &tv).unwrap();
        prop_assert!(sym.abs() <= 1e-12);
    }

    #[test]
    fn derivative_matches_central_difference(
        a in -2.0..2.0f64,
        b in 0.5..2.0f64,
        x in prop::collection::vec(-1.0..1.0f64, 3),
    ) {
        let f = ScalarField::parse(&format!("{a}*x1^3*x2 - sin({b}*x3)*x1 + cos(x2)")).unwrap();
        let h = 1e-5;
        for k in 0..3 {
            let mut up = x.clone();
            let mut down = x.clone();
            up[k] += h;
            down[k] -= h;
            let fd = (f.eval(&up) - f.eval(&down)) / (2.0 * h);
            let exact = f.derivative(k).eval(&x);
            prop_assert!((fd - exact).abs() <= 1e-6 * (1.0 + exact.abs()));
        }
    }

    #[test]
    fn display_round_trips(a in -3.0..3.0f64, k in 1usize..=7, x in prop::collection::vec(-1.0..1.0f64, 7)) {
        let f = ScalarField::parse(&format!("({a})*x{k}^2 - x1*(x2 + {a})*0.25 + -x{k} - sin(x{k})^3")).unwrap();
        let g = ScalarField::parse(&f.to_string()).unwrap();
        prop_assert!((f.eval(&x) - g.eval(&x)).abs() <= 1e-12 * (1.0 + f.eval(&x).abs()));
    }

    #[test]
    fn x1x2_spectrum_matches_and_stays_in_bounds(c in 1.6..30.0f64, sign in prop::bool::ANY, p in sphere_point(6)) {
        let c = if sign { c } else { -c };
        let map = CodazziMap::new(&ScalarField::parse("x1*x2").unwrap(), c, 6).unwrap();
        let ev = map.eigenvalues(&p);
        let closed = x1x2_spectrum(c, &p);
        for (a, b) in ev.iter().zip(&closed) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
        let (lo, hi) = (1.0 / (c.abs() + 1.5).powi(2), 1.0 / (c.abs() - 1.5).powi(2));
        for i in 0..6 {
            for j in i + 1..6 {
                let lam = 1.0 / (closed[i] * closed[j]);
                prop_assert!(lo <= lam && lam <= hi);
            }
        }
    }

    #[test]
    fn c_range_has_expected_length(a in -20.0..20.0f64, steps in 0u32..40, step in 0.1..2.0f64) {
        let b = a + step * steps as f64;
        let values = parse_c_range(&format!("{a}:{b}:{step}")).unwrap();
        prop_assert_eq!(values.len(), steps as usize + 1);
        prop_assert!(values.windows(2).all(|w| w[1] > w[0]));
        prop_assert!(*values.last().unwrap() <= b + 1e-9 * (1.0 + b.abs()));
    }
}
