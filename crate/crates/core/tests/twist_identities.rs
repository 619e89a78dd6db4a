use nalgebra::{DMatrix, DVector};
use psitwist::expr::ScalarField;
use psitwist::field::{ConstantTwist, EndoJet, FieldFn, FieldJet, Geometry, TwistField};
use psitwist::flat::{complex_scalar_twist, standard_j, Flat, FlatCodazziMap};
use psitwist::lie::{s3s3, LieGeometry};
use psitwist::multilinear::{wedge_operator, Endo};
use psitwist::sampling::{gaussian_vector, rng_for};
use psitwist::sphere::{CodazziMap, Sphere};
use psitwist::twist::{CodazziTwist, ComplexVector, TwistError, Twisted};

fn s6_map(f: &str, c: f64) -> CodazziMap {
    CodazziMap::with_screening(&ScalarField::parse(f).unwrap(), c, 6, 500, 3).unwrap()
}

fn r4_map(c: f64) -> FlatCodazziMap {
    FlatCodazziMap::with_screening(&ScalarField::parse("sin(x1)*sin(x3)").unwrap(), c, 4, 500, 3).unwrap()
}

fn random_constant_psi(n: usize, seed: u64, i: u64) -> ConstantTwist {
    let mut rng = rng_for(seed, i);
    let m = DMatrix::identity(n, n) * 1.5 + DMatrix::from_fn(n, n, |_, _| gaussian_vector(&mut rng, 1)[0] * 0.4);
    ConstantTwist::from_psi(&m).unwrap()
}

fn tangents<G: Geometry>(g: &G, p: &DVector<f64>, seed: u64, i: u64, k: usize) -> Vec<DVector<f64>> {
    let mut rng = rng_for(seed, i);
    (0..k).map(|_| g.random_tangent(p, &mut rng)).collect()
}

/// A field through `v` whose derivative differs from the canonical extension.
fn perturbed<G: Geometry>(g: &G, p: &DVector<f64>, v: &DVector<f64>, seed: u64) -> FieldJet {
    let n = g.ambient_dim();
    let mut rng = rng_for(seed, 99);
    let l = DMatrix::from_fn(n, n, |_, _| gaussian_vector(&mut rng, 1)[0]);
    let proj = psitwist::field::tangent_projector(g, p);
    let mut e = g.extend(p, v);
    e.jac += proj * l;
    e
}

#[test]
fn twisted_levi_civita_matches_koszul_on_lie_frame() {
    let s = s3s3::structure();
    let geom = LieGeometry::from_structure(&s);
    let p = geom.identity_point();
    for k in 0..5 {
        let psi = random_constant_psi(6, 17, k);
        let tw = Twisted::new(&geom, &psi);
        for i in 0..6 {
            for j in 0..6 {
                for l in 0..6 {
                    let e = |a: usize| FieldJet::constant(geom.frame().basis(a));
                    let lhs = tw.koszul(&p, &e(i), &e(j), &e(l));
                    let rhs = tw.lc_general(&p, &e(i), &e(j), &geom.frame().basis(l)).unwrap();
                    assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
                }
            }
        }
    }
}

#[test]
fn twisted_levi_civita_matches_koszul_on_sphere_for_field_twist() {
    let s = Sphere::s6();
    let map = s6_map("x1*x2", 5.0);
    let tw = Twisted::new(&s, &map);
    for i in 0..10 {
        let p = s.sample_point(5, i);
        let v = tangents(&s, &p, 6, i, 3);
        let x = s.extend(&p, &v[0]);
        let y = perturbed(&s, &p, &v[1], i);
        let z = s.extend(&p, &v[2]);
        let lhs = tw.koszul(&p, &x, &y, &z);
        let rhs = tw.lc_general(&p, &x, &y, &v[2]).unwrap();
        assert!((lhs - rhs).abs() < 1e-8, "{lhs} vs {rhs}");
        // Codazzi shortcut agrees as well
        let ct = CodazziTwist::assume(tw);
        let fast = ct.lc(&p, &v[0], &y).unwrap();
        let direct = tw.koszul_vector(&p, &x, &y);
        assert!((fast - direct).norm() < 1e-8);
    }
}

#[test]
fn codazzi_maps_pass_sampled_check() {
    let s = Sphere::s6();
    for (f, c) in [("x1*x2", 5.0), ("x1", 3.0), ("x1^2*x3", 10.0)] {
        let map = s6_map(f, c);
        let tw = Twisted::new(&s, &map);
        let ct = tw.verify_codazzi(100, 8).unwrap();
        assert!(ct.evidence().1 < 1e-10);
    }
    let psi = random_constant_psi(7, 1, 1);
    assert!(matches!(
        Twisted::new(&s, &psi).verify_codazzi(50, 1),
        Err(TwistError::NotTangentPreserving(_))
    ));
    // P M P + p p^T preserves tangent spaces but is not Codazzi
    let m = {
        let mut rng = rng_for(2, 2);
        let a = DMatrix::from_fn(7, 7, |_, _| gaussian_vector(&mut rng, 1)[0]);
        &a + a.transpose() + DMatrix::identity(7, 7) * 10.0
    };
    let field = FieldFn(move |p: &DVector<f64>| {
        let id = DMatrix::identity(7, 7);
        let proj = &id - p * p.transpose();
        let derivs = (0..7)
            .map(|a| {
                let e = id.column(a).into_owned();
                let dp = -(&e * p.transpose() + p * e.transpose());
                &dp * &m * &proj + &proj * &m * &dp - &dp
            })
            .collect();
        EndoJet {
            value: &proj * &m * &proj + p * p.transpose(),
            derivs,
        }
    });
    assert!(matches!(
        Twisted::new(&s, &field).verify_codazzi(50, 1),
        Err(TwistError::NotCodazzi { .. })
    ));
}

#[test]
fn curvature_laws_on_sphere_and_flat() {
    let s = Sphere::s6();
    let map = s6_map("x1*x2", 5.0);
    let ct = Twisted::new(&s, &map).verify_codazzi(50, 2).unwrap();
    for i in 0..5 {
        let p = s.sample_point(21, i);
        assert!(ct.curvature_endo_residual(&p).unwrap() < 1e-7);
        let (rh, expected) = ct.curvature_operators(&p).unwrap();
        assert!((&rh - &expected).amax() < 1e-9, "{}", (&rh - &expected).amax());
        let pullback = wedge_operator(&Endo::new(ct.psi_tangent(&p).unwrap()).unwrap());
        assert!((rh - pullback).amax() < 1e-9);
        assert!(ct.curvature_op_self_adjoint_defect(&p).unwrap() < 1e-9);
    }
    let flat = Flat::kahler(4);
    let map = r4_map(2.0);
    let ct = Twisted::new(&flat, &map).verify_codazzi(50, 2).unwrap();
    for i in 0..5 {
        let p = flat.sample_point(4, i);
        assert!(ct.curvature_endo_residual(&p).unwrap() < 1e-8);
        let (rh, _) = ct.curvature_operators(&p).unwrap();
        assert!(rh.amax() < 1e-8);
    }
}

#[test]
fn d_omega_formula_matches_direct() {
    let s = Sphere::s6();
    let map = s6_map("x1*x2", 5.0);
    let ct = CodazziTwist::assume(Twisted::new(&s, &map));
    for i in 0..10 {
        let p = s.sample_point(7, i);
        let v = tangents(&s, &p, 8, i, 3);
        let a = ct.d_omega(&p, &v[0], &v[1], &v[2]).unwrap();
        let b = ct.d_omega_direct(&p, &v[0], &v[1], &v[2]).unwrap();
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }
}

#[test]
fn nearly_kahler_identity_for_untwisted_s6() {
    let s = Sphere::s6();
    let id = ConstantTwist::identity(7);
    let ct = CodazziTwist::assume(Twisted::new(&s, &id));
    for i in 0..10 {
        let p = s.sample_point(9, i);
        let v = tangents(&s, &p, 10, i, 3);
        let d = ct.d_omega_direct(&p, &v[0], &v[1], &v[2]).unwrap();
        let nw = (ct.nabla_j(&p, &v[0]).unwrap() * &v[1]).dot(&v[2]);
        assert!((d / 3.0 - nw).abs() < 1e-10);
        assert!(ct.nearly_kahler_defect(&p).unwrap() < 1e-12);
    }
}

#[test]
fn nijenhuis_twist_identity_on_lie_frame_and_sphere() {
    let s = s3s3::structure();
    let geom = LieGeometry::from_structure(&s);
    let p = geom.identity_point();
    for k in 0..5 {
        let psi = random_constant_psi(6, 31, k);
        let tw = Twisted::new(&geom, &psi);
        for i in 0..6 {
            for j in 0..6 {
                let r = tw.nijenhuis_twist_residual(&p, &geom.frame().basis(i), &geom.frame().basis(j)).unwrap();
                assert!(r < 1e-9, "{r}");
            }
        }
    }
    let sph = Sphere::s6();
    let map = s6_map("x1*x2", 5.0);
    let tw = Twisted::new(&sph, &map);
    for i in 0..10 {
        let p = sph.sample_point(12, i);
        let v = tangents(&sph, &p, 13, i, 2);
        assert!(tw.nijenhuis_twist_residual(&p, &v[0], &v[1]).unwrap() < 1e-7);
    }
}

#[test]
fn s_tensor_is_extension_independent() {
    let sph = Sphere::s6();
    let map = s6_map("x1*x2", 5.0);
    let tw = Twisted::new(&sph, &map);
    for i in 0..5 {
        let p = sph.sample_point(14, i);
        let v = tangents(&sph, &p, 15, i, 2);
        let a = tw.s_tensor(&p, &v[0], &v[1]).unwrap();
        let b = tw
            .s_tensor_fields(&p, &perturbed(&sph, &p, &v[0], 1), &perturbed(&sph, &p, &v[1], 2))
            .unwrap();
        assert!((a - b).norm() < 1e-8);
        // the Codazzi shortcut for rho
        let ct = CodazziTwist::assume(tw);
        let x = perturbed(&sph, &p, &v[0], 3);
        let y = perturbed(&sph, &p, &v[1], 4);
        assert!((ct.rho(&p, &x, &y).unwrap() - ct.rho_codazzi(&p, &x, &y).unwrap()).norm() < 1e-8);
    }
}

#[test]
fn criteria_agree_on_s6() {
    let sph = Sphere::s6();
    let map = s6_map("x1*x2", 5.0);
    let ct = CodazziTwist::assume(Twisted::new(&sph, &map));
    for i in 0..10 {
        let p = sph.sample_point(16, i);
        let v = tangents(&sph, &p, 17, i, 2);
        let a = ct.integrability_tensor(&p, &v[0], &v[1]).unwrap();
        let b = ct.nk_criterion(&p, &v[0], &v[1]).unwrap();
        assert!((&a + &b).norm() < 1e-10 * (1.0 + a.norm()));
        assert!(a.norm() > 1e-4);
    }
}

#[test]
fn scalar_twist_commutator_closed_form() {
    let sph = Sphere::s6();
    let lambda = 1.7;
    let psi = ConstantTwist::scalar(7, lambda);
    let ct = CodazziTwist::assume(Twisted::new(&sph, &psi));
    let p = sph.sample_point(3, 3);
    let z = tangents(&sph, &p, 4, 4, 1).remove(0);
    let m = ct.commutator_obstruction(&p, &z).unwrap();
    let t = sph.tangent_basis(&p);
    let j = sph.complex_structure(&p).unwrap().value;
    let nj = ct.nabla_j(&p, &z).unwrap();
    let expected = t.transpose() * (j * nj * (-4.0 * lambda)) * &t;
    assert!((m - expected).amax() < 1e-12);
}

#[test]
fn twisted_kahler_flat_example() {
    let flat = Flat::kahler(4);
    let map = r4_map(2.0);
    let ct = Twisted::new(&flat, &map).verify_codazzi(100, 5).unwrap();
    for i in 0..10 {
        let p = flat.sample_point(30, i);
        let v = tangents(&flat, &p, 31, i, 3);
        assert!(ct.d_omega_direct(&p, &v[0], &v[1], &v[2]).unwrap().abs() < 1e-12);
        assert!(ct.nabla_twisted_j(&p, &v[0]).unwrap().amax() < 1e-12);
        assert!(ct.lc_torsion_defect(&p, &v[0], &v[1]).unwrap() < 1e-12);
        assert!(ct.lc_metric_defect(&p, &v[0], &v[1], &v[2]).unwrap() < 1e-11);
        assert!(ct.nijenhuis_twisted_max(&p).unwrap() < 1e-12);
        let i_mat = ct.complex_structure(&p).unwrap().value;
        let cx: Vec<ComplexVector> = v.iter().map(|w| ComplexVector::type_10(&i_mat, w)).collect();
        assert!(ct.nk_10_identity(&p, &cx[0], &cx[1], &cx[2]).unwrap().norm() < 1e-12);
    }
}

#[test]
fn eta_for_complex_scalar_twist() {
    let flat = Flat::kahler(4);
    let (a, b) = (1.3, 0.6);
    let psi = ConstantTwist::from_psi(&complex_scalar_twist(a, b, &standard_j(4))).unwrap();
    let tw = Twisted::new(&flat, &psi);
    let p = DVector::zeros(4);
    let eta = tw.eta_a(&p).value;
    let omega = standard_j(4).transpose();
    assert!((eta - omega * (-b / (a * a + b * b))).amax() < 1e-15);
    assert!(tw.self_adjoint_defect(&p).unwrap() > 1.0);
    let psi_inv = psi.psi_inv(&p).value;
    assert!((psi_inv - complex_scalar_twist(a, -b, &standard_j(4)) / (a * a + b * b)).amax() < 1e-15);
}

#[test]
fn nabla_j_on_j_is_quarter_nijenhuis() {
    let sph = Sphere::s6();
    let id = ConstantTwist::identity(7);
    let tw = Twisted::new(&sph, &id);
    for i in 0..20 {
        let p = sph.sample_point(40, i);
        let v = tangents(&sph, &p, 41, i, 2);
        let j = sph.complex_structure(&p).unwrap().value;
        let lhs = tw.nabla_j(&p, &v[0]).unwrap() * (j * &v[1]);
        let n = tw.nijenhuis_base(&p, &v[0], &v[1]).unwrap();
        assert!((lhs + n * 0.25).norm() < 1e-12);
    }
}
