use monogenic::boundary_ops::{PointPotentials, Quadrature};
use monogenic::mesh::unit_ball;
use monogenic::probes::{interior_lattice, Targets};
use monogenic::volume_ops::{first_stencil, numeric_d_tets, sample_nodes, VolumeContext};
use monogenic::{Quaternion, Vec3};
use proptest::prelude::*;

#[test]
fn teodorescu_of_constants_at_the_center() {
    let m = unit_ball(0.5).unwrap();
    let vc = VolumeContext::new(&m);
    let t = vc.teodorescu(&vec![Quaternion::ONE; m.tets().len()], &Targets::new(vec![Vec3::zeros()]));
    assert!(t.t2[0].norm() < 1e-2, "{:?}", t.t2[0]);
    let zero = vc.teodorescu(&vec![Quaternion::ZERO; m.tets().len()], &Targets::new(vec![Vec3::new(0.1, 0.2, 0.0)]));
    assert_eq!(zero.total()[0], Quaternion::ZERO);
}

#[test]
fn newton_potential_of_one_at_the_center() {
    let m = unit_ball(0.3).unwrap();
    let v = VolumeContext::new(&m).newton(&vec![Quaternion::ONE; m.tets().len()], &Targets::new(vec![Vec3::zeros()]));
    // The polyhedral ball is slightly smaller than the unit ball.
    assert!((v[0].w0 - 0.5).abs() < 0.02, "{}", v[0]);
}

#[test]
fn dirac_of_affine_fields_is_exact() {
    let m = unit_ball(0.6).unwrap();
    let cases: [(fn(&Vec3) -> Quaternion, Quaternion); 3] = [
        (|x| Quaternion::scalar(x.x), Quaternion::E1),
        (|x| Quaternion::new(x.x, 0.0, 0.0, -x.y), Quaternion::ZERO),
        (|x| Quaternion::vector(*x), Quaternion::scalar(-3.0)),
    ];
    for (w, dw) in cases {
        for d in numeric_d_tets(&m, &sample_nodes(&m, w)) {
            assert!((d - dw).norm() < 1e-12);
        }
    }
}

#[test]
fn right_inverse_of_constants_and_decay() {
    let mut res = Vec::new();
    for h in [0.6, 0.4] {
        let m = unit_ball(h).unwrap();
        let vc = VolumeContext::new(&m);
        let st = first_stencil(&m, interior_lattice(m.boundary(), 0.3, 0.25));
        let c = Quaternion::new(1.0, -0.5, 0.25, 2.0);
        let r = vc.right_inverse_residual(&vec![c; m.tets().len()], &st, |_| c);
        assert!(r.iter().all(|d| d.norm() < 0.05 * c.norm()));
        let w = |x: &Vec3| Quaternion::new(0.0, x.z, 0.0, 0.0);
        let dens: Vec<Quaternion> = m.centroids().iter().map(w).collect();
        let r = vc.right_inverse_residual(&dens, &st, w);
        res.push((r.iter().map(|d| d.norm_squared()).sum::<f64>() / r.len() as f64).sqrt());
    }
    assert!(res[1] < res[0], "{res:?}");
}

#[test]
fn borel_pompeiu_for_a_monogenic_field() {
    let m = unit_ball(0.4).unwrap();
    let w = |x: &Vec3| Quaternion::new(x.x, 0.0, 0.0, -x.y);
    let pts = interior_lattice(m.boundary(), 0.3, 0.25);
    let tr: Vec<Quaternion> = m.boundary().centroids().iter().map(w).collect();
    let f = PointPotentials::assemble(m.boundary(), &pts, &Quadrature::default()).cauchy(&tr);
    let dw = numeric_d_tets(&m, &sample_nodes(&m, w));
    let t = VolumeContext::new(&m).teodorescu(&dw, &Targets::new(pts.clone())).total();
    for ((x, a), b) in pts.iter().zip(&f).zip(&t) {
        assert!((*a + *b - w(x)).norm() < 0.01);
    }
}

#[test]
fn t3_is_the_curl_of_the_newton_potential() {
    let m = unit_ball(0.4).unwrap();
    let vc = VolumeContext::new(&m);
    let st = first_stencil(&m, interior_lattice(m.boundary(), 0.3, 0.3));
    let dens: Vec<Quaternion> = m.centroids().iter().map(|_| Quaternion::vector(Vec3::new(0.3, -1.0, 0.5))).collect();
    let t3 = vc.teodorescu(&dens, &Targets::new(st.centers().to_vec())).t3;
    let l: Vec<Vec3> = vc.newton(&dens, &st.targets()).iter().map(|q| q.vec()).collect();
    let curl = st.curl(&l);
    for (a, b) in t3.iter().zip(&curl) {
        assert!((a - b).norm() < 1e-6 * (1.0 + a.norm()), "{a:?} {b:?}");
    }
}

#[test]
fn component_split_matches_product_form() {
    let m = unit_ball(0.6).unwrap();
    let vc = VolumeContext::new(&m);
    let dens: Vec<Quaternion> = m.centroids().iter().map(|x| Quaternion::new(x.x, x.y * x.z, 1.0, -x.z)).collect();
    let t = Targets::new(vec![Vec3::new(0.1, 0.2, -0.1), Vec3::new(1.5, 0.0, 0.0)]);
    let a = vc.teodorescu(&dens, &t).total();
    let b = vc.teodorescu_product(&dens, &t);
    for (x, y) in a.iter().zip(&b) {
        assert!((*x - *y).norm() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]
    #[test]
    fn scalar_densities_have_no_t1(c in -3.0..3.0f64, a in -1.0..1.0f64) {
        let m = unit_ball(0.6).unwrap();
        let dens: Vec<Quaternion> = m.centroids().iter().map(|x| Quaternion::scalar(c + a * x.y)).collect();
        let t = VolumeContext::new(&m).teodorescu(&dens, &Targets::new(vec![Vec3::new(0.2, 0.0, 0.1)]));
        prop_assert_eq!(t.t1[0], 0.0);
    }
}
