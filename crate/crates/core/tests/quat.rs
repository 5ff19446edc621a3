use monogenic::quat::vec_mul;
use monogenic::{Quaternion, Vec3};
use proptest::prelude::*;

fn q() -> impl Strategy<Value = Quaternion> {
    prop::array::uniform4(-10.0..10.0f64).prop_map(Quaternion::from_array)
}

#[test]
fn unit_relations() {
    assert_eq!(Quaternion::E1 * Quaternion::E2, Quaternion::E3);
    assert_eq!(Quaternion::E2 * Quaternion::E1, -Quaternion::E3);
    assert_eq!(Quaternion::E1 * Quaternion::E1, Quaternion::scalar(-1.0));
    let x = Quaternion::new(0.5, -1.0, 2.0, 3.0);
    assert_eq!(Quaternion::ONE * x, x);
}

#[test]
fn conjugate_and_parts() {
    assert_eq!(Quaternion::new(1.0, 1.0, 0.0, 0.0).conj(), Quaternion::new(1.0, -1.0, 0.0, 0.0));
    assert_eq!((Quaternion::E1.conj() * Quaternion::E1).sc(), 1.0);
    assert_eq!(Quaternion::new(2.0, 0.0, 3.0, 0.0).vec(), Vec3::new(0.0, 3.0, 0.0));
}

proptest! {
    #[test]
    fn parts_reconstruct(a in q()) {
        prop_assert_eq!(a.sc_part() + a.vec_part(), a);
        prop_assert!(a.norm_squared() >= 0.0);
    }

    #[test]
    fn conjugation_reverses_products(a in q(), b in q()) {
        let d = (a * b).conj() - b.conj() * a.conj();
        prop_assert!(d.norm() <= 1e-12 * (1.0 + a.norm() * b.norm()));
    }

    #[test]
    fn vector_product_is_minus_dot_plus_cross(p in prop::array::uniform3(-5.0..5.0f64), r in prop::array::uniform3(-5.0..5.0f64)) {
        let (p, r) = (Vec3::from(p), Vec3::from(r));
        let m = vec_mul(&p, &r);
        prop_assert!((m.sc() + p.dot(&r)).abs() <= 1e-12 * (1.0 + p.norm() * r.norm()));
        prop_assert!((m.vec() - p.cross(&r)).norm() <= 1e-12 * (1.0 + p.norm() * r.norm()));
    }

    #[test]
    fn norm_vanishes_only_at_zero(a in q()) {
        prop_assert_eq!(a.norm() == 0.0, a == Quaternion::ZERO);
    }
}
