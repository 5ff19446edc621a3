use monogenic::elliptic::Conductivity;
use monogenic::mesh::{unit_ball, VolumeMesh};
use monogenic::probes::{interior_lattice, Stencil, StencilOrder, Targets};
use monogenic::vekua::{boundary_norm, vekua_residual, VekuaContext};
use monogenic::{Quaternion, Vec3};

fn bvals(m: &VolumeMesh, f: impl Fn(&Vec3) -> f64) -> Vec<f64> {
    m.boundary().vertices().iter().map(f).collect()
}

fn radial(m: &VolumeMesh) -> Conductivity {
    Conductivity::from_fn(m, |x| 1.0 + x.norm_squared()).unwrap()
}

#[test]
fn constant_data_give_zero_vector_part() {
    let m = unit_ball(0.5).unwrap();
    let ctx = VekuaContext::new(&m).unwrap();
    let t = ctx.transform(&radial(&m), &vec![-1.5; m.boundary_nodes().len()]).unwrap();
    let fw = ctx.fw_at(&t, &Targets::new(vec![Vec3::zeros(), Vec3::new(0.3, 0.1, -0.2)]));
    assert!(fw.iter().all(|v| v.norm() < 1e-10), "{fw:?}");
}

#[test]
fn unit_factor_gives_a_monogenic_field() {
    let m = unit_ball(0.5).unwrap();
    let ctx = VekuaContext::new(&m).unwrap();
    let f = Conductivity::constant(&m, 1.0).unwrap();
    let t = ctx.transform(&f, &bvals(&m, |x| x.x * x.y)).unwrap();
    let st = Stencil::new(interior_lattice(m.boundary(), 0.3, 0.3), 1e-3, StencilOrder::First);
    let r = ctx.probe_residuals(&t, &st);
    assert!(r.div < 0.05 * r.scale && r.curl < 0.2 * r.scale, "{r:?}");
}

#[test]
fn scaled_gradient_of_a_harmonic_solves_the_system() {
    let m = unit_ball(0.5).unwrap();
    let f = radial(&m);
    let w: Vec<Quaternion> = m
        .nodes()
        .iter()
        .zip(f.values())
        .map(|(x, fv)| Quaternion::vector(Vec3::new(x.y, x.x, 0.0) / *fv))
        .collect();
    let r = vekua_residual(&m, &f, &w).unwrap();
    assert!(r.div < 1e-10 && r.curl < 1e-10 && r.conductivity < 1e-10, "{r:?}");
}

#[test]
fn residual_flags_a_non_solution() {
    let m = unit_ball(0.6).unwrap();
    let f = radial(&m);
    let w: Vec<Quaternion> = m.nodes().iter().map(|x| Quaternion::vector(Vec3::new(x.x, 0.0, 0.0))).collect();
    let r = vekua_residual(&m, &f, &w).unwrap();
    assert!(r.div > 0.5, "{r:?}");
    assert!(vekua_residual(&m, &f, &w[..3]).is_err());
}

#[test]
fn transform_is_repeatable_and_stable_under_refinement() {
    let ratio = |h: f64| {
        let m = unit_ball(h).unwrap();
        let ctx = VekuaContext::new(&m).unwrap();
        let f = radial(&m);
        let phi = bvals(&m, |x| x.z);
        let a = ctx.vekua_hilbert(&f, &phi).unwrap();
        let b = ctx.vekua_hilbert(&f, &phi).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x == y));
        let areas = m.boundary().areas();
        let p = m.boundary().vertex_to_panel(&phi);
        let pn = areas.iter().zip(&p).map(|(w, v)| w * v * v).sum::<f64>().sqrt();
        boundary_norm(areas, &a) / pn
    };
    let (r0, r1) = (ratio(0.6), ratio(0.45));
    assert!(r0.is_finite() && r1.is_finite());
    assert!(r1 / r0 < 2.0 && r0 / r1 < 2.0, "{r0} {r1}");
}
