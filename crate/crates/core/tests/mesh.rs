use std::collections::HashMap;

use monogenic::mesh::io::{msh_string, off_string, parse_msh, parse_off};
use monogenic::mesh::{solid_torus, unit_ball, unit_sphere, SurfaceMesh};
use monogenic::Error;
use proptest::prelude::*;

fn directed_edges_once(m: &SurfaceMesh) -> bool {
    let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
    for t in m.triangles() {
        for k in 0..3 {
            *seen.entry((t[k], t[(k + 1) % 3])).or_default() += 1;
        }
    }
    seen.values().all(|&c| c == 1) && seen.keys().all(|&(a, b)| seen.contains_key(&(b, a)))
}

#[test]
fn icosphere_counts_and_area() {
    let m0 = unit_sphere(0);
    assert_eq!((m0.len(), m0.vertices().len()), (20, 12));
    assert_eq!(unit_sphere(2).len(), 320);
    let m3 = unit_sphere(3);
    let rel = (m3.total_area() - 4.0 * std::f64::consts::PI).abs() / (4.0 * std::f64::consts::PI);
    assert!(rel < 0.02, "{rel}");
}

#[test]
fn sphere_is_closed_oriented_and_outward() {
    for level in 0..4 {
        let m = unit_sphere(level);
        assert!(directed_edges_once(&m));
        assert!(m.normals().iter().all(|n| (n.norm() - 1.0).abs() <= 1e-12));
        assert!(m.signed_volume() > 0.0);
        assert_eq!(m.euler_characteristic(), 2);
    }
}

#[test]
fn ball_volume_and_boundary() {
    let coarse = unit_ball(0.5).unwrap();
    let v = coarse.total_volume();
    let exact = 4.0 * std::f64::consts::PI / 3.0;
    assert!((v - exact).abs() / exact < 0.1);
    assert!(coarse.volumes().iter().all(|&x| x > 0.0));
    let b = coarse.boundary();
    assert!(directed_edges_once(b));
    assert!((b.signed_volume() - v).abs() / v < 1e-8);
    assert!(unit_ball(0.2).unwrap().tets().len() > coarse.tets().len());
}

#[test]
fn torus_topology_and_pappus_volume() {
    let m = solid_torus(2.0, 0.5, 0.2).unwrap();
    assert_eq!(m.boundary().euler_characteristic(), 0);
    assert_eq!(m.boundary().components(), 1);
    let exact = 2.0 * std::f64::consts::PI.powi(2) * 2.0 * 0.25;
    assert!((m.total_volume() - exact).abs() / exact < 0.1);
}

#[test]
fn off_parsing_contracts() {
    let ico = parse_off(&off_string(&unit_sphere(0)), "ico.off").unwrap();
    assert_eq!(ico.len(), 20);
    let text = off_string(&unit_sphere(0));
    let cut: String = text.lines().take(20).collect::<Vec<_>>().join("\n");
    match parse_off(&cut, "cut.off") {
        Err(Error::Parse { line, .. }) => assert!(line > 0),
        other => panic!("{other:?}"),
    }
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let last = lines.len() - 1;
    let idx: Vec<&str> = lines[last].split_whitespace().collect();
    lines[last] = format!("3 {} {} {}", idx[1], idx[3], idx[2]);
    match parse_off(&lines.join("\n"), "flip.off") {
        Ok(m) => assert!(directed_edges_once(&m)),
        Err(e) => assert!(e.to_string().contains("19"), "{e}"),
    }
}

#[test]
fn msh_round_trip_keeps_volume() {
    let m = unit_ball(0.6).unwrap();
    let back = parse_msh(&msh_string(&m), "b.msh").unwrap();
    assert_eq!(back.tets().len(), m.tets().len());
    assert!((back.total_volume() - m.total_volume()).abs() < 1e-12);
    assert_eq!(back.boundary().len(), m.boundary().len());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]
    #[test]
    fn normal_integral_vanishes(level in 0u32..3) {
        let m = unit_sphere(level);
        prop_assert!(m.normal_integral().norm() <= 1e-12);
        prop_assert_eq!(m.len(), 20 * 4usize.pow(level));
    }
}
