//! Test geometries: icosphere, shell-layered unit ball, solid torus.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{Rotation3, Unit};

use crate::error::{Error, Result};
use crate::mesh::{SurfaceMesh, VolumeMesh};
use crate::panel::tet_volume;
use crate::quat::Vec3;

/// Largest tetrahedron count the ball and torus generators will produce.
pub const ELEMENT_BUDGET: usize = 500_000;

/// Vertices and faces of a unit icosphere. The icosahedron is rotated so a
/// face centroid sits on each pole, which keeps mesh vertices off the
/// `x3` axis.
fn icosphere_raw(level: u32) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let g = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec3> = [
        (-1.0, g, 0.0),
        (1.0, g, 0.0),
        (-1.0, -g, 0.0),
        (1.0, -g, 0.0),
        (0.0, -1.0, g),
        (0.0, 1.0, g),
        (0.0, -1.0, -g),
        (0.0, 1.0, -g),
        (g, 0.0, -1.0),
        (g, 0.0, 1.0),
        (-g, 0.0, -1.0),
        (-g, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();

    // Faces are the vertex triples at mutual nearest-neighbour distance.
    let edge = (verts[0] - verts[1]).norm();
    let close = |a: usize, b: usize| ((verts[a] - verts[b]).norm() - edge).abs() < 1e-9;
    let mut faces = Vec::new();
    for a in 0..12 {
        for b in a + 1..12 {
            for c in b + 1..12 {
                if close(a, b) && close(b, c) && close(a, c) {
                    let n = (verts[b] - verts[a]).cross(&(verts[c] - verts[a]));
                    if n.dot(&verts[a]) > 0.0 {
                        faces.push([a, b, c]);
                    } else {
                        faces.push([a, c, b]);
                    }
                }
            }
        }
    }
    debug_assert_eq!(faces.len(), 20);

    let f0 = faces[0];
    let c = (verts[f0[0]] + verts[f0[1]] + verts[f0[2]]).normalize();
    let rot = Rotation3::rotation_between(&c, &Vec3::z()).unwrap_or_else(|| {
        Rotation3::from_axis_angle(&Unit::new_normalize(Vec3::x()), PI)
    });
    for v in verts.iter_mut() {
        *v = rot * *v;
    }

    for _ in 0..level {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Vec3>| -> usize {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                verts.len() - 1
            })
        };
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    (verts, faces)
}

/// Unit icosphere with `20 * 4^level` triangles.
pub fn unit_sphere(level: u32) -> SurfaceMesh {
    let (v, f) = icosphere_raw(level);
    SurfaceMesh::new(v, f).expect("icosphere is a valid closed surface")
}

/// Maximum edge length of the icosphere at `level`.
fn icosphere_edge(level: u32) -> f64 {
    // Subdivision roughly halves the edge angle of the icosahedron; the
    // factor covers the non-uniformity introduced by projection.
    let theta0 = (1.0 / 5f64.sqrt()).acos();
    2.0 * (theta0 / 2f64.powi(level as i32 + 1)).sin() * 1.2
}

/// Parameters chosen by [`unit_ball`] for a target edge length.
pub fn ball_resolution(h: f64) -> (u32, usize) {
    // Shell prisms are split along diagonals, so the surface edge is kept
    // somewhat below the target.
    let target = 0.85 * h;
    let mut level = 0;
    while icosphere_edge(level) > target {
        level += 1;
    }
    let layers = ((1.5 / target).ceil() as usize).max(2);
    (level, layers)
}

/// Tetrahedral unit ball built from concentric icosphere shells, graded
/// towards the boundary. The outer shell is the boundary surface.
pub fn unit_ball(h: f64) -> Result<VolumeMesh> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::Precondition(format!("ball edge length must lie in (0, 1), got {h}")));
    }
    let (level, layers) = ball_resolution(h);
    graded_ball(level, layers, RADIAL_GRADING)
}

/// Shell radii are `1 - (1 - k/layers)^RADIAL_GRADING`, thinner towards the
/// boundary where Neumann data is recovered.
pub const RADIAL_GRADING: f64 = 1.5;

/// Unit ball from `layers` equally spaced copies of the level-`level`
/// icosphere, coned to the center.
pub fn shell_ball(level: u32, layers: usize) -> Result<VolumeMesh> {
    graded_ball(level, layers, 1.0)
}


/// Like [`shell_ball`] with shell `k` at radius `1 - (1 - k/layers)^q`.
pub fn graded_ball(level: u32, layers: usize, q: f64) -> Result<VolumeMesh> {
    if !(q >= 1.0) {
        return Err(Error::Precondition(format!("grading exponent must be at least 1, got {q}")));
    }
    if layers == 0 {
        return Err(Error::Precondition("a shell ball needs at least one layer".into()));
    }
    let tris_est = 20usize.saturating_mul(4usize.saturating_pow(level));
    let tets_est = tris_est.saturating_mul(3 * layers);
    if tets_est > ELEMENT_BUDGET {
        return Err(Error::Resource(format!(
            "level {level} with {layers} layers needs about {tets_est} tetrahedra, over the budget of {ELEMENT_BUDGET}"
        )));
    }
    let (sv, sf) = icosphere_raw(level);
    let nv = sv.len();
    let mut nodes = vec![Vec3::zeros()];
    for k in 1..=layers {
        let r = 1.0 - (1.0 - k as f64 / layers as f64).powf(q);
        nodes.extend(sv.iter().map(|p| p * r));
    }
    let id = |shell: usize, v: usize| 1 + (shell - 1) * nv + v;
    let mut tets = Vec::with_capacity(tets_est);
    for f in &sf {
        tets.push([0, id(1, f[0]), id(1, f[1]), id(1, f[2])]);
        for k in 1..layers {
            let mut s = *f;
            s.sort_unstable();
            split_prism(s.map(|v| id(k, v)), s.map(|v| id(k + 1, v)), &mut tets);
        }
    }
    orient_positive(&nodes, &mut tets);
    VolumeMesh::new(nodes, tets)
}

/// Splits the prism with bottom `b` and top `t` (matched, bottom indices in
/// increasing order) into three tets. Quad diagonals join the lower-indexed
/// bottom vertex to the higher-indexed top vertex, so neighbouring prisms
/// agree on shared faces.
fn split_prism(b: [usize; 3], t: [usize; 3], out: &mut Vec<[usize; 4]>) {
    out.push([b[0], b[1], b[2], t[2]]);
    out.push([b[0], b[1], t[1], t[2]]);
    out.push([b[0], t[0], t[1], t[2]]);
}

fn orient_positive(nodes: &[Vec3], tets: &mut [[usize; 4]]) {
    for t in tets.iter_mut() {
        if tet_volume(&t.map(|i| nodes[i])) < 0.0 {
            t.swap(0, 1);
        }
    }
}

/// Triangulated disk of radius `r`: centre plus `rings` concentric rings of
/// `6k` points. Returns planar points and counter-clockwise triangles.
fn disk(r: f64, rings: usize) -> (Vec<[f64; 2]>, Vec<[usize; 3]>, usize) {
    let mut pts = vec![[0.0, 0.0]];
    let mut starts = vec![0usize];
    for k in 1..=rings {
        starts.push(pts.len());
        let n = 6 * k;
        let rad = r * k as f64 / rings as f64;
        for j in 0..n {
            let a = 2.0 * PI * j as f64 / n as f64;
            pts.push([rad * a.cos(), rad * a.sin()]);
        }
    }
    let mut tris = Vec::new();
    for j in 0..6 {
        tris.push([0, 1 + j, 1 + (j + 1) % 6]);
    }
    for k in 2..=rings {
        // Zip ring k-1 (inner) and ring k (outer) in angular order.
        let (ni, no) = (6 * (k - 1), 6 * k);
        let (si, so) = (starts[k - 1], starts[k]);
        let (mut i, mut o) = (0usize, 0usize);
        while i < ni || o < no {
            let ai = (i + 1) as f64 / ni as f64;
            let ao = (o + 1) as f64 / no as f64;
            if o < no && (i >= ni || ao <= ai) {
                tris.push([si + i % ni, so + o, so + (o + 1) % no]);
                o += 1;
            } else {
                tris.push([si + i % ni, so + o % no, si + (i + 1) % ni]);
                i += 1;
            }
        }
    }
    let boundary_start = starts[rings];
    (pts, tris, boundary_start)
}

/// Solid torus with major radius `big_r` and minor radius `r`, meshed by
/// extruding a disk triangulation around the `x3` axis.
pub fn solid_torus(big_r: f64, r: f64, h: f64) -> Result<VolumeMesh> {
    if !(r > 0.0 && r < big_r) {
        return Err(Error::Geometry(format!(
            "torus needs 0 < r < R, got R = {big_r}, r = {r}"
        )));
    }
    if !(h > 0.0) {
        return Err(Error::Precondition(format!("edge length must be positive, got {h}")));
    }
    let rings = ((r / h).ceil() as usize).max(1);
    let slices = ((2.0 * PI * big_r / h).ceil() as usize).max(6);
    let (pts, tris, _) = disk(r, rings);
    let tets_est = tris.len() * 3 * slices;
    if tets_est > ELEMENT_BUDGET {
        return Err(Error::Resource(format!(
            "h = {h} needs {tets_est} tetrahedra, over the budget of {ELEMENT_BUDGET}"
        )));
    }
    let np = pts.len();
    let mut nodes = Vec::with_capacity(np * slices);
    for s in 0..slices {
        let th = 2.0 * PI * s as f64 / slices as f64;
        for p in &pts {
            let rho = big_r + p[0];
            nodes.push(Vec3::new(rho * th.cos(), rho * th.sin(), p[1]));
        }
    }
    let mut tets = Vec::with_capacity(tets_est);
    for s in 0..slices {
        let s1 = (s + 1) % slices;
        for t in &tris {
            let mut q = *t;
            q.sort_unstable();
            split_prism(q.map(|v| s * np + v), q.map(|v| s1 * np + v), &mut tets);
        }
    }
    orient_positive(&nodes, &mut tets);
    VolumeMesh::new(nodes, tets)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosahedron_counts() {
        let m = unit_sphere(0);
        assert_eq!(m.len(), 20);
        assert_eq!(m.vertices().len(), 12);
        assert_eq!(unit_sphere(2).len(), 320);
        assert_eq!(unit_sphere(2).euler_characteristic(), 2);
    }

    #[test]
    fn sphere_area_converges() {
        let four_pi = 4.0 * PI;
        let errs: Vec<f64> = (1..=4)
            .map(|l| (unit_sphere(l).total_area() - four_pi).abs())
            .collect();
        assert!(errs[2] < 0.02 * four_pi);
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    }

    #[test]
    fn no_vertex_on_the_axis() {
        for l in 0..4 {
            let m = unit_sphere(l);
            let top = m.vertices().iter().map(|v| v.z.abs()).fold(0.0, f64::max);
            assert!(top < 1.0 - 1e-3, "level {l}: {top}");
        }
    }

    #[test]
    fn edge_bound_holds() {
        for l in 0..5 {
            let m = unit_sphere(l);
            let longest = m.max_diameter();
            assert!(longest <= icosphere_edge(l), "level {l}: {longest} > {}", icosphere_edge(l));
        }
    }

    #[test]
    fn ball_volumes() {
        let coarse = unit_ball(0.5).unwrap();
        let v = 4.0 * PI / 3.0;
        assert!((coarse.total_volume() - v).abs() < 0.1 * v);
        assert_eq!(coarse.boundary().euler_characteristic(), 2);
        assert!(coarse.boundary().signed_volume() > 0.0);
        let fine = unit_ball(0.2).unwrap();
        assert!((fine.total_volume() - v).abs() < 0.03 * v);
        assert!(fine.tets().len() > coarse.tets().len());
    }

    #[test]
    fn ball_budget() {
        assert!(matches!(unit_ball(0.02), Err(Error::Resource(_))));
        assert!(matches!(unit_ball(1.5), Err(Error::Precondition(_))));
    }

    #[test]
    fn torus_topology_and_volume() {
        let m = solid_torus(2.0, 0.5, 0.2).unwrap();
        assert_eq!(m.boundary().euler_characteristic(), 0);
        assert_eq!(m.boundary().components(), 1);
        let v = 2.0 * PI * PI * 2.0 * 0.25;
        assert!((m.total_volume() - v).abs() < 0.1 * v, "{}", m.total_volume());
        assert!(matches!(solid_torus(1.0, 1.0, 0.2), Err(Error::Geometry(_))));
    }
}
