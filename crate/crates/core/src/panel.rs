//! Closed-form potentials of flat triangles and tetrahedra.
//!
//! All routines integrate the Laplace kernel `1/(4 pi |y - x|)` or its
//! gradient over a flat simplex carrying a unit density. The edge terms
//! follow the classical Wilton-Rao-Glisson construction.

use std::f64::consts::PI;

use nalgebra::Matrix3;

use crate::quat::Vec3;

const FOUR_PI: f64 = 4.0 * PI;

/// Per-edge quantities shared by the potential and its gradient.
struct EdgeTerm {
    /// In-plane outward edge normal.
    u: Vec3,
    /// Unit edge direction.
    l: Vec3,
    /// Foot of the perpendicular from the target to the edge line, minus
    /// the target.
    w: Vec3,
    lp: f64,
    lm: f64,
    rp: f64,
    rm: f64,
    /// Signed in-plane distance from the projected target to the edge line.
    t0: f64,
    /// `ln((R+ + l+)/(R- + l-))`, the line integral of `1/R` along the edge.
    log: f64,
    beta: f64,
}

fn unit_normal(p: &[Vec3; 3]) -> Vec3 {
    (p[1] - p[0]).cross(&(p[2] - p[0])).normalize()
}

fn edge_terms(p: &[Vec3; 3], x: &Vec3, n: &Vec3, d: f64) -> [EdgeTerm; 3] {
    let rho = x - n * d;
    let ad = d.abs();
    std::array::from_fn(|i| {
        let pm = p[i];
        let pp = p[(i + 1) % 3];
        let edge = pp - pm;
        let len = edge.norm();
        let l = edge / len;
        let u = l.cross(n);
        let lp = (pp - rho).dot(&l);
        let lm = (pm - rho).dot(&l);
        let t0 = (pm - rho).dot(&u);
        let rp = (pp - x).norm();
        let rm = (pm - x).norm();
        let r0sq = t0 * t0 + d * d;
        // Both quotients are equal since R^2 - l^2 = R0^2 at either endpoint;
        // pick the one without cancellation.
        let log = if r0sq <= 1e-28 * len * len && lm * lp > 0.0 {
            (lp.abs() / lm.abs()).ln() * lp.signum()
        } else if lp + lm >= 0.0 {
            ((rp + lp) / (rm + lm)).ln()
        } else {
            ((rm - lm) / (rp - lp)).ln()
        };
        let beta = if t0.abs() <= 1e-14 * len {
            0.0
        } else {
            (t0 * lp / (r0sq + ad * rp)).atan() - (t0 * lm / (r0sq + ad * rm)).atan()
        };
        let w = (pm - x) - l * lm;
        EdgeTerm { u, l, w, lp, lm, rp, rm, t0, log, beta }
    })
}

/// `int_T 1/(4 pi |y - x|) dS_y` over the flat triangle `p`.
pub fn triangle_single_layer(p: &[Vec3; 3], x: &Vec3) -> f64 {
    let n = unit_normal(p);
    let d = (x - p[0]).dot(&n);
    let terms = edge_terms(p, x, &n, d);
    let mut acc = 0.0;
    for t in &terms {
        if t.t0 != 0.0 && t.log.is_finite() {
            acc += t.t0 * t.log;
        }
        acc -= d.abs() * t.beta;
    }
    acc / FOUR_PI
}

/// Signed solid angle `int_T (y - x).n / |y - x|^3 dS_y` with `n` the normal
/// induced by the vertex order of `p`.
pub fn solid_angle(p: &[Vec3; 3], x: &Vec3) -> f64 {
    let r1 = p[0] - x;
    let r2 = p[1] - x;
    let r3 = p[2] - x;
    let (l1, l2, l3) = (r1.norm(), r2.norm(), r3.norm());
    let det = r1.dot(&r2.cross(&r3));
    let den = l1 * l2 * l3 + r1.dot(&r2) * l3 + r1.dot(&r3) * l2 + r2.dot(&r3) * l1;
    2.0 * det.atan2(den)
}

/// `int_T E(y - x) dS_y` with `E(z) = -z/(4 pi |z|^3)`.
///
/// For a target in the plane of the triangle the normal part vanishes and
/// the tangential part is the principal value over the triangle (finite
/// unless the target sits on an edge).
pub fn triangle_cauchy(p: &[Vec3; 3], x: &Vec3) -> Vec3 {
    let n = unit_normal(p);
    let d = (x - p[0]).dot(&n);
    let terms = edge_terms(p, x, &n, d);
    let mut acc = Vec3::zeros();
    for t in &terms {
        if t.log.is_finite() {
            acc += t.u * t.log;
        }
    }
    let omega = if d == 0.0 { 0.0 } else { solid_angle(p, x) };
    (acc - n * omega) / FOUR_PI
}

/// Principal value of `int_T E(y - x) dS_y` for a target inside the
/// triangle. Only the tangential edge terms survive; the normal part is
/// zero on a flat panel.
pub fn triangle_cauchy_pv(p: &[Vec3; 3], x: &Vec3) -> Vec3 {
    let n = unit_normal(p);
    let terms = edge_terms(p, x, &n, 0.0);
    terms.iter().map(|t| t.u * t.log).sum::<Vec3>() / FOUR_PI
}

/// Matrix `N` with `N g = int_T E(y - x) ((y - x).g) dS_y` for vectors `g`
/// in the plane of the triangle. `in_plane` marks a target on the panel.
pub fn triangle_cauchy_moment(p: &[Vec3; 3], x: &Vec3, in_plane: bool) -> Matrix3<f64> {
    let n = unit_normal(p);
    let d = if in_plane { 0.0 } else { (x - p[0]).dot(&n) };
    let terms = edge_terms(p, x, &n, d);
    // (y-x)_a (y-x)_b / R^3 = delta_ab / R - d_b[(y-x)_a / R], and the
    // tangential divergence moves the second term to the edges.
    let mut i1 = 0.0;
    for t in &terms {
        if t.t0 != 0.0 && t.log.is_finite() {
            i1 += t.t0 * t.log;
        }
        i1 -= d.abs() * t.beta;
    }
    let mut j = Matrix3::identity() * i1;
    for t in &terms {
        let log = if t.log.is_finite() { t.log } else { 0.0 };
        let edge = t.w * log + t.l * (t.rp - t.rm);
        j -= edge * t.u.transpose();
    }
    -j / FOUR_PI
}

/// Vector `m` with `m.g = int_T ((y - x).g) / (4 pi |y - x|) dS_y` for
/// vectors `g` in the plane of the triangle.
pub fn triangle_single_layer_moment(p: &[Vec3; 3], x: &Vec3, in_plane: bool) -> Vec3 {
    let n = unit_normal(p);
    let d = if in_plane { 0.0 } else { (x - p[0]).dot(&n) };
    let terms = edge_terms(p, x, &n, d);
    let mut acc = Vec3::zeros();
    for t in &terms {
        let r0sq = t.w.norm_squared();
        let log = if t.log.is_finite() { t.log } else { 0.0 };
        let line = 0.5 * (t.lp * t.rp - t.lm * t.rm + r0sq * log);
        acc += t.u * line;
    }
    acc / FOUR_PI
}

/// `int_K E(y - x) dy` over a tetrahedron, valid for any target (the kernel
/// is absolutely integrable). Faces are given with outward orientation.
pub fn tet_cauchy(faces: &[[Vec3; 3]; 4], x: &Vec3) -> Vec3 {
    let mut acc = Vec3::zeros();
    for f in faces {
        acc += unit_normal(f) * triangle_single_layer(f, x);
    }
    acc
}

/// Newton potential `int_K 1/(4 pi |y - x|) dy` of a tetrahedron.
pub fn tet_newton(faces: &[[Vec3; 3]; 4], x: &Vec3) -> f64 {
    let mut acc = 0.0;
    for f in faces {
        let n = unit_normal(f);
        let d = (f[0] - x).dot(&n);
        if d != 0.0 {
            acc += d * triangle_single_layer(f, x);
        }
    }
    0.5 * acc
}

/// Outward-oriented faces of the tetrahedron `v` (positive volume assumed).
pub fn tet_faces(v: &[Vec3; 4]) -> [[Vec3; 3]; 4] {
    [
        [v[1], v[2], v[3]],
        [v[0], v[3], v[2]],
        [v[0], v[1], v[3]],
        [v[0], v[2], v[1]],
    ]
}

/// Signed volume of the tetrahedron `v`.
pub fn tet_volume(v: &[Vec3; 4]) -> f64 {
    (v[1] - v[0]).dot(&(v[2] - v[0]).cross(&(v[3] - v[0]))) / 6.0
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Midpoint rule on a uniform refinement into `4^level` sub-triangles.
    fn brute<F: Fn(&Vec3) -> Vec3>(p: &[Vec3; 3], level: u32, f: F) -> Vec3 {
        let m = 1usize << level;
        let area = 0.5 * (p[1] - p[0]).cross(&(p[2] - p[0])).norm();
        let w = area / (m * m) as f64;
        let a = (p[1] - p[0]) / m as f64;
        let b = (p[2] - p[0]) / m as f64;
        let mut acc = Vec3::zeros();
        for i in 0..m {
            for j in 0..m - i {
                let c = p[0] + a * (i as f64 + 1.0 / 3.0) + b * (j as f64 + 1.0 / 3.0);
                acc += f(&c) * w;
                if i + j + 1 < m {
                    let c = p[0] + a * (i as f64 + 2.0 / 3.0) + b * (j as f64 + 2.0 / 3.0);
                    acc += f(&c) * w;
                }
            }
        }
        acc
    }

    /// Eight-way red refinement, calling `f` on each leaf.
    fn refine_tet(v: &[Vec3; 4], depth: u32, f: &mut dyn FnMut(&[Vec3; 4])) {
        if depth == 0 {
            return f(v);
        }
        let m = |a: usize, b: usize| (v[a] + v[b]) * 0.5;
        let (m01, m02, m03, m12, m13, m23) = (m(0, 1), m(0, 2), m(0, 3), m(1, 2), m(1, 3), m(2, 3));
        let kids = [
            [v[0], m01, m02, m03],
            [m01, v[1], m12, m13],
            [m02, m12, v[2], m23],
            [m03, m13, m23, v[3]],
            [m01, m02, m03, m13],
            [m01, m02, m12, m13],
            [m02, m03, m13, m23],
            [m02, m12, m13, m23],
        ];
        for k in kids {
            refine_tet(&k, depth - 1, f);
        }
    }

    fn tri() -> [Vec3; 3] {
        [
            Vec3::new(0.1, -0.2, 0.3),
            Vec3::new(1.2, 0.1, 0.1),
            Vec3::new(0.3, 0.9, -0.2),
        ]
    }

    #[test]
    fn single_layer_matches_quadrature() {
        let p = tri();
        for x in [
            Vec3::new(0.4, 0.3, 1.0),
            Vec3::new(-0.7, 0.2, -0.5),
            Vec3::new(2.0, 2.0, 2.0),
        ] {
            let exact = triangle_single_layer(&p, &x);
            let q = brute(&p, 8, |y| Vec3::repeat(1.0 / (FOUR_PI * (y - x).norm())));
            assert!((exact - q.x).abs() < 2e-6 * q.x.abs(), "{exact} {}", q.x);
        }
    }

    #[test]
    fn cauchy_matches_quadrature() {
        let p = tri();
        for x in [Vec3::new(0.4, 0.3, 1.0), Vec3::new(-0.7, 0.2, -0.5)] {
            let exact = triangle_cauchy(&p, &x);
            let q = brute(&p, 7, |y| {
                let z = y - x;
                -z / (FOUR_PI * z.norm().powi(3))
            });
            assert!((exact - q).norm() < 1e-5 * q.norm(), "{exact} {q}");
        }
    }

    #[test]
    fn moments_match_quadrature() {
        let p = tri();
        let n = unit_normal(&p);
        let g = (p[1] - p[0]).normalize() * 0.7 + n.cross(&(p[1] - p[0])).normalize() * -0.4;
        for x in [Vec3::new(0.4, 0.3, 1.0), Vec3::new(-0.7, 0.2, -0.5), Vec3::new(0.5, 0.2, 0.2)] {
            let exact = triangle_cauchy_moment(&p, &x, false) * g;
            let q = brute(&p, 8, |y| {
                let z = y - x;
                -z * z.dot(&g) / (FOUR_PI * z.norm().powi(3))
            });
            assert!((exact - q).norm() < 1e-5 * q.norm().max(1e-3), "{exact} {q}");
            let exact = triangle_single_layer_moment(&p, &x, false).dot(&g);
            let q = brute(&p, 8, |y| Vec3::repeat((y - x).dot(&g) / (FOUR_PI * (y - x).norm())));
            assert!((exact - q.x).abs() < 1e-5 * q.x.abs().max(1e-3), "{exact} {}", q.x);
        }
    }

    #[test]
    fn moments_at_the_centroid() {
        // Weakly singular: compare against sub-triangles seen from a vertex,
        // where the brute-force rule still converges.
        let p = tri();
        let c = (p[0] + p[1] + p[2]) / 3.0;
        let n = unit_normal(&p);
        let g = n.cross(&(p[2] - p[0])).normalize();
        let whole = triangle_cauchy_moment(&p, &c, true) * g;
        let parts: Vec3 = (0..3)
            .map(|i| triangle_cauchy_moment(&[c, p[i], p[(i + 1) % 3]], &c, true) * g)
            .sum();
        assert!((whole - parts).norm() < 1e-13);
        let subs: Vec<[Vec3; 3]> = (0..3).map(|i| [c, p[i], p[(i + 1) % 3]]).collect();
        let q: Vec3 = subs
            .iter()
            .map(|s| {
                brute(s, 8, |y| {
                    let z = y - c;
                    -z * z.dot(&g) / (FOUR_PI * z.norm().powi(3))
                })
            })
            .sum();
        assert!((whole - q).norm() < 5e-3 * q.norm(), "{whole} {q}");
        let sl = triangle_single_layer_moment(&p, &c, true).dot(&g);
        let q: Vec3 = subs
            .iter()
            .map(|s| brute(s, 8, |y| Vec3::repeat((y - c).dot(&g) / (FOUR_PI * (y - c).norm()))))
            .sum();
        assert!((sl - q.x).abs() < 1e-4 * q.x.abs().max(1e-2), "{sl} {}", q.x);
    }

    #[test]
    fn single_layer_in_plane_and_at_vertex() {
        // Unit right triangle seen from its right-angle vertex:
        // int 1/r dS = sqrt(2) ln(1 + sqrt 2) in closed form.
        let p = [Vec3::zeros(), Vec3::x(), Vec3::y()];
        let v = triangle_single_layer(&p, &Vec3::zeros()) * FOUR_PI;
        assert!((v - 2f64.sqrt() * (1.0 + 2f64.sqrt()).ln()).abs() < 1e-13);
        // Centroid target: compare against the vertex decomposition into
        // three sub-triangles, each evaluated from a vertex.
        let c = (p[0] + p[1] + p[2]) / 3.0;
        let whole = triangle_single_layer(&p, &c);
        let parts: f64 = (0..3)
            .map(|i| triangle_single_layer(&[c, p[i], p[(i + 1) % 3]], &c))
            .sum();
        assert!((whole - parts).abs() < 1e-14);
    }

    #[test]
    fn solid_angles_close_around_interior_point() {
        let v = [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ];
        let faces = tet_faces(&v);
        let inside = Vec3::new(0.2, 0.2, 0.2);
        let outside = Vec3::new(1.0, 1.0, 1.0);
        // Outward faces: from inside the flux of (y-x)/|y-x|^3 is 4 pi.
        let s_in: f64 = faces.iter().map(|f| solid_angle(f, &inside)).sum();
        let s_out: f64 = faces.iter().map(|f| solid_angle(f, &outside)).sum();
        assert!((s_in - FOUR_PI).abs() < 1e-12);
        assert!(s_out.abs() < 1e-12);
    }

    #[test]
    fn tet_potentials_match_centroid_refinement() {
        let v = [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.1, 0.0),
            Vec3::new(0.2, 0.9, 0.1),
            Vec3::new(0.1, 0.2, 0.8),
        ];
        assert!(tet_volume(&v) > 0.0);
        let faces = tet_faces(&v);
        let x = Vec3::new(1.5, -0.4, 0.9);
        let mut g = Vec3::zeros();
        let mut l = 0.0;
        let mut vol = 0.0;
        refine_tet(&v, 5, &mut |t| {
            let w = tet_volume(t).abs();
            let y = (t[0] + t[1] + t[2] + t[3]) / 4.0;
            let z = y - x;
            g += -z / (FOUR_PI * z.norm().powi(3)) * w;
            l += w / (FOUR_PI * z.norm());
            vol += w;
        });
        let gv = tet_cauchy(&faces, &x);
        let lv = tet_newton(&faces, &x);
        let scale = vol / (FOUR_PI * 1.5f64.powi(2));
        assert!((vol - tet_volume(&v)).abs() < 1e-12);
        assert!((gv - g).norm() < 1e-4 * scale, "{gv} {g}");
        assert!((lv - l).abs() < 1e-4 * lv.abs(), "{lv} {l}");
    }

    #[test]
    fn newton_potential_of_tet_at_vertex_is_finite() {
        let v = [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ];
        let faces = tet_faces(&v);
        let lv = tet_newton(&faces, &v[0]);
        let gv = tet_cauchy(&faces, &v[0]);
        assert!(lv.is_finite() && lv > 0.0);
        assert!(gv.iter().all(|c| c.is_finite()));
        // Symmetry of the corner tet about the (1,1,1) axis.
        assert!((gv.x - gv.y).abs() < 1e-14 && (gv.y - gv.z).abs() < 1e-14);
    }
}
