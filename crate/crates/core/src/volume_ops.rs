//! Teodorescu transform, Newton potential and a discrete Moisil-Teodorescu
//! operator on tetrahedral meshes.
//!
//! Integrands are constant per tetrahedron. Tetrahedra near the target are
//! integrated in closed form through their faces, which also covers targets
//! inside or on the cell; the rest use the 4-point degree-2 rule.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::mesh::VolumeMesh;
use crate::panel::{tet_cauchy, tet_faces, tet_newton};
use crate::probes::{Stencil, StencilOrder, Targets};
use crate::quat::{Quaternion, Vec3};

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeQuadrature {
    /// Cells with `|x - c| < near_factor * diameter` are integrated exactly.
    pub near_factor: f64,
    /// Also exact within `near_scale * sqrt(diameter * mesh diameter)`.
    pub near_scale: f64,
}

impl Default for VolumeQuadrature {
    fn default() -> Self {
        VolumeQuadrature {
            near_factor: 2.0,
            near_scale: 0.5,
        }
    }
}

/// Barycentric weights of the symmetric 4-point rule.
const KEAST_A: f64 = 0.585_410_196_624_968_5;
const KEAST_B: f64 = 0.138_196_601_125_010_5;

fn keast_points(v: &[Vec3; 4]) -> [Vec3; 4] {
    let mut out = [Vec3::zeros(); 4];
    for (i, o) in out.iter_mut().enumerate() {
        for (j, p) in v.iter().enumerate() {
            *o += p * if i == j { KEAST_A } else { KEAST_B };
        }
    }
    out
}

/// Components of `T[w]`: `T1[w_vec]` scalar, `T2[w0]` and `T3[w_vec]` vector.
#[derive(Clone, Debug, Default)]
pub struct TeodorescuParts {
    pub t1: Vec<f64>,
    pub t2: Vec<Vec3>,
    pub t3: Vec<Vec3>,
}

impl TeodorescuParts {
    pub fn total(&self) -> Vec<Quaternion> {
        self.t1
            .iter()
            .zip(&self.t2)
            .zip(&self.t3)
            .map(|((a, b), c)| Quaternion::from_parts(*a, b + c))
            .collect()
    }
}

pub struct VolumeContext<'a> {
    mesh: &'a VolumeMesh,
    q: VolumeQuadrature,
    extent: f64,
}

impl<'a> VolumeContext<'a> {
    pub fn new(mesh: &'a VolumeMesh) -> Self {
        Self::with_quadrature(mesh, VolumeQuadrature::default())
    }

    pub fn with_quadrature(mesh: &'a VolumeMesh, q: VolumeQuadrature) -> Self {
        VolumeContext {
            mesh,
            q,
            extent: mesh.diameter(),
        }
    }

    pub fn mesh(&self) -> &VolumeMesh {
        self.mesh
    }

    fn is_near(&self, k: usize, anchor: &Vec3) -> bool {
        let d = self.mesh.diameters()[k];
        let r = (self.q.near_factor * d).max(self.q.near_scale * (d * self.extent).sqrt());
        (anchor - self.mesh.centroids()[k]).norm() < r
    }

    /// `int_K E(y - x) dy` for every cell.
    fn cauchy_row(&self, x: &Vec3, anchor: &Vec3) -> Vec<Vec3> {
        (0..self.mesh.tets().len())
            .map(|k| {
                let v = self.mesh.corners(k);
                if self.is_near(k, anchor) {
                    tet_cauchy(&tet_faces(&v), x)
                } else {
                    let w = self.mesh.volumes()[k] / 4.0;
                    keast_points(&v)
                        .iter()
                        .map(|y| {
                            let z = y - x;
                            let r = z.norm();
                            -z * (w / (FOUR_PI * r * r * r))
                        })
                        .sum()
                }
            })
            .collect()
    }

    fn newton_row(&self, x: &Vec3, anchor: &Vec3) -> Vec<f64> {
        (0..self.mesh.tets().len())
            .map(|k| {
                let v = self.mesh.corners(k);
                if self.is_near(k, anchor) {
                    tet_newton(&tet_faces(&v), x)
                } else {
                    let w = self.mesh.volumes()[k] / 4.0;
                    keast_points(&v).iter().map(|y| w / (FOUR_PI * (y - x).norm())).sum()
                }
            })
            .collect()
    }

    fn check_len(&self, w: &[Quaternion]) {
        assert_eq!(w.len(), self.mesh.tets().len(), "expected one value per tetrahedron");
    }

    /// `T[w](x) = -int E(y - x) w(y) dy` split into its components, for a
    /// field constant on each tetrahedron.
    pub fn teodorescu(&self, w: &[Quaternion], targets: &Targets) -> TeodorescuParts {
        self.check_len(w);
        let rows: Vec<(f64, Vec3, Vec3)> = targets
            .points
            .par_iter()
            .zip(targets.anchors.par_iter())
            .map(|(x, a)| {
                let g = self.cauchy_row(x, a);
                let mut t1 = 0.0;
                let mut t2 = Vec3::zeros();
                let mut t3 = Vec3::zeros();
                for (gk, wk) in g.iter().zip(w) {
                    let wv = wk.vec();
                    t1 += gk.dot(&wv);
                    t2 -= gk * wk.w0;
                    t3 -= gk.cross(&wv);
                }
                (t1, t2, t3)
            })
            .collect();
        let mut parts = TeodorescuParts::default();
        for (a, b, c) in rows {
            parts.t1.push(a);
            parts.t2.push(b);
            parts.t3.push(c);
        }
        parts
    }

    /// Full quaternion product form of `T[w]`, kept separate from the
    /// component split as a cross-check.
    pub fn teodorescu_product(&self, w: &[Quaternion], targets: &Targets) -> Vec<Quaternion> {
        self.check_len(w);
        targets
            .points
            .par_iter()
            .zip(targets.anchors.par_iter())
            .map(|(x, a)| {
                let g = self.cauchy_row(x, a);
                -g.iter()
                    .zip(w)
                    .map(|(gk, wk)| Quaternion::vector(*gk) * *wk)
                    .sum::<Quaternion>()
            })
            .collect()
    }

    /// Newton potential `L[w](x) = int w(y) / (4 pi |x - y|) dy`.
    pub fn newton(&self, w: &[Quaternion], targets: &Targets) -> Vec<Quaternion> {
        self.check_len(w);
        targets
            .points
            .par_iter()
            .zip(targets.anchors.par_iter())
            .map(|(x, a)| {
                self.newton_row(x, a)
                    .iter()
                    .zip(w)
                    .map(|(s, wk)| *wk * *s)
                    .sum()
            })
            .collect()
    }

    /// `D T[w] - w` at the centers of a first-order stencil; `exact` gives
    /// `w` at a point.
    pub fn right_inverse_residual<F>(&self, w: &[Quaternion], stencil: &Stencil, exact: F) -> Vec<Quaternion>
    where
        F: Fn(&Vec3) -> Quaternion,
    {
        let t = self.teodorescu(w, &stencil.targets()).total();
        stencil
            .dirac(&t)
            .iter()
            .zip(stencil.centers())
            .map(|(d, x)| *d - exact(x))
            .collect()
    }
}

/// Finite-difference stencil step for a mesh: `1e-4` of its diameter.
pub fn fd_step(mesh: &VolumeMesh) -> f64 {
    1e-4 * mesh.diameter()
}

pub fn first_stencil(mesh: &VolumeMesh, centers: Vec<Vec3>) -> Stencil {
    Stencil::new(centers, fd_step(mesh), StencilOrder::First)
}

/// Nodal values averaged to each tetrahedron (the centroid value of the
/// P1 interpolant).
pub fn tet_values(mesh: &VolumeMesh, nodal: &[Quaternion]) -> Vec<Quaternion> {
    assert_eq!(nodal.len(), mesh.nodes().len(), "expected one value per node");
    mesh.tets()
        .iter()
        .map(|t| t.iter().map(|&i| nodal[i]).sum::<Quaternion>() * 0.25)
        .collect()
}

/// A closed-form field sampled at the tet centroids.
pub fn sample_tets<F: Fn(&Vec3) -> Quaternion>(mesh: &VolumeMesh, f: F) -> Vec<Quaternion> {
    mesh.centroids().iter().map(f).collect()
}

pub fn sample_nodes<F: Fn(&Vec3) -> Quaternion>(mesh: &VolumeMesh, f: F) -> Vec<Quaternion> {
    mesh.nodes().iter().map(f).collect()
}

/// Per-tet gradient of a P1 scalar field.
pub fn tet_gradients(mesh: &VolumeMesh, nodal: &[f64]) -> Vec<Vec3> {
    assert_eq!(nodal.len(), mesh.nodes().len(), "expected one value per node");
    (0..mesh.tets().len())
        .map(|k| {
            let g = mesh.shape_gradients(k);
            mesh.tets()[k].iter().zip(&g).map(|(&i, gi)| gi * nodal[i]).sum()
        })
        .collect()
}

/// Per-tet `D w = -div w_vec + grad w0 + curl w_vec` of the P1 interpolant.
pub fn numeric_d_tets(mesh: &VolumeMesh, nodal: &[Quaternion]) -> Vec<Quaternion> {
    assert_eq!(nodal.len(), mesh.nodes().len(), "expected one value per node");
    (0..mesh.tets().len())
        .map(|k| {
            let g = mesh.shape_gradients(k);
            mesh.tets()[k]
                .iter()
                .zip(&g)
                .map(|(&i, gi)| Quaternion::vector(*gi) * nodal[i])
                .sum()
        })
        .collect()
}

/// `D w` at the nodes: per-tet values averaged with volume weights.
pub fn numeric_d(mesh: &VolumeMesh, nodal: &[Quaternion]) -> Vec<Quaternion> {
    recover_nodal(mesh, &numeric_d_tets(mesh, nodal), Quaternion::ZERO)
}

/// Nodal values from per-tet values by volume-weighted averaging over the
/// tets sharing each node.
pub fn recover_nodal<T>(mesh: &VolumeMesh, per_tet: &[T], zero: T) -> Vec<T>
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    assert_eq!(per_tet.len(), mesh.tets().len(), "expected one value per tetrahedron");
    let mut acc = vec![zero; mesh.nodes().len()];
    let mut wsum = vec![0.0; mesh.nodes().len()];
    for (k, t) in mesh.tets().iter().enumerate() {
        let v = mesh.volumes()[k];
        for &i in t {
            acc[i] = acc[i] + per_tet[k] * v;
            wsum[i] += v;
        }
    }
    acc.iter().zip(&wsum).map(|(a, w)| *a * (1.0 / w)).collect()
}

/// Per-tet divergence and curl of a P1 vector field.
pub fn tet_div_curl(mesh: &VolumeMesh, nodal: &[Vec3]) -> Vec<(f64, Vec3)> {
    assert_eq!(nodal.len(), mesh.nodes().len(), "expected one value per node");
    (0..mesh.tets().len())
        .map(|k| {
            let g = mesh.shape_gradients(k);
            mesh.tets()[k].iter().zip(&g).fold((0.0, Vec3::zeros()), |(d, c), (&i, gi)| {
                (d + gi.dot(&nodal[i]), c + gi.cross(&nodal[i]))
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::unit_ball;

    #[test]
    fn keast_rule_is_degree_two() {
        let v = [Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z()];
        let pts = keast_points(&v);
        let vol = 1.0 / 6.0;
        // int x^2 over the unit simplex is 1/60.
        let q: f64 = pts.iter().map(|p| p.x * p.x * vol / 4.0).sum();
        assert!((q - 1.0 / 60.0).abs() < 1e-15);
        let q: f64 = pts.iter().map(|p| p.x * p.y * vol / 4.0).sum();
        assert!((q - 1.0 / 120.0).abs() < 1e-15);
    }

    #[test]
    fn numeric_d_is_exact_on_affine_fields() {
        let m = unit_ball(0.5).unwrap();
        let x1 = sample_nodes(&m, |x| Quaternion::scalar(x.x));
        let mono = sample_nodes(&m, |x| Quaternion::new(x.x, 0.0, 0.0, -x.y));
        let pos = sample_nodes(&m, |x| Quaternion::vector(*x));
        for d in numeric_d(&m, &x1) {
            assert!((d - Quaternion::E1).norm() < 1e-12);
        }
        for d in numeric_d(&m, &mono) {
            assert!(d.norm() < 1e-12);
        }
        for d in numeric_d(&m, &pos) {
            assert!((d - Quaternion::scalar(-3.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn split_matches_product_form() {
        let m = unit_ball(0.5).unwrap();
        let ctx = VolumeContext::new(&m);
        let w = sample_tets(&m, |x| Quaternion::new(1.0 + x.x, x.y, -x.z, 0.5));
        let t = Targets::new(vec![Vec3::new(0.1, 0.2, 0.3), Vec3::new(0.0, 0.0, 1.5)]);
        let split = ctx.teodorescu(&w, &t).total();
        let prod = ctx.teodorescu_product(&w, &t);
        for (a, b) in split.iter().zip(&prod) {
            assert!((*a - *b).norm() < 1e-12);
        }
    }
}
