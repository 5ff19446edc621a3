//! Vekua-Hilbert transform and the normalized vector part of solutions of
//! the main Vekua equation `D W = (D f / f) conj(W)`.
//!
//! For a conductivity factor `f` and Dirichlet data `phi0`, let
//! `u = W0 / f` solve `div(f^2 grad u) = 0` with `tr u = phi0` and put
//! `v = -f^2 grad u`. With the boundary traces `alpha0 = tr T1[v]`,
//! `alpha = tr T3[v]` and the density `h_f = 2 (I + K0)^{-1} alpha0`,
//!
//! ```text
//! H_f[phi0] = alpha - H[alpha0],    f W_vec = T3[v] - F1[h_f].
//! ```
//!
//! Boundary data enter at the boundary vertices (the FEM nodes). Traces and
//! `H_f` live on boundary panels.

use serde::Serialize;

use crate::boundary_ops::{single_layer_boundary, PointPotentials};
use crate::elliptic::{ConductivitySolution, Conductivity, EllipticSolver};
use crate::error::{Error, Result};
use crate::hilbert::HilbertContext;
use crate::mesh::VolumeMesh;
use crate::probes::{PointLocator, Stencil, Targets};
use crate::quat::{Quaternion, Vec3};
use crate::volume_ops::{recover_nodal, tet_div_curl, tet_gradients, VolumeContext};

pub struct VekuaContext<'a> {
    mesh: &'a VolumeMesh,
    hilbert: HilbertContext<'a>,
    volume: VolumeContext<'a>,
}

/// Intermediate and final quantities of one `H_f` evaluation.
#[derive(Clone, Debug)]
pub struct VekuaTransform {
    pub f: Conductivity,
    /// Boundary data at boundary vertices.
    pub phi0: Vec<f64>,
    pub solution: ConductivitySolution,
    /// `v = -f^2 grad u` per tetrahedron.
    pub v: Vec<Vec3>,
    pub alpha0: Vec<f64>,
    pub alpha: Vec<Vec3>,
    /// `h_f = 2 (I + K0)^{-1} alpha0`.
    pub density: Vec<f64>,
    /// `H_f[phi0]` per panel.
    pub h_f: Vec<Vec3>,
}

impl VekuaTransform {
    /// `f^2 grad u = -v` per tetrahedron.
    pub fn flux_field(&self) -> Vec<Vec3> {
        self.v.iter().map(|v| -v).collect()
    }
}

/// `W0` and `f W_vec` at a set of points.
#[derive(Clone, Debug)]
pub struct VekuaSolution {
    pub points: Vec<Vec3>,
    pub w0: Vec<f64>,
    pub fw: Vec<Vec3>,
}

/// RMS residuals of the first-order system `div(fW) = 0`,
/// `curl(fW) = -f^2 grad(W0/f)` and its consequences. `scale` is the RMS
/// of `f^2 grad(W0/f)`; divide by it for relative values.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct VekuaResidual {
    pub div: f64,
    pub curl: f64,
    pub double_curl: f64,
    pub conductivity: f64,
    pub scale: f64,
}

/// Probe residuals from central differences of the integral representation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ProbeResidual {
    pub div: f64,
    pub curl: f64,
    pub scale: f64,
}

impl<'a> VekuaContext<'a> {
    pub fn new(mesh: &'a VolumeMesh) -> Result<Self> {
        Ok(VekuaContext {
            mesh,
            hilbert: HilbertContext::new(mesh.boundary())?,
            volume: VolumeContext::new(mesh),
        })
    }

    pub fn mesh(&self) -> &VolumeMesh {
        self.mesh
    }

    pub fn hilbert(&self) -> &HilbertContext<'a> {
        &self.hilbert
    }

    pub fn volume(&self) -> &VolumeContext<'a> {
        &self.volume
    }

    /// Panel centroids as evaluation targets for boundary traces.
    fn boundary_targets(&self) -> Targets {
        Targets::new(self.mesh.boundary().centroids().to_vec())
    }

    pub fn transform(&self, f: &Conductivity, phi0: &[f64]) -> Result<VekuaTransform> {
        let solver = EllipticSolver::conductivity(self.mesh, f)?;
        let solution = solver.solve(phi0)?;
        let v: Vec<Vec3> = tet_gradients(self.mesh, &solution.u)
            .iter()
            .enumerate()
            .map(|(k, g)| -g * f.squared_mean(self.mesh, k))
            .collect();
        let w: Vec<Quaternion> = v.iter().map(|v| Quaternion::vector(*v)).collect();
        let parts = self.volume.teodorescu(&w, &self.boundary_targets());
        let (alpha0, alpha) = (parts.t1, parts.t3);
        let density = self.hilbert.density(&alpha0)?;
        let h_alpha0 = self.hilbert.hilbert(&alpha0)?;
        let h_f = alpha.iter().zip(&h_alpha0).map(|(a, h)| a - h).collect();
        Ok(VekuaTransform {
            f: f.clone(),
            phi0: phi0.to_vec(),
            solution,
            v,
            alpha0,
            alpha,
            density,
            h_f,
        })
    }

    /// `H_f[phi0]` per panel.
    pub fn vekua_hilbert(&self, f: &Conductivity, phi0: &[f64]) -> Result<Vec<Vec3>> {
        Ok(self.transform(f, phi0)?.h_f)
    }

    /// `f W_vec = T3[v] - F1[h_f]` at interior points.
    pub fn fw_at(&self, t: &VekuaTransform, targets: &Targets) -> Vec<Vec3> {
        let w: Vec<Quaternion> = t.v.iter().map(|v| Quaternion::vector(*v)).collect();
        let t3 = self.volume.teodorescu(&w, targets).t3;
        let pot = PointPotentials::assemble_anchored(
            self.mesh.boundary(),
            &targets.points,
            &targets.anchors,
            self.hilbert.quadrature(),
        );
        let (_, f1) = pot.cauchy_split(&t.density);
        t3.iter().zip(&f1).map(|(a, b)| a - b).collect()
    }

    /// The normalized solution at interior points. `W0 = f u` is
    /// interpolated from the FEM solution; points outside the mesh get
    /// `W0 = 0`.
    pub fn normalized_vector_part(&self, t: &VekuaTransform, points: &[Vec3]) -> VekuaSolution {
        let loc = PointLocator::new(self.mesh);
        let w0 = points
            .iter()
            .map(|x| loc.interpolate(&t.solution.w0, x).unwrap_or(0.0))
            .collect();
        let fw = self.fw_at(t, &Targets::new(points.to_vec()));
        VekuaSolution {
            points: points.to_vec(),
            w0,
            fw,
        }
    }

    /// `f W_vec` at every mesh node. Boundary nodes take the trace
    /// `H_f[phi0]` moved from panels to vertices.
    pub fn fw_nodal(&self, t: &VekuaTransform) -> Vec<Vec3> {
        let all: Vec<usize> = (0..self.mesh.nodes().len()).collect();
        self.fw_at_nodes(t, &all)
    }

    /// As [`Self::fw_nodal`] for the listed nodes only, in that order.
    pub fn fw_at_nodes(&self, t: &VekuaTransform, nodes: &[usize]) -> Vec<Vec3> {
        let pos = self.mesh.nodes();
        let interior: Vec<usize> = nodes.iter().copied().filter(|&i| !self.mesh.is_boundary_node(i)).collect();
        let mut vals = self
            .fw_at(t, &Targets::new(interior.iter().map(|&i| pos[i]).collect()))
            .into_iter();
        let surf = self.mesh.boundary();
        let comp: Vec<Vec<f64>> = (0..3)
            .map(|a| surf.panel_to_vertex(&t.h_f.iter().map(|v| v[a]).collect::<Vec<_>>()))
            .collect();
        nodes
            .iter()
            .map(|&i| match self.mesh.boundary_index(i) {
                Some(b) => Vec3::new(comp[0][b], comp[1][b], comp[2][b]),
                None => vals.next().expect("one value per interior node"),
            })
            .collect()
    }

    /// Nodal quaternion field `W = W0 + W_vec` of the normalized solution.
    pub fn nodal_solution(&self, t: &VekuaTransform) -> Vec<Quaternion> {
        let f = t.f.values();
        self.fw_nodal(t)
            .iter()
            .enumerate()
            .map(|(i, fw)| Quaternion::from_parts(t.solution.w0[i], fw / f[i]))
            .collect()
    }

    /// Residuals at the centers of `stencil`: differences of `f W_vec`
    /// against `-v` recovered at the nodes and interpolated.
    pub fn probe_residuals(&self, t: &VekuaTransform, stencil: &Stencil) -> ProbeResidual {
        let fw = self.fw_at(t, &stencil.targets());
        let div = stencil.divergence(&fw);
        let curl = stencil.curl(&fw);
        let sigma = recover_nodal(self.mesh, &t.flux_field(), Vec3::zeros());
        let loc = PointLocator::new(self.mesh);
        let (mut d, mut c, mut s) = (0.0, 0.0, 0.0);
        let mut n = 0usize;
        for (i, x) in stencil.centers().iter().enumerate() {
            let Some(sg) = loc.interpolate(&sigma, x) else { continue };
            d += div[i] * div[i];
            c += (curl[i] + sg).norm_squared();
            s += sg.norm_squared();
            n += 1;
        }
        let rms = |v: f64| (v / n.max(1) as f64).sqrt();
        ProbeResidual {
            div: rms(d),
            curl: rms(c),
            scale: rms(s),
        }
    }

    /// Re-normalizes a vector part `f W'` given at interior points together
    /// with its boundary trace `f phi'` (per panel):
    /// `f W* = f W' - F[f phi' - H_f[phi0]]`. Adding a monogenic vector
    /// field to `f W` leaves the result unchanged up to discretization.
    pub fn renormalize(
        &self,
        t: &VekuaTransform,
        targets: &Targets,
        fw: &[Vec3],
        trace: &[Vec3],
    ) -> Result<Vec<Quaternion>> {
        if fw.len() != targets.len() || trace.len() != t.h_f.len() {
            return Err(Error::Precondition("renormalization inputs do not match targets and panels".into()));
        }
        let jump: Vec<Quaternion> = trace.iter().zip(&t.h_f).map(|(a, b)| Quaternion::vector(a - b)).collect();
        let pot = PointPotentials::assemble_anchored(
            self.mesh.boundary(),
            &targets.points,
            &targets.anchors,
            self.hilbert.quadrature(),
        );
        Ok(pot
            .cauchy(&jump)
            .iter()
            .zip(fw)
            .map(|(c, w)| Quaternion::vector(*w) - *c)
            .collect())
    }

    /// Second route to `H_f` through the boundary single layer,
    /// `-tr M[Lambda_vec] - H[tr M[Lambda0]] - tr L[curl(f^2 grad u)]`,
    /// with the curl taken as `grad(f^2) x grad u` per tetrahedron.
    /// Returns the relative discrepancy to `t.h_f`.
    pub fn representation_discrepancy(&self, t: &VekuaTransform) -> Result<f64> {
        let surf = self.mesh.boundary();
        let solver = EllipticSolver::conductivity(self.mesh, &t.f)?;
        let lambda0 = surf.vertex_to_panel(&solver.flux(&t.solution.u));
        let sigma = t.flux_field();
        let lambda: Vec<Vec3> = self
            .mesh
            .boundary_tets()
            .iter()
            .zip(surf.normals())
            .map(|(&k, n)| sigma[k].cross(n))
            .collect();
        let m = single_layer_boundary(surf, self.hilbert.quadrature());
        let m0 = m.apply(&lambda0);
        let mv: Vec<Vec<f64>> = (0..3)
            .map(|a| m.apply(&lambda.iter().map(|v| v[a]).collect::<Vec<_>>()))
            .collect();
        let hm0 = self.hilbert.hilbert(&m0)?;
        let f2: Vec<f64> = t.f.values().iter().map(|v| v * v).collect();
        let du = tet_gradients(self.mesh, &t.solution.u);
        let curl: Vec<Quaternion> = tet_gradients(self.mesh, &f2)
            .iter()
            .zip(&du)
            .map(|(a, b)| Quaternion::vector(a.cross(b)))
            .collect();
        let l = self.volume.newton(&curl, &self.boundary_targets());
        let areas = surf.areas();
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..surf.len() {
            let r = -Vec3::new(mv[0][i], mv[1][i], mv[2][i]) - hm0[i] - l[i].vec();
            num += areas[i] * (r - t.h_f[i]).norm_squared();
            den += areas[i] * t.h_f[i].norm_squared();
        }
        Ok((num / den.max(f64::MIN_POSITIVE)).sqrt())
    }
}

/// Residuals of a nodal field `W` for the conductivity factor `f`, from
/// P1 derivatives per tetrahedron. The conductivity residual is the
/// largest interior row of the FEM system for `W0 / f`.
pub fn vekua_residual(mesh: &VolumeMesh, f: &Conductivity, w: &[Quaternion]) -> Result<VekuaResidual> {
    let n = mesh.nodes().len();
    if w.len() != n || f.values().len() != n {
        return Err(Error::Precondition(format!(
            "expected {n} nodal values for W and f, got {} and {}",
            w.len(),
            f.values().len()
        )));
    }
    let fv = f.values();
    let u: Vec<f64> = w.iter().zip(fv).map(|(q, f)| q.w0 / f).collect();
    let fw: Vec<Vec3> = w.iter().zip(fv).map(|(q, f)| q.vec() * *f).collect();
    let grad = tet_gradients(mesh, &u);
    let dc = tet_div_curl(mesh, &fw);
    let nt = mesh.tets().len();
    let c2: Vec<f64> = (0..nt).map(|k| f.squared_mean(mesh, k)).collect();
    let scaled: Vec<Vec3> = dc.iter().zip(&c2).map(|((_, c), s)| c / *s).collect();
    let dd = tet_div_curl(mesh, &recover_nodal(mesh, &scaled, Vec3::zeros()));
    let vol = mesh.volumes();
    let total = mesh.total_volume();
    let (mut div, mut curl, mut dcurl, mut scale) = (0.0, 0.0, 0.0, 0.0);
    for k in 0..nt {
        let sigma = grad[k] * c2[k];
        div += vol[k] * dc[k].0 * dc[k].0;
        curl += vol[k] * (dc[k].1 + sigma).norm_squared();
        dcurl += vol[k] * dd[k].1.norm_squared();
        scale += vol[k] * sigma.norm_squared();
    }
    let conductivity = EllipticSolver::conductivity(mesh, f)?.interior_residual(&u);
    let rms = |v: f64| (v / total).sqrt();
    Ok(VekuaResidual {
        div: rms(div),
        curl: rms(curl),
        double_curl: rms(dcurl),
        conductivity,
        scale: rms(scale),
    })
}

/// Area-weighted `L2` norm of a vector boundary field.
pub fn boundary_norm(areas: &[f64], v: &[Vec3]) -> f64 {
    areas.iter().zip(v).map(|(a, x)| a * x.norm_squared()).sum::<f64>().sqrt()
}

/// `||H_{f_n}[phi0] - H_f[phi0]||` for each conductivity in `family`.
pub fn dependence_experiment(
    ctx: &VekuaContext,
    limit: &Conductivity,
    family: &[Conductivity],
    phi0: &[f64],
) -> Result<Vec<f64>> {
    let base = ctx.vekua_hilbert(limit, phi0)?;
    let areas = ctx.mesh().boundary().areas();
    family
        .iter()
        .map(|f| {
            let h = ctx.vekua_hilbert(f, phi0)?;
            let d: Vec<Vec3> = h.iter().zip(&base).map(|(a, b)| a - b).collect();
            Ok(boundary_norm(areas, &d))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::unit_ball;

    fn x3(m: &VolumeMesh) -> Vec<f64> {
        m.boundary().vertices().iter().map(|x| x.z).collect()
    }

    #[test]
    fn constants_are_in_the_kernel() {
        let m = unit_ball(0.5).unwrap();
        let ctx = VekuaContext::new(&m).unwrap();
        let f = Conductivity::from_fn(&m, |x| 1.0 + x.norm_squared()).unwrap();
        let t = ctx.transform(&f, &vec![2.5; m.boundary_nodes().len()]).unwrap();
        let worst = t.h_f.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(worst < 1e-10, "{worst}");
        assert!(t.alpha0.iter().all(|a| a.abs() < 1e-10));
        for (w, fv) in t.solution.w0.iter().zip(f.values()) {
            assert!((w - 2.5 * fv).abs() < 1e-10);
        }
    }

    #[test]
    fn unit_factor_reduces_to_hilbert() {
        let m = unit_ball(0.5).unwrap();
        let ctx = VekuaContext::new(&m).unwrap();
        let f = Conductivity::constant(&m, 1.0).unwrap();
        let phi0 = x3(&m);
        let hf = ctx.vekua_hilbert(&f, &phi0).unwrap();
        let h = ctx.hilbert().hilbert(&m.boundary().vertex_to_panel(&phi0)).unwrap();
        let a = m.boundary().areas();
        let d: Vec<Vec3> = hf.iter().zip(&h).map(|(x, y)| x - y).collect();
        let rel = boundary_norm(a, &d) / boundary_norm(a, &h);
        assert!(rel < 0.1, "{rel}");
    }

    #[test]
    fn negative_control_flags_divergence() {
        let m = unit_ball(0.5).unwrap();
        let f = Conductivity::constant(&m, 1.0).unwrap();
        let w: Vec<Quaternion> = m.nodes().iter().map(|x| Quaternion::vector(*x)).collect();
        let r = vekua_residual(&m, &f, &w).unwrap();
        assert!((r.div - 3.0).abs() < 1e-10, "{}", r.div);
        assert!(r.curl < 1e-10);
    }

    #[test]
    fn factor_alone_solves_the_system() {
        let m = unit_ball(0.5).unwrap();
        let f = Conductivity::from_fn(&m, |x| (0.3 * x.x).exp()).unwrap();
        let w: Vec<Quaternion> = f.values().iter().map(|v| Quaternion::scalar(*v)).collect();
        let r = vekua_residual(&m, &f, &w).unwrap();
        assert!(r.div < 1e-12 && r.curl < 1e-12 && r.double_curl < 1e-12);
        assert!(r.conductivity < 1e-12);
    }

    #[test]
    fn wrong_length_rejected() {
        let m = unit_ball(0.5).unwrap();
        let f = Conductivity::constant(&m, 1.0).unwrap();
        assert!(matches!(vekua_residual(&m, &f, &[]), Err(Error::Precondition(_))));
    }
}
