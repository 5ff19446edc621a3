//! Dirichlet-to-Neumann maps of the Laplace and conductivity equations.
//!
//! For `div(f^2 grad u) = 0`, `tr u = phi0` and `sigma = f^2 grad u`:
//! `Lambda0[phi0] = -sigma . eta` and `Lambda_vec[phi0] = sigma x eta`, so
//! that `sigma eta = Lambda0 + Lambda_vec` as a quaternion product. The
//! scalar part is recovered variationally at the boundary vertices; the
//! vector part uses the gradient in the tetrahedron owning each boundary
//! panel. Norms are area-weighted `L2`, used as a surrogate for
//! `H^{-1/2}`.

use serde::Serialize;

use crate::boundary_ops::{PointPotentials, Quadrature};
use crate::elliptic::{Conductivity, EllipticSolver};
use crate::error::{Error, Result};
use crate::mesh::VolumeMesh;
use crate::probes::Targets;
use crate::quat::{Quaternion, Vec3};
use crate::vekua::{VekuaContext, VekuaTransform};
use crate::volume_ops::{tet_gradients, VolumeContext};

#[derive(Clone, Debug)]
pub struct DnResult {
    /// `Lambda0` at the boundary vertices.
    pub scalar: Vec<f64>,
    /// `Lambda0` moved to the panels.
    pub scalar_panels: Vec<f64>,
    /// `Lambda_vec` per panel.
    pub vector: Vec<Vec3>,
    /// Largest `|<Lambda0, hat_b> + int sigma . grad hat_b|`.
    pub weak_residual: f64,
    /// `int Lambda0 ds`.
    pub flux_total: f64,
}

impl DnResult {
    /// `Lambda0 + Lambda_vec` per panel.
    pub fn quaternion_panels(&self) -> Vec<Quaternion> {
        self.scalar_panels
            .iter()
            .zip(&self.vector)
            .map(|(s, v)| Quaternion::from_parts(*s, *v))
            .collect()
    }
}

fn tangential(mesh: &VolumeMesh, sigma: &[Vec3]) -> Vec<Vec3> {
    mesh.boundary_tets()
        .iter()
        .zip(mesh.boundary().normals())
        .map(|(&k, n)| sigma[k].cross(n))
        .collect()
}

fn from_solver(solver: &EllipticSolver, f: Option<&Conductivity>, phi0: &[f64]) -> Result<DnResult> {
    let mesh = solver.mesh();
    let u = solver.solve_u(phi0)?;
    let weak = solver.weak_flux(&u);
    let scalar = solver.flux(&u);
    let back = solver.boundary_mass().apply(&scalar);
    let weak_residual = back.iter().zip(&weak).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let flux_total = weak.iter().sum();
    let sigma: Vec<Vec3> = tet_gradients(mesh, &u)
        .iter()
        .enumerate()
        .map(|(k, g)| g * f.map_or(1.0, |f| f.squared_mean(mesh, k)))
        .collect();
    Ok(DnResult {
        scalar_panels: mesh.boundary().vertex_to_panel(&scalar),
        scalar,
        vector: tangential(mesh, &sigma),
        weak_residual,
        flux_total,
    })
}

/// `Lambda[phi0] = (D w0) eta` for the harmonic extension `w0`.
pub fn dn_monogenic(mesh: &VolumeMesh, phi0: &[f64]) -> Result<DnResult> {
    from_solver(&EllipticSolver::laplace(mesh)?, None, phi0)
}

pub fn dn_conductivity(mesh: &VolumeMesh, f: &Conductivity, phi0: &[f64]) -> Result<DnResult> {
    from_solver(&EllipticSolver::conductivity(mesh, f)?, Some(f), phi0)
}

/// Both sides of the scalar weak identity
/// `<Lambda0, tr v0> = -int f^2 grad u . grad v0` for a P1 test function.
pub fn weak_pairing_check(mesh: &VolumeMesh, f: &Conductivity, phi0: &[f64], v0: &[f64]) -> Result<(f64, f64)> {
    if v0.len() != mesh.nodes().len() {
        return Err(Error::Precondition("test function must have one value per node".into()));
    }
    let solver = EllipticSolver::conductivity(mesh, f)?;
    let u = solver.solve_u(phi0)?;
    let lambda = solver.flux(&u);
    let tr: Vec<f64> = mesh.boundary_nodes().iter().map(|&i| v0[i]).collect();
    let lhs = solver.boundary_mass().apply(&lambda).iter().zip(&tr).map(|(a, b)| a * b).sum();
    Ok((lhs, solver.energy_pairing(&u, v0)))
}

/// Both sides of the vector Green identity
/// `<Lambda_vec, tr v> = int sigma . curl v - int curl(sigma) . v` for a
/// smooth field `v` with curl `curl_v`. `curl(sigma)` is taken as
/// `grad(f^2) x grad u` per tetrahedron.
pub fn vector_pairing_check<V, C>(mesh: &VolumeMesh, f: &Conductivity, phi0: &[f64], v: V, curl_v: C) -> Result<(f64, f64)>
where
    V: Fn(&Vec3) -> Vec3,
    C: Fn(&Vec3) -> Vec3,
{
    let solver = EllipticSolver::conductivity(mesh, f)?;
    let u = solver.solve_u(phi0)?;
    let du = tet_gradients(mesh, &u);
    let f2: Vec<f64> = f.values().iter().map(|v| v * v).collect();
    let df2 = tet_gradients(mesh, &f2);
    let sigma: Vec<Vec3> = du.iter().enumerate().map(|(k, g)| g * f.squared_mean(mesh, k)).collect();
    let surf = mesh.boundary();
    let lhs: f64 = tangential(mesh, &sigma)
        .iter()
        .enumerate()
        .map(|(i, l)| {
            // Edge-midpoint rule, exact for quadratics.
            let c = surf.corners(i);
            let q: f64 = (0..3).map(|a| l.dot(&v(&((c[a] + c[(a + 1) % 3]) * 0.5)))).sum();
            surf.areas()[i] * q / 3.0
        })
        .sum();
    let rhs: f64 = (0..mesh.tets().len())
        .map(|k| {
            let x = mesh.centroids()[k];
            mesh.volumes()[k] * (sigma[k].dot(&curl_v(&x)) - df2[k].cross(&du[k]).dot(&v(&x)))
        })
        .sum();
    Ok((lhs, rhs))
}

/// Relative panel `L2` distance between `Lambda_{f^2}[phi0]`, from the FEM
/// solution, and `-(D(f W_vec)) eta` from the P1 derivative of the nodal
/// normalized vector part in the owning tetrahedron.
pub fn relation_check(ctx: &VekuaContext, t: &VekuaTransform) -> Result<f64> {
    let mesh = ctx.mesh();
    let nodes = owner_nodes(mesh);
    let fw = ctx.fw_at_nodes(t, &nodes);
    relation_residual(mesh, t, &nodes, &fw)
}

/// Nodes of the tetrahedra owning boundary panels, sorted.
pub fn owner_nodes(mesh: &VolumeMesh) -> Vec<usize> {
    let mut nodes: Vec<usize> = mesh.boundary_tets().iter().flat_map(|&k| mesh.tets()[k]).collect();
    nodes.sort_unstable();
    nodes.dedup();
    nodes
}

/// [`relation_check`] with `f W_vec` supplied at `nodes`, which must cover
/// [`owner_nodes`]. Substituting an unrelated field gives a negative
/// control.
pub fn relation_residual(mesh: &VolumeMesh, t: &VekuaTransform, nodes: &[usize], fw: &[Vec3]) -> Result<f64> {
    if nodes.len() != fw.len() {
        return Err(Error::Precondition("one field value per listed node expected".into()));
    }
    let mut at = vec![None; mesh.nodes().len()];
    for (&i, v) in nodes.iter().zip(fw) {
        at[i] = Some(*v);
    }
    let dn = dn_conductivity(mesh, &t.f, &t.phi0)?;
    let lhs = dn.quaternion_panels();
    let surf = mesh.boundary();
    let (mut num, mut den) = (0.0, 0.0);
    for (i, &k) in mesh.boundary_tets().iter().enumerate() {
        let g = mesh.shape_gradients(k);
        let mut d = Quaternion::ZERO;
        for (a, &node) in mesh.tets()[k].iter().enumerate() {
            let w = at[node].ok_or_else(|| Error::Precondition(format!("no field value at node {node}")))?;
            d = d + Quaternion::vector(g[a]) * Quaternion::vector(w);
        }
        let rhs = -(d * Quaternion::vector(surf.normals()[i]));
        num += surf.areas()[i] * (lhs[i] - rhs).norm_squared();
        den += surf.areas()[i] * lhs[i].norm_squared();
    }
    Ok((num / den.max(f64::MIN_POSITIVE)).sqrt())
}

/// Relative errors of `T1[grad w0] = -M[Lambda0 tr w0]` and
/// `T3[grad w0] = M[Lambda_vec tr w0]` at interior points for a harmonic
/// `w0` with gradient `grad`, using the discrete D-N map of its trace.
pub fn single_layer_check<W, G>(mesh: &VolumeMesh, w0: W, grad: G, points: &[Vec3]) -> Result<(f64, f64)>
where
    W: Fn(&Vec3) -> f64,
    G: Fn(&Vec3) -> Vec3,
{
    let phi0: Vec<f64> = mesh.boundary().vertices().iter().map(&w0).collect();
    let dn = dn_monogenic(mesh, &phi0)?;
    let targets = Targets::new(points.to_vec());
    let dw: Vec<Quaternion> = mesh.centroids().iter().map(|x| Quaternion::vector(grad(x))).collect();
    let t = VolumeContext::new(mesh).teodorescu(&dw, &targets);
    let pot = PointPotentials::assemble(mesh.boundary(), points, &Quadrature::default());
    let m = pot.single_layer(&dn.quaternion_panels());
    let (mut e0, mut n0, mut e1, mut n1) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..points.len() {
        e0 += (t.t1[i] + m[i].w0).powi(2);
        n0 += t.t1[i].powi(2);
        e1 += (t.t3[i] - m[i].vec()).norm_squared();
        n1 += t.t3[i].norm_squared();
    }
    let rel = |e: f64, n: f64| if n > 0.0 { (e / n).sqrt() } else { e.sqrt() };
    Ok((rel(e0, n0), rel(e1, n1)))
}

/// One row of a continuous-dependence table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DependenceRow {
    pub n: u32,
    pub scalar: f64,
    pub vector: f64,
}

/// `||Lambda_{f_n^2}[phi0] - Lambda_{f^2}[phi0]||` split into parts, for
/// each `(n, f_n)` in `family`.
pub fn dependence_experiment(
    mesh: &VolumeMesh,
    limit: &Conductivity,
    family: &[(u32, Conductivity)],
    phi0: &[f64],
) -> Result<Vec<DependenceRow>> {
    let base = dn_conductivity(mesh, limit, phi0)?;
    let areas = mesh.boundary().areas();
    family
        .iter()
        .map(|(n, f)| {
            let r = dn_conductivity(mesh, f, phi0)?;
            let scalar = r
                .scalar_panels
                .iter()
                .zip(&base.scalar_panels)
                .zip(areas)
                .map(|((a, b), w)| w * (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            let vector = r
                .vector
                .iter()
                .zip(&base.vector)
                .zip(areas)
                .map(|((a, b), w)| w * (a - b).norm_squared())
                .sum::<f64>()
                .sqrt();
            Ok(DependenceRow { n: *n, scalar, vector })
        })
        .collect()
}
