//! The div-curl system `div w = g0`, `curl w = g` on bounded domains whose
//! complement is connected, with
//!
//! ```text
//! w = -T2[g0] + T3[g] - F1[2 (I + K0)^{-1} alpha0],   alpha0 = tr T1[g],
//! ```
//!
//! and the harmonic-conjugate, curl and double-curl right inverses built
//! from the same pieces. Solutions are unique up to monogenic constants
//! (gradients of harmonic functions), so comparisons with hand solutions
//! go through a least-squares fit over a small basis of such fields.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::boundary_ops::PointPotentials;
use crate::elliptic::solve_laplace_dirichlet;
use crate::error::{Error, Result};
use crate::hilbert::HilbertContext;
use crate::mesh::VolumeMesh;
use crate::probes::{Stencil, Targets};
use crate::quat::{Quaternion, Vec3};
use crate::volume_ops::VolumeContext;

/// Weak-solenoidality tolerance for solenoidal fields sampled exactly.
pub const SAMPLED_TOLERANCE: f64 = 1e-8;

/// Tolerance for `g` coming out of a P1 computation on a mesh of size `h`.
pub fn fem_tolerance(h: f64) -> f64 {
    10.0 * h
}

/// Largest `|int g . grad v| / (||g|| ||grad v||)` over the hat functions
/// `v` of interior nodes, norms taken over the support of `v`. `g` is
/// constant per tetrahedron.
pub fn weak_solenoidality(mesh: &VolumeMesh, g: &[Vec3]) -> f64 {
    let n = mesh.nodes().len();
    let mut pair = vec![0.0; n];
    let mut gg = vec![0.0; n];
    let mut vv = vec![0.0; n];
    for (k, t) in mesh.tets().iter().enumerate() {
        let grads = mesh.shape_gradients(k);
        let vol = mesh.volumes()[k];
        for (a, &i) in t.iter().enumerate() {
            pair[i] += vol * g[k].dot(&grads[a]);
            gg[i] += vol * g[k].norm_squared();
            vv[i] += vol * grads[a].norm_squared();
        }
    }
    (0..n)
        .filter(|&i| !mesh.is_boundary_node(i) && gg[i] > 0.0)
        .map(|i| pair[i].abs() / (gg[i] * vv[i]).sqrt())
        .fold(0.0, f64::max)
}

/// Data of a div-curl system, constant per tetrahedron.
#[derive(Clone, Debug)]
pub struct DivCurlProblem {
    g0: Vec<f64>,
    g: Vec<Vec3>,
    solenoidality: f64,
}

impl DivCurlProblem {
    pub fn new(mesh: &VolumeMesh, g0: Vec<f64>, g: Vec<Vec3>, tol: f64) -> Result<Self> {
        let nt = mesh.tets().len();
        if g0.len() != nt || g.len() != nt {
            return Err(Error::Precondition(format!(
                "div-curl data needs {nt} values per field, got {} and {}",
                g0.len(),
                g.len()
            )));
        }
        let solenoidality = weak_solenoidality(mesh, &g);
        if !(solenoidality <= tol) {
            return Err(Error::Precondition(format!(
                "g is not weakly solenoidal: residual {solenoidality:.3e} exceeds {tol:.1e}"
            )));
        }
        Ok(DivCurlProblem { g0, g, solenoidality })
    }

    /// Samples closed-form data at the tet centroids.
    pub fn from_fn<A, B>(mesh: &VolumeMesh, g0: A, g: B, tol: f64) -> Result<Self>
    where
        A: Fn(&Vec3) -> f64,
        B: Fn(&Vec3) -> Vec3,
    {
        let c = mesh.centroids();
        Self::new(mesh, c.iter().map(g0).collect(), c.iter().map(g).collect(), tol)
    }

    pub fn g0(&self) -> &[f64] {
        &self.g0
    }

    pub fn g(&self) -> &[Vec3] {
        &self.g
    }

    pub fn solenoidality(&self) -> f64 {
        self.solenoidality
    }
}

/// Solution values at the targets. `scalar` is the scalar part
/// `T1[g] - F0[h0]` of the quaternionic representation, which vanishes in
/// the continuum.
#[derive(Clone, Debug)]
pub struct DivCurlSolution {
    pub w: Vec<Vec3>,
    pub scalar: Vec<f64>,
}

pub struct DivCurlSolver<'a> {
    mesh: &'a VolumeMesh,
    hilbert: HilbertContext<'a>,
    volume: VolumeContext<'a>,
}

impl<'a> DivCurlSolver<'a> {
    pub fn new(mesh: &'a VolumeMesh) -> Result<Self> {
        Ok(DivCurlSolver {
            mesh,
            hilbert: HilbertContext::new(mesh.boundary())?,
            volume: VolumeContext::new(mesh),
        })
    }

    pub fn mesh(&self) -> &VolumeMesh {
        self.mesh
    }

    fn potentials(&self, targets: &Targets) -> PointPotentials {
        PointPotentials::assemble_anchored(
            self.mesh.boundary(),
            &targets.points,
            &targets.anchors,
            self.hilbert.quadrature(),
        )
    }

    fn vector_field(g: &[Vec3]) -> Vec<Quaternion> {
        g.iter().map(|v| Quaternion::vector(*v)).collect()
    }

    /// `(alpha0, alpha)` on the boundary panels.
    pub fn traces(&self, g: &[Vec3]) -> (Vec<f64>, Vec<Vec3>) {
        let t = Targets::new(self.mesh.boundary().centroids().to_vec());
        let parts = self.volume.teodorescu(&Self::vector_field(g), &t);
        (parts.t1, parts.t3)
    }

    pub fn solve(&self, p: &DivCurlProblem, targets: &Targets) -> Result<DivCurlSolution> {
        let (alpha0, _) = self.traces(&p.g);
        let h0 = self.hilbert.density(&alpha0)?;
        let w: Vec<Quaternion> = p
            .g0
            .iter()
            .zip(&p.g)
            .map(|(a, b)| Quaternion::from_parts(*a, *b))
            .collect();
        let parts = self.volume.teodorescu(&w, targets);
        let (f0, f1) = self.potentials(targets).cauchy_split(&h0);
        Ok(DivCurlSolution {
            w: (0..targets.len()).map(|i| -parts.t2[i] + parts.t3[i] - f1[i]).collect(),
            scalar: parts.t1.iter().zip(&f0).map(|(a, b)| a - b).collect(),
        })
    }

    /// `g -> T3[g] - F1[2 (I + K0)^{-1} alpha0]`.
    pub fn curl_right_inverse(&self, p: &DivCurlProblem, targets: &Targets) -> Result<Vec<Vec3>> {
        let (alpha0, _) = self.traces(&p.g);
        let h0 = self.hilbert.density(&alpha0)?;
        let t3 = self.volume.teodorescu(&Self::vector_field(&p.g), targets).t3;
        let (_, f1) = self.potentials(targets).cauchy_split(&h0);
        Ok(t3.iter().zip(&f1).map(|(a, b)| a - b).collect())
    }

    /// `g -> L[g] + M[2 (I + K0)^{-1} alpha0 eta]`, a potential of the
    /// curl right inverse: `T3 = curl L` and `F1[h] = -curl M[h eta]`.
    pub fn double_curl_right_inverse(&self, p: &DivCurlProblem, targets: &Targets) -> Result<Vec<Vec3>> {
        let (alpha0, _) = self.traces(&p.g);
        let h0 = self.hilbert.density(&alpha0)?;
        let l = self.volume.newton(&Self::vector_field(&p.g), targets);
        let dens: Vec<Quaternion> = h0
            .iter()
            .zip(self.mesh.boundary().normals())
            .map(|(h, n)| Quaternion::vector(n * *h))
            .collect();
        let m = self.potentials(targets).single_layer(&dens);
        Ok(l.iter().zip(&m).map(|(a, b)| a.vec() + b.vec()).collect())
    }

    /// `F1[2 (I + K0)^{-1} tr w0]` for a harmonic `w0` given at the nodes,
    /// so that `w0 + w` is monogenic. Rejects `w0` whose harmonic
    /// extension from the trace differs by more than `tol` relative.
    pub fn harmonic_conjugate(&self, w0: &[f64], targets: &Targets, tol: f64) -> Result<Vec<Vec3>> {
        let defect = harmonic_defect(self.mesh, w0)?;
        if !(defect <= tol) {
            return Err(Error::Precondition(format!(
                "w0 is not harmonic: relative defect {defect:.3e} exceeds {tol:.1e}"
            )));
        }
        let tr: Vec<f64> = self.mesh.boundary_nodes().iter().map(|&i| w0[i]).collect();
        let h0 = self.hilbert.density(&self.mesh.boundary().vertex_to_panel(&tr))?;
        Ok(self.potentials(targets).cauchy_split(&h0).1)
    }

    /// RMS of `F[alpha0 + alpha]` at interior points over the RMS of
    /// `|alpha0 + alpha|` on the boundary.
    pub fn cancellation(&self, p: &DivCurlProblem, points: &[Vec3]) -> f64 {
        let (a0, a) = self.traces(&p.g);
        let dens: Vec<Quaternion> = a0.iter().zip(&a).map(|(s, v)| Quaternion::from_parts(*s, *v)).collect();
        let f = self.potentials(&Targets::new(points.to_vec())).cauchy(&dens);
        let num = f.iter().map(|q| q.norm_squared()).sum::<f64>() / points.len().max(1) as f64;
        let den = dens.iter().map(|q| q.norm_squared()).sum::<f64>() / dens.len().max(1) as f64;
        (num / den.max(f64::MIN_POSITIVE)).sqrt()
    }

    /// Relative panel `L2` error of `tr F[alpha - H[alpha0]] = -alpha0 -
    /// H[alpha0]`, the interior trace taken as `(psi + S psi) / 2`.
    pub fn trace_identity(&self, p: &DivCurlProblem) -> Result<f64> {
        let (a0, a) = self.traces(&p.g);
        let ha0 = self.hilbert.hilbert(&a0)?;
        let psi: Vec<Quaternion> = a.iter().zip(&ha0).map(|(x, y)| Quaternion::vector(x - y)).collect();
        let lhs = self.hilbert.singular().interior_trace(&psi);
        let areas = self.mesh.boundary().areas();
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..psi.len() {
            let rhs = -Quaternion::from_parts(a0[i], ha0[i]);
            num += areas[i] * (lhs[i] - rhs).norm_squared();
            den += areas[i] * rhs.norm_squared();
        }
        Ok((num / den.max(f64::MIN_POSITIVE)).sqrt())
    }
}

/// Relative nodal max difference between `w0` and the discrete harmonic
/// extension of its trace.
pub fn harmonic_defect(mesh: &VolumeMesh, w0: &[f64]) -> Result<f64> {
    if w0.len() != mesh.nodes().len() {
        return Err(Error::Precondition("w0 must have one value per node".into()));
    }
    let tr: Vec<f64> = mesh.boundary_nodes().iter().map(|&i| w0[i]).collect();
    let ext = solve_laplace_dirichlet(mesh, &tr)?;
    let diff = ext.iter().zip(w0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let scale = w0.iter().map(|v| v.abs()).fold(0.0, f64::max);
    Ok(if scale > 0.0 { diff / scale } else { diff })
}

/// Gradients of `x1, x2, x3, x1 x2, x1 x3, x2 x3`.
pub fn si_basis(x: &Vec3) -> [Vec3; 6] {
    [
        Vec3::x(),
        Vec3::y(),
        Vec3::z(),
        Vec3::new(x.y, x.x, 0.0),
        Vec3::new(x.z, 0.0, x.x),
        Vec3::new(0.0, x.z, x.y),
    ]
}

/// Least-squares fit of `field` over [`si_basis`] at `points`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SiFit {
    pub coefficients: [f64; 6],
    /// RMS of `field` minus the fit.
    pub residual: f64,
}

pub fn si_fit(points: &[Vec3], field: &[Vec3]) -> SiFit {
    let n = points.len();
    let mut a = DMatrix::zeros(3 * n, 6);
    let mut b = DVector::zeros(3 * n);
    for (p, (x, v)) in points.iter().zip(field).enumerate() {
        for (j, e) in si_basis(x).iter().enumerate() {
            for c in 0..3 {
                a[(3 * p + c, j)] = e[c];
            }
        }
        for c in 0..3 {
            b[3 * p + c] = v[c];
        }
    }
    let sol = a.clone().svd(true, true).solve(&b, 1e-12).expect("SVD with both factors");
    let r = b - a * &sol;
    let mut coefficients = [0.0; 6];
    coefficients.copy_from_slice(sol.as_slice());
    SiFit {
        coefficients,
        residual: (r.norm_squared() / n.max(1) as f64).sqrt(),
    }
}

/// RMS of `w - oracle` after removing the best SI fit, over the RMS of
/// `oracle`.
pub fn si_corrected_error(points: &[Vec3], w: &[Vec3], oracle: &[Vec3]) -> f64 {
    let d: Vec<Vec3> = w.iter().zip(oracle).map(|(a, b)| a - b).collect();
    let fit = si_fit(points, &d);
    let scale = (oracle.iter().map(|v| v.norm_squared()).sum::<f64>() / oracle.len().max(1) as f64).sqrt();
    if scale > 0.0 {
        fit.residual / scale
    } else {
        fit.residual
    }
}

/// RMS residuals of `div w - g0` and `curl w - g` from central differences.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct DivCurlResidual {
    pub div: f64,
    pub curl: f64,
    /// RMS of `(g0, g)` at the centers, 1 when that vanishes.
    pub scale: f64,
}

impl DivCurlResidual {
    pub fn relative(&self) -> (f64, f64) {
        (self.div / self.scale, self.curl / self.scale)
    }
}

/// `w` holds values at `stencil.targets()`.
pub fn probe_residuals<A, B>(stencil: &Stencil, w: &[Vec3], g0: A, g: B) -> DivCurlResidual
where
    A: Fn(&Vec3) -> f64,
    B: Fn(&Vec3) -> Vec3,
{
    let div = stencil.divergence(w);
    let curl = stencil.curl(w);
    let c = stencil.centers();
    let n = c.len().max(1) as f64;
    let mut r = DivCurlResidual::default();
    let mut s = 0.0;
    for (i, x) in c.iter().enumerate() {
        r.div += (div[i] - g0(x)).powi(2);
        r.curl += (curl[i] - g(x)).norm_squared();
        s += g0(x).powi(2) + g(x).norm_squared();
    }
    r.div = (r.div / n).sqrt();
    r.curl = (r.curl / n).sqrt();
    r.scale = if s > 0.0 { (s / n).sqrt() } else { 1.0 };
    r
}
