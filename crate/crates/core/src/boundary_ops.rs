//! Collocation discretization of the boundary integral operators.
//!
//! Densities are sampled at triangle barycenters. With
//! `G_ij = int_{T_j} E(y - x_i) ds` the singular Cauchy operator has the
//! quaternion kernel `2 G_ij eta_j = -2 G_ij . eta_j + 2 G_ij x eta_j`, whose
//! scalar part is `K0` and whose vector components are `K1, K2, K3`. With
//! [`Density::Linear`] each panel also carries a reconstructed tangential
//! gradient, and the first moments of the kernel spread the row onto the
//! neighbouring nodes.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, Matrix3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dense::{weighted_dot, DenseLu};
use crate::error::{Error, Result};
use crate::mesh::SurfaceMesh;
use crate::panel::{
    triangle_cauchy, triangle_cauchy_moment, triangle_cauchy_pv, triangle_single_layer, triangle_single_layer_moment,
};
use crate::quat::{vec_mul, Quaternion, Vec3};

const FOUR_PI: f64 = 4.0 * PI;

/// `E(x) = -x / (4 pi |x|^3)`.
pub fn cauchy_kernel(x: &Vec3) -> Result<Vec3> {
    let r = x.norm();
    if r == 0.0 {
        return Err(Error::Singularity("Cauchy kernel evaluated at the origin".into()));
    }
    Ok(-x / (FOUR_PI * r * r * r))
}

fn kernel(z: &Vec3) -> Vec3 {
    let r = z.norm();
    -z / (FOUR_PI * r * r * r)
}

/// How panels close to the target are integrated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NearField {
    /// Recursive 4-way subdivision with the one-point rule on the leaves.
    Subdivision,
    /// Closed-form integration over the flat panel.
    Analytic,
}

/// Contribution of the collocation triangle to its own row of `S`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelfTerm {
    Zero,
    /// Principal value of the in-plane kernel over the flat triangle.
    FlatPrincipalValue,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub near: NearField,
    pub self_term: SelfTerm,
    /// Panels with `|x - c| < near_factor * diameter` are near.
    pub near_factor: f64,
    /// Also near when `|x - c| < near_scale * sqrt(diameter * extent)`
    /// with `extent` the size of the surface; zero disables.
    pub near_scale: f64,
    pub max_depth: u32,
    /// Far panels use the barycenter (1) or the degree-2 three-point rule (3).
    pub far_points: u8,
    pub density: Density,
}

/// Density model inside each panel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Density {
    /// The nodal value.
    Constant,
    /// Nodal value plus a least-squares tangential gradient.
    Linear,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            near: NearField::Analytic,
            self_term: SelfTerm::FlatPrincipalValue,
            near_factor: 2.0,
            near_scale: 1.0,
            max_depth: 4,
            far_points: 3,
            density: Density::Linear,
        }
    }
}

impl Quadrature {
    fn near_radius(&self, diameter: f64, extent: f64) -> f64 {
        (self.near_factor * diameter).max(self.near_scale * (diameter * extent).sqrt())
    }

    /// Barycenter rule far away, recursive subdivision near, self term zero.
    pub fn subdivision() -> Self {
        Quadrature {
            near: NearField::Subdivision,
            self_term: SelfTerm::Zero,
            near_scale: 0.0,
            far_points: 1,
            density: Density::Constant,
            ..Quadrature::default()
        }
    }
}

fn split4(p: &[Vec3; 3]) -> [[Vec3; 3]; 4] {
    let m01 = (p[0] + p[1]) * 0.5;
    let m12 = (p[1] + p[2]) * 0.5;
    let m20 = (p[2] + p[0]) * 0.5;
    [
        [p[0], m01, m20],
        [m01, p[1], m12],
        [m20, m12, p[2]],
        [m01, m12, m20],
    ]
}

fn tri_data(p: &[Vec3; 3]) -> (Vec3, f64, f64) {
    let c = (p[0] + p[1] + p[2]) / 3.0;
    let area = 0.5 * (p[1] - p[0]).cross(&(p[2] - p[0])).norm();
    let d = (p[1] - p[0]).norm().max((p[2] - p[1]).norm()).max((p[0] - p[2]).norm());
    (c, area, d)
}

/// Recursive subdivision; the near test uses `anchor`, the kernel sits in `f`.
/// Returns the integral and whether a leaf was still near at max depth.
fn subdivide<T, F>(p: &[Vec3; 3], anchor: &Vec3, q: &Quadrature, depth: u32, f: &F) -> (T, bool)
where
    T: std::ops::Add<Output = T> + Default,
    F: Fn(&Vec3, f64) -> T,
{
    let (c, area, d) = tri_data(p);
    let near = (anchor - c).norm() < q.near_factor * d;
    if !near {
        return (f(&c, area), false);
    }
    if depth == q.max_depth {
        return (f(&c, area), true);
    }
    let mut acc = T::default();
    let mut warn = false;
    for child in split4(p) {
        let (v, w) = subdivide(&child, anchor, q, depth + 1, f);
        acc = acc + v;
        warn |= w;
    }
    (acc, warn)
}

/// Far-field rule over panel `j`.
fn far_rule<T, F>(mesh: &SurfaceMesh, j: usize, q: &Quadrature, f: F) -> T
where
    T: std::ops::Add<Output = T>,
    F: Fn(&Vec3, f64) -> T,
{
    let a = mesh.areas()[j];
    if q.far_points == 1 {
        return f(&mesh.centroids()[j], a);
    }
    let p = mesh.corners(j);
    let pt = |k: usize| p[k] * (2.0 / 3.0) + (p[(k + 1) % 3] + p[(k + 2) % 3]) / 6.0;
    f(&pt(0), a / 3.0) + f(&pt(1), a / 3.0) + f(&pt(2), a / 3.0)
}

/// Base integral over a panel together with its first moment about the
/// panel barycenter: `m g = int_{T_j} E(y - x) ((y - c_j).g) ds`.
#[derive(Clone, Copy)]
struct CauchyPanel {
    g: Vec3,
    m: Matrix3<f64>,
}

impl Default for CauchyPanel {
    fn default() -> Self {
        CauchyPanel {
            g: Vec3::zeros(),
            m: Matrix3::zeros(),
        }
    }
}

impl std::ops::Add for CauchyPanel {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        CauchyPanel {
            g: self.g + o.g,
            m: self.m + o.m,
        }
    }
}

/// `int 1/(4 pi |y - x|)` over a panel and its first moment.
#[derive(Clone, Copy, Default)]
struct SinglePanel {
    s: f64,
    m: Vec3,
}

impl std::ops::Add for SinglePanel {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        SinglePanel {
            s: self.s + o.s,
            m: self.m + o.m,
        }
    }
}

fn cauchy_point(x: &Vec3, c: &Vec3, y: &Vec3, a: f64) -> CauchyPanel {
    let e = kernel(&(y - x)) * a;
    CauchyPanel {
        g: e,
        m: e * (y - c).transpose(),
    }
}

fn single_point(x: &Vec3, c: &Vec3, y: &Vec3, a: f64) -> SinglePanel {
    let s = a / (FOUR_PI * (y - x).norm());
    SinglePanel { s, m: (y - c) * s }
}

/// Integrals over panel `j` seen from `x`; `self_panel` marks `x` as the
/// barycenter of `j`.
fn panel_cauchy(mesh: &SurfaceMesh, j: usize, x: &Vec3, anchor: &Vec3, q: &Quadrature, self_panel: bool) -> (CauchyPanel, bool) {
    let c = mesh.centroids()[j];
    let p = mesh.corners(j);
    if self_panel {
        return match q.self_term {
            SelfTerm::Zero => (CauchyPanel::default(), false),
            SelfTerm::FlatPrincipalValue => (
                CauchyPanel {
                    g: triangle_cauchy_pv(&p, x),
                    m: triangle_cauchy_moment(&p, x, true),
                },
                false,
            ),
        };
    }
    let d = mesh.diameters()[j];
    if (anchor - c).norm() >= q.near_radius(d, mesh.extent()) {
        return (far_rule(mesh, j, q, |y, a| cauchy_point(x, &c, y, a)), false);
    }
    match q.near {
        NearField::Analytic => {
            let g = triangle_cauchy(&p, x);
            let m = triangle_cauchy_moment(&p, x, false) + g * (x - c).transpose();
            if g.iter().chain(m.iter()).all(|v| v.is_finite()) {
                (CauchyPanel { g, m }, false)
            } else {
                (CauchyPanel::default(), true)
            }
        }
        NearField::Subdivision => subdivide(&p, anchor, q, 0, &|y: &Vec3, a: f64| cauchy_point(x, &c, y, a)),
    }
}

fn panel_single_layer(mesh: &SurfaceMesh, j: usize, x: &Vec3, anchor: &Vec3, q: &Quadrature, self_panel: bool) -> (SinglePanel, bool) {
    let c = mesh.centroids()[j];
    let p = mesh.corners(j);
    if self_panel {
        let s = triangle_single_layer(&p, x);
        return (
            SinglePanel {
                s,
                m: triangle_single_layer_moment(&p, x, true),
            },
            false,
        );
    }
    let d = mesh.diameters()[j];
    if (anchor - c).norm() >= q.near_radius(d, mesh.extent()) {
        return (far_rule(mesh, j, q, |y, a| single_point(x, &c, y, a)), false);
    }
    match q.near {
        NearField::Analytic => {
            let s = triangle_single_layer(&p, x);
            let m = triangle_single_layer_moment(&p, x, false) + (x - c) * s;
            (SinglePanel { s, m }, false)
        }
        NearField::Subdivision => subdivide(&p, anchor, q, 0, &|y: &Vec3, a: f64| single_point(x, &c, y, a)),
    }
}

/// Least-squares tangential gradients of piecewise-constant fields:
/// `grad phi_j = sum_k c_jk phi_k` over the panels sharing a vertex with `j`.
#[derive(Clone, Debug)]
pub struct SurfaceGradient {
    rows: Vec<Vec<(usize, Vec3)>>,
}

impl SurfaceGradient {
    pub fn new(mesh: &SurfaceMesh) -> Self {
        let mut at_vertex = vec![Vec::new(); mesh.vertices().len()];
        for (j, t) in mesh.triangles().iter().enumerate() {
            for &v in t {
                at_vertex[v].push(j);
            }
        }
        let rows = (0..mesh.len())
            .map(|j| {
                let mut nb: Vec<usize> = mesh.triangles()[j]
                    .iter()
                    .flat_map(|&v| at_vertex[v].iter().copied())
                    .filter(|&k| k != j)
                    .collect();
                nb.sort_unstable();
                nb.dedup();
                let n = mesh.normals()[j];
                let c = mesh.centroids()[j];
                let proj = |v: Vec3| v - n * n.dot(&v);
                let mut normal = Matrix3::zeros();
                for &k in &nb {
                    let d = proj(mesh.centroids()[k] - c);
                    normal += d * d.transpose();
                }
                // Rank two in the tangent plane; the normal direction is
                // filled in so the system is invertible and maps to zero.
                normal += n * n.transpose() * normal.trace();
                let inv = normal.try_inverse().unwrap_or_else(Matrix3::zeros);
                let mut row: Vec<(usize, Vec3)> = nb
                    .iter()
                    .map(|&k| (k, proj(inv * proj(mesh.centroids()[k] - c))))
                    .collect();
                let own: Vec3 = -row.iter().map(|(_, v)| *v).sum::<Vec3>();
                row.push((j, own));
                row
            })
            .collect();
        SurfaceGradient { rows }
    }

    pub fn row(&self, j: usize) -> &[(usize, Vec3)] {
        &self.rows[j]
    }

    pub fn apply(&self, phi: &[f64]) -> Vec<Vec3> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|(k, c)| c * phi[*k]).sum())
            .collect()
    }
}

/// One row of the Cauchy integral `int E(y - x) eta phi ds` as quaternion
/// kernels acting on the nodal values, plus the single-layer row.
struct Row {
    cauchy: Vec<Quaternion>,
    single: Vec<f64>,
    warn: bool,
}

fn assemble_row(
    mesh: &SurfaceMesh,
    x: &Vec3,
    anchor: &Vec3,
    self_index: Option<usize>,
    q: &Quadrature,
    grad: Option<&SurfaceGradient>,
    want: (bool, bool),
) -> Row {
    let n = mesh.len();
    let mut row = Row {
        cauchy: if want.0 { vec![Quaternion::ZERO; n] } else { Vec::new() },
        single: if want.1 { vec![0.0; n] } else { Vec::new() },
        warn: false,
    };
    for j in 0..n {
        let on = self_index == Some(j);
        let eta = mesh.normals()[j];
        if want.0 {
            let (pc, w) = panel_cauchy(mesh, j, x, anchor, q, on);
            row.warn |= w;
            row.cauchy[j] = row.cauchy[j] + vec_mul(&pc.g, &eta);
            if let Some(gr) = grad {
                for (k, c) in gr.row(j) {
                    row.cauchy[*k] = row.cauchy[*k] + vec_mul(&(pc.m * c), &eta);
                }
            }
        }
        if want.1 {
            let (ps, w) = panel_single_layer(mesh, j, x, anchor, q, on);
            row.warn |= w;
            row.single[j] += ps.s;
            if let Some(gr) = grad {
                for (k, c) in gr.row(j) {
                    row.single[*k] += ps.m.dot(c);
                }
            }
        }
    }
    row
}

fn gradient_for(mesh: &SurfaceMesh, q: &Quadrature) -> Option<SurfaceGradient> {
    match q.density {
        Density::Constant => None,
        Density::Linear => Some(SurfaceGradient::new(mesh)),
    }
}

/// Number of components in a stacked field layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    Scalar,
    Vector,
    Full,
}

impl Layout {
    pub fn components(self) -> usize {
        match self {
            Layout::Scalar => 1,
            Layout::Vector => 3,
            Layout::Full => 4,
        }
    }
}

/// Dense matrix acting on component-major stacked boundary fields
/// (`index = component * n + node`).
#[derive(Clone, Debug)]
pub struct BoundaryOperator {
    matrix: DMatrix<f64>,
    input: Layout,
    output: Layout,
    areas: Vec<f64>,
    mesh_hash: String,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct OperatorHeader {
    pub rows: usize,
    pub cols: usize,
    pub input: Layout,
    pub output: Layout,
    pub storage: String,
    pub mesh_hash: String,
}

impl BoundaryOperator {
    pub fn new(matrix: DMatrix<f64>, input: Layout, output: Layout, mesh: &SurfaceMesh) -> Result<Self> {
        Self::with_areas(matrix, input, output, mesh.areas().to_vec(), mesh.hash())
    }

    fn with_areas(matrix: DMatrix<f64>, input: Layout, output: Layout, areas: Vec<f64>, mesh_hash: String) -> Result<Self> {
        let n = areas.len();
        if matrix.nrows() != output.components() * n || matrix.ncols() != input.components() * n {
            return Err(Error::Precondition(format!(
                "{}x{} matrix does not fit layout {output:?} <- {input:?} on {n} nodes",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(BoundaryOperator {
            matrix,
            input,
            output,
            areas,
            mesh_hash,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn input(&self) -> Layout {
        self.input
    }

    pub fn output(&self) -> Layout {
        self.output
    }

    pub fn mesh_hash(&self) -> &str {
        &self.mesh_hash
    }

    pub fn nodes(&self) -> usize {
        self.areas.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.matrix.ncols(), "field length does not match operator");
        let v = &self.matrix * nalgebra::DVector::from_column_slice(x);
        v.as_slice().to_vec()
    }

    /// Area weights repeated over the components of `layout`.
    pub fn weights(&self, layout: Layout) -> Vec<f64> {
        (0..layout.components()).flat_map(|_| self.areas.iter().copied()).collect()
    }

    /// Area-weighted pairing of two stacked fields of the same layout.
    pub fn pairing(&self, layout: Layout, u: &[f64], v: &[f64]) -> f64 {
        weighted_dot(&self.weights(layout), u, v)
    }

    /// Discrete adjoint `W_in^{-1} A^T W_out` for the area-weighted pairing.
    pub fn adjoint(&self) -> BoundaryOperator {
        let w_in = self.weights(self.input);
        let w_out = self.weights(self.output);
        let mut t = self.matrix.transpose();
        for (i, mut row) in t.row_iter_mut().enumerate() {
            row /= w_in[i];
        }
        for (j, mut col) in t.column_iter_mut().enumerate() {
            col *= w_out[j];
        }
        BoundaryOperator {
            matrix: t,
            input: self.output,
            output: self.input,
            areas: self.areas.clone(),
            mesh_hash: self.mesh_hash.clone(),
        }
    }

    /// `self * other`.
    pub fn compose(&self, other: &BoundaryOperator) -> Result<BoundaryOperator> {
        if self.input != other.output || self.mesh_hash != other.mesh_hash {
            return Err(Error::Precondition("operators cannot be composed".into()));
        }
        Ok(BoundaryOperator {
            matrix: &self.matrix * &other.matrix,
            input: other.input,
            output: self.output,
            areas: self.areas.clone(),
            mesh_hash: self.mesh_hash.clone(),
        })
    }

    /// Writes `<stem>.bin` (row-major little-endian f64) and `<stem>.json`.
    pub fn export(&self, stem: &Path) -> Result<()> {
        let header = OperatorHeader {
            rows: self.matrix.nrows(),
            cols: self.matrix.ncols(),
            input: self.input,
            output: self.output,
            storage: "row-major f64 little-endian".into(),
            mesh_hash: self.mesh_hash.clone(),
        };
        let mut bytes = Vec::with_capacity(8 * header.rows * header.cols);
        for i in 0..header.rows {
            for j in 0..header.cols {
                bytes.extend_from_slice(&self.matrix[(i, j)].to_le_bytes());
            }
        }
        let bin = stem.with_extension("bin");
        let json = stem.with_extension("json");
        fs::write(&bin, bytes).map_err(|e| Error::io(&bin, e))?;
        fs::write(&json, serde_json::to_string_pretty(&header)?).map_err(|e| Error::io(&json, e))
    }

    pub fn import(stem: &Path, areas: &[f64]) -> Result<BoundaryOperator> {
        let bin = stem.with_extension("bin");
        let json = stem.with_extension("json");
        let h: OperatorHeader =
            serde_json::from_str(&fs::read_to_string(&json).map_err(|e| Error::io(&json, e))?)?;
        let bytes = fs::read(&bin).map_err(|e| Error::io(&bin, e))?;
        if bytes.len() != 8 * h.rows * h.cols {
            return Err(Error::Precondition(format!("{} has the wrong size", bin.display())));
        }
        let m = DMatrix::from_row_iterator(
            h.rows,
            h.cols,
            bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())),
        );
        Self::with_areas(m, h.input, h.output, areas.to_vec(), h.mesh_hash)
    }
}

/// Singular Cauchy operator `S = K0 + sum e_i K_i` on a surface.
#[derive(Clone, Debug)]
pub struct SingularCauchy {
    k0: DMatrix<f64>,
    k: [DMatrix<f64>; 3],
    areas: Vec<f64>,
    mesh_hash: String,
}

impl SingularCauchy {
    pub fn assemble(mesh: &SurfaceMesh, q: &Quadrature) -> Self {
        let n = mesh.len();
        let grad = gradient_for(mesh, q);
        let rows: Vec<Vec<Quaternion>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let x = mesh.centroids()[i];
                assemble_row(mesh, &x, &x, Some(i), q, grad.as_ref(), (true, false)).cauchy
            })
            .collect();
        let mut k0 = DMatrix::zeros(n, n);
        let mut k = [DMatrix::zeros(n, n), DMatrix::zeros(n, n), DMatrix::zeros(n, n)];
        for (i, row) in rows.iter().enumerate() {
            for (j, kij) in row.iter().enumerate() {
                k0[(i, j)] = 2.0 * kij.w0;
                k[0][(i, j)] = 2.0 * kij.w1;
                k[1][(i, j)] = 2.0 * kij.w2;
                k[2][(i, j)] = 2.0 * kij.w3;
            }
        }
        SingularCauchy {
            k0,
            k,
            areas: mesh.areas().to_vec(),
            mesh_hash: mesh.hash(),
        }
    }

    pub fn len(&self) -> usize {
        self.areas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.areas.is_empty()
    }

    pub fn mesh_hash(&self) -> &str {
        &self.mesh_hash
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn k0_matrix(&self) -> &DMatrix<f64> {
        &self.k0
    }

    pub fn k_matrix(&self, i: usize) -> &DMatrix<f64> {
        &self.k[i]
    }

    pub fn k0(&self) -> BoundaryOperator {
        BoundaryOperator::with_areas(self.k0.clone(), Layout::Scalar, Layout::Scalar, self.areas.clone(), self.mesh_hash.clone())
            .expect("square block")
    }

    /// `K_vec` as a scalar-to-vector operator.
    pub fn kvec(&self) -> BoundaryOperator {
        let n = self.len();
        let mut m = DMatrix::zeros(3 * n, n);
        for a in 0..3 {
            m.view_mut((a * n, 0), (n, n)).copy_from(&self.k[a]);
        }
        BoundaryOperator::with_areas(m, Layout::Scalar, Layout::Vector, self.areas.clone(), self.mesh_hash.clone())
            .expect("stacked blocks")
    }

    /// `S phi` for a quaternion density.
    pub fn apply(&self, phi: &[Quaternion]) -> Vec<Quaternion> {
        let n = self.len();
        assert_eq!(phi.len(), n);
        let comp = |c: usize| nalgebra::DVector::from_iterator(n, phi.iter().map(|q| q.component(c)));
        let p: Vec<_> = (0..4).map(comp).collect();
        let mv = |m: &DMatrix<f64>, c: usize| m * &p[c];
        let k0p: Vec<_> = (0..4).map(|c| mv(&self.k0, c)).collect();
        let kp: Vec<Vec<_>> = (0..3).map(|a| (0..4).map(|c| mv(&self.k[a], c)).collect()).collect();
        (0..n)
            .map(|i| {
                Quaternion::new(
                    k0p[0][i] - kp[0][1][i] - kp[1][2][i] - kp[2][3][i],
                    k0p[1][i] + kp[0][0][i] + kp[1][3][i] - kp[2][2][i],
                    k0p[2][i] + kp[1][0][i] + kp[2][1][i] - kp[0][3][i],
                    k0p[3][i] + kp[2][0][i] + kp[0][2][i] - kp[1][1][i],
                )
            })
            .collect()
    }

    /// `K_vec . phi = sum_i K_i phi_i` for a vector density.
    pub fn kvec_dot(&self, phi: &[Vec3]) -> Vec<f64> {
        let n = self.len();
        let mut out = nalgebra::DVector::zeros(n);
        for a in 0..3 {
            let p = nalgebra::DVector::from_iterator(n, phi.iter().map(|v| v[a]));
            out += &self.k[a] * p;
        }
        out.as_slice().to_vec()
    }

    /// `K_vec[phi0]` as vectors per node.
    pub fn kvec_apply(&self, phi0: &[f64]) -> Vec<Vec3> {
        let p = nalgebra::DVector::from_column_slice(phi0);
        let c: Vec<_> = (0..3).map(|a| &self.k[a] * &p).collect();
        (0..self.len()).map(|i| Vec3::new(c[0][i], c[1][i], c[2][i])).collect()
    }

    pub fn k0_apply(&self, phi0: &[f64]) -> Vec<f64> {
        (&self.k0 * nalgebra::DVector::from_column_slice(phi0)).as_slice().to_vec()
    }

    /// Interior boundary value `(phi + S phi) / 2` of `F[phi]`.
    pub fn interior_trace(&self, phi: &[Quaternion]) -> Vec<Quaternion> {
        self.apply(phi).iter().zip(phi).map(|(s, p)| (*s + *p) * 0.5).collect()
    }

    /// Exterior boundary value `(S phi - phi) / 2` of `F[phi]`.
    pub fn exterior_trace(&self, phi: &[Quaternion]) -> Vec<Quaternion> {
        self.apply(phi).iter().zip(phi).map(|(s, p)| (*s - *p) * 0.5).collect()
    }

    /// Weighted adjoint `W^{-1} K0^T W` as a matrix.
    pub fn k0_adjoint_matrix(&self) -> DMatrix<f64> {
        let a = &self.areas;
        DMatrix::from_fn(self.len(), self.len(), |i, j| self.k0[(j, i)] * a[j] / a[i])
    }

    /// `K_vec^* phi = sum_i W^{-1} K_i^T W phi_i`.
    pub fn kvec_adjoint_dot(&self, phi: &[Vec3]) -> Vec<f64> {
        let n = self.len();
        let mut out = nalgebra::DVector::zeros(n);
        for a in 0..3 {
            let p = nalgebra::DVector::from_iterator(n, phi.iter().zip(&self.areas).map(|(v, w)| v[a] * w));
            out += self.k[a].tr_mul(&p);
        }
        out.iter().zip(&self.areas).map(|(v, w)| v / w).collect()
    }
}

/// Boundary single-layer `tr M`, symmetrized in the area-weighted pairing.
pub fn single_layer_boundary(mesh: &SurfaceMesh, q: &Quadrature) -> BoundaryOperator {
    let n = mesh.len();
    let grad = gradient_for(mesh, q);
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = mesh.centroids()[i];
            assemble_row(mesh, &x, &x, Some(i), q, grad.as_ref(), (false, true)).single
        })
        .collect();
    let a = mesh.areas();
    let m = DMatrix::from_fn(n, n, |i, j| 0.5 * (rows[i][j] + a[j] * rows[j][i] / a[i]));
    BoundaryOperator::new(m, Layout::Scalar, Layout::Scalar, mesh).expect("square")
}

/// `A[phi] = (1/sigma) int phi ds` replicated at every node.
pub fn averaging(mesh: &SurfaceMesh) -> BoundaryOperator {
    let n = mesh.len();
    let s = mesh.total_area();
    let m = DMatrix::from_fn(n, n, |_, j| mesh.areas()[j] / s);
    BoundaryOperator::new(m, Layout::Scalar, Layout::Scalar, mesh).expect("square")
}

pub fn mean(areas: &[f64], phi: &[f64]) -> f64 {
    let s: f64 = areas.iter().sum();
    areas.iter().zip(phi).map(|(a, p)| a * p).sum::<f64>() / s
}

/// `(I - A) phi`.
pub fn project_mean_zero(areas: &[f64], phi: &[f64]) -> Vec<f64> {
    let m = mean(areas, phi);
    phi.iter().map(|p| p - m).collect()
}

/// Factored `I + K0` and the mean-zero deflation of `I - K0`.
pub struct K0Solvers {
    plus: DenseLu,
    minus: DenseLu,
    areas: Vec<f64>,
}

impl K0Solvers {
    pub fn new(s: &SingularCauchy) -> Result<Self> {
        let n = s.len();
        let id = DMatrix::<f64>::identity(n, n);
        let total: f64 = s.areas.iter().sum();
        let avg = DMatrix::from_fn(n, n, |_, j| s.areas[j] / total);
        Ok(K0Solvers {
            plus: DenseLu::new(&id + &s.k0)?,
            minus: DenseLu::new(&id - &s.k0 + avg)?,
            areas: s.areas.clone(),
        })
    }

    /// `(I + K0)^{-1} rhs`.
    pub fn solve_plus(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.plus.solve(rhs)
    }

    /// `(I - K0)^{-1} rhs` on mean-zero fields. The constant kernel is
    /// deflated by solving `(I - K0 + A) x = rhs`, and the mean of the
    /// result is removed.
    pub fn solve_minus_mean_zero(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let m = mean(&self.areas, rhs);
        let scale = rhs.iter().map(|v| v * v).sum::<f64>().sqrt() / (rhs.len().max(1) as f64).sqrt();
        if m.abs() > 1e-10 * scale.max(f64::MIN_POSITIVE) && m != 0.0 {
            return Err(Error::Precondition(format!(
                "right-hand side of I - K0 has mean {m:.3e}, expected zero"
            )));
        }
        let x = self.minus.solve(rhs)?;
        Ok(project_mean_zero(&self.areas, &x))
    }

    pub fn plus_matrix(&self) -> &DMatrix<f64> {
        self.plus.matrix()
    }

    pub fn minus_deflated_matrix(&self) -> &DMatrix<f64> {
        self.minus.matrix()
    }
}

/// Cauchy and single-layer integrals from the boundary to a point set,
/// stored as kernels on the nodal values so several densities can be
/// applied.
#[derive(Clone, Debug)]
pub struct PointPotentials {
    /// `F[phi](x_p) = sum_k cauchy[p][k] phi_k`.
    cauchy: Vec<Vec<Quaternion>>,
    /// `M[phi](x_p) = sum_k single[p][k] phi_k`.
    single: Vec<Vec<f64>>,
    warnings: Vec<bool>,
}

impl PointPotentials {
    pub fn assemble(mesh: &SurfaceMesh, points: &[Vec3], q: &Quadrature) -> Self {
        Self::assemble_anchored(mesh, points, points, q)
    }

    /// Near/far decisions use `anchors[p]` so that finite-difference
    /// stencils around one anchor share a quadrature rule.
    pub fn assemble_anchored(mesh: &SurfaceMesh, points: &[Vec3], anchors: &[Vec3], q: &Quadrature) -> Self {
        assert_eq!(points.len(), anchors.len());
        let grad = gradient_for(mesh, q);
        let rows: Vec<Row> = points
            .par_iter()
            .zip(anchors.par_iter())
            .map(|(x, a)| assemble_row(mesh, x, a, None, q, grad.as_ref(), (true, true)))
            .collect();
        let mut pp = PointPotentials {
            cauchy: Vec::with_capacity(rows.len()),
            single: Vec::with_capacity(rows.len()),
            warnings: Vec::with_capacity(rows.len()),
        };
        for r in rows {
            pp.cauchy.push(r.cauchy);
            pp.single.push(r.single);
            pp.warnings.push(r.warn);
        }
        pp
    }

    pub fn len(&self) -> usize {
        self.cauchy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cauchy.is_empty()
    }

    /// Points where near-singular quadrature hit its depth limit or the
    /// point lies on a panel.
    pub fn warnings(&self) -> &[bool] {
        &self.warnings
    }

    /// `F[phi](x) = int E(y - x) eta(y) phi(y) ds`.
    pub fn cauchy(&self, phi: &[Quaternion]) -> Vec<Quaternion> {
        self.cauchy
            .iter()
            .map(|row| row.iter().zip(phi).map(|(k, p)| *k * *p).sum())
            .collect()
    }

    /// `(F0[phi0], F1[phi0])`, the scalar and vector parts of `F[phi0]`.
    pub fn cauchy_split(&self, phi0: &[f64]) -> (Vec<f64>, Vec<Vec3>) {
        self.cauchy
            .iter()
            .map(|row| {
                let q: Quaternion = row.iter().zip(phi0).map(|(k, p)| *k * *p).sum();
                (q.w0, q.vec())
            })
            .unzip()
    }

    /// `M[phi](x)` for a quaternion density.
    pub fn single_layer(&self, phi: &[Quaternion]) -> Vec<Quaternion> {
        self.single
            .iter()
            .map(|row| row.iter().zip(phi).map(|(s, p)| *p * *s).sum())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate::unit_sphere;

    #[test]
    fn kernel_values() {
        let e = cauchy_kernel(&Vec3::x()).unwrap();
        assert!((e.x + 1.0 / FOUR_PI).abs() < 1e-16 && e.y == 0.0 && e.z == 0.0);
        let e2 = cauchy_kernel(&(Vec3::x() * 2.0)).unwrap();
        assert!((e2.x + 1.0 / (16.0 * PI)).abs() < 1e-16);
        assert!(cauchy_kernel(&Vec3::zeros()).is_err());
    }

    #[test]
    fn averaging_is_projection() {
        let m = unit_sphere(1);
        let a = averaging(&m);
        let one = vec![1.0; m.len()];
        assert!(a.apply(&one).iter().all(|v| (v - 1.0).abs() < 1e-14));
        let aa = a.compose(&a).unwrap();
        assert!((aa.matrix() - a.matrix()).abs().max() < 1e-14);
    }

    #[test]
    fn adjoint_is_involution() {
        let m = unit_sphere(1);
        let s = SingularCauchy::assemble(&m, &Quadrature::default());
        let kv = s.kvec();
        let kvss = kv.adjoint().adjoint();
        assert!((kvss.matrix() - kv.matrix()).abs().max() < 1e-15);
        assert_eq!(kv.adjoint().input(), Layout::Vector);
    }

    #[test]
    fn export_round_trip() {
        let m = unit_sphere(0);
        let s = SingularCauchy::assemble(&m, &Quadrature::default()).k0();
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("k0");
        s.export(&stem).unwrap();
        let back = BoundaryOperator::import(&stem, m.areas()).unwrap();
        assert_eq!(back.matrix(), s.matrix());
        assert_eq!(back.mesh_hash(), m.hash());
    }

    #[test]
    fn zero_density_gives_zero() {
        let m = unit_sphere(1);
        let pts = [Vec3::new(0.1, 0.2, -0.3)];
        let pp = PointPotentials::assemble(&m, &pts, &Quadrature::default());
        let z = vec![Quaternion::ZERO; m.len()];
        assert_eq!(pp.cauchy(&z)[0], Quaternion::ZERO);
        assert_eq!(pp.single_layer(&z)[0], Quaternion::ZERO);
    }
}
