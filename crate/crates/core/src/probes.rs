//! Interior probe sets and central-difference stencils.
//!
//! Every stencil point carries the stencil center as its anchor, so that
//! quadrature near/far decisions are shared across the stencil and the
//! differences see a smooth function.

use nalgebra::Matrix3;

use crate::mesh::{SurfaceMesh, VolumeMesh};
use crate::panel::solid_angle;
use crate::quat::{Quaternion, Vec3};

/// Evaluation points together with the anchors used for quadrature
/// decisions.
#[derive(Clone, Debug, Default)]
pub struct Targets {
    pub points: Vec<Vec3>,
    pub anchors: Vec<Vec3>,
}

impl Targets {
    pub fn new(points: Vec<Vec3>) -> Self {
        Targets {
            anchors: points.clone(),
            points,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StencilOrder {
    /// Center and the six axis neighbours.
    First,
    /// Adds the twelve face diagonals for mixed second derivatives.
    Second,
}

const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

fn offsets(order: StencilOrder) -> Vec<Vec3> {
    let mut o = vec![Vec3::zeros()];
    for i in 0..3 {
        let e = Vec3::ith(i, 1.0);
        o.push(e);
        o.push(-e);
    }
    if order == StencilOrder::Second {
        for (i, j) in PAIRS {
            let (a, b) = (Vec3::ith(i, 1.0), Vec3::ith(j, 1.0));
            o.extend([a + b, a - b, -a + b, -a - b]);
        }
    }
    o
}

/// Central differences of step `delta` around a set of centers.
#[derive(Clone, Debug)]
pub struct Stencil {
    centers: Vec<Vec3>,
    delta: f64,
    order: StencilOrder,
    width: usize,
}

impl Stencil {
    pub fn new(centers: Vec<Vec3>, delta: f64, order: StencilOrder) -> Self {
        let width = offsets(order).len();
        Stencil {
            centers,
            delta,
            order,
            width,
        }
    }

    pub fn centers(&self) -> &[Vec3] {
        &self.centers
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn targets(&self) -> Targets {
        let off = offsets(self.order);
        let mut t = Targets::default();
        for c in &self.centers {
            for o in &off {
                t.points.push(c + o * self.delta);
                t.anchors.push(*c);
            }
        }
        t
    }

    fn block<'v, T>(&self, vals: &'v [T], k: usize) -> &'v [T] {
        assert_eq!(vals.len(), self.centers.len() * self.width, "values do not match stencil");
        &vals[k * self.width..(k + 1) * self.width]
    }

    pub fn at_centers<T: Copy>(&self, vals: &[T]) -> Vec<T> {
        (0..self.centers.len()).map(|k| self.block(vals, k)[0]).collect()
    }

    /// `d/dx_i` of each quaternion component, for `i = 0..3`.
    pub fn partials(&self, vals: &[Quaternion]) -> Vec<[Quaternion; 3]> {
        let h2 = 2.0 * self.delta;
        (0..self.centers.len())
            .map(|k| {
                let b = self.block(vals, k);
                [0, 1, 2].map(|i| (b[1 + 2 * i] - b[2 + 2 * i]) * (1.0 / h2))
            })
            .collect()
    }

    /// `D w = e1 d1 w + e2 d2 w + e3 d3 w`.
    pub fn dirac(&self, vals: &[Quaternion]) -> Vec<Quaternion> {
        let e = [Quaternion::E1, Quaternion::E2, Quaternion::E3];
        self.partials(vals)
            .into_iter()
            .map(|p| (0..3).map(|i| e[i] * p[i]).sum())
            .collect()
    }

    pub fn gradient(&self, vals: &[f64]) -> Vec<Vec3> {
        let q: Vec<_> = vals.iter().map(|&v| Quaternion::scalar(v)).collect();
        self.partials(&q)
            .into_iter()
            .map(|p| Vec3::new(p[0].w0, p[1].w0, p[2].w0))
            .collect()
    }

    pub fn divergence(&self, vals: &[Vec3]) -> Vec<f64> {
        let q: Vec<_> = vals.iter().map(|&v| Quaternion::vector(v)).collect();
        self.partials(&q)
            .into_iter()
            .map(|p| p[0].w1 + p[1].w2 + p[2].w3)
            .collect()
    }

    pub fn curl(&self, vals: &[Vec3]) -> Vec<Vec3> {
        let q: Vec<_> = vals.iter().map(|&v| Quaternion::vector(v)).collect();
        self.partials(&q)
            .into_iter()
            .map(|p| Vec3::new(p[1].w3 - p[2].w2, p[2].w1 - p[0].w3, p[0].w2 - p[1].w1))
            .collect()
    }

    pub fn laplacian(&self, vals: &[f64]) -> Vec<f64> {
        let d2 = self.delta * self.delta;
        (0..self.centers.len())
            .map(|k| {
                let b = self.block(vals, k);
                (b[1..7].iter().sum::<f64>() - 6.0 * b[0]) / d2
            })
            .collect()
    }

    /// Hessians; needs a second-order stencil.
    pub fn hessian(&self, vals: &[f64]) -> Vec<Matrix3<f64>> {
        assert_eq!(self.order, StencilOrder::Second, "hessian needs the diagonal points");
        let d2 = self.delta * self.delta;
        (0..self.centers.len())
            .map(|k| {
                let b = self.block(vals, k);
                let mut h = Matrix3::zeros();
                for i in 0..3 {
                    h[(i, i)] = (b[1 + 2 * i] + b[2 + 2 * i] - 2.0 * b[0]) / d2;
                }
                for (p, (i, j)) in PAIRS.iter().enumerate() {
                    let s = &b[7 + 4 * p..11 + 4 * p];
                    let v = (s[0] - s[1] - s[2] + s[3]) / (4.0 * d2);
                    h[(*i, *j)] = v;
                    h[(*j, *i)] = v;
                }
                h
            })
            .collect()
    }

    /// `curl curl u = grad div u - lap u`.
    pub fn curl_curl(&self, vals: &[Vec3]) -> Vec<Vec3> {
        let comp: Vec<Vec<Matrix3<f64>>> = (0..3)
            .map(|a| self.hessian(&vals.iter().map(|v| v[a]).collect::<Vec<_>>()))
            .collect();
        (0..self.centers.len())
            .map(|k| {
                let mut out = Vec3::zeros();
                for i in 0..3 {
                    let grad_div: f64 = (0..3).map(|a| comp[a][k][(i, a)]).sum();
                    out[i] = grad_div - comp[i][k].trace();
                }
                out
            })
            .collect()
    }
}

/// Distance from `x` to the closest point of a triangle.
pub fn triangle_distance(p: &[Vec3; 3], x: &Vec3) -> f64 {
    let n = (p[1] - p[0]).cross(&(p[2] - p[0]));
    let nn = n.norm_squared();
    if nn > 0.0 {
        let t = (x - p[0]).dot(&n) / nn;
        let proj = x - n * t;
        let inside = (0..3).all(|k| {
            let a = p[k];
            let b = p[(k + 1) % 3];
            (b - a).cross(&(proj - a)).dot(&n) >= 0.0
        });
        if inside {
            return (x - proj).norm();
        }
    }
    (0..3)
        .map(|k| segment_distance(&p[k], &p[(k + 1) % 3], x))
        .fold(f64::INFINITY, f64::min)
}

fn segment_distance(a: &Vec3, b: &Vec3, x: &Vec3) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 { ((x - a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (a + ab * t - x).norm()
}

pub fn surface_distance(surface: &SurfaceMesh, x: &Vec3) -> f64 {
    (0..surface.len())
        .map(|i| triangle_distance(&surface.corners(i), x))
        .fold(f64::INFINITY, f64::min)
}

/// Winding number of the surface around `x`; 1 inside, 0 outside.
pub fn winding_number(surface: &SurfaceMesh, x: &Vec3) -> f64 {
    (0..surface.len())
        .map(|i| solid_angle(&surface.corners(i), x))
        .sum::<f64>()
        / (4.0 * std::f64::consts::PI)
}

/// Points of the lattice `spacing * Z^3` (shifted by half a cell) inside
/// the surface and at least `margin` from it, in lexicographic order.
pub fn interior_lattice(surface: &SurfaceMesh, spacing: f64, margin: f64) -> Vec<Vec3> {
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for v in surface.vertices() {
        lo = lo.inf(v);
        hi = hi.sup(v);
    }
    let range = |a: f64, b: f64| {
        let i0 = (a / spacing - 0.5).floor() as i64;
        let i1 = (b / spacing - 0.5).ceil() as i64;
        i0..=i1
    };
    let mut out = Vec::new();
    for i in range(lo.x, hi.x) {
        for j in range(lo.y, hi.y) {
            for k in range(lo.z, hi.z) {
                let x = Vec3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5) * spacing;
                if winding_number(surface, &x) > 0.5 && surface_distance(surface, &x) >= margin {
                    out.push(x);
                }
            }
        }
    }
    out
}

/// Points a fixed distance outside the surface along the outward normal
/// at a spread of triangles.
pub fn exterior_points(surface: &SurfaceMesh, offset: f64, count: usize) -> Vec<Vec3> {
    let n = surface.len();
    let step = (n / count.max(1)).max(1);
    (0..n)
        .step_by(step)
        .take(count)
        .map(|i| surface.centroids()[i] + surface.normals()[i] * offset)
        .collect()
}

/// Finds the tetrahedron containing a point, through a uniform bucket grid
/// over the tet bounding boxes.
pub struct PointLocator<'a> {
    mesh: &'a VolumeMesh,
    lo: Vec3,
    cell: f64,
    dims: [usize; 3],
    buckets: Vec<Vec<usize>>,
}

impl<'a> PointLocator<'a> {
    pub fn new(mesh: &'a VolumeMesh) -> Self {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for p in mesh.nodes() {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let n = mesh.tets().len() as f64;
        let span = hi - lo;
        let cell = (span.x * span.y * span.z / n).cbrt().max(1e-12) * 2.0;
        let dims = [0, 1, 2].map(|i| ((span[i] / cell).ceil() as usize).max(1));
        let mut buckets = vec![Vec::new(); dims[0] * dims[1] * dims[2]];
        let mut loc = PointLocator {
            mesh,
            lo,
            cell,
            dims,
            buckets: Vec::new(),
        };
        for k in 0..mesh.tets().len() {
            let v = mesh.corners(k);
            let (mut a, mut b) = (v[0], v[0]);
            for p in &v[1..] {
                a = a.inf(p);
                b = b.sup(p);
            }
            let (ia, ib) = (loc.index(&a), loc.index(&b));
            for i in ia[0]..=ib[0] {
                for j in ia[1]..=ib[1] {
                    for l in ia[2]..=ib[2] {
                        buckets[(i * dims[1] + j) * dims[2] + l].push(k);
                    }
                }
            }
        }
        loc.buckets = buckets;
        loc
    }

    fn index(&self, x: &Vec3) -> [usize; 3] {
        [0, 1, 2].map(|i| (((x[i] - self.lo[i]) / self.cell).floor().max(0.0) as usize).min(self.dims[i] - 1))
    }

    /// Containing tet and barycentric coordinates, if `x` is in the mesh.
    pub fn locate(&self, x: &Vec3) -> Option<(usize, [f64; 4])> {
        let [i, j, l] = self.index(x);
        let mut best: Option<(usize, [f64; 4], f64)> = None;
        for &k in &self.buckets[(i * self.dims[1] + j) * self.dims[2] + l] {
            let g = self.mesh.shape_gradients(k);
            let v0 = self.mesh.nodes()[self.mesh.tets()[k][0]];
            let mut lam = [0.0; 4];
            for a in 1..4 {
                lam[a] = g[a].dot(&(x - v0));
            }
            lam[0] = 1.0 - lam[1] - lam[2] - lam[3];
            let worst = lam.iter().cloned().fold(f64::INFINITY, f64::min);
            if best.as_ref().is_none_or(|b| worst > b.2) {
                best = Some((k, lam, worst));
            }
        }
        best.filter(|b| b.2 >= -1e-9).map(|b| (b.0, b.1))
    }

    /// P1 interpolation of nodal values at `x`.
    pub fn interpolate<T>(&self, nodal: &[T], x: &Vec3) -> Option<T>
    where
        T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
    {
        let (k, lam) = self.locate(x)?;
        let t = self.mesh.tets()[k];
        Some(nodal[t[0]] * lam[0] + nodal[t[1]] * lam[1] + nodal[t[2]] * lam[2] + nodal[t[3]] * lam[3])
    }
}
