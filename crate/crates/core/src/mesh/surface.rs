use std::collections::{HashMap, VecDeque};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::quat::Vec3;

/// Closed, consistently oriented triangulated surface with outward normals.
#[derive(Clone, Debug)]
pub struct SurfaceMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    normals: Vec<Vec3>,
    areas: Vec<f64>,
    centroids: Vec<Vec3>,
    diameters: Vec<f64>,
    total_area: f64,
    extent: f64,
}

impl SurfaceMesh {
    /// Validates and builds a surface. A surface whose triangles are all
    /// inward-oriented is flipped; mixed orientation is rejected.
    pub fn new(vertices: Vec<Vec3>, mut triangles: Vec<[usize; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::validation("surface", "no triangles"));
        }
        for (i, t) in triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::validation(format!("triangle {i}"), "vertex index out of range"));
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(Error::validation(format!("triangle {i}"), "repeated vertex"));
            }
        }
        let orient = orientation_classes(&triangles)?;
        let flipped: Vec<usize> = (0..triangles.len()).filter(|&i| orient[i] < 0).collect();
        if !flipped.is_empty() {
            // Report the minority class; ties name the first flipped triangle.
            let minority = if 2 * flipped.len() <= triangles.len() {
                flipped[0]
            } else {
                (0..triangles.len()).find(|&i| orient[i] > 0).unwrap()
            };
            return Err(Error::validation(
                format!("triangle {minority}"),
                "orientation inconsistent with its neighbours",
            ));
        }

        let mut mesh = Self::build(vertices, triangles.clone());
        if mesh.signed_volume() < 0.0 {
            for t in triangles.iter_mut() {
                t.swap(1, 2);
            }
            mesh = Self::build(mesh.vertices, triangles);
        }
        if let Some(i) = mesh.areas.iter().position(|&a| !(a > 0.0)) {
            return Err(Error::validation(format!("triangle {i}"), "zero area"));
        }
        Ok(mesh)
    }

    fn build(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Self {
        let n = triangles.len();
        let mut normals = Vec::with_capacity(n);
        let mut areas = Vec::with_capacity(n);
        let mut centroids = Vec::with_capacity(n);
        let mut diameters = Vec::with_capacity(n);
        for t in &triangles {
            let [a, b, c] = t.map(|i| vertices[i]);
            let cr = (b - a).cross(&(c - a));
            let area = 0.5 * cr.norm();
            normals.push(if area > 0.0 { cr / (2.0 * area) } else { Vec3::zeros() });
            areas.push(area);
            centroids.push((a + b + c) / 3.0);
            diameters.push((b - a).norm().max((c - b).norm()).max((a - c).norm()));
        }
        let total_area = areas.iter().sum();
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for p in &vertices {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let extent = if vertices.is_empty() { 0.0 } else { (hi - lo).norm() };
        SurfaceMesh {
            vertices,
            triangles,
            normals,
            areas,
            centroids,
            diameters,
            total_area,
            extent,
        }
    }

    /// Number of triangles (collocation nodes).
    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn normals(&self) -> &[Vec3] {
        &self.normals
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    /// Triangle barycenters, the collocation nodes.
    pub fn centroids(&self) -> &[Vec3] {
        &self.centroids
    }

    pub fn diameters(&self) -> &[f64] {
        &self.diameters
    }

    pub fn total_area(&self) -> f64 {
        self.total_area
    }

    /// Bounding-box diagonal.
    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn max_diameter(&self) -> f64 {
        self.diameters.iter().cloned().fold(0.0, f64::max)
    }

    pub fn corners(&self, i: usize) -> [Vec3; 3] {
        self.triangles[i].map(|v| self.vertices[v])
    }

    /// `(1/3) sum x.eta area`, the enclosed volume.
    pub fn signed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|i| self.vertices[i]);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    /// `sum area * eta`, zero for a closed surface.
    pub fn normal_integral(&self) -> Vec3 {
        self.normals
            .iter()
            .zip(&self.areas)
            .map(|(n, a)| n * *a)
            .sum()
    }

    pub fn euler_characteristic(&self) -> i64 {
        let mut used = vec![false; self.vertices.len()];
        for t in &self.triangles {
            for &v in t {
                used[v] = true;
            }
        }
        let v = used.iter().filter(|&&u| u).count() as i64;
        let f = self.triangles.len() as i64;
        // Closed surface: every edge is shared by two triangles.
        let e = 3 * f / 2;
        v - e + f
    }

    /// Number of edge-connected components.
    pub fn components(&self) -> usize {
        let adj = triangle_adjacency(&self.triangles);
        let mut seen = vec![false; self.triangles.len()];
        let mut count = 0;
        for s in 0..self.triangles.len() {
            if seen[s] {
                continue;
            }
            count += 1;
            let mut queue = VecDeque::from([s]);
            seen[s] = true;
            while let Some(t) = queue.pop_front() {
                for &(u, _) in &adj[t] {
                    if !seen[u] {
                        seen[u] = true;
                        queue.push_back(u);
                    }
                }
            }
        }
        count
    }

    /// Content hash of the geometry, used to tie operators to their mesh.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for v in &self.vertices {
            for c in v.iter() {
                h.update(c.to_le_bytes());
            }
        }
        for t in &self.triangles {
            for &i in t {
                h.update((i as u64).to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Panel values from vertex values: the mean over the three corners.
    pub fn vertex_to_panel(&self, vals: &[f64]) -> Vec<f64> {
        assert_eq!(vals.len(), self.vertices.len());
        self.triangles
            .iter()
            .map(|t| (vals[t[0]] + vals[t[1]] + vals[t[2]]) / 3.0)
            .collect()
    }

    /// Vertex values from panel values, averaging the incident panels by
    /// area.
    pub fn panel_to_vertex(&self, vals: &[f64]) -> Vec<f64> {
        assert_eq!(vals.len(), self.triangles.len());
        let mut acc = vec![0.0; self.vertices.len()];
        let mut wsum = vec![0.0; self.vertices.len()];
        for ((t, a), v) in self.triangles.iter().zip(&self.areas).zip(vals) {
            for &i in t {
                acc[i] += a * v;
                wsum[i] += a;
            }
        }
        acc.iter().zip(&wsum).map(|(a, w)| a / w).collect()
    }
}

/// For every triangle, its neighbours across each edge and whether the
/// shared edge is traversed in the same direction by both (inconsistent).
fn triangle_adjacency(triangles: &[[usize; 3]]) -> Vec<Vec<(usize, bool)>> {
    let mut edges: HashMap<(usize, usize), Vec<(usize, bool)>> = HashMap::new();
    for (i, t) in triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            edges.entry((a.min(b), a.max(b))).or_default().push((i, a < b));
        }
    }
    let mut adj = vec![Vec::new(); triangles.len()];
    for users in edges.values() {
        if users.len() == 2 {
            let (s, ds) = users[0];
            let (t, dt) = users[1];
            adj[s].push((t, ds == dt));
            adj[t].push((s, ds == dt));
        }
    }
    for a in adj.iter_mut() {
        a.sort_unstable();
    }
    adj
}

/// Checks that every edge has exactly two users and assigns each triangle
/// +1/-1 relative to the first triangle of its component.
fn orientation_classes(triangles: &[[usize; 3]]) -> Result<Vec<i8>> {
    let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
    for t in triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            *edges.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    let mut bad: Vec<_> = edges.iter().filter(|(_, &c)| c != 2).collect();
    bad.sort();
    if let Some((&(a, b), &c)) = bad.first() {
        let kind = if c == 1 { "open boundary edge" } else { "non-manifold edge" };
        return Err(Error::validation(format!("edge ({a}, {b})"), kind));
    }
    let adj = triangle_adjacency(triangles);
    let mut orient = vec![0i8; triangles.len()];
    for s in 0..triangles.len() {
        if orient[s] != 0 {
            continue;
        }
        orient[s] = 1;
        let mut queue = VecDeque::from([s]);
        while let Some(t) = queue.pop_front() {
            for &(u, same_dir) in &adj[t] {
                let want = if same_dir { -orient[t] } else { orient[t] };
                if orient[u] == 0 {
                    orient[u] = want;
                    queue.push_back(u);
                } else if orient[u] != want {
                    return Err(Error::validation(format!("triangle {u}"), "non-orientable surface"));
                }
            }
        }
    }
    Ok(orient)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tetra() -> (Vec<Vec3>, Vec<[usize; 3]>) {
        let v = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ];
        let t = vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]];
        (v, t)
    }

    #[test]
    fn tetra_surface_properties() {
        let (v, t) = tetra();
        let m = SurfaceMesh::new(v, t).unwrap();
        assert!((m.signed_volume() - 1.0 / 6.0).abs() < 1e-15);
        assert!(m.normal_integral().norm() < 1e-15);
        assert_eq!(m.euler_characteristic(), 2);
        assert_eq!(m.components(), 1);
        for n in m.normals() {
            assert!((n.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn uniformly_inward_surface_is_flipped() {
        let (v, mut t) = tetra();
        for tri in t.iter_mut() {
            tri.swap(0, 1);
        }
        let m = SurfaceMesh::new(v, t).unwrap();
        assert!(m.signed_volume() > 0.0);
    }

    #[test]
    fn single_reversed_triangle_is_named() {
        let (v, mut t) = tetra();
        t[2].swap(0, 1);
        let err = SurfaceMesh::new(v, t).unwrap_err().to_string();
        assert!(err.contains("triangle 2"), "{err}");
    }

    #[test]
    fn open_surface_rejected() {
        let (v, mut t) = tetra();
        t.pop();
        let err = SurfaceMesh::new(v, t).unwrap_err().to_string();
        assert!(err.contains("open boundary edge"), "{err}");
    }

    #[test]
    fn transfers_keep_constants() {
        let (v, t) = tetra();
        let m = SurfaceMesh::new(v, t).unwrap();
        let p = m.vertex_to_panel(&[2.0; 4]);
        assert!(p.iter().all(|x| (x - 2.0).abs() < 1e-15));
        let back = m.panel_to_vertex(&p);
        assert!(back.iter().all(|x| (x - 2.0).abs() < 1e-15));
        let lin: Vec<f64> = m.vertices().iter().map(|x| x.x + 2.0 * x.z).collect();
        let pl = m.vertex_to_panel(&lin);
        for (c, val) in m.centroids().iter().zip(&pl) {
            assert!((c.x + 2.0 * c.z - val).abs() < 1e-15);
        }
    }
}
