use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::mesh::SurfaceMesh;
use crate::panel::tet_volume;
use crate::quat::Vec3;

/// Tetrahedral mesh of a bounded domain together with its boundary surface.
///
/// Boundary triangle `i` is a face of tet `boundary_tets()[i]`; boundary
/// vertex `j` is volume node `boundary_nodes()[j]`.
#[derive(Clone, Debug)]
pub struct VolumeMesh {
    nodes: Vec<Vec3>,
    tets: Vec<[usize; 4]>,
    volumes: Vec<f64>,
    centroids: Vec<Vec3>,
    diameters: Vec<f64>,
    boundary: SurfaceMesh,
    boundary_nodes: Vec<usize>,
    node_to_boundary: Vec<Option<usize>>,
    boundary_tets: Vec<usize>,
}

impl VolumeMesh {
    pub fn new(nodes: Vec<Vec3>, tets: Vec<[usize; 4]>) -> Result<Self> {
        if tets.is_empty() {
            return Err(Error::validation("volume", "no tetrahedra"));
        }
        let mut volumes = Vec::with_capacity(tets.len());
        let mut centroids = Vec::with_capacity(tets.len());
        let mut diameters = Vec::with_capacity(tets.len());
        for (i, t) in tets.iter().enumerate() {
            if t.iter().any(|&v| v >= nodes.len()) {
                return Err(Error::validation(format!("tet {i}"), "node index out of range"));
            }
            let v = t.map(|k| nodes[k]);
            let vol = tet_volume(&v);
            if !(vol > 0.0) {
                return Err(Error::validation(format!("tet {i}"), "inverted or degenerate tetrahedron"));
            }
            volumes.push(vol);
            centroids.push((v[0] + v[1] + v[2] + v[3]) / 4.0);
            let mut d: f64 = 0.0;
            for a in 0..4 {
                for b in a + 1..4 {
                    d = d.max((v[a] - v[b]).norm());
                }
            }
            diameters.push(d);
        }

        // Faces used once form the boundary; orientation from the owning tet.
        let mut faces: HashMap<[usize; 3], (usize, [usize; 3], usize)> = HashMap::new();
        for (i, t) in tets.iter().enumerate() {
            for f in local_faces(t) {
                let mut key = f;
                key.sort_unstable();
                let e = faces.entry(key).or_insert((i, f, 0));
                e.2 += 1;
            }
        }
        let mut bfaces: Vec<([usize; 3], usize)> = Vec::new();
        for (key, (owner, f, count)) in &faces {
            match count {
                1 => bfaces.push((*f, *owner)),
                2 => {}
                _ => {
                    return Err(Error::validation(
                        format!("face ({}, {}, {})", key[0], key[1], key[2]),
                        "shared by more than two tetrahedra",
                    ))
                }
            }
        }
        bfaces.sort_unstable_by_key(|(f, owner)| (*owner, *f));

        let mut node_to_boundary = vec![None; nodes.len()];
        let mut boundary_nodes = Vec::new();
        let mut tris = Vec::with_capacity(bfaces.len());
        let mut boundary_tets = Vec::with_capacity(bfaces.len());
        for (f, owner) in &bfaces {
            let tri = f.map(|v| {
                *node_to_boundary[v].get_or_insert_with(|| {
                    boundary_nodes.push(v);
                    boundary_nodes.len() - 1
                })
            });
            tris.push(tri);
            boundary_tets.push(*owner);
        }
        let bverts = boundary_nodes.iter().map(|&v| nodes[v]).collect();
        let boundary = SurfaceMesh::new(bverts, tris.clone())?;
        if boundary.triangles() != tris.as_slice() {
            return Err(Error::validation("boundary", "extracted faces are not outward oriented"));
        }

        let total: f64 = volumes.iter().sum();
        let enclosed = boundary.signed_volume();
        if (total - enclosed).abs() > 1e-8 * total {
            return Err(Error::validation(
                "volume",
                format!("tet volumes sum to {total} but the boundary encloses {enclosed}"),
            ));
        }

        Ok(VolumeMesh {
            nodes,
            tets,
            volumes,
            centroids,
            diameters,
            boundary,
            boundary_nodes,
            node_to_boundary,
            boundary_tets,
        })
    }

    pub fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn centroids(&self) -> &[Vec3] {
        &self.centroids
    }

    pub fn diameters(&self) -> &[f64] {
        &self.diameters
    }

    pub fn boundary(&self) -> &SurfaceMesh {
        &self.boundary
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    /// Boundary vertex index of a volume node, if it lies on the boundary.
    pub fn boundary_index(&self, node: usize) -> Option<usize> {
        self.node_to_boundary[node]
    }

    pub fn is_boundary_node(&self, node: usize) -> bool {
        self.node_to_boundary[node].is_some()
    }

    pub fn boundary_tets(&self) -> &[usize] {
        &self.boundary_tets
    }

    pub fn total_volume(&self) -> f64 {
        self.volumes.iter().sum()
    }

    pub fn max_diameter(&self) -> f64 {
        self.diameters.iter().cloned().fold(0.0, f64::max)
    }

    pub fn corners(&self, k: usize) -> [Vec3; 4] {
        self.tets[k].map(|v| self.nodes[v])
    }

    /// Constant gradients of the four barycentric coordinates of tet `k`.
    pub fn shape_gradients(&self, k: usize) -> [Vec3; 4] {
        let v = self.corners(k);
        let e1 = v[1] - v[0];
        let e2 = v[2] - v[0];
        let e3 = v[3] - v[0];
        let det = e1.dot(&e2.cross(&e3));
        let g1 = e2.cross(&e3) / det;
        let g2 = e3.cross(&e1) / det;
        let g3 = e1.cross(&e2) / det;
        [-(g1 + g2 + g3), g1, g2, g3]
    }

    /// Bounding-box diagonal, used to scale finite-difference steps.
    pub fn diameter(&self) -> f64 {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for p in &self.nodes {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (hi - lo).norm()
    }

    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        for v in &self.nodes {
            for c in v.iter() {
                h.update(c.to_le_bytes());
            }
        }
        for t in &self.tets {
            for &i in t {
                h.update((i as u64).to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Outward faces of a positively oriented tet, by node index.
pub(crate) fn local_faces(t: &[usize; 4]) -> [[usize; 3]; 4] {
    [
        [t[1], t[2], t[3]],
        [t[0], t[3], t[2]],
        [t[0], t[1], t[3]],
        [t[0], t[2], t[1]],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_tet_nodes() -> Vec<Vec3> {
        vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ]
    }

    #[test]
    fn single_tet() {
        let m = VolumeMesh::new(unit_tet_nodes(), vec![[0, 1, 2, 3]]).unwrap();
        assert_eq!(m.boundary().len(), 4);
        assert!((m.total_volume() - 1.0 / 6.0).abs() < 1e-15);
        let g = m.shape_gradients(0);
        assert_eq!(g[1], Vec3::x());
        assert_eq!(g[0], Vec3::new(-1.0, -1.0, -1.0));
        for (i, &owner) in m.boundary_tets().iter().enumerate() {
            assert_eq!(owner, 0, "{i}");
        }
    }

    #[test]
    fn inverted_tet_named() {
        let err = VolumeMesh::new(unit_tet_nodes(), vec![[0, 2, 1, 3]])
            .unwrap_err()
            .to_string();
        assert!(err.contains("tet 0"), "{err}");
    }
}
