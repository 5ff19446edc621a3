//! P1 finite elements for the Dirichlet problems of the Laplace and
//! conductivity equations.
//!
//! The conductivity problem `div(f^2 grad u) = 0`, `tr u = phi0` is solved
//! in the substituted variable `u = W0 / f`, so the boundary condition on
//! `W0 / f` holds exactly at the nodes. Boundary data and fluxes live at
//! boundary vertices (in the order of the boundary surface).

use std::collections::BTreeMap;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::mesh::VolumeMesh;
use crate::quat::Vec3;

/// Scalar field `f > 0` at the volume nodes; `f^2` is the conductivity.
#[derive(Clone, Debug, PartialEq)]
pub struct Conductivity {
    values: Vec<f64>,
    rho: f64,
}

impl Conductivity {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Precondition(format!(
                "conductivity factor f must be positive and finite, node {i} has {}",
                values[i]
            )));
        }
        let rho = values.iter().fold(0.0f64, |m, v| m.max(*v).max(1.0 / v));
        Ok(Conductivity { values, rho })
    }

    pub fn constant(mesh: &VolumeMesh, c: f64) -> Result<Self> {
        Self::new(vec![c; mesh.nodes().len()])
    }

    pub fn from_fn<F: Fn(&Vec3) -> f64>(mesh: &VolumeMesh, f: F) -> Result<Self> {
        Self::new(mesh.nodes().iter().map(f).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `max(max f, max 1/f)` over the nodes.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Mean of `f^2` over tet `k` for the P1 interpolant of `f`.
    pub fn squared_mean(&self, mesh: &VolumeMesh, k: usize) -> f64 {
        let t = mesh.tets()[k];
        let f = t.map(|i| self.values[i]);
        let sq: f64 = f.iter().map(|v| v * v).sum();
        let mut cross = 0.0;
        for a in 0..4 {
            for b in a + 1..4 {
                cross += f[a] * f[b];
            }
        }
        (sq + cross) / 10.0
    }
}

/// Row-wise sparse matrix with sorted, summed entries.
#[derive(Clone, Debug)]
pub struct SparseRows {
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseRows {
    fn from_entries(n: usize, entries: BTreeMap<(usize, usize), f64>) -> Self {
        let mut rows = vec![Vec::new(); n];
        for ((i, j), v) in entries {
            rows[i].push((j, v));
        }
        SparseRows { rows }
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|(j, v)| v * x[*j]).sum())
            .collect()
    }
}

struct Cholesky {
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
    n: usize,
}

impl Cholesky {
    fn new(n: usize, entries: &BTreeMap<(usize, usize), f64>) -> Result<Self> {
        let trips: Vec<Triplet<usize, usize, f64>> =
            entries.iter().map(|(&(i, j), &v)| Triplet::new(i, j, v)).collect();
        let m = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trips)
            .map_err(|e| Error::Numerical(format!("sparse assembly failed: {e:?}")))?;
        let llt = m
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::Numerical(format!("stiffness matrix is not positive definite: {e:?}")))?;
        Ok(Cholesky { llt, n })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let rhs = Mat::from_fn(self.n, 1, |i, _| b[i]);
        let x = self.llt.solve(rhs.as_ref());
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }
}

/// Solution of a conductivity Dirichlet problem.
#[derive(Clone, Debug)]
pub struct ConductivitySolution {
    /// `u = W0 / f` at the nodes.
    pub u: Vec<f64>,
    /// `W0 = f u` at the nodes.
    pub w0: Vec<f64>,
    /// `||u||_{H1} / ||phi0||_{L2(boundary)}`, an empirical bound constant.
    pub bound_ratio: f64,
}

/// Factored P1 Dirichlet problem for `div(f^2 grad u) = 0`.
pub struct EllipticSolver<'a> {
    mesh: &'a VolumeMesh,
    f: Option<Conductivity>,
    stiffness: SparseRows,
    mass: SparseRows,
    interior: Vec<usize>,
    slot: Vec<Option<usize>>,
    interior_llt: Cholesky,
    boundary_mass: SparseRows,
    boundary_llt: Cholesky,
}

impl<'a> EllipticSolver<'a> {
    pub fn laplace(mesh: &'a VolumeMesh) -> Result<Self> {
        Self::build(mesh, None)
    }

    pub fn conductivity(mesh: &'a VolumeMesh, f: &Conductivity) -> Result<Self> {
        if f.values().len() != mesh.nodes().len() {
            return Err(Error::Precondition("conductivity does not match the mesh".into()));
        }
        Self::build(mesh, Some(f.clone()))
    }

    fn build(mesh: &'a VolumeMesh, f: Option<Conductivity>) -> Result<Self> {
        let n = mesh.nodes().len();
        let mut k_ent = BTreeMap::new();
        let mut m_ent = BTreeMap::new();
        for (k, t) in mesh.tets().iter().enumerate() {
            let g = mesh.shape_gradients(k);
            let vol = mesh.volumes()[k];
            let c = f.as_ref().map_or(1.0, |f| f.squared_mean(mesh, k));
            for a in 0..4 {
                for b in 0..4 {
                    *k_ent.entry((t[a], t[b])).or_insert(0.0) += c * vol * g[a].dot(&g[b]);
                    let m = if a == b { vol / 10.0 } else { vol / 20.0 };
                    *m_ent.entry((t[a], t[b])).or_insert(0.0) += m;
                }
            }
        }
        let mut slot = vec![None; n];
        let mut interior = Vec::new();
        for i in 0..n {
            if !mesh.is_boundary_node(i) {
                slot[i] = Some(interior.len());
                interior.push(i);
            }
        }
        let ii: BTreeMap<(usize, usize), f64> = k_ent
            .iter()
            .filter_map(|(&(i, j), &v)| Some(((slot[i]?, slot[j]?), v)))
            .collect();
        let interior_llt = Cholesky::new(interior.len(), &ii)?;

        let surf = mesh.boundary();
        let nb = surf.vertices().len();
        let mut b_ent = BTreeMap::new();
        for (i, t) in surf.triangles().iter().enumerate() {
            let a = surf.areas()[i];
            for p in 0..3 {
                for q in 0..3 {
                    let m = if p == q { a / 6.0 } else { a / 12.0 };
                    *b_ent.entry((t[p], t[q])).or_insert(0.0) += m;
                }
            }
        }
        let boundary_llt = Cholesky::new(nb, &b_ent)?;
        Ok(EllipticSolver {
            mesh,
            f,
            stiffness: SparseRows::from_entries(n, k_ent),
            mass: SparseRows::from_entries(n, m_ent),
            interior,
            slot,
            interior_llt,
            boundary_mass: SparseRows::from_entries(nb, b_ent),
            boundary_llt,
        })
    }

    pub fn mesh(&self) -> &VolumeMesh {
        self.mesh
    }

    pub fn conductivity_factor(&self) -> Option<&Conductivity> {
        self.f.as_ref()
    }

    pub fn stiffness(&self) -> &SparseRows {
        &self.stiffness
    }

    /// Consistent boundary mass matrix over boundary vertices.
    pub fn boundary_mass(&self) -> &SparseRows {
        &self.boundary_mass
    }

    /// Solves with `tr u = phi0` given at the boundary vertices.
    pub fn solve_u(&self, phi0: &[f64]) -> Result<Vec<f64>> {
        let bn = self.mesh.boundary_nodes();
        if phi0.len() != bn.len() {
            return Err(Error::Precondition(format!(
                "boundary data has {} values, the mesh has {} boundary vertices",
                phi0.len(),
                bn.len()
            )));
        }
        let mut u = vec![0.0; self.mesh.nodes().len()];
        for (b, &node) in bn.iter().enumerate() {
            u[node] = phi0[b];
        }
        let mut rhs = vec![0.0; self.interior.len()];
        for (s, &i) in self.interior.iter().enumerate() {
            for &(j, v) in self.stiffness.row(i) {
                if self.slot[j].is_none() {
                    rhs[s] -= v * u[j];
                }
            }
        }
        let x = self.interior_llt.solve(&rhs);
        for (s, &i) in self.interior.iter().enumerate() {
            u[i] = x[s];
        }
        let res = self.interior_residual(&u);
        let scale = rhs.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        if !(res <= 1e-10 * scale.max(1.0)) {
            return Err(Error::Numerical(format!("FEM residual {res:.3e} after the interior solve")));
        }
        Ok(u)
    }

    pub fn solve(&self, phi0: &[f64]) -> Result<ConductivitySolution> {
        let u = self.solve_u(phi0)?;
        let w0 = match &self.f {
            Some(f) => u.iter().zip(f.values()).map(|(u, f)| u * f).collect(),
            None => u.clone(),
        };
        let bound_ratio = self.h1_norm(&u) / self.boundary_l2(phi0).max(f64::MIN_POSITIVE);
        Ok(ConductivitySolution { u, w0, bound_ratio })
    }

    /// Largest interior row of `K u`; zero for an exact discrete solution.
    pub fn interior_residual(&self, u: &[f64]) -> f64 {
        self.interior
            .iter()
            .map(|&i| self.stiffness.row(i).iter().map(|(j, v)| v * u[*j]).sum::<f64>().abs())
            .fold(0.0, f64::max)
    }

    /// `-int f^2 grad u . grad v` for P1 `u`, `v`.
    pub fn energy_pairing(&self, u: &[f64], v: &[f64]) -> f64 {
        -self.stiffness.apply(u).iter().zip(v).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Weak flux rows `<Lambda0, tr v_b>` for the hat function of each
    /// boundary vertex `b`.
    pub fn weak_flux(&self, u: &[f64]) -> Vec<f64> {
        self.mesh
            .boundary_nodes()
            .iter()
            .map(|&node| -self.stiffness.row(node).iter().map(|(j, v)| v * u[*j]).sum::<f64>())
            .collect()
    }

    /// Scalar flux `-f^2 grad u . eta` as a P1 boundary function, recovered
    /// from the weak rows with the boundary mass matrix.
    pub fn flux(&self, u: &[f64]) -> Vec<f64> {
        self.boundary_llt.solve(&self.weak_flux(u))
    }

    pub fn h1_norm(&self, u: &[f64]) -> f64 {
        let mu: f64 = self.mass.apply(u).iter().zip(u).map(|(a, b)| a * b).sum();
        let ku: f64 = -self.energy_pairing(u, u);
        (mu + ku).max(0.0).sqrt()
    }

    /// `L2` norm of a P1 boundary function.
    pub fn boundary_l2(&self, phi: &[f64]) -> f64 {
        let m: f64 = self.boundary_mass.apply(phi).iter().zip(phi).map(|(a, b)| a * b).sum();
        m.max(0.0).sqrt()
    }
}

pub fn solve_laplace_dirichlet(mesh: &VolumeMesh, phi0: &[f64]) -> Result<Vec<f64>> {
    EllipticSolver::laplace(mesh)?.solve_u(phi0)
}

pub fn solve_conductivity(mesh: &VolumeMesh, f: &Conductivity, phi0: &[f64]) -> Result<ConductivitySolution> {
    EllipticSolver::conductivity(mesh, f)?.solve(phi0)
}
