//! Monogenic Hilbert transform on a closed surface.
//!
//! `H[phi0] = K_vec (I + K0)^{-1} phi0 = K_vec[h0] / 2` with the density
//! `h0 = 2 (I + K0)^{-1} phi0`; `phi0 + H[phi0]` is the interior boundary
//! value of `F[h0]`.

use nalgebra::{DMatrix, DVector};

use crate::boundary_ops::{project_mean_zero, K0Solvers, PointPotentials, Quadrature, SingularCauchy};
use crate::dense::{min_singular_value_orthogonal_to, DenseLu};
use crate::error::{Error, Result};
use crate::mesh::SurfaceMesh;
use crate::probes::Targets;
use crate::quat::{Quaternion, Vec3};

pub struct HilbertContext<'a> {
    mesh: &'a SurfaceMesh,
    q: Quadrature,
    s: SingularCauchy,
    solvers: K0Solvers,
    /// `I + K0^*` in the area-weighted pairing.
    plus_adjoint: DenseLu,
}

impl<'a> HilbertContext<'a> {
    pub fn new(mesh: &'a SurfaceMesh) -> Result<Self> {
        Self::with_quadrature(mesh, Quadrature::default())
    }

    pub fn with_quadrature(mesh: &'a SurfaceMesh, q: Quadrature) -> Result<Self> {
        let s = SingularCauchy::assemble(mesh, &q);
        Self::from_operator(mesh, q, s)
    }

    /// Reuses an assembled operator; it must belong to `mesh`.
    pub fn from_operator(mesh: &'a SurfaceMesh, q: Quadrature, s: SingularCauchy) -> Result<Self> {
        if s.mesh_hash() != mesh.hash() {
            return Err(Error::Precondition("singular Cauchy operator assembled on another mesh".into()));
        }
        let solvers = K0Solvers::new(&s)?;
        let n = s.len();
        let plus_adjoint = DenseLu::new(DMatrix::identity(n, n) + s.k0_adjoint_matrix())?;
        Ok(HilbertContext {
            mesh,
            q,
            s,
            solvers,
            plus_adjoint,
        })
    }

    pub fn mesh(&self) -> &SurfaceMesh {
        self.mesh
    }

    pub fn quadrature(&self) -> &Quadrature {
        &self.q
    }

    pub fn singular(&self) -> &SingularCauchy {
        &self.s
    }

    pub fn solvers(&self) -> &K0Solvers {
        &self.solvers
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.s.len() {
            return Err(Error::Precondition(format!(
                "boundary field has {n} values, the mesh has {} panels",
                self.s.len()
            )));
        }
        Ok(())
    }

    /// `h0 = 2 (I + K0)^{-1} phi0`.
    pub fn density(&self, phi0: &[f64]) -> Result<Vec<f64>> {
        self.check_len(phi0.len())?;
        Ok(self.solvers.solve_plus(phi0)?.iter().map(|v| 2.0 * v).collect())
    }

    /// `H[phi0]`.
    pub fn hilbert(&self, phi0: &[f64]) -> Result<Vec<Vec3>> {
        let h0 = self.density(phi0)?;
        Ok(self.s.kvec_apply(&h0).iter().map(|v| v * 0.5).collect())
    }

    /// `F[h0]` at the given points, the monogenic function whose boundary
    /// value is `phi0 + H[phi0]`.
    pub fn monogenic_extension(&self, phi0: &[f64], targets: &Targets) -> Result<Vec<Quaternion>> {
        let pot = PointPotentials::assemble_anchored(self.mesh, &targets.points, &targets.anchors, &self.q);
        self.extend_with(&pot, phi0)
    }

    /// As [`Self::monogenic_extension`] with potentials assembled by the caller.
    pub fn extend_with(&self, pot: &PointPotentials, phi0: &[f64]) -> Result<Vec<Quaternion>> {
        let h0: Vec<Quaternion> = self.density(phi0)?.into_iter().map(Quaternion::scalar).collect();
        Ok(pot.cauchy(&h0))
    }

    /// `G[phi] = -(I - K0)^{-1} (I - A) K_vec . phi`, a left inverse of `H`
    /// on mean-zero data.
    pub fn left_inverse(&self, phi: &[Vec3]) -> Result<Vec<f64>> {
        self.check_len(phi.len())?;
        let k = self.s.kvec_dot(phi);
        let rhs = project_mean_zero(self.s.areas(), &k);
        Ok(self.solvers.solve_minus_mean_zero(&rhs)?.iter().map(|v| -v).collect())
    }

    /// `H^*[phi] = (I + K0^*)^{-1} K_vec^*[phi]` in the area-weighted pairing.
    pub fn adjoint(&self, phi: &[Vec3]) -> Result<Vec<f64>> {
        self.check_len(phi.len())?;
        self.plus_adjoint.solve(&self.s.kvec_adjoint_dot(phi))
    }

    /// Vector part of the interior boundary value of `F[phi0]`, i.e.
    /// `K_vec[phi0] / 2`. This is not `H[phi0]`; it is kept to show the
    /// difference.
    pub fn cauchy_vector_trace(&self, phi0: &[f64]) -> Result<Vec<Vec3>> {
        self.check_len(phi0.len())?;
        Ok(self.s.kvec_apply(phi0).iter().map(|v| v * 0.5).collect())
    }

    /// Smallest singular value of `H` away from constants, in area-weighted
    /// coordinates. Positive iff the discrete kernel is the constants.
    pub fn mean_zero_min_singular_value(&self) -> Result<f64> {
        let n = self.s.len();
        let inv = DMatrix::from_columns(
            &(0..n)
                .map(|j| {
                    let mut e = vec![0.0; n];
                    e[j] = 1.0;
                    self.solvers.solve_plus(&e).map(DVector::from_vec)
                })
                .collect::<Result<Vec<_>>>()?,
        );
        let sw: Vec<f64> = self.s.areas().iter().map(|a| a.sqrt()).collect();
        let mut m = DMatrix::zeros(3 * n, n);
        for a in 0..3 {
            let block = self.s.k_matrix(a) * &inv;
            for i in 0..n {
                for j in 0..n {
                    m[(a * n + i, j)] = sw[i] * block[(i, j)] / sw[j];
                }
            }
        }
        let e = DVector::from_vec(sw);
        Ok(min_singular_value_orthogonal_to(&m, &e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::weighted_dot;
    use crate::mesh::unit_sphere;

    fn pair_vec(areas: &[f64], a: &[Vec3], b: &[Vec3]) -> f64 {
        a.iter().zip(b).zip(areas).map(|((x, y), w)| w * x.dot(y)).sum()
    }

    #[test]
    fn constants_have_zero_transform() {
        let m = unit_sphere(2);
        let ctx = HilbertContext::new(&m).unwrap();
        let h = ctx.hilbert(&vec![3.0; m.len()]).unwrap();
        let worst = h.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(worst < 1e-4, "{worst}");
    }

    #[test]
    fn adjoint_pairing_is_exact() {
        let m = unit_sphere(1);
        let ctx = HilbertContext::new(&m).unwrap();
        let phi0: Vec<f64> = m.centroids().iter().map(|c| (3.0 * c.x).sin() + c.y * c.z).collect();
        let phi: Vec<Vec3> = m.centroids().iter().map(|c| Vec3::new(c.z, c.x * c.x, -c.y)).collect();
        let lhs = pair_vec(m.areas(), &ctx.hilbert(&phi0).unwrap(), &phi);
        let rhs = weighted_dot(m.areas(), &phi0, &ctx.adjoint(&phi).unwrap());
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0), "{lhs} {rhs}");
        let zero = ctx.adjoint(&vec![Vec3::zeros(); m.len()]).unwrap();
        assert!(zero.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn left_inverse_of_zero_is_zero() {
        let m = unit_sphere(1);
        let ctx = HilbertContext::new(&m).unwrap();
        let g = ctx.left_inverse(&vec![Vec3::zeros(); m.len()]).unwrap();
        assert!(g.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn wrong_length_rejected() {
        let m = unit_sphere(0);
        let ctx = HilbertContext::new(&m).unwrap();
        assert!(matches!(ctx.hilbert(&[1.0; 3]), Err(Error::Precondition(_))));
    }

    #[test]
    fn kernel_is_constants_only() {
        let m = unit_sphere(1);
        let ctx = HilbertContext::new(&m).unwrap();
        assert!(ctx.mean_zero_min_singular_value().unwrap() > 1e-3);
    }
}
