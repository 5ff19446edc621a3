//! Invariant suites over a refinement schedule.
//!
//! Every suite measures the invariants of one module on each mesh of the
//! schedule and records the value against a cap. Quantities that should
//! shrink under refinement also get a decay record whose value is the
//! largest ratio of consecutive measurements; it passes when strictly
//! below 1. With a single mesh in the schedule the decay is reported as a
//! warning instead.

use std::collections::BTreeMap;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boundary_ops::{project_mean_zero, PointPotentials, Quadrature, SingularCauchy};
use crate::catalog::{ConductivitySpec, DivCurlSource, Harmonic};
use crate::dense::weighted_norm;
use crate::divcurl::{probe_residuals as divcurl_residuals, si_corrected_error, DivCurlProblem, DivCurlSolver, SAMPLED_TOLERANCE};
use crate::dn::{self, dn_conductivity, dn_monogenic};
use crate::elliptic::{Conductivity, EllipticSolver};
use crate::error::{Error, Result};
use crate::hilbert::HilbertContext;
use crate::mesh::{solid_torus, unit_ball, unit_sphere, SurfaceMesh, VolumeMesh};
use crate::oracle::RadialProfile;
use crate::probes::{exterior_points, interior_lattice, Stencil, StencilOrder, Targets};
use crate::quat::{Quaternion, Vec3};
use crate::vekua::{self, boundary_norm, VekuaContext};
use crate::volume_ops::{first_stencil, numeric_d_tets, sample_nodes, tet_gradients, VolumeContext};

pub const SUITES: [&str; 9] = [
    "quat", "mesh", "boundary_ops", "volume_ops", "elliptic", "hilbert", "vekua", "dn", "divcurl",
];

/// Meshes of a verification run, coarse to fine.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Schedule {
    /// Icosphere subdivision levels.
    pub levels: Vec<u32>,
    /// Target edge lengths of the unit-ball meshes.
    pub ball_h: Vec<f64>,
    /// Target edge lengths of the solid-torus meshes.
    pub torus_h: Vec<f64>,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule {
            levels: vec![2, 3],
            ball_h: vec![0.5, 0.3],
            torus_h: vec![0.5, 0.3, 0.2],
        }
    }
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        let cfg = |field: &str, msg: String| Error::Config {
            field: format!("schedule.{field}"),
            msg,
        };
        if self.levels.is_empty() || self.ball_h.is_empty() || self.torus_h.is_empty() {
            return Err(cfg("levels", "every refinement list needs at least one entry".into()));
        }
        if self.levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(cfg("levels", format!("must be strictly increasing, got {:?}", self.levels)));
        }
        if *self.levels.last().unwrap() > 5 {
            return Err(cfg("levels", "levels above 5 exceed the dense-operator budget".into()));
        }
        for (name, hs) in [("ball_h", &self.ball_h), ("torus_h", &self.torus_h)] {
            if hs.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
                return Err(cfg(name, format!("edge lengths must be positive, got {hs:?}")));
            }
            if hs.windows(2).any(|w| w[1] >= w[0]) {
                return Err(cfg(name, format!("must be strictly decreasing (refining), got {hs:?}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub suite: String,
    pub invariant: String,
    pub value: f64,
    pub cap: f64,
    pub pass: bool,
    pub mesh: String,
    pub seed: u64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Report {
    pub seed: u64,
    pub schedule: Option<Schedule>,
    pub records: Vec<Record>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Record> {
        self.records.iter().filter(|r| !r.pass)
    }
}

struct Recorder {
    seed: u64,
    caps: BTreeMap<String, f64>,
    report: Report,
}

impl Recorder {
    fn cap(&self, suite: &str, invariant: &str, default: f64) -> f64 {
        *self.caps.get(&format!("{suite}/{invariant}")).unwrap_or(&default)
    }

    fn push(&mut self, suite: &str, invariant: &str, mesh: &str, value: f64, cap: f64) {
        let cap = self.cap(suite, invariant, cap);
        self.report.records.push(Record {
            suite: suite.into(),
            invariant: invariant.into(),
            value,
            cap,
            pass: value.is_finite() && value <= cap,
            mesh: mesh.into(),
            seed: self.seed,
        });
    }

    /// Records strict decrease of `values` (coarse to fine).
    fn decay(&mut self, suite: &str, invariant: &str, values: &[(String, f64)]) {
        if values.len() < 2 {
            self.report
                .warnings
                .push(format!("decay unassessed: {suite}/{invariant} needs two meshes"));
            return;
        }
        let worst = values
            .windows(2)
            .map(|w| w[1].1 / w[0].1)
            .fold(0.0, |a: f64, b| if b.is_nan() { f64::NAN } else { a.max(b) });
        let mesh = format!("{}..{}", values[0].0, values[values.len() - 1].0);
        let cap = self.cap(suite, &format!("{invariant} decay"), 1.0);
        self.report.records.push(Record {
            suite: suite.into(),
            invariant: format!("{invariant} decay"),
            value: worst,
            cap,
            pass: worst.is_finite() && worst < cap,
            mesh,
            seed: self.seed,
        });
    }
}

/// Runs the named suites (all when `suites` is empty). `caps` overrides
/// default caps by `"suite/invariant"`.
pub fn run(schedule: &Schedule, seed: u64, caps: &BTreeMap<String, f64>, suites: &[String]) -> Result<Report> {
    schedule.validate()?;
    for s in suites {
        if !SUITES.contains(&s.as_str()) {
            return Err(Error::Config {
                field: "suites".into(),
                msg: format!("unknown suite {s:?}, expected one of {SUITES:?}"),
            });
        }
    }
    for (k, v) in caps {
        if !(v.is_finite() && *v > 0.0) {
            return Err(Error::Config {
                field: format!("tolerances.{k}"),
                msg: format!("tolerance overrides must be positive, got {v}"),
            });
        }
    }
    let mut rec = Recorder {
        seed,
        caps: caps.clone(),
        report: Report {
            seed,
            schedule: Some(schedule.clone()),
            ..Report::default()
        },
    };
    let want = |s: &str| suites.is_empty() || suites.iter().any(|x| x == s);
    let spheres: Vec<(String, SurfaceMesh)> = schedule
        .levels
        .iter()
        .map(|&l| (format!("icosphere-L{l}"), unit_sphere(l)))
        .collect();
    let balls: Vec<(String, VolumeMesh)> = schedule
        .ball_h
        .iter()
        .map(|&h| Ok((format!("ball-h{h}"), unit_ball(h)?)))
        .collect::<Result<_>>()?;
    if want("quat") {
        quat_suite(&mut rec);
    }
    if want("mesh") {
        mesh_suite(&mut rec, &spheres, &balls);
    }
    if want("boundary_ops") {
        boundary_suite(&mut rec, &spheres, &balls)?;
    }
    if want("volume_ops") {
        volume_suite(&mut rec, &balls)?;
    }
    if want("elliptic") {
        elliptic_suite(&mut rec, &balls)?;
    }
    if want("hilbert") {
        hilbert_suite(&mut rec, &spheres, &balls)?;
    }
    if want("vekua") {
        vekua_suite(&mut rec, &balls)?;
    }
    if want("dn") {
        dn_suite(&mut rec, &balls)?;
    }
    if want("divcurl") {
        divcurl_suite(&mut rec, &balls, &schedule.torus_h)?;
    }
    Ok(rec.report)
}

/// Smooth scalar test function with random quadratic and oscillatory
/// parts.
pub fn smooth_function(rng: &mut ChaCha8Rng) -> impl Fn(&Vec3) -> f64 {
    let c: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
    let k = Vec3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
    move |x: &Vec3| {
        c[0] + c[1] * x.x + c[2] * x.y + c[3] * x.z + c[4] * x.x * x.y + c[5] * x.x * x.z + c[6] * x.y * x.z
            + c[7] * x.x * x.x
            + c[8] * (x.y * x.y - x.z * x.z)
            + c[9] * k.dot(x).sin()
    }
}

fn rms<T: Copy, F: Fn(T) -> f64>(vals: &[T], f: F) -> f64 {
    (vals.iter().map(|v| f(*v)).sum::<f64>() / vals.len().max(1) as f64).sqrt()
}

fn rel_quat(areas: &[f64], a: &[Quaternion], b: &[Quaternion]) -> f64 {
    let num: f64 = a.iter().zip(b).zip(areas).map(|((x, y), w)| w * (*x - *y).norm_squared()).sum();
    let den: f64 = b.iter().zip(areas).map(|(y, w)| w * y.norm_squared()).sum();
    (num / den.max(f64::MIN_POSITIVE)).sqrt()
}

fn quat_suite(rec: &mut Recorder) {
    let mut rng = ChaCha8Rng::seed_from_u64(rec.seed);
    let mut q = || Quaternion::new(
        rng.random_range(-2.0..2.0),
        rng.random_range(-2.0..2.0),
        rng.random_range(-2.0..2.0),
        rng.random_range(-2.0..2.0),
    );
    let (mut assoc, mut norm, mut pure) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..200 {
        let (a, b, c) = (q(), q(), q());
        let s = a.norm() * b.norm() * c.norm();
        assoc = assoc.max(((a * b) * c - a * (b * c)).norm() / s);
        norm = norm.max(((a * b).norm() - a.norm() * b.norm()).abs() / (a.norm() * b.norm()));
        let (p, r) = (a.vec(), b.vec());
        let m = Quaternion::vector(p) * Quaternion::vector(r);
        pure = pure.max((m.w0 + p.dot(&r)).abs().max((m.vec() - p.cross(&r)).norm()) / (p.norm() * r.norm()));
    }
    rec.push("quat", "associativity", "-", assoc, 1e-14);
    rec.push("quat", "norm multiplicativity", "-", norm, 1e-12);
    rec.push("quat", "pure vector product", "-", pure, 1e-14);
}

fn mesh_suite(rec: &mut Recorder, spheres: &[(String, SurfaceMesh)], balls: &[(String, VolumeMesh)]) {
    let mut area_err = Vec::new();
    for (name, m) in spheres {
        let s: Vec3 = m.normals().iter().zip(m.areas()).map(|(n, a)| n * *a).sum();
        rec.push("mesh", "closed normal sum", name, s.norm() / m.total_area(), 1e-10);
        area_err.push((name.clone(), (m.total_area() - 4.0 * std::f64::consts::PI).abs()));
    }
    rec.decay("mesh", "sphere area error", &area_err);
    for (name, m) in balls {
        let b = m.boundary();
        let flux: f64 = b.centroids().iter().zip(b.normals()).zip(b.areas()).map(|((x, n), a)| a * x.dot(n)).sum();
        let vol = m.total_volume();
        rec.push("mesh", "divergence theorem", name, (flux - 3.0 * vol).abs() / (3.0 * vol), 0.01);
    }
}

fn boundary_suite(rec: &mut Recorder, spheres: &[(String, SurfaceMesh)], balls: &[(String, VolumeMesh)]) -> Result<()> {
    let q = Quadrature::default();
    let (mut inv, mut comp, mut anti, mut dm) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (name, m) in spheres {
        let s = SingularCauchy::assemble(m, &q);
        let one = vec![1.0; m.len()];
        let k0 = s.k0_apply(&one).iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        let kv = s.kvec_apply(&one).iter().map(|v| v.norm()).fold(0.0, f64::max);
        rec.push("boundary_ops", "K0[1] = 1", name, k0, 0.02);
        rec.push("boundary_ops", "Kvec[1] = 0", name, kv, 0.02);
        let mut rng = ChaCha8Rng::seed_from_u64(rec.seed);
        let (mut worst_inv, mut worst_comp, mut worst_anti) = (0.0f64, 0.0f64, 0.0f64);
        for _ in 0..5 {
            let parts: Vec<_> = (0..4).map(|_| smooth_function(&mut rng)).collect();
            let phi: Vec<Quaternion> = m
                .centroids()
                .iter()
                .map(|x| Quaternion::new(parts[0](x), parts[1](x), parts[2](x), parts[3](x)))
                .collect();
            worst_inv = worst_inv.max(rel_quat(m.areas(), &s.apply(&s.apply(&phi)), &phi));
            let phi0: Vec<f64> = phi.iter().map(|p| p.w0).collect();
            let kk: Vec<Vec<f64>> = (0..3).map(|i| (s.k_matrix(i) * nalgebra::DVector::from_column_slice(&phi0)).as_slice().to_vec()).collect();
            let k0p = s.k0_apply(&phi0);
            let k0k0 = s.k0_apply(&k0p);
            let mut r = phi0.clone();
            for i in 0..m.len() {
                r[i] -= k0k0[i];
            }
            for ki in &kk {
                let kki = s.k_matrix(kk.iter().position(|x| std::ptr::eq(x, ki)).unwrap()) * nalgebra::DVector::from_column_slice(ki);
                for i in 0..m.len() {
                    r[i] += kki[i];
                }
            }
            let n0 = weighted_norm(m.areas(), &phi0);
            worst_comp = worst_comp.max(weighted_norm(m.areas(), &r) / n0);
            for i in 0..3 {
                let (j, k) = ((i + 1) % 3, (i + 2) % 3);
                let mat = |a: usize, v: &[f64]| (s.k_matrix(a) * nalgebra::DVector::from_column_slice(v)).as_slice().to_vec();
                let a = mat(i, &k0p);
                let b = s.k0_apply(&kk[i]);
                let c = mat(j, &kk[k]);
                let d = mat(k, &kk[j]);
                let res: Vec<f64> = (0..m.len()).map(|p| a[p] + b[p] + c[p] - d[p]).collect();
                worst_anti = worst_anti.max(weighted_norm(m.areas(), &res) / n0);
            }
        }
        rec.push("boundary_ops", "involution S^2 = I", name, worst_inv, 0.1);
        inv.push((name.clone(), worst_inv));
        rec.push("boundary_ops", "component identity I - K0^2 = -sum Ki^2", name, worst_comp, 0.1);
        comp.push((name.clone(), worst_comp));
        rec.push("boundary_ops", "anticommutation residual", name, worst_anti, 0.1);
        anti.push((name.clone(), worst_anti));

        let mut rng = ChaCha8Rng::seed_from_u64(rec.seed ^ 0x5eed);
        let g = smooth_function(&mut rng);
        let phi: Vec<f64> = m.centroids().iter().map(&g).collect();
        let pts = interior_lattice(m, 0.3, 0.25);
        let st = Stencil::new(pts, 1e-4, StencilOrder::First);
        let t = st.targets();
        let pot = PointPotentials::assemble_anchored(m, &t.points, &t.anchors, &q);
        let f = st.at_centers(&pot.cauchy(&phi.iter().map(|v| Quaternion::scalar(*v)).collect::<Vec<_>>()));
        let dens: Vec<Quaternion> = phi.iter().zip(m.normals()).map(|(p, n)| Quaternion::vector(n * *p)).collect();
        let dmv = st.dirac(&pot.single_layer(&dens));
        let e = rms(&(0..f.len()).collect::<Vec<_>>(), |i| (f[i] + dmv[i]).norm_squared()) / rms(&f, |v| v.norm_squared());
        rec.push("boundary_ops", "F = -D M[eta phi]", name, e, 0.1);
        dm.push((name.clone(), e));
    }
    rec.decay("boundary_ops", "involution S^2 = I", &inv);
    rec.decay("boundary_ops", "component identity I - K0^2 = -sum Ki^2", &comp);
    rec.decay("boundary_ops", "anticommutation residual", &anti);
    rec.decay("boundary_ops", "F = -D M[eta phi]", &dm);

    let mut ch = Vec::new();
    for (name, m) in balls {
        let e = characterization(m)?;
        rec.push("boundary_ops", "2 tr T1 grad = (I - K0) tr, 2 tr T3 grad = -Kvec tr", name, e, 0.1);
        ch.push((name.clone(), e));
    }
    rec.decay("boundary_ops", "2 tr T1 grad = (I - K0) tr, 2 tr T3 grad = -Kvec tr", &ch);
    Ok(())
}

/// Relative error of `2 tr T[grad w0] = (I - K0) tr w0 - Kvec tr w0` for
/// `w0 = x1 x2`.
fn characterization(m: &VolumeMesh) -> Result<f64> {
    let surf = m.boundary();
    let s = SingularCauchy::assemble(surf, &Quadrature::default());
    let tr: Vec<f64> = surf.centroids().iter().map(|x| Harmonic::X1X2.value(x)).collect();
    let grad: Vec<Quaternion> = m.centroids().iter().map(|x| Quaternion::vector(Harmonic::X1X2.gradient(x))).collect();
    let t = VolumeContext::new(m).teodorescu(&grad, &Targets::new(surf.centroids().to_vec()));
    let k0 = s.k0_apply(&tr);
    let kv = s.kvec_apply(&tr);
    let lhs: Vec<Quaternion> = (0..surf.len()).map(|i| Quaternion::from_parts(2.0 * t.t1[i], t.t3[i] * 2.0)).collect();
    let rhs: Vec<Quaternion> = (0..surf.len()).map(|i| Quaternion::from_parts(tr[i] - k0[i], -kv[i])).collect();
    Ok(rel_quat(surf.areas(), &lhs, &rhs))
}

fn volume_suite(rec: &mut Recorder, balls: &[(String, VolumeMesh)]) -> Result<()> {
    let cases: [(&str, fn(&Vec3) -> Quaternion); 4] = [
        ("1", |_| Quaternion::scalar(1.0)),
        ("x1", |x| Quaternion::scalar(x.x)),
        ("x1 - x2 e3", |x| Quaternion::new(x.x, 0.0, 0.0, -x.y)),
        ("x3 e2", |x| Quaternion::new(0.0, 0.0, x.z, 0.0)),
    ];
    let (mut bp_in, mut bp_out, mut tm) = (Vec::new(), Vec::new(), Vec::new());
    for (name, m) in balls {
        let surf = m.boundary();
        let vc = VolumeContext::new(m);
        let inner = interior_lattice(surf, 0.25, 0.2);
        let outer = exterior_points(surf, 0.5, 40);
        let q = Quadrature::default();
        let pin = PointPotentials::assemble(surf, &inner, &q);
        let pout = PointPotentials::assemble(surf, &outer, &q);
        let (mut wi, mut wo) = (0.0f64, 0.0f64);
        for (_, w) in cases {
            let dw = numeric_d_tets(m, &sample_nodes(m, w));
            let tr: Vec<Quaternion> = surf.centroids().iter().map(w).collect();
            let ti = vc.teodorescu(&dw, &Targets::new(inner.clone())).total();
            let fi = pin.cauchy(&tr);
            let sup = inner.iter().map(|x| w(x).norm()).fold(0.0, f64::max);
            let r = (0..inner.len()).map(|i| (ti[i] + fi[i] - w(&inner[i])).norm()).fold(0.0, f64::max);
            wi = wi.max(r / sup);
            let to = vc.teodorescu(&dw, &Targets::new(outer.clone())).total();
            let fo = pout.cauchy(&tr);
            wo = wo.max((0..outer.len()).map(|i| (to[i] + fo[i]).norm()).fold(0.0, f64::max) / sup);
        }
        rec.push("volume_ops", "Borel-Pompeiu interior", name, wi, 0.05);
        rec.push("volume_ops", "Borel-Pompeiu exterior", name, wo, 0.05);
        bp_in.push((name.clone(), wi));
        bp_out.push((name.clone(), wo));

        let st = first_stencil(m, inner.clone());
        let v: Vec<Quaternion> = m.centroids().iter().map(|x| Quaternion::new(0.0, x.y, x.z * x.z, x.x)).collect();
        let t = vc.teodorescu(&v, &st.targets());
        let div = st.divergence(&t.t3);
        let e = rms(&div, |d| d * d) / rms(&st.at_centers(&t.t3), |x| x.norm_squared());
        rec.push("volume_ops", "div T3 = 0", name, e, 1e-4);
        let sc = vc
            .teodorescu(&m.centroids().iter().map(|x| Quaternion::scalar(1.0 + x.x)).collect::<Vec<_>>(), &Targets::new(inner.clone()))
            .t1
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max);
        rec.push("volume_ops", "Sc T[w0] = 0", name, sc, 0.0);

        let (a, b) = dn::single_layer_check(m, |x| x.z, |_| Vec3::z(), &interior_lattice(surf, 0.3, 0.25))?;
        rec.push("volume_ops", "T grad = -M Lambda tr (w0 = x3)", name, a.max(b), 0.15);
        tm.push((name.clone(), a.max(b)));
    }
    rec.decay("volume_ops", "Borel-Pompeiu interior", &bp_in);
    rec.decay("volume_ops", "Borel-Pompeiu exterior", &bp_out);
    rec.decay("volume_ops", "T grad = -M Lambda tr (w0 = x3)", &tm);
    Ok(())
}

fn radial_oracle() -> RadialProfile {
    let spec = ConductivitySpec::RadialQuadratic;
    RadialProfile::solve(|r| spec.radial(r).expect("radial"), 1, 20000)
}

fn elliptic_suite(rec: &mut Recorder, balls: &[(String, VolumeMesh)]) -> Result<()> {
    let spec = ConductivitySpec::RadialQuadratic;
    let profile = radial_oracle();
    let mut errs = Vec::new();
    for (name, m) in balls {
        let f = Conductivity::from_fn(m, |x| spec.value(x))?;
        let solver = EllipticSolver::conductivity(m, &f)?;
        let phi0: Vec<f64> = m.boundary().vertices().iter().map(|x| x.z).collect();
        let a = solver.solve_u(&phi0)?;
        let b = solver.solve_u(&phi0)?;
        let same = a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits());
        rec.push("elliptic", "bitwise repeatable solve", name, if same { 0.0 } else { 1.0 }, 0.0);
        let scale = solver.stiffness().apply(&a).iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
        rec.push("elliptic", "discrete energy identity", name, solver.interior_residual(&a) / scale, 1e-10);
        let err = m
            .nodes()
            .iter()
            .zip(&a)
            .map(|(x, u)| {
                let r = x.norm();
                let exact = if r > 0.0 { profile.value(r) * x.z / r } else { 0.0 };
                (u - exact).abs()
            })
            .fold(0.0, f64::max);
        rec.push("elliptic", "radial oracle error", name, err, 0.1);
        errs.push((name.clone(), err));
    }
    rec.decay("elliptic", "radial oracle error", &errs);
    Ok(())
}

fn hilbert_suite(rec: &mut Recorder, spheres: &[(String, SurfaceMesh)], balls: &[(String, VolumeMesh)]) -> Result<()> {
    let (mut plem, mut gh) = (Vec::new(), Vec::new());
    for (name, m) in spheres {
        let ctx = HilbertContext::new(m)?;
        let phi0: Vec<f64> = m.centroids().iter().map(|x| x.z).collect();
        let h = ctx.hilbert(&phi0)?;
        let psi: Vec<Quaternion> = phi0.iter().zip(&h).map(|(p, v)| Quaternion::from_parts(*p, *v)).collect();
        let e = rel_quat(m.areas(), &ctx.singular().apply(&psi), &psi);
        rec.push("hilbert", "S psi = psi for psi = phi0 + H phi0", name, e, 0.1);
        plem.push((name.clone(), e));
        let pts = interior_lattice(m, 0.25, 0.2);
        let st = Stencil::new(pts, 1e-4, StencilOrder::First);
        let w = ctx.monogenic_extension(&phi0, &st.targets())?;
        let d = st.dirac(&w);
        let scale = rms(&st.at_centers(&w), |q| q.norm_squared());
        rec.push("hilbert", "monogenic extension D residual", name, rms(&d, |q| q.norm_squared()) / scale, 1e-6);

        let mut rng = ChaCha8Rng::seed_from_u64(rec.seed);
        let mut worst = 0.0f64;
        for _ in 0..3 {
            let g = smooth_function(&mut rng);
            let p = project_mean_zero(m.areas(), &m.centroids().iter().map(&g).collect::<Vec<_>>());
            let back = ctx.left_inverse(&ctx.hilbert(&p)?)?;
            let d: Vec<f64> = back.iter().zip(&p).map(|(a, b)| a - b).collect();
            worst = worst.max(weighted_norm(m.areas(), &d) / weighted_norm(m.areas(), &p));
        }
        rec.push("hilbert", "left inverse G H = I on mean-zero data", name, worst, 0.1);
        gh.push((name.clone(), worst));

        let phi: Vec<Vec3> = m.centroids().iter().map(|x| Vec3::new(x.y * x.z, x.x.sin(), x.x - x.z)).collect();
        let lhs: f64 = h.iter().zip(&phi).zip(m.areas()).map(|((a, b), w)| w * a.dot(b)).sum();
        let rhs: f64 = phi0.iter().zip(&ctx.adjoint(&phi)?).zip(m.areas()).map(|((a, b), w)| w * a * b).sum();
        rec.push("hilbert", "adjoint pairing", name, (lhs - rhs).abs() / lhs.abs().max(1.0), 1e-10);
        let sigma = ctx.mean_zero_min_singular_value()?;
        rec.push("hilbert", "Ker H = constants (1 / smallest singular value)", name, 1.0 / sigma, 1e6);
        // H is not the vector part of the Cauchy integral's trace; no target.
        let v = ctx.cauchy_vector_trace(&phi0)?;
        let d: Vec<Vec3> = v.iter().zip(&h).map(|(a, b)| a - b).collect();
        let e = boundary_norm(m.areas(), &d) / boundary_norm(m.areas(), &h);
        rec.push("hilbert", "|Vec tr F[phi0] - H phi0| / |H phi0| (reported)", name, e, f64::INFINITY);
    }
    rec.decay("hilbert", "S psi = psi for psi = phi0 + H phi0", &plem);
    rec.decay("hilbert", "left inverse G H = I on mean-zero data", &gh);
    let (mut id, mut ch) = (Vec::new(), Vec::new());
    for (name, m) in balls {
        let surf = m.boundary();
        let ctx = HilbertContext::new(surf)?;
        let w0 = Harmonic::X1X2;
        let tr: Vec<f64> = surf.centroids().iter().map(|x| w0.value(x)).collect();
        let grad: Vec<Quaternion> = m.centroids().iter().map(|x| Quaternion::vector(w0.gradient(x))).collect();
        let t = VolumeContext::new(m).teodorescu(&grad, &Targets::new(surf.centroids().to_vec()));
        let h = ctx.hilbert(&tr)?;
        let ht1 = ctx.hilbert(&t.t1)?;
        let rhs: Vec<Vec3> = t.t3.iter().zip(&ht1).map(|(a, b)| b - a).collect();
        let d: Vec<Vec3> = h.iter().zip(&rhs).map(|(a, b)| a - b).collect();
        let e = boundary_norm(surf.areas(), &d) / boundary_norm(surf.areas(), &h);
        rec.push("hilbert", "H tr = -tr T3 grad + H tr T1 grad", name, e, 0.1);
        id.push((name.clone(), e));
        let c = characterization(m)?;
        rec.push("hilbert", "2 tr T1 grad = (I - K0) tr", name, c, 0.1);
        ch.push((name.clone(), c));
    }
    rec.decay("hilbert", "H tr = -tr T3 grad + H tr T1 grad", &id);
    rec.decay("hilbert", "2 tr T1 grad = (I - K0) tr", &ch);
    Ok(())
}

fn x3_data(m: &VolumeMesh) -> Vec<f64> {
    m.boundary().vertices().iter().map(|x| x.z).collect()
}

/// `f_n = 1 + x3 / n` for `n = 1, 2, 4, 8`.
pub fn dependence_family(m: &VolumeMesh) -> Result<Vec<(u32, Conductivity)>> {
    [1u32, 2, 4, 8]
        .iter()
        .map(|&n| Ok((n, Conductivity::from_fn(m, |x| ConductivitySpec::Linear(n as f64).value(x))?)))
        .collect()
}

fn strictly_decreasing(v: &[f64]) -> f64 {
    v.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max)
}

fn vekua_suite(rec: &mut Recorder, balls: &[(String, VolumeMesh)]) -> Result<()> {
    let spec = ConductivitySpec::RadialQuadratic;
    let (mut div, mut curl, mut red, mut uniq, mut ratio) = (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (name, m) in balls {
        let ctx = VekuaContext::new(m)?;
        let phi0 = x3_data(m);
        let f = Conductivity::from_fn(m, |x| spec.value(x))?;
        let nb = m.boundary_nodes().len();

        let tc = ctx.transform(&f, &vec![1.7; nb])?;
        let eps = boundary_norm(m.boundary().areas(), &tc.alpha).max(weighted_norm(m.boundary().areas(), &tc.alpha0));
        let hn = boundary_norm(m.boundary().areas(), &tc.h_f);
        rec.push("vekua", "kernel: traces vanish on constants", name, eps, 1e-10);
        rec.push("vekua", "kernel: H_f[const]", name, hn, 1e-8);

        let one = Conductivity::constant(m, 1.0)?;
        let hf = ctx.vekua_hilbert(&one, &phi0)?;
        let h = ctx.hilbert().hilbert(&m.boundary().vertex_to_panel(&phi0))?;
        let d: Vec<Vec3> = hf.iter().zip(&h).map(|(a, b)| a - b).collect();
        let e = boundary_norm(m.boundary().areas(), &d) / boundary_norm(m.boundary().areas(), &h);
        rec.push("vekua", "H_f = H for f = 1", name, e, 0.05);
        red.push((name.clone(), e));

        let t = ctx.transform(&f, &phi0)?;
        let again = ctx.transform(&f, &phi0)?;
        let same = t.h_f.iter().zip(&again.h_f).all(|(a, b)| a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
        rec.push("vekua", "uniqueness: rerun identical", name, if same { 0.0 } else { 1.0 }, 1e-9);

        let pts = interior_lattice(m.boundary(), 0.2, 0.2);
        let st = first_stencil(m, pts.clone());
        let pr = ctx.probe_residuals(&t, &st);
        rec.push("vekua", "div fW = 0 at probes", name, pr.div / pr.scale, 0.15);
        rec.push("vekua", "curl fW = -f^2 grad(W0/f) at probes", name, pr.curl / pr.scale, 0.15);
        div.push((name.clone(), pr.div / pr.scale));
        curl.push((name.clone(), pr.curl / pr.scale));

        let tg = Targets::new(pts.clone());
        let fw = ctx.fw_at(&t, &tg);
        let si = |x: &Vec3| Vec3::new(x.y, x.x, 0.0);
        let pert: Vec<Vec3> = fw.iter().zip(&pts).map(|(w, x)| w + si(x)).collect();
        let trace: Vec<Vec3> = t.h_f.iter().zip(m.boundary().centroids()).map(|(w, x)| w + si(x)).collect();
        let rn = ctx.renormalize(&t, &tg, &pert, &trace)?;
        let scale = fw.iter().map(|w| w.norm()).fold(0.0, f64::max);
        let e = rn.iter().zip(&fw).map(|(q, w)| (q.vec() - w).norm().max(q.w0.abs())).fold(0.0, f64::max) / scale;
        rec.push("vekua", "uniqueness: renormalized perturbation", name, e, 1e-3);
        uniq.push((name.clone(), e));

        let fwn = ctx.fw_nodal(&t);
        let grads: Vec<[Vec3; 3]> = {
            let comp: Vec<Vec<Vec3>> = (0..3).map(|a| tet_gradients(m, &fwn.iter().map(|v| v[a]).collect::<Vec<_>>())).collect();
            (0..m.tets().len()).map(|k| [comp[0][k], comp[1][k], comp[2][k]]).collect()
        };
        let w12: f64 = m
            .tets()
            .iter()
            .enumerate()
            .map(|(k, tet)| {
                let mean: Vec3 = tet.iter().map(|&i| fwn[i]).sum::<Vec3>() / 4.0;
                m.volumes()[k] * (mean.norm_squared() + grads[k].iter().map(|g| g.norm_squared()).sum::<f64>())
            })
            .sum::<f64>()
            .sqrt();
        let solver = EllipticSolver::conductivity(m, &f)?;
        let r = w12 / solver.boundary_l2(&phi0);
        rec.push("vekua", "boundedness ratio ||fW||_W12 / ||phi0||", name, r, 1e3);
        ratio.push((name.clone(), r));
        let res = vekua::vekua_residual(m, &f, &ctx.nodal_solution(&t))?;
        rec.push("vekua", "P1 conductivity residual of W0/f", name, res.conductivity, 1e-10);
        rec.push("vekua", "P1 double-curl residual (reported)", name, res.double_curl / res.scale, f64::INFINITY);
    }
    rec.decay("vekua", "H_f = H for f = 1", &red);
    rec.decay("vekua", "div fW = 0 at probes", &div);
    rec.decay("vekua", "curl fW = -f^2 grad(W0/f) at probes", &curl);
    rec.decay("vekua", "uniqueness: renormalized perturbation", &uniq);
    if ratio.len() >= 2 {
        let (a, b) = (ratio[0].1, ratio[ratio.len() - 1].1);
        rec.push("vekua", "boundedness ratio stability", &format!("{}..{}", ratio[0].0, ratio[ratio.len() - 1].0), (b / a).max(a / b), 2.0);
    } else {
        rec.report.warnings.push("decay unassessed: vekua/boundedness ratio stability needs two meshes".into());
    }
    if let Some((name, m)) = balls.last() {
        let ctx = VekuaContext::new(m)?;
        let fam = dependence_family(m)?;
        let fs: Vec<Conductivity> = fam.iter().map(|p| p.1.clone()).collect();
        let col = vekua::dependence_experiment(&ctx, &Conductivity::constant(m, 1.0)?, &fs, &x3_data(m))?;
        rec.push("vekua", "continuous dependence H_{f_n} monotone", name, strictly_decreasing(&col), 1.0 - 1e-12);
    }
    Ok(())
}

fn dn_suite(rec: &mut Recorder, balls: &[(String, VolumeMesh)]) -> Result<()> {
    let profile = radial_oracle();
    let spec = ConductivitySpec::RadialQuadratic;
    let (mut y1, mut y2, mut rad, mut sl, mut rel) = (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (name, m) in balls {
        let solver = EllipticSolver::laplace(m)?;
        for (harm, l, acc) in [(Harmonic::X3, 1.0, &mut y1), (Harmonic::Zonal2, 2.0, &mut y2)] {
            let phi0: Vec<f64> = m.boundary().vertices().iter().map(|x| harm.value(x)).collect();
            let r = dn_monogenic(m, &phi0)?;
            let d: Vec<f64> = r.scalar.iter().zip(&phi0).map(|(a, p)| a + l * p).collect();
            let e = solver.boundary_l2(&d) / (l * solver.boundary_l2(&phi0));
            rec.push("dn", &format!("Lambda0 = -{l} on degree {l}"), name, e, 0.15);
            acc.push((name.clone(), e));
        }
        let f = Conductivity::from_fn(m, |x| spec.value(x))?;
        let phi0 = x3_data(m);
        let r = dn_conductivity(m, &f, &phi0)?;
        rec.push("dn", "flux conservation", name, r.flux_total.abs(), 1e-9);
        let tangent = r.vector.iter().zip(m.boundary().normals()).map(|(v, n)| v.dot(n).abs()).fold(0.0, f64::max);
        rec.push("dn", "vector part tangent", name, tangent, 1e-10);
        let (f1, df1) = spec.radial(1.0).expect("radial");
        let _ = df1;
        let exact: Vec<f64> = phi0.iter().map(|p| -f1 * f1 * profile.slope() * p).collect();
        let d: Vec<f64> = r.scalar.iter().zip(&exact).map(|(a, b)| a - b).collect();
        let e = solver.boundary_l2(&d) / solver.boundary_l2(&exact);
        rec.push("dn", "radial conductivity oracle", name, e, 0.1);
        rad.push((name.clone(), e));

        let (a, b) = dn::single_layer_check(m, |x| Harmonic::X1X2.value(x), |x| Harmonic::X1X2.gradient(x), &interior_lattice(m.boundary(), 0.3, 0.25))?;
        rec.push("dn", "T1 grad = -M Lambda0 tr, T3 grad = M Lambda_vec tr", name, a.max(b), 0.15);
        sl.push((name.clone(), a.max(b)));

        let ctx = VekuaContext::new(m)?;
        let one = Conductivity::constant(m, 1.0)?;
        let t = ctx.transform(&one, &phi0)?;
        let e = dn::relation_check(&ctx, &t)?;
        rec.push("dn", "Lambda = -(D fW) eta", name, e, 0.2);
        rel.push((name.clone(), e));
    }
    rec.decay("dn", "Lambda0 = -1 on degree 1", &y1);
    rec.decay("dn", "Lambda0 = -2 on degree 2", &y2);
    rec.decay("dn", "radial conductivity oracle", &rad);
    rec.decay("dn", "T1 grad = -M Lambda0 tr, T3 grad = M Lambda_vec tr", &sl);
    rec.decay("dn", "Lambda = -(D fW) eta", &rel);
    if let Some((name, m)) = balls.last() {
        let rows = dn::dependence_experiment(m, &Conductivity::constant(m, 1.0)?, &dependence_family(m)?, &x3_data(m))?;
        let s: Vec<f64> = rows.iter().map(|r| r.scalar).collect();
        let v: Vec<f64> = rows.iter().map(|r| r.vector).collect();
        rec.push("dn", "continuous dependence Lambda scalar monotone", name, strictly_decreasing(&s), 1.0 - 1e-12);
        rec.push("dn", "continuous dependence Lambda vector monotone", name, strictly_decreasing(&v), 1.0 - 1e-12);
    }
    Ok(())
}

fn divcurl_suite(rec: &mut Recorder, balls: &[(String, VolumeMesh)], torus_h: &[f64]) -> Result<()> {
    let (mut sc, mut canc, mut tri) = (Vec::new(), Vec::new(), Vec::new());
    for (name, m) in balls {
        let solver = DivCurlSolver::new(m)?;
        let pts = interior_lattice(m.boundary(), 0.25, 0.2);
        let st = first_stencil(m, pts.clone());
        for src in [DivCurlSource::Div3, DivCurlSource::CurlE3] {
            let p = DivCurlProblem::from_fn(m, |x| src.g0(x), |x| src.g(x), SAMPLED_TOLERANCE)?;
            let sol = solver.solve(&p, &st.targets())?;
            let oracle: Vec<Vec3> = pts.iter().map(|x| src.solution(x)).collect();
            let e = si_corrected_error(&pts, &st.at_centers(&sol.w), &oracle);
            rec.push("divcurl", &format!("hand oracle {} (SI-corrected)", src.name()), name, e, 0.1);
        }
        let src = DivCurlSource::CurlLinear;
        let p = DivCurlProblem::from_fn(m, |x| src.g0(x), |x| src.g(x), SAMPLED_TOLERANCE)?;
        let sol = solver.solve(&p, &Targets::new(pts.clone()))?;
        let s = sol.scalar.iter().map(|v| v.abs()).fold(0.0, f64::max) / rms(&sol.w, |v| v.norm_squared());
        rec.push("divcurl", "purely vectorial output", name, s, 0.1);
        sc.push((name.clone(), s));
        let c = solver.cancellation(&p, &pts);
        rec.push("divcurl", "F[alpha0 + alpha] = 0", name, c, 0.05);
        canc.push((name.clone(), c));
        let t = solver.trace_identity(&p)?;
        rec.push("divcurl", "tr F[alpha - H alpha0] = -alpha0 - H alpha0", name, t, 0.1);
        tri.push((name.clone(), t));
    }
    rec.decay("divcurl", "purely vectorial output", &sc);
    rec.decay("divcurl", "F[alpha0 + alpha] = 0", &canc);
    rec.decay("divcurl", "tr F[alpha - H alpha0] = -alpha0 - H alpha0", &tri);
    let mut torus = Vec::new();
    for &h in torus_h {
        let m = solid_torus(2.0, 0.5, h)?;
        let name = format!("torus-h{h}");
        let solver = DivCurlSolver::new(&m)?;
        let src = DivCurlSource::CurlE3;
        let p = DivCurlProblem::from_fn(&m, |x| src.g0(x), |x| src.g(x), SAMPLED_TOLERANCE)?;
        let st = first_stencil(&m, interior_lattice(m.boundary(), 0.2, 0.2));
        let sol = solver.solve(&p, &st.targets())?;
        let r = divcurl_residuals(&st, &sol.w, |x| src.g0(x), |x| src.g(x));
        let (a, b) = r.relative();
        let e = (a * a + b * b).sqrt();
        rec.push("divcurl", "torus residual curl-e3", &name, e, 0.1);
        torus.push((name, e));
    }
    rec.decay("divcurl", "torus residual curl-e3", &torus);
    Ok(())
}
