use std::fs;
use std::path::{Path, PathBuf};

use monogenic::catalog::{ConductivitySpec, DivCurlSource, Harmonic};
use monogenic::divcurl::{fem_tolerance, probe_residuals, DivCurlProblem, DivCurlSolver, SAMPLED_TOLERANCE};
use monogenic::dn::dn_conductivity;
use monogenic::elliptic::Conductivity;
use monogenic::hilbert::HilbertContext;
use monogenic::mesh::io::{load_scalar_csv, parse_csv_rows, vtk_string, write_field_csv, VtkCells, VtkData};
use monogenic::mesh::{load_surface_mesh, load_volume_mesh, solid_torus, unit_ball, unit_sphere, SurfaceMesh, VolumeMesh};
use monogenic::probes::{interior_lattice, PointLocator, Targets};
use monogenic::vekua::{vekua_residual, VekuaContext};
use monogenic::verify;
use monogenic::volume_ops::{first_stencil, tet_values};
use monogenic::{Error, Quaternion, Result, Vec3};
use serde_json::json;

use crate::config::{config_err, is_path, RunConfig};

pub enum Domain {
    Surface(SurfaceMesh),
    Volume(VolumeMesh),
}

fn load_domain(c: &RunConfig, default: &str) -> Result<(String, Domain)> {
    let name = c.mesh.clone().unwrap_or_else(|| default.to_string());
    let h = c.h.unwrap_or(0.3);
    let d = match name.as_str() {
        "sphere" => Domain::Surface(unit_sphere(c.level.unwrap_or(3))),
        "ball" => Domain::Volume(unit_ball(h)?),
        "torus" => Domain::Volume(solid_torus(2.0, 0.5, h)?),
        p if p.ends_with(".off") => Domain::Surface(load_surface_mesh(Path::new(p))?),
        p if p.ends_with(".msh") => Domain::Volume(load_volume_mesh(Path::new(p))?),
        p => {
            return Err(config_err(
                "mesh",
                format!("expected sphere, ball, torus or an .off/.msh path, got `{p}`"),
            ))
        }
    };
    Ok((name, d))
}

fn load_volume(c: &RunConfig) -> Result<(String, VolumeMesh)> {
    match load_domain(c, "ball")? {
        (name, Domain::Volume(m)) => Ok((name, m)),
        (name, Domain::Surface(_)) => Err(config_err("mesh", format!("`{name}` is a surface; this command needs a volume mesh"))),
    }
}

fn conductivity(c: &RunConfig, m: &VolumeMesh) -> Result<Conductivity> {
    let f = c.f.as_deref().unwrap_or("constant:1");
    if is_path(f) {
        Conductivity::new(load_scalar_csv(Path::new(f), m.nodes().len())?)
    } else {
        let spec: ConductivitySpec = f.parse()?;
        Conductivity::from_fn(m, |x| spec.value(x))
    }
}

/// Boundary data at `points`, or read from CSV with one row per point.
fn boundary_data(c: &RunConfig, points: &[Vec3]) -> Result<Vec<f64>> {
    let phi = c.phi.as_deref().unwrap_or("x3");
    if is_path(phi) {
        load_scalar_csv(Path::new(phi), points.len())
    } else {
        let h: Harmonic = phi.parse()?;
        Ok(points.iter().map(|x| h.value(x)).collect())
    }
}

fn write_text(path: &Path, s: &str) -> Result<()> {
    fs::write(path, s).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn write_json(path: &Path, v: &serde_json::Value) -> Result<()> {
    write_text(path, &(serde_json::to_string_pretty(v)? + "\n"))
}

fn out_dir(c: &RunConfig) -> Result<PathBuf> {
    let d = c.out_dir();
    fs::create_dir_all(&d).map_err(|e| Error::Io {
        path: d.clone(),
        source: e,
    })?;
    Ok(d)
}

pub fn mesh_info(c: &RunConfig) -> Result<serde_json::Value> {
    let (name, d) = load_domain(c, "sphere")?;
    let v = match d {
        Domain::Surface(m) => json!({
            "mesh": name,
            "kind": "surface",
            "vertices": m.vertices().len(),
            "triangles": m.len(),
            "area": m.total_area(),
            "euler_characteristic": m.euler_characteristic(),
            "components": m.components(),
            "max_diameter": m.max_diameter(),
            "hash": m.hash(),
        }),
        Domain::Volume(m) => json!({
            "mesh": name,
            "kind": "volume",
            "nodes": m.nodes().len(),
            "tets": m.tets().len(),
            "volume": m.total_volume(),
            "boundary_triangles": m.boundary().len(),
            "boundary_euler_characteristic": m.boundary().euler_characteristic(),
            "max_diameter": m.max_diameter(),
            "hash": m.hash(),
        }),
    };
    if c.out.is_some() {
        write_json(&out_dir(c)?.join("mesh.json"), &v)?;
    }
    Ok(v)
}

/// Returns whether every record passed.
pub fn run_verify(c: &RunConfig) -> Result<(bool, PathBuf)> {
    let report = verify::run(&c.schedule(), c.seed(), &c.tolerances, &c.suites)?;
    let path = out_dir(c)?.join("report.json");
    write_text(&path, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    for r in report.failures() {
        eprintln!("FAIL {}/{} on {}: {:.3e} > {:.1e}", r.suite, r.invariant, r.mesh, r.value, r.cap);
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let failed = report.failures().count();
    println!("{} records, {} failed, {} warnings", report.records.len(), failed, report.warnings.len());
    Ok((failed == 0, path))
}

pub fn hilbert(c: &RunConfig) -> Result<()> {
    let (name, d) = load_domain(c, "sphere")?;
    let surface = match &d {
        Domain::Surface(m) => m,
        Domain::Volume(m) => m.boundary(),
    };
    let ctx = HilbertContext::new(surface)?;
    let phi0 = boundary_data(c, surface.centroids())?;
    let h = ctx.hilbert(&phi0)?;
    let psi: Vec<Quaternion> = phi0.iter().zip(&h).map(|(p, v)| Quaternion::from_parts(*p, *v)).collect();
    let s = ctx.singular().apply(&psi);
    let w = surface.areas();
    let num: f64 = s.iter().zip(&psi).zip(w).map(|((a, b), w)| w * (*a - *b).norm_squared()).sum();
    let den: f64 = psi.iter().zip(w).map(|(b, w)| w * b.norm_squared()).sum();
    let dir = out_dir(c)?;
    write_field_csv(&dir.join("hilbert.csv"), surface.centroids(), &psi)?;
    write_json(
        &dir.join("hilbert.json"),
        &json!({
            "mesh": name,
            "hash": surface.hash(),
            "triangles": surface.len(),
            "plemelj_residual": (num / den.max(f64::MIN_POSITIVE)).sqrt(),
        }),
    )
}

pub fn vekua(c: &RunConfig) -> Result<()> {
    let (name, m) = load_volume(c)?;
    let f = conductivity(c, &m)?;
    let phi0 = boundary_data(c, m.boundary().vertices())?;
    let ctx = VekuaContext::new(&m)?;
    let t = ctx.transform(&f, &phi0)?;
    let nodal = ctx.nodal_solution(&t);
    let res = vekua_residual(&m, &f, &nodal)?;
    let pts = interior_lattice(m.boundary(), 0.2, 0.2);
    let probes = if pts.is_empty() {
        serde_json::Value::Null
    } else {
        serde_json::to_value(ctx.probe_residuals(&t, &first_stencil(&m, pts)))?
    };
    let dir = out_dir(c)?;
    let panels = m.boundary().vertex_to_panel(&phi0);
    let trace: Vec<Quaternion> = panels.iter().zip(&t.h_f).map(|(p, v)| Quaternion::from_parts(*p, *v)).collect();
    write_field_csv(&dir.join("vekua_trace.csv"), m.boundary().centroids(), &trace)?;
    write_text(
        &dir.join("vekua.vtk"),
        &vtk_string("vekua solution", m.nodes(), VtkCells::Tets(m.tets()), &[("W", VtkData::Point(&nodal))]),
    )?;
    write_json(
        &dir.join("residual.json"),
        &json!({
            "mesh": name,
            "hash": m.hash(),
            "f": c.f.clone().unwrap_or_else(|| "constant:1".into()),
            "phi": c.phi.clone().unwrap_or_else(|| "x3".into()),
            "residual": res,
            "probes": probes,
        }),
    )
}

pub fn dn(c: &RunConfig) -> Result<()> {
    let (name, m) = load_volume(c)?;
    let f = conductivity(c, &m)?;
    let phi0 = boundary_data(c, m.boundary().vertices())?;
    let r = dn_conductivity(&m, &f, &phi0)?;
    let dir = out_dir(c)?;
    write_field_csv(&dir.join("dn.csv"), m.boundary().centroids(), &r.quaternion_panels())?;
    write_json(
        &dir.join("dn.json"),
        &json!({
            "mesh": name,
            "hash": m.hash(),
            "flux_total": r.flux_total,
            "weak_residual": r.weak_residual,
        }),
    )
}

/// Per-node `(g0, g)` from the field CSV layout.
fn load_source_csv(path: &Path, n: usize) -> Result<Vec<Quaternion>> {
    let name = path.display().to_string();
    let src = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut out = vec![None; n];
    for r in parse_csv_rows(&src, &name)? {
        if r.len() != 8 {
            return Err(Error::Parse {
                path: name,
                line: 0,
                msg: format!("expected 8 columns, found {}", r.len()),
            });
        }
        let i = r[0] as usize;
        if r[0] < 0.0 || r[0].fract() != 0.0 || i >= n {
            return Err(Error::Parse {
                path: name,
                line: 0,
                msg: format!("node index {} outside 0..{n}", r[0]),
            });
        }
        out[i] = Some(Quaternion::new(r[4], r[5], r[6], r[7]));
    }
    out.into_iter()
        .enumerate()
        .map(|(i, q)| {
            q.ok_or_else(|| Error::Parse {
                path: name.clone(),
                line: 0,
                msg: format!("no value for node {i}"),
            })
        })
        .collect()
}

pub fn divcurl(c: &RunConfig) -> Result<()> {
    let (name, m) = load_volume(c)?;
    let source = c.source.as_deref().unwrap_or("curl-e3");
    let solver = DivCurlSolver::new(&m)?;
    let cells = Targets::new(m.centroids().to_vec());
    let pts = interior_lattice(m.boundary(), 0.2, 0.2);
    let st = first_stencil(&m, pts.clone());
    let (problem, sol, residual) = if is_path(source) {
        let nodal = load_source_csv(Path::new(source), m.nodes().len())?;
        let per_tet = tet_values(&m, &nodal);
        let p = DivCurlProblem::new(
            &m,
            per_tet.iter().map(|q| q.w0).collect(),
            per_tet.iter().map(|q| q.vec()).collect(),
            fem_tolerance(m.max_diameter()),
        )?;
        let loc = PointLocator::new(&m);
        let at = |x: &Vec3| loc.interpolate(&nodal, x).unwrap_or(Quaternion::ZERO);
        let w = solver.solve(&p, &st.targets())?;
        let r = probe_residuals(&st, &w.w, |x| at(x).w0, |x| at(x).vec());
        (p, None, r)
    } else {
        let s: DivCurlSource = source.parse()?;
        let p = DivCurlProblem::from_fn(&m, |x| s.g0(x), |x| s.g(x), SAMPLED_TOLERANCE)?;
        let w = solver.solve(&p, &st.targets())?;
        let r = probe_residuals(&st, &w.w, |x| s.g0(x), |x| s.g(x));
        (p, Some(s), r)
    };
    let w = solver.solve(&problem, &cells)?;
    let vals: Vec<Quaternion> = w.w.iter().zip(&w.scalar).map(|(v, s)| Quaternion::from_parts(*s, *v)).collect();
    let dir = out_dir(c)?;
    write_text(
        &dir.join("divcurl.vtk"),
        &vtk_string("div-curl solution", m.nodes(), VtkCells::Tets(m.tets()), &[("w", VtkData::Cell(&vals))]),
    )?;
    let (div, curl) = residual.relative();
    write_json(
        &dir.join("residual.json"),
        &json!({
            "mesh": name,
            "hash": m.hash(),
            "source": sol.map(|s| s.name().to_string()).unwrap_or_else(|| source.to_string()),
            "solenoidality": problem.solenoidality(),
            "probes": pts.len(),
            "div": div,
            "curl": curl,
        }),
    )
}
