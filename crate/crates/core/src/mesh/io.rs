//! OFF surface and Gmsh 2.2 volume readers; CSV and legacy VTK writers.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::{SurfaceMesh, VolumeMesh};
use crate::quat::{Quaternion, Vec3};

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Non-empty, comment-stripped lines with their 1-based line numbers.
fn content_lines(src: &str) -> impl Iterator<Item = (usize, &str)> {
    src.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

fn num<T: std::str::FromStr>(tok: Option<&str>, name: &str, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::parse(name, line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| Error::parse(name, line, format!("cannot parse {what} from `{tok}`")))
}

pub fn parse_off(src: &str, name: &str) -> Result<SurfaceMesh> {
    let mut lines = content_lines(src);
    let last_line = src.lines().count() + 1;
    let eof = |what: &str| Error::parse(name, last_line, format!("unexpected end of file, expected {what}"));

    let (ln, head) = lines.next().ok_or_else(|| eof("OFF header"))?;
    let mut counts_line = None;
    if let Some(rest) = head.strip_prefix("OFF") {
        if !rest.trim().is_empty() {
            counts_line = Some((ln, rest.trim()));
        }
    } else {
        return Err(Error::parse(name, ln, "missing OFF header"));
    }
    let (ln, counts) = match counts_line {
        Some(c) => c,
        None => lines.next().ok_or_else(|| eof("vertex/face counts"))?,
    };
    let mut tok = counts.split_whitespace();
    let nv: usize = num(tok.next(), name, ln, "vertex count")?;
    let nf: usize = num(tok.next(), name, ln, "face count")?;

    let mut verts = Vec::with_capacity(nv);
    for i in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| eof(&format!("vertex {i}")))?;
        let mut t = l.split_whitespace();
        let x = num(t.next(), name, ln, "x")?;
        let y = num(t.next(), name, ln, "y")?;
        let z = num(t.next(), name, ln, "z")?;
        verts.push(Vec3::new(x, y, z));
    }
    let mut tris = Vec::with_capacity(nf);
    for i in 0..nf {
        let (ln, l) = lines.next().ok_or_else(|| eof(&format!("face {i}")))?;
        let mut t = l.split_whitespace();
        let k: usize = num(t.next(), name, ln, "face size")?;
        if k != 3 {
            return Err(Error::parse(name, ln, format!("face {i} has {k} vertices, only triangles are supported")));
        }
        let a = num(t.next(), name, ln, "vertex index")?;
        let b = num(t.next(), name, ln, "vertex index")?;
        let c = num(t.next(), name, ln, "vertex index")?;
        tris.push([a, b, c]);
    }
    SurfaceMesh::new(verts, tris)
}

pub fn load_surface_mesh(path: &Path) -> Result<SurfaceMesh> {
    parse_off(&read(path)?, &path.display().to_string())
}

pub fn off_string(mesh: &SurfaceMesh) -> String {
    let mut s = format!("OFF\n{} {} 0\n", mesh.vertices().len(), mesh.len());
    for v in mesh.vertices() {
        let _ = writeln!(s, "{:?} {:?} {:?}", v.x, v.y, v.z);
    }
    for t in mesh.triangles() {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    s
}

pub fn save_surface_mesh(mesh: &SurfaceMesh, path: &Path) -> Result<()> {
    write(path, &off_string(mesh))
}

/// Gmsh MSH 2.2 ASCII. Tetrahedra (type 4) are kept, lower-dimensional
/// elements are skipped, any other volume element is an error.
pub fn parse_msh(src: &str, name: &str) -> Result<VolumeMesh> {
    let lines: Vec<(usize, &str)> = src
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    let last_line = src.lines().count() + 1;
    let eof = |what: &str| Error::parse(name, last_line, format!("unexpected end of file, expected {what}"));
    let find = |tag: &str| lines.iter().position(|(_, l)| *l == tag);

    let fmt = find("$MeshFormat").ok_or_else(|| eof("$MeshFormat"))?;
    let (ln, ver) = *lines.get(fmt + 1).ok_or_else(|| eof("format line"))?;
    let version: f64 = num(ver.split_whitespace().next(), name, ln, "format version")?;
    if !(2.0..3.0).contains(&version) {
        return Err(Error::parse(name, ln, format!("unsupported MSH version {version}, need 2.2")));
    }
    if ver.split_whitespace().nth(1) != Some("0") {
        return Err(Error::parse(name, ln, "binary MSH files are not supported"));
    }

    let ns = find("$Nodes").ok_or_else(|| eof("$Nodes"))?;
    let (ln, c) = *lines.get(ns + 1).ok_or_else(|| eof("node count"))?;
    let nn: usize = num(Some(c), name, ln, "node count")?;
    let mut ids = HashMap::with_capacity(nn);
    let mut nodes = Vec::with_capacity(nn);
    for i in 0..nn {
        let (ln, l) = *lines.get(ns + 2 + i).ok_or_else(|| eof(&format!("node {i}")))?;
        if l.starts_with('$') {
            return Err(Error::parse(name, ln, format!("node section ends after {i} of {nn} nodes")));
        }
        let mut t = l.split_whitespace();
        let id: usize = num(t.next(), name, ln, "node id")?;
        let x = num(t.next(), name, ln, "x")?;
        let y = num(t.next(), name, ln, "y")?;
        let z = num(t.next(), name, ln, "z")?;
        ids.insert(id, nodes.len());
        nodes.push(Vec3::new(x, y, z));
    }

    let es = find("$Elements").ok_or_else(|| eof("$Elements"))?;
    let (ln, c) = *lines.get(es + 1).ok_or_else(|| eof("element count"))?;
    let ne: usize = num(Some(c), name, ln, "element count")?;
    let mut tets = Vec::new();
    for i in 0..ne {
        let (ln, l) = *lines.get(es + 2 + i).ok_or_else(|| eof(&format!("element {i}")))?;
        if l.starts_with('$') {
            return Err(Error::parse(name, ln, format!("element section ends after {i} of {ne} elements")));
        }
        let t: Vec<&str> = l.split_whitespace().collect();
        let ty: u32 = num(t.get(1).copied(), name, ln, "element type")?;
        let ntags: usize = num(t.get(2).copied(), name, ln, "tag count")?;
        match ty {
            4 => {
                let mut tet = [0usize; 4];
                for (k, slot) in tet.iter_mut().enumerate() {
                    let id: usize = num(t.get(3 + ntags + k).copied(), name, ln, "node id")?;
                    *slot = *ids
                        .get(&id)
                        .ok_or_else(|| Error::parse(name, ln, format!("unknown node id {id}")))?;
                }
                tets.push(tet);
            }
            1 | 2 | 3 | 8 | 9 | 15 => {}
            other => {
                return Err(Error::parse(
                    name,
                    ln,
                    format!("element type {other} is not supported, only linear tetrahedra"),
                ))
            }
        }
    }
    VolumeMesh::new(nodes, tets)
}

pub fn load_volume_mesh(path: &Path) -> Result<VolumeMesh> {
    parse_msh(&read(path)?, &path.display().to_string())
}

pub fn msh_string(mesh: &VolumeMesh) -> String {
    let mut s = String::from("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n");
    let _ = writeln!(s, "{}", mesh.nodes().len());
    for (i, p) in mesh.nodes().iter().enumerate() {
        let _ = writeln!(s, "{} {:?} {:?} {:?}", i + 1, p.x, p.y, p.z);
    }
    s.push_str("$EndNodes\n$Elements\n");
    let _ = writeln!(s, "{}", mesh.tets().len());
    for (i, t) in mesh.tets().iter().enumerate() {
        let _ = writeln!(s, "{} 4 2 0 1 {} {} {} {}", i + 1, t[0] + 1, t[1] + 1, t[2] + 1, t[3] + 1);
    }
    s.push_str("$EndElements\n");
    s
}

pub fn save_volume_mesh(mesh: &VolumeMesh, path: &Path) -> Result<()> {
    write(path, &msh_string(mesh))
}

/// `index,x,y,z,w0,w1,w2,w3`, one row per node.
pub fn field_csv(points: &[Vec3], values: &[Quaternion]) -> String {
    let mut s = String::from("index,x,y,z,w0,w1,w2,w3\n");
    for (i, (p, q)) in points.iter().zip(values).enumerate() {
        let _ = writeln!(
            s,
            "{i},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            p.x, p.y, p.z, q.w0, q.w1, q.w2, q.w3
        );
    }
    s
}

pub fn write_field_csv(path: &Path, points: &[Vec3], values: &[Quaternion]) -> Result<()> {
    write(path, &field_csv(points, values))
}

/// Numeric rows of a CSV file; a non-numeric first row is taken as a header.
pub fn parse_csv_rows(src: &str, name: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (i, line) in src.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|c| c.trim().parse::<f64>()).collect();
        match parsed {
            Ok(r) => rows.push(r),
            Err(_) if rows.is_empty() && i == 0 => {}
            Err(_) => return Err(Error::parse(name, i + 1, "non-numeric CSV row")),
        }
    }
    Ok(rows)
}

/// Per-node scalar values from `index,value` or from the field layout
/// (`w0` column). Rows must cover indices `0..n` exactly once.
pub fn load_scalar_csv(path: &Path, n: usize) -> Result<Vec<f64>> {
    let name = path.display().to_string();
    let rows = parse_csv_rows(&read(path)?, &name)?;
    let mut out = vec![f64::NAN; n];
    for r in &rows {
        let (idx, val) = match r.len() {
            2 => (r[0], r[1]),
            8 => (r[0], r[4]),
            k => return Err(Error::parse(&name, 0, format!("expected 2 or 8 columns, found {k}"))),
        };
        let i = idx as usize;
        if idx < 0.0 || idx.fract() != 0.0 || i >= n {
            return Err(Error::parse(&name, 0, format!("node index {idx} outside 0..{n}")));
        }
        out[i] = val;
    }
    if let Some(i) = out.iter().position(|v| v.is_nan()) {
        return Err(Error::parse(&name, 0, format!("no value for node {i}")));
    }
    Ok(out)
}

pub enum VtkCells<'a> {
    Triangles(&'a [[usize; 3]]),
    Tets(&'a [[usize; 4]]),
}

pub enum VtkData<'a> {
    Point(&'a [Quaternion]),
    Cell(&'a [Quaternion]),
}

/// Legacy VTK unstructured grid with a scalar `w0` and vector `w` array.
pub fn vtk_string(title: &str, points: &[Vec3], cells: VtkCells, data: &[(&str, VtkData)]) -> String {
    let mut s = format!("# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {} double", points.len());
    for p in points {
        let _ = writeln!(s, "{:?} {:?} {:?}", p.x, p.y, p.z);
    }
    let (conn, ty): (Vec<Vec<usize>>, u8) = match cells {
        VtkCells::Triangles(t) => (t.iter().map(|c| c.to_vec()).collect(), 5),
        VtkCells::Tets(t) => (t.iter().map(|c| c.to_vec()).collect(), 10),
    };
    let size: usize = conn.iter().map(|c| c.len() + 1).sum();
    let _ = writeln!(s, "CELLS {} {}", conn.len(), size);
    for c in &conn {
        let idx: Vec<String> = c.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(s, "{} {}", c.len(), idx.join(" "));
    }
    let _ = writeln!(s, "CELL_TYPES {}", conn.len());
    for _ in &conn {
        let _ = writeln!(s, "{ty}");
    }
    let mut section = "";
    for (name, d) in data {
        let (header, vals) = match d {
            VtkData::Point(v) => ("POINT_DATA", *v),
            VtkData::Cell(v) => ("CELL_DATA", *v),
        };
        if section != header {
            let _ = writeln!(s, "{header} {}", vals.len());
            section = header;
        }
        let _ = writeln!(s, "SCALARS {name}_w0 double 1\nLOOKUP_TABLE default");
        for q in vals {
            let _ = writeln!(s, "{:?}", q.w0);
        }
        let _ = writeln!(s, "VECTORS {name}_w double");
        for q in vals {
            let _ = writeln!(s, "{:?} {:?} {:?}", q.w1, q.w2, q.w3);
        }
    }
    s
}

pub fn write_vtk(path: &Path, contents: &str) -> Result<()> {
    write(path, contents)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate;

    #[test]
    fn off_round_trip() {
        let m = generate::unit_sphere(0);
        let back = parse_off(&off_string(&m), "ico.off").unwrap();
        assert_eq!(back.len(), 20);
        assert_eq!(back.triangles(), m.triangles());
    }

    #[test]
    fn off_truncated_reports_line() {
        let m = generate::unit_sphere(0);
        let s = off_string(&m);
        let cut: String = s.lines().take(20).map(|l| format!("{l}\n")).collect();
        let err = parse_off(&cut, "cut.off").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 21),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn off_bad_number_reports_line() {
        let err = parse_off("OFF\n1 0 0\n0.0 zz 1.0\n", "bad.off").unwrap_err();
        assert!(err.to_string().starts_with("bad.off:3:"), "{err}");
    }

    #[test]
    fn msh_round_trip_and_skips_surface_elements() {
        let m = generate::unit_ball(0.9).unwrap();
        let s = msh_string(&m);
        let back = parse_msh(&s, "ball.msh").unwrap();
        assert_eq!(back.tets(), m.tets());
        let with_tri = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n4\n1 0 0 0\n2 1 0 0\n3 0 1 0\n4 0 0 1\n$EndNodes\n$Elements\n2\n1 2 2 0 1 1 2 3\n2 4 2 0 1 1 2 3 4\n$EndElements\n";
        assert_eq!(parse_msh(with_tri, "t.msh").unwrap().tets().len(), 1);
        let hex = with_tri.replace("1 2 2 0 1 1 2 3", "1 5 2 0 1 1 2 3 4 1 2 3 4");
        assert!(parse_msh(&hex, "h.msh").unwrap_err().to_string().contains("element type 5"));
    }

    #[test]
    fn csv_layout() {
        let s = field_csv(&[Vec3::new(1.0, 2.0, 3.0)], &[Quaternion::new(0.5, 0.0, -1.0, 2.0)]);
        assert_eq!(s, "index,x,y,z,w0,w1,w2,w3\n0,1.0,2.0,3.0,0.5,0.0,-1.0,2.0\n");
        let rows = parse_csv_rows(&s, "f.csv").unwrap();
        assert_eq!(rows[0][4], 0.5);
    }

    #[test]
    fn vtk_header() {
        let m = generate::unit_sphere(0);
        let vals = vec![Quaternion::ONE; m.len()];
        let s = vtk_string("t", m.vertices(), VtkCells::Triangles(m.triangles()), &[("phi", VtkData::Cell(&vals))]);
        assert!(s.contains("CELLS 20 80"));
        assert!(s.contains("CELL_DATA 20"));
    }
}
