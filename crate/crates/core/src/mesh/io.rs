//! Gmsh MSH 2.2 ASCII input and legacy VTK ASCII input/output.

use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

use super::{MeshError, SimplicialMesh};
use crate::field::NodalField;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate(),
            last: 0,
        }
    }

    /// Next non-blank line, trimmed.
    fn next(&mut self) -> Option<&'a str> {
        for (i, line) in self.inner.by_ref() {
            self.last = i + 1;
            let t = line.trim();
            if !t.is_empty() {
                return Some(t);
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<&'a str, FormatError> {
        self.next().ok_or_else(|| self.error(format!("unexpected end of file, expected {what}")))
    }

    fn error(&self, message: impl Into<String>) -> FormatError {
        FormatError::Parse {
            line: self.last,
            message: message.into(),
        }
    }

    fn numbers<T: std::str::FromStr>(&self, line: &str) -> Result<Vec<T>, FormatError> {
        line.split_whitespace()
            .map(|w| w.parse::<T>().map_err(|_| self.error(format!("invalid number {w:?}"))))
            .collect()
    }
}

/// Reads a Gmsh 2.2 ASCII mesh. Triangles (type 2) or tetrahedra (type 4)
/// become cells; lower-dimensional elements are ignored since the boundary is
/// derived from the cell topology. Nodes not used by any cell are dropped.
pub fn read_gmsh(text: &str) -> Result<SimplicialMesh, FormatError> {
    let mut lines = Lines::new(text);
    let mut nodes: Vec<(usize, [f64; 3])> = Vec::new();
    let mut tris: Vec<usize> = Vec::new();
    let mut tets: Vec<usize> = Vec::new();
    while let Some(line) = lines.next() {
        match line {
            "$MeshFormat" => {
                let header = lines.expect("format header")?;
                let mut words = header.split_whitespace();
                let version = words.next().unwrap_or("");
                let file_type = words.next().unwrap_or("");
                if !version.starts_with("2.") {
                    return Err(lines.error(format!("unsupported MSH version {version}")));
                }
                if file_type != "0" {
                    return Err(lines.error("binary MSH files are not supported"));
                }
                expect_end(&mut lines, "$EndMeshFormat")?;
            }
            "$Nodes" => {
                let n: usize = parse_count(&mut lines)?;
                nodes.reserve(n);
                for _ in 0..n {
                    let l = lines.expect("node")?;
                    let w: Vec<&str> = l.split_whitespace().collect();
                    if w.len() < 4 {
                        return Err(lines.error("node line needs id x y z"));
                    }
                    let id = w[0].parse().map_err(|_| lines.error("invalid node id"))?;
                    let xyz = lines.numbers::<f64>(&w[1..4].join(" "))?;
                    nodes.push((id, [xyz[0], xyz[1], xyz[2]]));
                }
                expect_end(&mut lines, "$EndNodes")?;
            }
            "$Elements" => {
                let n: usize = parse_count(&mut lines)?;
                for _ in 0..n {
                    let l = lines.expect("element")?;
                    let w = lines.numbers::<usize>(l)?;
                    if w.len() < 3 || w.len() < 3 + w[2] {
                        return Err(lines.error("truncated element line"));
                    }
                    let (etype, ntags) = (w[1], w[2]);
                    let conn = &w[3 + ntags..];
                    let target = match etype {
                        2 => Some((&mut tris, 3)),
                        4 => Some((&mut tets, 4)),
                        1 | 15 => None,
                        other => return Err(lines.error(format!("unsupported element type {other}"))),
                    };
                    if let Some((list, arity)) = target {
                        if conn.len() != arity {
                            return Err(lines.error("wrong number of element nodes"));
                        }
                        list.extend_from_slice(conn);
                    } else if conn.len() != if etype == 1 { 2 } else { 1 } {
                        return Err(lines.error("wrong number of element nodes"));
                    }
                }
                expect_end(&mut lines, "$EndElements")?;
            }
            section if section.starts_with('$') => {
                let end = format!("$End{}", &section[1..]);
                while lines.expect(&end)? != end {}
            }
            other => return Err(lines.error(format!("unexpected content {other:?}"))),
        }
    }
    let (dim, conn) = if tets.is_empty() { (2, tris) } else { (3, tets) };
    if conn.is_empty() {
        return Err(FormatError::Mesh(MeshError::Empty));
    }
    let id_to_pos: HashMap<usize, usize> = nodes.iter().enumerate().map(|(i, &(id, _))| (id, i)).collect();
    let mut new_index = vec![usize::MAX; nodes.len()];
    let mut points = Vec::new();
    let mut cells = Vec::with_capacity(conn.len());
    for id in conn {
        let pos = *id_to_pos.get(&id).ok_or_else(|| FormatError::Parse {
            line: lines.last,
            message: format!("element references unknown node {id}"),
        })?;
        if new_index[pos] == usize::MAX {
            new_index[pos] = points.len();
            let mut p = nodes[pos].1;
            if dim == 2 {
                p[2] = 0.0;
            }
            points.push(p);
        }
        cells.push(new_index[pos]);
    }
    Ok(SimplicialMesh::new(dim, points, cells)?)
}

pub fn read_gmsh_file(path: impl AsRef<Path>) -> Result<SimplicialMesh, FormatError> {
    read_gmsh(&fs::read_to_string(path)?)
}

fn parse_count(lines: &mut Lines<'_>) -> Result<usize, FormatError> {
    let l = lines.expect("count")?;
    l.parse().map_err(|_| lines.error(format!("invalid count {l:?}")))
}

fn expect_end(lines: &mut Lines<'_>, end: &str) -> Result<(), FormatError> {
    let l = lines.expect(end)?;
    if l != end {
        return Err(lines.error(format!("expected {end}, found {l:?}")));
    }
    Ok(())
}

/// Writes a legacy VTK ASCII unstructured grid with optional point data.
/// Numbers are written in shortest round-trip exponent form.
pub fn write_vtk(
    out: &mut impl Write,
    mesh: &SimplicialMesh,
    title: &str,
    fields: &[(&str, &NodalField)],
) -> Result<(), FormatError> {
    let arity = mesh.dim() + 1;
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "{}", title.lines().next().unwrap_or("").trim())?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {} double", mesh.n_vertices())?;
    for p in mesh.points() {
        writeln!(out, "{:e} {:e} {:e}", p[0], p[1], p[2])?;
    }
    writeln!(out, "CELLS {} {}", mesh.n_cells(), mesh.n_cells() * (arity + 1))?;
    for cell in mesh.cells() {
        write!(out, "{arity}")?;
        for v in cell {
            write!(out, " {v}")?;
        }
        writeln!(out)?;
    }
    writeln!(out, "CELL_TYPES {}", mesh.n_cells())?;
    let cell_type = if mesh.dim() == 2 { 5 } else { 10 };
    for _ in 0..mesh.n_cells() {
        writeln!(out, "{cell_type}")?;
    }
    if !fields.is_empty() {
        writeln!(out, "POINT_DATA {}", mesh.n_vertices())?;
    }
    for (name, field) in fields {
        if field.n_vertices() != mesh.n_vertices() {
            return Err(MeshError::FieldMismatch {
                expected: mesh.n_vertices(),
                actual: field.n_vertices(),
            }
            .into());
        }
        let name: String = name.chars().map(|c| if c.is_whitespace() { '_' } else { c }).collect();
        if field.is_scalar() {
            writeln!(out, "SCALARS {name} double 1")?;
            writeln!(out, "LOOKUP_TABLE default")?;
            for v in field.values() {
                writeln!(out, "{v:e}")?;
            }
        } else {
            writeln!(out, "VECTORS {name} double")?;
            for i in 0..field.n_vertices() {
                let v = field.at(i);
                let z = v.get(2).copied().unwrap_or(0.0);
                writeln!(out, "{:e} {:e} {:e}", v[0], v[1], z)?;
            }
        }
    }
    Ok(())
}

pub fn write_vtk_file(
    path: impl AsRef<Path>,
    mesh: &SimplicialMesh,
    title: &str,
    fields: &[(&str, &NodalField)],
) -> Result<(), FormatError> {
    let mut buf = Vec::new();
    write_vtk(&mut buf, mesh, title, fields)?;
    fs::write(path, buf)?;
    Ok(())
}

/// Contents of a legacy VTK file written by [`write_vtk`].
#[derive(Debug, Clone)]
pub struct VtkDocument {
    pub title: String,
    pub mesh: SimplicialMesh,
    pub fields: Vec<(String, NodalField)>,
}

/// Reads the legacy VTK subset produced by [`write_vtk`]: an unstructured
/// grid of only triangles or only tetrahedra with optional `SCALARS` and
/// `VECTORS` point data.
pub fn read_vtk(text: &str) -> Result<VtkDocument, FormatError> {
    let mut lines = Lines::new(text);
    let header = lines.expect("header")?;
    if !header.starts_with("# vtk DataFile") {
        return Err(lines.error("missing VTK header"));
    }
    // The title line may be blank, so read it raw.
    let title = lines.inner.next().map(|(_, l)| l.trim().to_string()).unwrap_or_default();
    lines.last += 1;
    if lines.expect("ASCII")? != "ASCII" {
        return Err(lines.error("only ASCII VTK is supported"));
    }
    if lines.expect("DATASET")? != "DATASET UNSTRUCTURED_GRID" {
        return Err(lines.error("only UNSTRUCTURED_GRID is supported"));
    }
    let mut points: Vec<[f64; 3]> = Vec::new();
    let mut conn: Vec<usize> = Vec::new();
    let mut arity = 0;
    let mut cell_types: Vec<usize> = Vec::new();
    let mut raw_fields: Vec<(String, usize, Vec<f64>)> = Vec::new();
    let mut n_point_data = 0;
    while let Some(line) = lines.next() {
        let w: Vec<&str> = line.split_whitespace().collect();
        match w[0] {
            "POINTS" => {
                let n: usize = count_word(&lines, &w, 1)?;
                let vals = read_values::<f64>(&mut lines, 3 * n)?;
                points = vals.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
            }
            "CELLS" => {
                let n: usize = count_word(&lines, &w, 1)?;
                let size: usize = count_word(&lines, &w, 2)?;
                let vals = read_values::<usize>(&mut lines, size)?;
                let mut k = 0;
                for _ in 0..n {
                    let a = *vals.get(k).ok_or_else(|| lines.error("truncated CELLS"))?;
                    if arity == 0 {
                        arity = a;
                    } else if a != arity {
                        return Err(lines.error("mixed cell sizes are not supported"));
                    }
                    conn.extend_from_slice(vals.get(k + 1..k + 1 + a).ok_or_else(|| lines.error("truncated CELLS"))?);
                    k += a + 1;
                }
            }
            "CELL_TYPES" => {
                let n: usize = count_word(&lines, &w, 1)?;
                cell_types = read_values::<usize>(&mut lines, n)?;
            }
            "POINT_DATA" => n_point_data = count_word(&lines, &w, 1)?,
            "SCALARS" => {
                let name = w.get(1).ok_or_else(|| lines.error("SCALARS without a name"))?;
                let comps = match w.get(3) {
                    Some(c) => c.parse().map_err(|_| lines.error("invalid component count"))?,
                    None => 1,
                };
                let table = lines.expect("LOOKUP_TABLE")?;
                if !table.starts_with("LOOKUP_TABLE") {
                    return Err(lines.error("expected LOOKUP_TABLE"));
                }
                let vals = read_values::<f64>(&mut lines, comps * n_point_data)?;
                raw_fields.push((name.to_string(), comps, vals));
            }
            "VECTORS" => {
                let name = w.get(1).ok_or_else(|| lines.error("VECTORS without a name"))?;
                let vals = read_values::<f64>(&mut lines, 3 * n_point_data)?;
                raw_fields.push((name.to_string(), 3, vals));
            }
            other => return Err(lines.error(format!("unsupported section {other}"))),
        }
    }
    let dim = match (arity, cell_types.first()) {
        (3, Some(5)) => 2,
        (4, Some(10)) => 3,
        _ => return Err(lines.error("cells must be all triangles or all tetrahedra")),
    };
    if cell_types.iter().any(|&t| t != cell_types[0]) {
        return Err(lines.error("mixed cell types are not supported"));
    }
    let mesh = SimplicialMesh::new(dim, points, conn)?;
    let fields = raw_fields
        .into_iter()
        .map(|(name, comps, vals)| {
            let field = if comps == 1 {
                NodalField::scalar(vals)
            } else {
                let v = vals.chunks_exact(3).flat_map(|c| c[..dim].to_vec()).collect();
                NodalField::vector(dim, v)
            };
            (name, field)
        })
        .collect();
    Ok(VtkDocument { title, mesh, fields })
}

pub fn read_vtk_file(path: impl AsRef<Path>) -> Result<VtkDocument, FormatError> {
    read_vtk(&fs::read_to_string(path)?)
}

fn count_word<T: std::str::FromStr>(lines: &Lines<'_>, w: &[&str], i: usize) -> Result<T, FormatError> {
    w.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| lines.error(format!("missing count in {:?}", w.join(" "))))
}

fn read_values<T: std::str::FromStr>(lines: &mut Lines<'_>, n: usize) -> Result<Vec<T>, FormatError> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let l = lines.expect("data values")?;
        out.extend(lines.numbers::<T>(l)?);
    }
    if out.len() != n {
        return Err(lines.error(format!("expected {n} values, found {}", out.len())));
    }
    Ok(out)
}
