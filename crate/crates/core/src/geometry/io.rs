//! OFF and Wavefront OBJ readers/writers. Polygons are fan-triangulated.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use super::{GeometryError, TriMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshFormat {
    Off,
    Obj,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "off" => Some(Self::Off),
            "obj" => Some(Self::Obj),
            _ => None,
        }
    }
}

impl FromStr for MeshFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "off" => Ok(Self::Off),
            "obj" => Ok(Self::Obj),
            other => Err(format!("unknown mesh format `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadOptions {
    /// Uniform scale applied to every coordinate (e.g. 0.001 for millimeter files).
    pub scale: f64,
    /// Drop zero-area faces instead of failing.
    pub drop_degenerate: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self { scale: 1.0, drop_degenerate: false }
    }
}

/// Reads a mesh file. The format is taken from `format` or, if `None`, from
/// the file extension.
pub fn load_mesh(
    path: &Path,
    format: Option<MeshFormat>,
    opts: LoadOptions,
) -> Result<TriMesh, GeometryError> {
    let format = format
        .or_else(|| MeshFormat::from_path(path))
        .ok_or_else(|| GeometryError::UnknownFormat(path.display().to_string()))?;
    let text = std::fs::read_to_string(path).map_err(|source| GeometryError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_mesh(&text, format, opts)
}

pub fn parse_mesh(
    text: &str,
    format: MeshFormat,
    opts: LoadOptions,
) -> Result<TriMesh, GeometryError> {
    let (mut vertices, faces) = match format {
        MeshFormat::Off => parse_off(text)?,
        MeshFormat::Obj => parse_obj(text)?,
    };
    if opts.scale != 1.0 {
        for v in &mut vertices {
            v.coords *= opts.scale;
        }
    }
    TriMesh::new(vertices, faces, opts.drop_degenerate)
}

fn parse_err(line: usize, message: impl Into<String>) -> GeometryError {
    GeometryError::Parse { line, message: message.into() }
}

fn parse_f64(tok: &str, line: usize) -> Result<f64, GeometryError> {
    tok.parse::<f64>().map_err(|_| parse_err(line, format!("expected a number, found `{tok}`")))
}

fn fan(poly: &[usize], faces: &mut Vec<[usize; 3]>) {
    for k in 1..poly.len() - 1 {
        faces.push([poly[0], poly[k], poly[k + 1]]);
    }
}

type Parsed = (Vec<Point3<f64>>, Vec<[usize; 3]>);

fn parse_off(text: &str) -> Result<Parsed, GeometryError> {
    // (line number, tokens) with comments stripped
    let mut lines = text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then(|| (i + 1, l.split_whitespace().collect::<Vec<_>>()))
    });

    let (hline, mut header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let first = header.remove(0);
    if !first.ends_with("OFF") {
        return Err(parse_err(hline, "missing OFF header"));
    }
    let counts = if header.is_empty() {
        lines.next().ok_or_else(|| parse_err(hline, "missing element counts"))?
    } else {
        (hline, header)
    };
    if counts.1.len() < 2 {
        return Err(parse_err(counts.0, "expected `nv nf [ne]`"));
    }
    let nv: usize = counts.1[0].parse().map_err(|_| parse_err(counts.0, "bad vertex count"))?;
    let nf: usize = counts.1[1].parse().map_err(|_| parse_err(counts.0, "bad face count"))?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, toks) = lines.next().ok_or_else(|| parse_err(0, "unexpected end of vertices"))?;
        if toks.len() < 3 {
            return Err(parse_err(ln, "vertex needs three coordinates"));
        }
        vertices.push(Point3::new(
            parse_f64(toks[0], ln)?,
            parse_f64(toks[1], ln)?,
            parse_f64(toks[2], ln)?,
        ));
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, toks) = lines.next().ok_or_else(|| parse_err(0, "unexpected end of faces"))?;
        let n: usize = toks[0].parse().map_err(|_| parse_err(ln, "bad polygon size"))?;
        if n < 3 || toks.len() < n + 1 {
            return Err(parse_err(ln, "polygon needs at least three indices"));
        }
        let poly = toks[1..=n]
            .iter()
            .map(|t| t.parse::<usize>().map_err(|_| parse_err(ln, format!("bad index `{t}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        fan(&poly, &mut faces);
    }
    Ok((vertices, faces))
}

fn parse_obj(text: &str) -> Result<Parsed, GeometryError> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("v") => {
                let c: Vec<&str> = toks.collect();
                if c.len() < 3 {
                    return Err(parse_err(ln, "vertex needs three coordinates"));
                }
                vertices.push(Point3::new(
                    parse_f64(c[0], ln)?,
                    parse_f64(c[1], ln)?,
                    parse_f64(c[2], ln)?,
                ));
            }
            Some("f") => {
                let mut poly = Vec::new();
                for t in toks {
                    let idx = t.split('/').next().unwrap_or("");
                    let k: i64 = idx.parse().map_err(|_| parse_err(ln, format!("bad index `{t}`")))?;
                    let resolved = match k {
                        0 => return Err(parse_err(ln, "OBJ indices are 1-based")),
                        k if k > 0 => (k - 1) as usize,
                        // negative indices count back from the latest vertex
                        k => {
                            let back = vertices.len() as i64 + k;
                            if back < 0 {
                                return Err(parse_err(ln, format!("relative index {k} before start")));
                            }
                            back as usize
                        }
                    };
                    poly.push(resolved);
                }
                if poly.len() < 3 {
                    return Err(parse_err(ln, "face needs at least three indices"));
                }
                fan(&poly, &mut faces);
            }
            _ => {}
        }
    }
    Ok((vertices, faces))
}

pub fn to_off(mesh: &TriMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "OFF\n{} {} 0", mesh.vertices.len(), mesh.faces.len());
    for v in &mesh.vertices {
        let _ = writeln!(s, "{:?} {:?} {:?}", v.x, v.y, v.z);
    }
    for f in &mesh.faces {
        let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
    }
    s
}

pub fn to_obj(mesh: &TriMesh) -> String {
    let mut s = String::new();
    for v in &mesh.vertices {
        let _ = writeln!(s, "v {:?} {:?} {:?}", v.x, v.y, v.z);
    }
    for f in &mesh.faces {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}
