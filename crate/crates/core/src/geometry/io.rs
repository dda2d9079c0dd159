//! Reading and writing PLY, OBJ and XYZ files.
//!
//! Grammars (`⟨n⟩` is a decimal number, `#` starts a comment line):
//!
//! ```text
//! xyz   := { line }            line := ⟨x₁⟩ … ⟨x_d⟩ | "#" … | ""
//!                              every data line has the same number d of values
//! obj   := { line }            line := "v" ⟨x⟩ ⟨y⟩ ⟨z⟩ [⟨w⟩]
//!                                    | "f" ⟨i⟩ ⟨j⟩ ⟨k⟩ { ⟨l⟩ }   (1-based or negative, "i/t/n" allowed)
//!                                    | "#" … | any other keyword (ignored)
//! ply   := "ply" NL "format" ("ascii" | "binary_little_endian") "1.0" NL
//!          { "comment" … NL | "obj_info" … NL | element }
//!          "end_header" NL body
//! element := "element" ⟨name⟩ ⟨count⟩ NL { "property" ⟨type⟩ ⟨name⟩ NL
//!                                        | "property list" ⟨type⟩ ⟨type⟩ ⟨name⟩ NL }
//! ```
//!
//! PLY vertices need `x`, `y`, `z` properties; other vertex properties
//! (normals, colors) are skipped on read. Faces come from the
//! `vertex_indices` (or `vertex_index`) list of the `face` element. Polygons
//! with more than three corners are fan triangulated. Text output uses 17
//! significant digits so coordinates survive a round trip exactly.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{PointCloud, TriangleMesh, Vec3};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    PlyAscii,
    PlyBinary,
    Obj,
    Xyz,
}

impl FileFormat {
    /// Guesses the format from the file extension. `.ply` maps to ASCII PLY
    /// for writing; reading accepts either PLY encoding.
    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .unwrap_or_default();
        match ext.as_str() {
            "ply" => Ok(FileFormat::PlyAscii),
            "obj" => Ok(FileFormat::Obj),
            "xyz" | "txt" | "pts" => Ok(FileFormat::Xyz),
            _ => Err(Error::UnknownLabel(format!("file extension of {}", path.display()))),
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "ply" | "ply-ascii" => Ok(FileFormat::PlyAscii),
            "ply-binary" => Ok(FileFormat::PlyBinary),
            "obj" => Ok(FileFormat::Obj),
            "xyz" => Ok(FileFormat::Xyz),
            _ => Err(Error::UnknownLabel(name.to_string())),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn load_points(path: &Path, format: FileFormat) -> Result<PointCloud> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    match format {
        FileFormat::PlyAscii | FileFormat::PlyBinary => {
            let ply = read_ply(&bytes)?;
            PointCloud::new(3, ply.vertices.into_iter().flatten().collect())
        }
        FileFormat::Obj => {
            let (vertices, _) = read_obj(&text(&bytes)?)?;
            PointCloud::new(3, vertices.into_iter().flatten().collect())
        }
        FileFormat::Xyz => read_xyz(&text(&bytes)?),
    }
}

pub fn save_points(cloud: &PointCloud, path: &Path, format: FileFormat) -> Result<()> {
    if format != FileFormat::Xyz && cloud.dim() != 3 {
        return Err(Error::invalid(format!(
            "{format:?} stores 3D points, the cloud is {}-dimensional",
            cloud.dim()
        )));
    }
    let vertices: Vec<Vec3> = if cloud.dim() == 3 {
        cloud.points().map(|p| [p[0], p[1], p[2]]).collect()
    } else {
        Vec::new()
    };
    let mut out = Vec::new();
    match format {
        FileFormat::PlyAscii => write_ply_ascii(&mut out, &vertices, None),
        FileFormat::PlyBinary => write_ply_binary(&mut out, &vertices, None),
        FileFormat::Obj => write_obj(&mut out, &vertices, &[]),
        FileFormat::Xyz => write_xyz(&mut out, cloud),
    }
    write_file(path, &out)
}

pub fn load_mesh(path: &Path, format: FileFormat) -> Result<TriangleMesh> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    match format {
        FileFormat::PlyAscii | FileFormat::PlyBinary => {
            let ply = read_ply(&bytes)?;
            TriangleMesh::new(ply.vertices, ply.faces)
        }
        FileFormat::Obj => {
            let (vertices, faces) = read_obj(&text(&bytes)?)?;
            TriangleMesh::new(vertices, faces)
        }
        FileFormat::Xyz => Err(Error::invalid("XYZ files cannot hold meshes")),
    }
}

pub fn save_mesh(mesh: &TriangleMesh, path: &Path, format: FileFormat) -> Result<()> {
    let mut out = Vec::new();
    match format {
        FileFormat::PlyAscii => write_ply_ascii(&mut out, mesh.vertices(), Some(mesh.faces())),
        FileFormat::PlyBinary => write_ply_binary(&mut out, mesh.vertices(), Some(mesh.faces())),
        FileFormat::Obj => write_obj(&mut out, mesh.vertices(), mesh.faces()),
        FileFormat::Xyz => return Err(Error::invalid("XYZ files cannot hold meshes")),
    }
    write_file(path, &out)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    w.write_all(bytes).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

fn text(bytes: &[u8]) -> Result<String> {
    String::from_utf8(bytes.to_vec()).map_err(|e| {
        let line = bytes[..e.utf8_error().valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
        Error::parse(line, "invalid UTF-8")
    })
}

fn parse_f64(token: &str, line: usize) -> Result<f64> {
    let v: f64 = token
        .parse()
        .map_err(|_| Error::parse(line, format!("`{token}` is not a number")))?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("non-finite value `{token}`")));
    }
    Ok(v)
}

// ---------------------------------------------------------------- XYZ

fn read_xyz(text: &str) -> Result<PointCloud> {
    let mut dim = 0;
    let mut coords = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let row = t
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| parse_f64(s, line_no))
            .collect::<Result<Vec<f64>>>()?;
        if dim == 0 {
            dim = row.len();
        } else if row.len() != dim {
            return Err(Error::parse(line_no, format!("expected {dim} values, found {}", row.len())));
        }
        coords.extend(row);
    }
    if dim == 0 {
        return Ok(PointCloud::empty(3));
    }
    PointCloud::new(dim, coords)
}

fn write_xyz(out: &mut Vec<u8>, cloud: &PointCloud) {
    for p in cloud.points() {
        let row: Vec<String> = p.iter().map(|c| format!("{c:.16e}")).collect();
        out.extend_from_slice(row.join(" ").as_bytes());
        out.push(b'\n');
    }
}

// ---------------------------------------------------------------- OBJ

fn read_obj(text: &str) -> Result<(Vec<Vec3>, Vec<[usize; 3]>)> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let vals = tokens.map(|t| parse_f64(t, line_no)).collect::<Result<Vec<f64>>>()?;
                if vals.len() < 3 || vals.len() > 4 {
                    return Err(Error::parse(line_no, "vertex needs 3 coordinates"));
                }
                vertices.push([vals[0], vals[1], vals[2]]);
            }
            Some("f") => {
                let mut idx = Vec::new();
                for t in tokens {
                    let first = t.split('/').next().unwrap_or("");
                    let k: i64 = first
                        .parse()
                        .map_err(|_| Error::parse(line_no, format!("bad face index `{t}`")))?;
                    let resolved = if k > 0 {
                        k - 1
                    } else if k < 0 {
                        vertices.len() as i64 + k
                    } else {
                        -1
                    };
                    if resolved < 0 || resolved as usize >= vertices.len() {
                        return Err(Error::parse(line_no, format!("face index {k} out of range")));
                    }
                    idx.push(resolved as usize);
                }
                if idx.len() < 3 {
                    return Err(Error::parse(line_no, "face needs at least 3 vertices"));
                }
                for k in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    Ok((vertices, faces))
}

fn write_obj(out: &mut Vec<u8>, vertices: &[Vec3], faces: &[[usize; 3]]) {
    for v in vertices {
        out.extend_from_slice(format!("v {:.16e} {:.16e} {:.16e}\n", v[0], v[1], v[2]).as_bytes());
    }
    for f in faces {
        out.extend_from_slice(format!("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1).as_bytes());
    }
}

// ---------------------------------------------------------------- PLY

#[derive(Debug, Clone, Copy, PartialEq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().expect("8 bytes")),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar(Scalar, String),
    List(Scalar, Scalar, String),
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

struct PlyData {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
}

fn read_ply(bytes: &[u8]) -> Result<PlyData> {
    // header
    let mut pos = 0;
    let mut line_no = 0;
    let next_line = |pos: &mut usize| -> Option<String> {
        if *pos >= bytes.len() {
            return None;
        }
        let end = bytes[*pos..].iter().position(|&b| b == b'\n').map_or(bytes.len(), |e| *pos + e);
        let line = String::from_utf8_lossy(&bytes[*pos..end]).trim_end_matches('\r').to_string();
        *pos = (end + 1).min(bytes.len());
        Some(line)
    };
    let header_line = |pos: &mut usize, line_no: &mut usize| -> Result<String> {
        *line_no += 1;
        next_line(pos).ok_or_else(|| Error::parse(*line_no, "unexpected end of PLY header"))
    };

    if header_line(&mut pos, &mut line_no)?.trim() != "ply" {
        return Err(Error::parse(1, "missing `ply` magic"));
    }
    let mut binary = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let line = header_line(&mut pos, &mut line_no)?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.first().copied() {
            Some("format") => {
                binary = match tokens.get(1).copied() {
                    Some("ascii") => Some(false),
                    Some("binary_little_endian") => Some(true),
                    other => {
                        return Err(Error::parse(line_no, format!("unsupported PLY format {other:?}")));
                    }
                };
            }
            Some("comment") | Some("obj_info") => {}
            Some("element") => {
                if tokens.len() != 3 {
                    return Err(Error::parse(line_no, "malformed element line"));
                }
                let count = tokens[2]
                    .parse()
                    .map_err(|_| Error::parse(line_no, format!("bad element count `{}`", tokens[2])))?;
                elements.push(Element {
                    name: tokens[1].to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse(line_no, "property outside an element"))?;
                let bad = || Error::parse(line_no, "malformed property line");
                let prop = if tokens.get(1) == Some(&"list") {
                    if tokens.len() != 5 {
                        return Err(bad());
                    }
                    let ct = Scalar::parse(tokens[2]).ok_or_else(bad)?;
                    let it = Scalar::parse(tokens[3]).ok_or_else(bad)?;
                    Property::List(ct, it, tokens[4].to_string())
                } else {
                    if tokens.len() != 3 {
                        return Err(bad());
                    }
                    Property::Scalar(Scalar::parse(tokens[1]).ok_or_else(bad)?, tokens[2].to_string())
                };
                el.properties.push(prop);
            }
            Some("end_header") => break,
            _ => return Err(Error::parse(line_no, format!("unexpected header line `{line}`"))),
        }
    }
    let binary = binary.ok_or_else(|| Error::parse(line_no, "PLY header has no format line"))?;

    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut body = PlyBody {
        bytes,
        pos,
        line_no,
        binary,
        tokens: Vec::new(),
    };
    for el in &elements {
        let scalar_pos = |name: &str| {
            el.properties
                .iter()
                .position(|p| matches!(p, Property::Scalar(_, n) if n == name))
        };
        let xyz = [scalar_pos("x"), scalar_pos("y"), scalar_pos("z")];
        let face_list = el.properties.iter().position(
            |p| matches!(p, Property::List(_, _, n) if n == "vertex_indices" || n == "vertex_index"),
        );
        if el.name == "vertex" && xyz.iter().any(|p| p.is_none()) {
            return Err(Error::parse(body.line_no, "vertex element lacks x, y or z"));
        }
        for _ in 0..el.count {
            body.start_row()?;
            let mut row: Vec<Vec<f64>> = Vec::with_capacity(el.properties.len());
            for p in &el.properties {
                row.push(match p {
                    Property::Scalar(t, _) => vec![body.value(*t)?],
                    Property::List(ct, it, _) => {
                        let n = body.value(*ct)?;
                        if !(n >= 0.0) {
                            return Err(Error::parse(body.line_no, "negative list length"));
                        }
                        (0..n as usize).map(|_| body.value(*it)).collect::<Result<_>>()?
                    }
                });
            }
            body.end_row()?;
            if el.name == "vertex" {
                let v = xyz.map(|p| row[p.expect("checked")][0]);
                if v.iter().any(|c| !c.is_finite()) {
                    return Err(Error::parse(body.line_no, "non-finite vertex coordinate"));
                }
                vertices.push(v);
            } else if el.name == "face" {
                if let Some(fp) = face_list {
                    let idx = &row[fp];
                    if idx.len() < 3 {
                        return Err(Error::parse(body.line_no, "face needs at least 3 vertices"));
                    }
                    if idx.iter().any(|&i| i < 0.0 || i.fract() != 0.0) {
                        return Err(Error::parse(body.line_no, "invalid vertex index"));
                    }
                    for k in 1..idx.len() - 1 {
                        faces.push([idx[0] as usize, idx[k] as usize, idx[k + 1] as usize]);
                    }
                }
            }
        }
    }
    Ok(PlyData { vertices, faces })
}

struct PlyBody<'a> {
    bytes: &'a [u8],
    pos: usize,
    line_no: usize,
    binary: bool,
    tokens: Vec<String>,
}

impl PlyBody<'_> {
    fn start_row(&mut self) -> Result<()> {
        if self.binary {
            return Ok(());
        }
        loop {
            if self.pos >= self.bytes.len() {
                return Err(Error::parse(self.line_no + 1, "unexpected end of PLY data"));
            }
            let end = self.bytes[self.pos..]
                .iter()
                .position(|&b| b == b'\n')
                .map_or(self.bytes.len(), |e| self.pos + e);
            let line = String::from_utf8_lossy(&self.bytes[self.pos..end]).to_string();
            self.pos = end + 1;
            self.line_no += 1;
            let mut toks: Vec<String> = line.split_whitespace().map(str::to_string).collect();
            if toks.is_empty() {
                continue;
            }
            toks.reverse();
            self.tokens = toks;
            return Ok(());
        }
    }

    fn end_row(&mut self) -> Result<()> {
        if !self.binary && !self.tokens.is_empty() {
            return Err(Error::parse(self.line_no, "too many values on line"));
        }
        Ok(())
    }

    fn value(&mut self, t: Scalar) -> Result<f64> {
        if self.binary {
            let n = t.size();
            if self.pos + n > self.bytes.len() {
                return Err(Error::parse(self.line_no + 1, "unexpected end of binary PLY data"));
            }
            let v = t.read_le(&self.bytes[self.pos..self.pos + n]);
            self.pos += n;
            Ok(v)
        } else {
            let tok = self
                .tokens
                .pop()
                .ok_or_else(|| Error::parse(self.line_no, "too few values on line"))?;
            tok.parse::<f64>()
                .map_err(|_| Error::parse(self.line_no, format!("`{tok}` is not a number")))
        }
    }
}

fn ply_header(out: &mut Vec<u8>, format: &str, n_vertices: usize, n_faces: Option<usize>) {
    let mut h = format!(
        "ply\nformat {format} 1.0\nelement vertex {n_vertices}\nproperty double x\nproperty double y\nproperty double z\n"
    );
    if let Some(nf) = n_faces {
        h.push_str(&format!("element face {nf}\nproperty list uchar int vertex_indices\n"));
    }
    h.push_str("end_header\n");
    out.extend_from_slice(h.as_bytes());
}

fn write_ply_ascii(out: &mut Vec<u8>, vertices: &[Vec3], faces: Option<&[[usize; 3]]>) {
    ply_header(out, "ascii", vertices.len(), faces.map(|f| f.len()));
    for v in vertices {
        out.extend_from_slice(format!("{:.16e} {:.16e} {:.16e}\n", v[0], v[1], v[2]).as_bytes());
    }
    for f in faces.unwrap_or(&[]) {
        out.extend_from_slice(format!("3 {} {} {}\n", f[0], f[1], f[2]).as_bytes());
    }
}

fn write_ply_binary(out: &mut Vec<u8>, vertices: &[Vec3], faces: Option<&[[usize; 3]]>) {
    ply_header(out, "binary_little_endian", vertices.len(), faces.map(|f| f.len()));
    for v in vertices {
        for c in v {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
    for f in faces.unwrap_or(&[]) {
        out.push(3);
        for &i in f {
            out.extend_from_slice(&(i as i32).to_le_bytes());
        }
    }
}
