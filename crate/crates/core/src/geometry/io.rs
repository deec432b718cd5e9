//! Geometry interchange formats.
//!
//! Text: a header line `D2 <nx> <ny>` or `D3 <nx> <ny> <nz>`, then `ny` rows
//! (2D) or `nz` blank-line separated slices of `ny` rows (3D), each `nx`
//! characters wide (`#` solid, `.` fluid, `V` velocity boundary, `P`
//! pressure boundary). The first row is `y = 0`. Optional trailing lines
//! `vel <ux> <uy> [uz]` and `rho <value>` set the boundary parameters.
//!
//! Binary: `SPLB`, version byte `1`, dimension byte, three little-endian
//! `u32` extents (`nz = 1` in 2D), then one type code per node, x fastest.

use std::path::Path;

use super::{BoundaryParams, Geometry, NodeType};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"SPLB";
const VERSION: u8 = 1;
const HEADER_LEN: usize = 4 + 1 + 1 + 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeometryFormat {
    Text,
    Binary,
}

impl GeometryFormat {
    /// Binary if the payload starts with the magic bytes, text otherwise.
    pub fn detect(bytes: &[u8]) -> Self {
        if bytes.starts_with(MAGIC) {
            GeometryFormat::Binary
        } else {
            GeometryFormat::Text
        }
    }

    /// `.bin` selects the binary format; everything else is text.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("bin") => GeometryFormat::Binary,
            _ => GeometryFormat::Text,
        }
    }
}

pub fn load_geometry(bytes: &[u8], format: GeometryFormat) -> Result<Geometry> {
    match format {
        GeometryFormat::Text => {
            let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse {
                line: 0,
                column: e.valid_up_to(),
                message: "geometry text is not valid UTF-8".into(),
            })?;
            parse_text(text)
        }
        GeometryFormat::Binary => parse_binary(bytes),
    }
}

pub fn save_geometry(g: &Geometry, format: GeometryFormat) -> Vec<u8> {
    match format {
        GeometryFormat::Text => to_text(g).into_bytes(),
        GeometryFormat::Binary => to_binary(g),
    }
}

pub fn read_geometry(path: impl AsRef<Path>) -> Result<Geometry> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    load_geometry(&bytes, GeometryFormat::detect(&bytes))
}

pub fn write_geometry(path: impl AsRef<Path>, g: &Geometry, format: Option<GeometryFormat>) -> Result<()> {
    let path = path.as_ref();
    let format = format.unwrap_or_else(|| GeometryFormat::from_path(path));
    std::fs::write(path, save_geometry(g, format)).map_err(|e| Error::io(path, e))
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

fn parse_usize(tok: &str, line: usize, what: &str) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|_| parse_err(line, 1, format!("invalid {what} `{tok}`")))
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| parse_err(line, 1, format!("invalid number `{tok}`")))
}

fn parse_text(text: &str) -> Result<Geometry> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, 1, "empty geometry"))?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    let (d, dims) = match tokens.as_slice() {
        ["D2", nx, ny] => (2, [parse_usize(nx, 1, "nx")?, parse_usize(ny, 1, "ny")?, 1]),
        ["D3", nx, ny, nz] => (
            3,
            [
                parse_usize(nx, 1, "nx")?,
                parse_usize(ny, 1, "ny")?,
                parse_usize(nz, 1, "nz")?,
            ],
        ),
        _ => return Err(parse_err(1, 1, "header must be `D2 <nx> <ny>` or `D3 <nx> <ny> <nz>`")),
    };
    if dims.contains(&0) {
        return Err(parse_err(1, 1, "extents must be positive"));
    }
    let [nx, ny, nz] = dims;
    let expected = nx * ny * nz;
    let mut types = Vec::with_capacity(expected);
    let mut bc = BoundaryParams::default();
    let mut in_trailer = false;

    for (ln, raw) in lines {
        let line = raw.trim_end();
        if line.is_empty() {
            continue;
        }
        let mut words = line.split_whitespace();
        let first = words.next().unwrap_or("");
        if first == "vel" || first == "rho" {
            in_trailer = true;
            let values: Vec<f64> = words.map(|w| parse_f64(w, ln)).collect::<Result<_>>()?;
            if first == "rho" {
                if values.len() != 1 {
                    return Err(parse_err(ln, 1, "`rho` takes exactly one value"));
                }
                bc.density = values[0];
            } else {
                if values.len() < d.min(2) || values.len() > 3 || (d == 3 && values.len() != 3) {
                    return Err(parse_err(ln, 1, format!("`vel` needs {d} components")));
                }
                bc.velocity = [0.0; 3];
                bc.velocity[..values.len()].copy_from_slice(&values);
            }
            continue;
        }
        if in_trailer {
            return Err(parse_err(ln, 1, "grid rows after boundary parameters"));
        }
        let mut width = 0;
        for (col, c) in line.chars().enumerate() {
            let t = NodeType::from_symbol(c)
                .ok_or_else(|| parse_err(ln, col + 1, format!("unknown node symbol `{c}`")))?;
            if col >= nx {
                return Err(parse_err(ln, col + 1, format!("row longer than nx = {nx}")));
            }
            types.push(t);
            width += 1;
        }
        if width != nx {
            return Err(parse_err(ln, width + 1, format!("row has {width} nodes, expected {nx}")));
        }
        if types.len() > expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: types.len(),
            });
        }
    }
    if types.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: types.len(),
        });
    }
    let mut g = Geometry::from_types(d, dims, types)?;
    g.bc = bc;
    Ok(g)
}

fn to_text(g: &Geometry) -> String {
    let [nx, ny, nz] = g.dims();
    let mut out = String::with_capacity(g.n_nodes() + ny * nz + 64);
    if g.dim() == 2 {
        out.push_str(&format!("D2 {nx} {ny}\n"));
    } else {
        out.push_str(&format!("D3 {nx} {ny} {nz}\n"));
    }
    for z in 0..nz {
        if z > 0 {
            out.push('\n');
        }
        for y in 0..ny {
            for x in 0..nx {
                out.push(g.get(x, y, z).symbol());
            }
            out.push('\n');
        }
    }
    let v = g.bc.velocity;
    if g.dim() == 2 {
        out.push_str(&format!("vel {} {}\n", v[0], v[1]));
    } else {
        out.push_str(&format!("vel {} {} {}\n", v[0], v[1], v[2]));
    }
    out.push_str(&format!("rho {}\n", g.bc.density));
    out
}

fn parse_binary(bytes: &[u8]) -> Result<Geometry> {
    let bin_err = |offset: usize, message: &str| Error::Binary {
        offset,
        message: message.to_string(),
    };
    if bytes.len() < HEADER_LEN {
        return Err(bin_err(bytes.len(), "truncated header"));
    }
    if &bytes[..4] != MAGIC {
        return Err(bin_err(0, "bad magic"));
    }
    if bytes[4] != VERSION {
        return Err(bin_err(4, "unsupported version"));
    }
    let d = bytes[5] as usize;
    if d != 2 && d != 3 {
        return Err(bin_err(5, "dimension must be 2 or 3"));
    }
    let mut dims = [0usize; 3];
    for (k, dim) in dims.iter_mut().enumerate() {
        let off = 6 + 4 * k;
        let raw: [u8; 4] = bytes[off..off + 4].try_into().expect("slice of length 4");
        *dim = u32::from_le_bytes(raw) as usize;
        if *dim == 0 {
            return Err(bin_err(off, "zero extent"));
        }
    }
    if d == 2 && dims[2] != 1 {
        return Err(bin_err(14, "2D geometry must have nz = 1"));
    }
    let expected = dims.iter().product::<usize>();
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: payload.len(),
        });
    }
    let types = payload
        .iter()
        .enumerate()
        .map(|(i, &b)| NodeType::from_code(b).ok_or_else(|| bin_err(HEADER_LEN + i, "unknown node type code")))
        .collect::<Result<Vec<_>>>()?;
    Geometry::from_types(d, dims, types)
}

fn to_binary(g: &Geometry) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + g.n_nodes());
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(g.dim() as u8);
    for dim in g.dims() {
        out.extend_from_slice(&(dim as u32).to_le_bytes());
    }
    out.extend(g.types().iter().map(|t| t.code()));
    out
}
