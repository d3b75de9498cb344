use super::{Field, FormKind, Grid};
use crate::error::{Result, VwError};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

const MAGIC: &[u8; 4] = b"VWF1";
/// Degree tag used for dense matrix dumps; `comps` then holds the side length.
pub const MATRIX_DEGREE: u32 = 255;
/// Self-dual fields carry this component count with degree 2.
const SELFDUAL_COMPS: u32 = 9;

/// Sidecar metadata written next to a snapshot as `<path>.json`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub seed: Option<u64>,
    pub band: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn header(n: u32, length: f64, degree: u32, comps: u32) -> Vec<u8> {
    let mut h = Vec::with_capacity(24);
    h.extend_from_slice(MAGIC);
    h.extend_from_slice(&n.to_le_bytes());
    h.extend_from_slice(&length.to_le_bytes());
    h.extend_from_slice(&degree.to_le_bytes());
    h.extend_from_slice(&comps.to_le_bytes());
    h
}

fn write_raw(path: &Path, head: &[u8], data: &[f64], meta: &SnapshotMeta) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(head)?;
    for x in data {
        w.write_all(&x.to_le_bytes())?;
    }
    w.flush()?;
    std::fs::write(sidecar(path), serde_json::to_string_pretty(meta)?)?;
    Ok(())
}

struct Raw {
    n: u32,
    length: f64,
    degree: u32,
    comps: u32,
    data: Vec<f64>,
}

fn read_raw(path: &Path) -> Result<Raw> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 24 || &bytes[..4] != MAGIC {
        return Err(VwError::Format("not a VWF1 snapshot".into()));
    }
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let n = u32_at(4);
    let length = f64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let (degree, comps) = (u32_at(16), u32_at(20));
    let body = &bytes[24..];
    if body.len() % 8 != 0 {
        return Err(VwError::Format("truncated snapshot body".into()));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Raw {
        n,
        length,
        degree,
        comps,
        data,
    })
}

fn read_meta(path: &Path) -> Result<SnapshotMeta> {
    let p = sidecar(path);
    if !p.exists() {
        return Ok(SnapshotMeta::default());
    }
    Ok(serde_json::from_str(&std::fs::read_to_string(p)?)?)
}

pub fn write_field(path: &Path, field: &Field, meta: &SnapshotMeta) -> Result<()> {
    let g = field.grid();
    let head = header(
        g.n() as u32,
        g.length(),
        field.kind().degree() as u32,
        field.comps() as u32,
    );
    write_raw(path, &head, field.data(), meta)
}

pub fn read_field(path: &Path) -> Result<(Field, SnapshotMeta)> {
    let raw = read_raw(path)?;
    if raw.degree > 4 {
        return Err(VwError::Format(format!("field degree {} in snapshot", raw.degree)));
    }
    let grid = Grid::new(raw.n as usize, raw.length)?;
    let kind = if raw.degree == 2 && raw.comps == SELFDUAL_COMPS {
        FormKind::SelfDual
    } else {
        FormKind::Form(raw.degree as usize)
    };
    if kind.comps() != raw.comps as usize {
        return Err(VwError::Format(format!(
            "degree {} with {} components",
            raw.degree, raw.comps
        )));
    }
    Ok((Field::from_data(grid, kind, raw.data)?, read_meta(path)?))
}

/// Dump a row-major square matrix with the grid it was assembled on.
pub fn write_matrix(path: &Path, grid: &Grid, side: usize, data: &[f64], meta: &SnapshotMeta) -> Result<()> {
    if data.len() != side * side {
        return Err(VwError::ShapeMismatch(format!("{} entries for side {side}", data.len())));
    }
    let head = header(grid.n() as u32, grid.length(), MATRIX_DEGREE, side as u32);
    write_raw(path, &head, data, meta)
}

/// Returns `(grid, side, row-major entries, meta)`.
pub fn read_matrix(path: &Path) -> Result<(Grid, usize, Vec<f64>, SnapshotMeta)> {
    let raw = read_raw(path)?;
    if raw.degree != MATRIX_DEGREE {
        return Err(VwError::Format("snapshot is not a matrix".into()));
    }
    let side = raw.comps as usize;
    if raw.data.len() != side * side {
        return Err(VwError::Format("matrix body has wrong length".into()));
    }
    Ok((Grid::new(raw.n as usize, raw.length)?, side, raw.data, read_meta(path)?))
}
