//! Binary field snapshots: a small header followed by the real-space
//! samples as little-endian f64, component index outermost.

use std::fs;
use std::path::Path;

use crate::error::{LabError, Result};
use crate::spectral::{component_count, Grid, SpectralField};

pub const MAGIC: &[u8; 4] = b"EAFS";
pub const VERSION: u32 = 1;

/// A field together with its time stamp.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub time: f64,
    pub field: SpectralField,
}

/// Header length in bytes for a grid of dimension `dim`.
pub fn header_len(dim: usize) -> usize {
    4 + 4 * 3 + 4 * dim + 8
}

impl Snapshot {
    pub fn new(field: SpectralField, time: f64) -> Self {
        Self { time, field }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let f = &self.field;
        let dim = f.dim();
        let mut out = Vec::with_capacity(header_len(dim) + 8 * f.ncomp() * f.grid().len());
        out.extend_from_slice(MAGIC);
        for v in [VERSION, dim as u32, f.rank() as u32] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for _ in 0..dim {
            out.extend_from_slice(&(f.grid().n() as u32).to_le_bytes());
        }
        out.extend_from_slice(&self.time.to_le_bytes());
        for c in 0..f.ncomp() {
            for v in f.phys(c) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: String| LabError::Snapshot(m);
        let mut pos = 0usize;
        let mut take = |len: usize, what: &str| -> Result<&[u8]> {
            let end = pos + len;
            if end > bytes.len() {
                return Err(bad(format!("truncated while reading {what}: need {end} bytes, have {}", bytes.len())));
            }
            let s = &bytes[pos..end];
            pos = end;
            Ok(s)
        };
        if take(4, "magic")? != MAGIC {
            return Err(bad("bad magic, not a field snapshot".into()));
        }
        let u32_at = |s: &[u8]| u32::from_le_bytes(s.try_into().expect("4 bytes"));
        let version = u32_at(take(4, "version")?);
        if version != VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let dim = u32_at(take(4, "dimension")?) as usize;
        if dim != 2 && dim != 3 {
            return Err(bad(format!("dimension {dim} is not 2 or 3")));
        }
        let rank = u32_at(take(4, "rank")?) as usize;
        if rank > 2 {
            return Err(bad(format!("rank {rank} is not 0, 1 or 2")));
        }
        let mut res = Vec::with_capacity(dim);
        for _ in 0..dim {
            res.push(u32_at(take(4, "resolution")?) as usize);
        }
        if res.iter().any(|&n| n != res[0]) {
            return Err(bad(format!("resolution {res:?} is not the same along every axis")));
        }
        let time = f64::from_le_bytes(take(8, "time")?.try_into().expect("8 bytes"));
        let grid = Grid::new(dim, res[0])?;
        let ncomp = component_count(dim, rank);
        let payload = take(8 * ncomp * grid.len(), "payload")?;
        let phys: Vec<Vec<f64>> = payload
            .chunks_exact(8 * grid.len())
            .map(|c| c.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes"))).collect())
            .collect();
        if pos != bytes.len() {
            return Err(bad(format!("{} trailing bytes after the payload", bytes.len() - pos)));
        }
        Ok(Self { time, field: SpectralField::from_physical(&grid, rank, phys)? })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        Ok(fs::write(path, self.to_bytes())?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}
