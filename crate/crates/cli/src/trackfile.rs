//! Binary space-time track files.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! "MCFT"            4 bytes
//! version           u32 (= 1)
//! n, N              u32, u32
//! per axis          points u32, periodic u8, origin f64, extent f64, winding N x f64
//! stencil order     u32 (2 or 4)
//! ambient kind      u32 (0 Euclidean, 1 flat torus), then N x f64 periods for a torus
//! snapshot count    u64
//! per snapshot      time f64, then points x N f64 (point-major)
//! ```

use std::io::Write;
use std::path::Path;

use geoflow::{Ambient, Axis, Immersion, ParamGrid, Snapshot, SpaceTimeTrack, StencilOrder};

use crate::error::{CliError, CliResult};

pub const MAGIC: &[u8; 4] = b"MCFT";
pub const VERSION: u32 = 1;

pub fn encode(track: &SpaceTimeTrack) -> Vec<u8> {
    let t = track.template();
    let dim = t.ambient_dim();
    let grid = t.grid();
    let mut out = Vec::with_capacity(64 + track.len() * (8 + 8 * t.positions().len()));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(grid.n() as u32).to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    for (i, axis) in grid.axes().iter().enumerate() {
        out.extend_from_slice(&(axis.points as u32).to_le_bytes());
        out.push(axis.periodic as u8);
        out.extend_from_slice(&axis.origin.to_le_bytes());
        out.extend_from_slice(&axis.extent.to_le_bytes());
        for v in t.winding_of(i) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.extend_from_slice(&(grid.order().accuracy() as u32).to_le_bytes());
    match t.ambient() {
        Ambient::Euclidean => out.extend_from_slice(&0u32.to_le_bytes()),
        Ambient::FlatTorus { periods } => {
            out.extend_from_slice(&1u32.to_le_bytes());
            for p in periods {
                out.extend_from_slice(&p.to_le_bytes());
            }
        }
    }
    out.extend_from_slice(&(track.len() as u64).to_le_bytes());
    for s in track.snapshots() {
        out.extend_from_slice(&s.time.to_le_bytes());
        for v in &s.positions {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8], String> {
        if self.bytes.len() - self.pos < k {
            return Err(format!("truncated at byte {}", self.pos));
        }
        let s = &self.bytes[self.pos..self.pos + k];
        self.pos += k;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, String> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64, String> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, k: usize) -> Result<Vec<f64>, String> {
        let raw = self.take(k.checked_mul(8).ok_or("size overflow")?)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
    }
}

pub fn decode(bytes: &[u8]) -> Result<SpaceTimeTrack, String> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err("bad magic bytes".into());
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(format!("unsupported format version {version}"));
    }
    let n = r.u32()? as usize;
    let dim = r.u32()? as usize;
    if !(1..=2).contains(&n) || dim <= n || dim > geoflow::grid::MAX_AMBIENT_DIM {
        return Err(format!("bad dimensions n = {n}, N = {dim}"));
    }
    let mut axes = Vec::with_capacity(n);
    let mut windings = Vec::with_capacity(n);
    for _ in 0..n {
        let points = r.u32()? as usize;
        let periodic = match r.u8()? {
            0 => false,
            1 => true,
            b => return Err(format!("bad periodic flag {b}")),
        };
        let origin = r.f64()?;
        let extent = r.f64()?;
        axes.push(Axis { points, origin, extent, periodic });
        windings.push(r.f64s(dim)?);
    }
    let order = StencilOrder::from_accuracy(r.u32()? as usize).ok_or("bad stencil order")?;
    let ambient = match r.u32()? {
        0 => Ambient::Euclidean,
        1 => Ambient::FlatTorus { periods: r.f64s(dim)? },
        k => return Err(format!("bad ambient kind {k}")),
    };
    let grid = ParamGrid::new(axes, order).map_err(|e| e.to_string())?;
    let count = r.u64()? as usize;
    let coords = grid.len() * dim;
    let expected = count.checked_mul(8 * (coords + 1)).ok_or("size overflow")?;
    if bytes.len() - r.pos != expected {
        return Err(format!("expected {expected} bytes of snapshots, found {}", bytes.len() - r.pos));
    }
    if count == 0 {
        return Err("track has no snapshots".into());
    }
    let mut snapshots = Vec::with_capacity(count);
    for _ in 0..count {
        let time = r.f64()?;
        snapshots.push(Snapshot { time, positions: r.f64s(coords)? });
    }
    let mut template =
        Immersion::new(grid, dim, snapshots[0].positions.clone(), ambient).map_err(|e| e.to_string())?;
    for (i, w) in windings.iter().enumerate() {
        if template.grid().axis(i).periodic {
            template = template.with_winding(i, w).map_err(|e| e.to_string())?;
        } else if w.iter().any(|v| *v != 0.0) {
            return Err(format!("winding on non-periodic axis {i}"));
        }
    }
    SpaceTimeTrack::from_parts(template, snapshots).map_err(|e| e.to_string())
}

pub fn read_track(path: &Path) -> CliResult<SpaceTimeTrack> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode(&bytes).map_err(|message| CliError::CorruptTrack { path: path.to_path_buf(), message })
}

/// Writes to a temporary file in the target directory, then renames it over
/// `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn write_track(path: &Path, track: &SpaceTimeTrack) -> CliResult<()> {
    write_atomic(path, &encode(track))
}
