//! Bit-exact binary state snapshots.
//!
//! Layout (all multi-byte values little-endian):
//!
//! ```text
//! magic   6 bytes  "MSFLD1"
//! version u32      1
//! N       u32      points per axis
//! L       f64      box side length
//! t       f64      snapshot time
//! gamma   f64      nonlinearity exponent
//! count   u32      number of fields (3)
//! tags    count × u32:  1 = u (complex scalar), 2 = A, 3 = At (real 3-vector)
//! payload fields in tag order, f64 samples, x-fastest index order,
//!         complex stored interleaved (re, im)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_complex::Complex64;

use crate::error::MsError;
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;
use crate::physics::State;
use crate::Result;

pub const MAGIC: &[u8; 6] = b"MSFLD1";
pub const VERSION: u32 = 1;

const TAG_U: u32 = 1;
const TAG_A: u32 = 2;
const TAG_AT: u32 = 3;

/// Header metadata returned alongside a read state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnapshotMeta {
    pub n: u32,
    pub length: f64,
    pub t: f64,
    pub gamma: f64,
}

/// Writes one state with its physical exponent.
pub fn write_snapshot(s: &State, gamma: f64, path: &Path) -> Result<()> {
    let grid = s.grid();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    w.write_u32::<LittleEndian>(grid.n() as u32)?;
    w.write_f64::<LittleEndian>(grid.length())?;
    w.write_f64::<LittleEndian>(s.t)?;
    w.write_f64::<LittleEndian>(gamma)?;
    w.write_u32::<LittleEndian>(3)?;
    for tag in [TAG_U, TAG_A, TAG_AT] {
        w.write_u32::<LittleEndian>(tag)?;
    }
    for v in s.u.values() {
        w.write_f64::<LittleEndian>(v.re)?;
        w.write_f64::<LittleEndian>(v.im)?;
    }
    for f in [&s.a, &s.at] {
        for j in 0..3 {
            for &v in f.comp(j) {
                w.write_f64::<LittleEndian>(v)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a snapshot back, rebuilding its grid from the header.
pub fn read_snapshot(path: &Path) -> Result<(State, SnapshotMeta)> {
    let file = File::open(path)?;
    let expected_len = file.metadata()?.len();
    let mut r = BufReader::new(file);

    let mut magic = [0u8; 6];
    r.read_exact(&mut magic)
        .map_err(|_| MsError::Snapshot("file too short for header".into()))?;
    if &magic != MAGIC {
        return Err(MsError::Snapshot(format!(
            "bad magic {:?}, expected {:?}",
            magic, MAGIC
        )));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(MsError::Snapshot(format!(
            "unsupported version {version}, expected {VERSION}"
        )));
    }
    let n = r.read_u32::<LittleEndian>()?;
    let length = r.read_f64::<LittleEndian>()?;
    let t = r.read_f64::<LittleEndian>()?;
    let gamma = r.read_f64::<LittleEndian>()?;
    let count = r.read_u32::<LittleEndian>()?;
    if count != 3 {
        return Err(MsError::Snapshot(format!(
            "unexpected field count {count}, expected 3"
        )));
    }
    let mut tags = [0u32; 3];
    for tag in tags.iter_mut() {
        *tag = r.read_u32::<LittleEndian>()?;
    }
    if tags != [TAG_U, TAG_A, TAG_AT] {
        return Err(MsError::Snapshot(format!("unexpected field tag table {tags:?}")));
    }

    let npts = (n as u64) * (n as u64) * (n as u64);
    let header_bytes = 6 + 4 + 4 + 8 + 8 + 8 + 4 + 12;
    let payload_bytes = 8 * npts * (2 + 3 + 3);
    let declared = header_bytes + payload_bytes;
    if expected_len != declared {
        return Err(MsError::Snapshot(format!(
            "payload length mismatch: header N = {n} declares {declared} bytes, file has {expected_len}"
        )));
    }

    let grid = Grid::new(n as usize, length)
        .map_err(|e| MsError::Snapshot(format!("header grid invalid: {e}")))?;
    let state = read_payload(&grid, &mut r, t)?;
    Ok((
        state,
        SnapshotMeta {
            n,
            length,
            t,
            gamma,
        },
    ))
}

/// Reads a snapshot that must live on the given grid; errors name both the
/// requesting and stored dimensions.
pub fn read_snapshot_on(grid: &Arc<Grid>, path: &Path) -> Result<(State, SnapshotMeta)> {
    let (state, meta) = read_snapshot(path)?;
    if meta.n as usize != grid.n() || meta.length != grid.length() {
        return Err(MsError::Snapshot(format!(
            "snapshot grid N = {}, L = {} does not match requested N = {}, L = {}",
            meta.n,
            meta.length,
            grid.n(),
            grid.length()
        )));
    }
    Ok((state, meta))
}

fn read_payload(grid: &Arc<Grid>, r: &mut impl Read, t: f64) -> Result<State> {
    let npts = grid.len();
    let mut uv = Vec::with_capacity(npts);
    for _ in 0..npts {
        let re = r.read_f64::<LittleEndian>()?;
        let im = r.read_f64::<LittleEndian>()?;
        uv.push(Complex64::new(re, im));
    }
    let u = ScalarField::from_values(grid, uv);
    let mut read_vec = || -> Result<VectorField> {
        let mut comps: [Vec<f64>; 3] = std::array::from_fn(|_| Vec::with_capacity(npts));
        for comp in comps.iter_mut() {
            for _ in 0..npts {
                comp.push(r.read_f64::<LittleEndian>()?);
            }
        }
        Ok(VectorField::from_comps(grid, comps))
    };
    let a = read_vec()?;
    let at = read_vec()?;
    // Snapshots of valid states are solenoidal; go through the checked
    // constructor so corrupted payloads are rejected.
    State::new(t, u, a, at)
}
