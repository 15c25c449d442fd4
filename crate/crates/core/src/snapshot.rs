//! Binary field snapshots.
//!
//! A snapshot is two files sharing a stem: `<stem>.bin` holds the samples as
//! little-endian `f64`, `<stem>.json` holds `{n_points, length, time, k}`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::spectral::{Field, Grid1D};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub n_points: usize,
    pub length: f64,
    pub time: f64,
    pub k: u32,
}

fn stem_paths(path: &Path) -> (PathBuf, PathBuf) {
    (path.with_extension("bin"), path.with_extension("json"))
}

/// Write `field` to `<path>.bin` + `<path>.json`; any extension on `path`
/// is replaced.
pub fn write_snapshot(path: &Path, field: &Field, time: f64, k: u32) -> Result<()> {
    let (bin, json) = stem_paths(path);
    let mut bytes = Vec::with_capacity(8 * field.values().len());
    for v in field.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(&bin, bytes)?;
    let meta = SnapshotMeta {
        n_points: field.grid().n_points(),
        length: field.grid().length(),
        time,
        k,
    };
    fs::write(&json, serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<(Field, SnapshotMeta)> {
    let (bin, json) = stem_paths(path);
    let meta: SnapshotMeta = serde_json::from_str(&fs::read_to_string(&json)?)?;
    let grid = Grid1D::new(meta.n_points, meta.length)?;
    let bytes = fs::read(&bin)?;
    if bytes.len() != 8 * meta.n_points {
        return Err(LabError::Contract(format!(
            "{} holds {} bytes, expected {}",
            bin.display(),
            bytes.len(),
            8 * meta.n_points
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok((Field::new(grid, values)?, meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid1D::new(64, 12.5).unwrap();
        let f = Field::from_fn(g, |x| (-x * x).exp() * (1.0 / 3.0));
        let p = dir.path().join("snap_0001");
        write_snapshot(&p, &f, 0.25, 5).unwrap();
        let (back, meta) = read_snapshot(&p).unwrap();
        assert_eq!(back, f);
        assert_eq!(meta, SnapshotMeta { n_points: 64, length: 12.5, time: 0.25, k: 5 });
        let raw = std::fs::read(p.with_extension("bin")).unwrap();
        assert_eq!(&raw[..8], &f.values()[0].to_le_bytes());
    }

    #[test]
    fn truncated_binary_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid1D::new(16, 1.0).unwrap();
        let p = dir.path().join("s");
        write_snapshot(&p, &Field::zeros(g), 0.0, 5).unwrap();
        std::fs::write(p.with_extension("bin"), [0u8; 10]).unwrap();
        assert!(read_snapshot(&p).is_err());
    }
}
