use std::path::PathBuf;

use crate::grid::{Axis, VoxelIndex};

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Error type shared by every module in this crate.
///
/// Variants are grouped by how callers are expected to react: input and grid
/// validation, per-subject record validation (carrying the subject id),
/// table compatibility, and file parsing (carrying path and line).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("non-finite {name}: {value}")]
    NonFinite { name: String, value: f64 },

    #[error("invalid grid: {reason}")]
    InvalidGrid { reason: String },

    #[error("invalid input: {reason}")]
    InvalidInput { reason: String },

    #[error("{name} = {value} outside {expected}")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("{axis} coordinate {coordinate} below grid origin {origin}")]
    OutOfDomain {
        axis: Axis,
        coordinate: f64,
        origin: f64,
    },

    #[error("subject {id}: {rule}")]
    InvalidRecord { id: String, rule: String },

    /// Wraps a lower-level error with the subject it occurred on.
    #[error("subject {id}: {source}")]
    Subject {
        id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("table mismatch: {what} differ ({left} vs {right})")]
    TableMismatch {
        what: &'static str,
        left: String,
        right: String,
    },

    #[error("events recorded in voxels with no exposure: {}", voxel_list(.voxels))]
    EventsWithoutExposure { voxels: Vec<VoxelIndex> },

    #[error("{}:{line}: {reason}", .path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        reason: String,
    },

    #[error("{}: {reason}", .path.display())]
    Schema { path: PathBuf, reason: String },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Attaches a subject id to an error bubbling out of per-subject work.
    pub(crate) fn for_subject(self, id: &str) -> Error {
        Error::Subject {
            id: id.to_owned(),
            source: Box::new(self),
        }
    }
}

fn voxel_list(voxels: &[VoxelIndex]) -> String {
    const SHOWN: usize = 8;
    let mut s = voxels
        .iter()
        .take(SHOWN)
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(", ");
    if voxels.len() > SHOWN {
        s.push_str(&format!(", and {} more", voxels.len() - SHOWN));
    }
    s
}

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite {
            name: name.to_owned(),
            value,
        })
    }
}
