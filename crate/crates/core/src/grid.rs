//! The voxel grid: cubical half-open cells over (calendar time, age, duration).
//!
//! All three axes share one edge length `t_r` so that a life line, which
//! advances at unit rate on every active axis, meets the grid planes of the
//! different axes on the same footing. Cell `(i, j, k)` covers
//! `[origin + i*t_r, origin + (i+1)*t_r)` per axis; a point sitting exactly on
//! a plane belongs to the upper cell. The grid is unbounded above and is never
//! materialized; only visited cells exist in the output tables.

use std::fmt;

use crate::error::{ensure_finite, Error, Result};

/// Axis labels for error reporting and per-axis loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Time,
    Age,
    Duration,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Time => "time",
            Axis::Age => "age",
            Axis::Duration => "duration",
        })
    }
}

/// Number of active axes: 2 for a plain time-age grid, 3 when disease
/// duration is resolved as well.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridDim {
    Two,
    Three,
}

impl GridDim {
    pub fn duration_active(self) -> bool {
        matches!(self, GridDim::Three)
    }

    pub fn as_u8(self) -> u8 {
        match self {
            GridDim::Two => 2,
            GridDim::Three => 3,
        }
    }
}

impl TryFrom<u8> for GridDim {
    type Error = Error;

    fn try_from(value: u8) -> Result<Self> {
        match value {
            2 => Ok(GridDim::Two),
            3 => Ok(GridDim::Three),
            other => Err(Error::InvalidGrid {
                reason: format!("dim must be 2 or 3, got {other}"),
            }),
        }
    }
}

impl fmt::Display for GridDim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

/// Index of one grid cell. `k` stays 0 on a two-dimensional grid.
///
/// Ordering is lexicographic by `(i, j, k)`, which fixes the row order of
/// serialized tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VoxelIndex {
    pub i: u64,
    pub j: u64,
    pub k: u64,
}

impl VoxelIndex {
    pub fn new(i: u64, j: u64, k: u64) -> Self {
        VoxelIndex { i, j, k }
    }
}

impl fmt::Display for VoxelIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.i, self.j, self.k)
    }
}

/// Grid geometry: shared edge length, active dimension count and per-axis
/// origin. Coordinates below the origin are outside the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    t_r: f64,
    dim: GridDim,
    origin: [f64; 3],
}

impl GridSpec {
    /// Grid with the default origin 0 on every axis.
    pub fn new(t_r: f64, dim: GridDim) -> Result<Self> {
        Self::with_origin(t_r, dim, [0.0; 3])
    }

    pub fn with_origin(t_r: f64, dim: GridDim, origin: [f64; 3]) -> Result<Self> {
        if !t_r.is_finite() || t_r <= 0.0 {
            return Err(Error::InvalidGrid {
                reason: format!("cell edge length must be finite and positive, got {t_r}"),
            });
        }
        for (axis, &o) in [Axis::Time, Axis::Age, Axis::Duration].iter().zip(&origin) {
            if !o.is_finite() {
                return Err(Error::InvalidGrid {
                    reason: format!("{axis} origin must be finite, got {o}"),
                });
            }
        }
        Ok(GridSpec { t_r, dim, origin })
    }

    pub fn t_r(&self) -> f64 {
        self.t_r
    }

    pub fn dim(&self) -> GridDim {
        self.dim
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn origin_for(&self, axis: Axis) -> f64 {
        match axis {
            Axis::Time => self.origin[0],
            Axis::Age => self.origin[1],
            Axis::Duration => self.origin[2],
        }
    }

    /// Cell index along one axis: floor of the offset from the origin in
    /// cell units. Errors when the coordinate lies below the origin.
    pub fn axis_index(&self, axis: Axis, coordinate: f64) -> Result<u64> {
        ensure_finite(&format!("{axis} coordinate"), coordinate)?;
        let origin = self.origin_for(axis);
        let offset = coordinate - origin;
        if offset < 0.0 {
            return Err(Error::OutOfDomain {
                axis,
                coordinate,
                origin,
            });
        }
        // offset >= 0, so the floor is non-negative and the cast is lossless
        // for any realistic index range.
        Ok((offset / self.t_r).floor() as u64)
    }

    /// Index of the cell containing `(t, a, d)`. On a two-dimensional grid
    /// the duration coordinate is ignored and `k` is 0.
    pub fn index_of(&self, t: f64, a: f64, d: f64) -> Result<VoxelIndex> {
        let i = self.axis_index(Axis::Time, t)?;
        let j = self.axis_index(Axis::Age, a)?;
        let k = if self.dim.duration_active() {
            self.axis_index(Axis::Duration, d)?
        } else {
            0
        };
        Ok(VoxelIndex { i, j, k })
    }

    /// Lower cell boundary along one axis.
    pub fn cell_lo(&self, axis: Axis, index: u64) -> f64 {
        self.origin_for(axis) + index as f64 * self.t_r
    }
}
