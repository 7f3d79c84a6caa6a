//! Exact cell-by-cell traversal of a life-line segment.
//!
//! The segment is parameterized as `start + alpha * (end - start)` with
//! `alpha` in [0, 1]. Because every active axis advances at the same rate,
//! the cells visited are delimited by the parameter values at which any axis
//! crosses a grid plane. The algorithm therefore:
//!
//! 1. collects the plane-crossing parameters per axis,
//! 2. merges them with {0, 1} into one ascending set (crossings from
//!    different axes may coincide on cell edges and corners; near-duplicates
//!    are collapsed),
//! 3. emits, for each gap between consecutive parameters, the containing
//!    cell and the time spent in it, `(alpha_next - alpha_prev) * delta_t`.
//!
//! Cells are identified by evaluating the segment at the gap midpoint, which
//! keeps the index computation away from the cell boundaries where floating
//! point rounding could tip a point into the neighbouring cell.
//!
//! Lengths are in time units, not Euclidean arc length: a segment of 2 TU
//! yields pieces summing to 2 TU whether or not the duration axis advances.

use crate::error::{ensure_finite, Error, Result};
use crate::grid::{Axis, GridSpec, VoxelIndex};
use crate::segment::LifeSegment;

/// Two merged crossing parameters closer than this are treated as one plane
/// crossing (an edge or corner of a cell). Absolute, on the unitless alpha
/// scale.
pub const ALPHA_DEDUP_TOLERANCE: f64 = 1e-12;

/// Hard cap on plane crossings along one axis; guards against degenerate
/// grids (huge segment over microscopic cells) allocating without bound.
const MAX_CROSSINGS_PER_AXIS: f64 = 1e8;

/// Number of grid planes a coordinate interval crosses: the count of plane
/// positions `origin + u * t_r` inside `(start, end]`.
pub fn crossing_count(start: f64, end: f64, t_r: f64, origin: f64) -> Result<u64> {
    validate_axis_interval(start, end, t_r, origin)?;
    let s = start - origin;
    let e = end - origin;
    Ok(count_raw(s, e - s, t_r) as u64)
}

/// ((rem + span) / t_r).floor() equals floor(e / t_r) - floor(s / t_r) in
/// exact arithmetic, but stays consistent with the plane offsets in
/// [`plane_crossings`] when `s` sits within rounding distance of a plane:
/// both derive everything from the one `rem_euclid` value, so a count/offset
/// mismatch that silently drops an interior plane cannot arise. The floor
/// difference, computed separately, can disagree with `rem` about which cell
/// `s` occupies and then mislabel every cell after the first.
fn count_raw(s: f64, span: f64, t_r: f64) -> f64 {
    if span == 0.0 {
        return 0.0;
    }
    ((s.rem_euclid(t_r) + span) / t_r).floor()
}

fn validate_axis_interval(start: f64, end: f64, t_r: f64, origin: f64) -> Result<()> {
    ensure_finite("interval start", start)?;
    ensure_finite("interval end", end)?;
    ensure_finite("plane origin", origin)?;
    if !t_r.is_finite() || t_r <= 0.0 {
        return Err(Error::InvalidGrid {
            reason: format!("cell edge length must be finite and positive, got {t_r}"),
        });
    }
    if end < start {
        return Err(Error::InvalidInput {
            reason: format!("interval end {end} precedes start {start}"),
        });
    }
    Ok(())
}

/// Parameters in (0, 1] at which the straight interpolation from `start` to
/// `end` sits on a plane `origin + u * t_r`.
///
/// The u-th crossed plane sits `u * t_r - (s mod t_r)` past `start` (s taken
/// relative to `origin`), so its parameter is that distance over
/// `end - start`. A start exactly on a plane does not count as a crossing;
/// an end exactly on a plane yields a crossing at 1. Results are clamped to
/// [0, 1] against rounding spill. Constant intervals (`end == start`) cross
/// nothing.
pub fn plane_crossings(start: f64, end: f64, t_r: f64, origin: f64) -> Result<Vec<f64>> {
    validate_axis_interval(start, end, t_r, origin)?;
    let s = start - origin;
    let e = end - origin;
    let delta = e - s;
    if delta == 0.0 {
        return Ok(Vec::new());
    }
    let count = count_raw(s, delta, t_r);
    if count > MAX_CROSSINGS_PER_AXIS {
        return Err(Error::InvalidGrid {
            reason: format!(
                "interval [{start}, {end}] crosses {count:.0} planes at edge length {t_r}; \
                 refusing to enumerate more than {MAX_CROSSINGS_PER_AXIS:.0}"
            ),
        });
    }
    let rem = s.rem_euclid(t_r);
    let mut alphas = Vec::with_capacity(count as usize);
    for u in 1..=(count as u64) {
        let alpha = (u as f64 * t_r - rem) / delta;
        alphas.push(alpha.clamp(0.0, 1.0));
    }
    Ok(alphas)
}

/// Ascending merged crossing parameters, 0 and 1 included.
///
/// Invariants: the first element is 0, the last is 1, and consecutive
/// elements differ by more than [`ALPHA_DEDUP_TOLERANCE`]. Only
/// [`merge_crossings`] constructs values of this type.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossingSet {
    alphas: Vec<f64>,
}

impl CrossingSet {
    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        false // always holds at least {0, 1}
    }
}

/// Merges per-axis crossing lists into one ascending set with 0 and 1
/// adjoined.
///
/// Crossings from different axes coincide where the segment passes through a
/// cell edge or corner; values closer than [`ALPHA_DEDUP_TOLERANCE`] collapse
/// into one representative (the smallest of the cluster, except that the
/// final cluster is represented by 1 so the set always ends exactly there).
/// Each input list must be ascending with values in [0, 1].
pub fn merge_crossings(axis_lists: &[&[f64]]) -> Result<CrossingSet> {
    let total: usize = axis_lists.iter().map(|l| l.len()).sum();
    let mut all = Vec::with_capacity(total + 2);
    for list in axis_lists {
        let mut prev = f64::NEG_INFINITY;
        for &alpha in *list {
            ensure_finite("crossing parameter", alpha)?;
            if !(0.0..=1.0).contains(&alpha) {
                return Err(Error::InvalidInput {
                    reason: format!("crossing parameter {alpha} outside [0, 1]"),
                });
            }
            if alpha < prev {
                return Err(Error::InvalidInput {
                    reason: "crossing list not ascending".to_owned(),
                });
            }
            prev = alpha;
            all.push(alpha);
        }
    }
    all.push(0.0);
    all.push(1.0);
    all.sort_unstable_by(f64::total_cmp);

    // Greedy clustering: a value within tolerance of the current cluster's
    // start joins the cluster, anything further starts a new one. 0 and 1
    // are further apart than the tolerance, so they end up in different
    // clusters and the set is never empty of gaps.
    let mut merged = Vec::with_capacity(all.len());
    let mut cluster_start = all[0];
    merged.push(cluster_start);
    for &alpha in &all[1..] {
        if alpha - cluster_start > ALPHA_DEDUP_TOLERANCE {
            merged.push(alpha);
            cluster_start = alpha;
        }
    }
    // The global maximum is 1 (adjoined, everything clamped to [0, 1]), so
    // the last cluster contains 1; represent it by exactly 1.
    *merged.last_mut().unwrap() = 1.0;
    Ok(CrossingSet { alphas: merged })
}

/// Cell containing the segment point at parameter `alpha`.
pub fn voxel_index_at(segment: &LifeSegment, alpha: f64, grid: &GridSpec) -> Result<VoxelIndex> {
    ensure_finite("alpha", alpha)?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidInput {
            reason: format!("alpha {alpha} outside [0, 1]"),
        });
    }
    let p = segment.point_at(alpha);
    grid.index_of(p.t, p.a, p.d)
}

/// Cells visited by a segment, each with the time spent inside.
///
/// Entries are ordered along the segment, indices are pairwise distinct and
/// every length is positive; the lengths sum to the segment's `delta_t` up
/// to float rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct TraversalResult {
    cells: Vec<(VoxelIndex, f64)>,
}

impl TraversalResult {
    pub fn cells(&self) -> &[(VoxelIndex, f64)] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        self.cells.iter().map(|(_, l)| l).sum()
    }
}

/// Splits a segment into per-cell pieces of person-time.
///
/// The segment must start inside the grid domain (at or above the origin on
/// every active axis); it may extend arbitrarily far up. On a
/// two-dimensional grid the duration coordinate plays no part.
pub fn traverse(segment: &LifeSegment, grid: &GridSpec) -> Result<TraversalResult> {
    let start = segment.start();
    let end = segment.end();

    for (axis, coordinate) in [(Axis::Time, start.t), (Axis::Age, start.a)] {
        check_at_or_above_origin(grid, axis, coordinate)?;
    }
    if grid.dim().duration_active() {
        check_at_or_above_origin(grid, Axis::Duration, start.d)?;
    }

    let t_r = grid.t_r();
    let t_list = plane_crossings(start.t, end.t, t_r, grid.origin_for(Axis::Time))?;
    let a_list = plane_crossings(start.a, end.a, t_r, grid.origin_for(Axis::Age))?;
    let d_list = if grid.dim().duration_active() {
        plane_crossings(start.d, end.d, t_r, grid.origin_for(Axis::Duration))?
    } else {
        Vec::new()
    };

    let merged = merge_crossings(&[&t_list, &a_list, &d_list])?;
    let alphas = merged.alphas();

    let mut cells = Vec::with_capacity(alphas.len() - 1);
    for pair in alphas.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let midpoint = 0.5 * (lo + hi);
        let index = voxel_index_at(segment, midpoint, grid)?;
        cells.push((index, (hi - lo) * segment.delta_t()));
    }
    Ok(TraversalResult { cells })
}

fn check_at_or_above_origin(grid: &GridSpec, axis: Axis, coordinate: f64) -> Result<()> {
    let origin = grid.origin_for(axis);
    if coordinate < origin {
        return Err(Error::OutOfDomain {
            axis,
            coordinate,
            origin,
        });
    }
    Ok(())
}
