//! Independent check on the traversal: direct segment-vs-cell clipping.
//!
//! For one cell, the parameter interval the segment spends inside is the
//! intersection of per-axis slab intervals. This route never looks at
//! crossing sets or midpoints, so agreement with [`crate::traversal`] is a
//! meaningful cross-check rather than a tautology.

use crate::grid::{Axis, GridSpec, VoxelIndex};
use crate::segment::LifeSegment;

/// Time (not arc length) the segment spends inside the given cell.
///
/// Returns 0 for cells the segment misses entirely; there is no
/// out-of-domain condition because absent cells simply contribute nothing.
/// Cells are half-open, which only matters for a constant axis sitting
/// exactly on a cell boundary: it belongs to the upper cell.
pub fn clip_length_oracle(segment: &LifeSegment, voxel: VoxelIndex, grid: &GridSpec) -> f64 {
    let start = segment.start();
    let end = segment.end();

    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;

    let mut axes = vec![
        (Axis::Time, start.t, end.t, voxel.i),
        (Axis::Age, start.a, end.a, voxel.j),
    ];
    if grid.dim().duration_active() {
        axes.push((Axis::Duration, start.d, end.d, voxel.k));
    }

    for (axis, s, e, index) in axes {
        let cell_lo = grid.cell_lo(axis, index);
        let cell_hi = grid.cell_lo(axis, index + 1);
        let delta = e - s;
        if delta == 0.0 {
            if s >= cell_lo && s < cell_hi {
                continue; // constant axis inside the slab: no constraint
            }
            return 0.0;
        }
        lo = lo.max((cell_lo - s) / delta);
        hi = hi.min((cell_hi - s) / delta);
    }

    (hi - lo).max(0.0) * segment.delta_t()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridDim;
    use crate::segment::{Direction, LexisPoint};

    fn grid(t_r: f64, dim: GridDim) -> GridSpec {
        GridSpec::new(t_r, dim).unwrap()
    }

    fn seg(start: (f64, f64, f64), delta_t: f64, direction: Direction) -> LifeSegment {
        LifeSegment::new(LexisPoint::new(start.0, start.1, start.2), delta_t, direction).unwrap()
    }

    #[test]
    fn clips_interior_cell() {
        let g = grid(1.0, GridDim::Three);
        let s = seg((0.5, 0.5, 0.0), 2.0, Direction::Diseased);
        assert_eq!(clip_length_oracle(&s, VoxelIndex::new(1, 1, 0), &g), 0.5);
    }

    #[test]
    fn corner_touch_has_zero_length() {
        let g = grid(1.0, GridDim::Three);
        let s = seg((0.0, 0.0, 0.0), 2.0, Direction::Diseased);
        assert_eq!(clip_length_oracle(&s, VoxelIndex::new(1, 0, 0), &g), 0.0);
    }

    #[test]
    fn missed_cell_is_zero() {
        let g = grid(1.0, GridDim::Three);
        let s = seg((0.5, 0.5, 0.0), 2.0, Direction::Diseased);
        assert_eq!(clip_length_oracle(&s, VoxelIndex::new(40, 2, 0), &g), 0.0);
    }

    #[test]
    fn constant_axis_on_boundary_belongs_to_upper_cell() {
        let g = grid(1.0, GridDim::Three);
        // disease-free line with duration exactly on the plane d = 1
        let s = seg((0.25, 0.25, 1.0), 0.5, Direction::DiseaseFree);
        assert_eq!(clip_length_oracle(&s, VoxelIndex::new(0, 0, 1), &g), 0.5);
        assert_eq!(clip_length_oracle(&s, VoxelIndex::new(0, 0, 0), &g), 0.0);
    }

    #[test]
    fn two_dim_grid_ignores_duration() {
        let g = grid(1.0, GridDim::Two);
        let s = seg((0.5, 0.5, 123.0), 2.0, Direction::DiseaseFree);
        assert_eq!(clip_length_oracle(&s, VoxelIndex::new(1, 1, 0), &g), 1.0);
    }

    #[test]
    fn length_is_time_not_arc_length() {
        let g = grid(10.0, GridDim::Three);
        let s = seg((1.0, 1.0, 1.0), 2.0, Direction::Diseased);
        // entire segment inside cell (0,0,0): length is delta_t, not
        // sqrt(3) * delta_t
        assert_eq!(clip_length_oracle(&s, VoxelIndex::new(0, 0, 0), &g), 2.0);
    }
}
