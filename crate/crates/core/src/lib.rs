//! Person-time at risk on a voxel grid over calendar time, age and disease
//! duration.
//!
//! Epidemiological rates of the person-years kind, `lambda = events /
//! person-time`, need the denominator resolved by calendar period, age band
//! and (for post-onset analyses) time since diagnosis. This crate computes
//! those denominators exactly, without discretizing follow-up into rounded
//! steps: each subject's follow-up is a straight line segment through the
//! (time, age, duration) space, and [`traversal::traverse`] splits it
//! analytically into the grid cells it passes through.
//!
//! On top of the geometric core sit:
//!
//! - [`exposure`]: subject records, risk-window selection for incidence or
//!   post-onset analyses, and accumulation into exposure, event and rate
//!   tables,
//! - [`sim`]: a small cohort simulator with a Gompertz-like baseline hazard
//!   and exact inverse-transform death times, useful for end-to-end checks,
//! - [`io`]: CSV input and output with deterministic, round-trip-exact
//!   serialization.
//!
//! # Example
//!
//! ```
//! use lexis_core::grid::{GridDim, GridSpec, VoxelIndex};
//! use lexis_core::segment::{Direction, LexisPoint, LifeSegment};
//! use lexis_core::traversal::traverse;
//!
//! // two years of follow-up, diagnosed at entry, age 60.5, annual grid
//! let seg = LifeSegment::new(LexisPoint::new(0.5, 60.5, 0.0), 2.0, Direction::Diseased)?;
//! let grid = GridSpec::new(1.0, GridDim::Three)?;
//! let pieces = traverse(&seg, &grid)?;
//! assert_eq!(pieces.cells()[0], (VoxelIndex::new(0, 60, 0), 0.5));
//! assert!((pieces.total_length() - 2.0).abs() < 1e-12);
//! # Ok::<(), lexis_core::Error>(())
//! ```

pub mod error;
pub mod exposure;
pub mod grid;
pub mod io;
pub mod segment;
pub mod sim;
pub mod slab;
pub mod traversal;

pub use error::{Error, Result};
pub use exposure::{accumulate, bin_events, rates, risk_segments};
pub use exposure::{EventTable, ExposureTable, RateTable, RiskSemantics, SubjectRecord};
pub use grid::{Axis, GridDim, GridSpec, VoxelIndex};
pub use segment::{Direction, LexisPoint, LifeSegment};
pub use sim::{simulate_cohort, DeathTime, HazardSpec, SimConfig};
pub use slab::clip_length_oracle;
pub use traversal::{crossing_count, merge_crossings, plane_crossings, traverse};
pub use traversal::{voxel_index_at, CrossingSet, TraversalResult};
