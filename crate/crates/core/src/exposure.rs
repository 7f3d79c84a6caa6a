//! From subject records to exposure, event and rate tables.
//!
//! A record carries the raw follow-up facts; which part of it counts as time
//! at risk depends on the question being asked:
//!
//! - **incidence**: disease-free time only, following the (1, 1, 0) piece of
//!   the life line up to onset (or exit). Events are disease onsets.
//! - **post-onset**: diseased time only, following the (1, 1, 1) piece from
//!   onset (or entry, for subjects entering with the disease) to exit.
//!   Events are exits with `event_at_exit` set, e.g. deaths.
//!
//! Censoring is expressed through `event_at_exit = false`: the follow-up
//! still contributes person-time, it just ends without an event.
//!
//! Accumulation is sequential in record order, so a given cohort always
//! produces bit-identical tables.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, VoxelIndex};
use crate::segment::{Direction, LexisPoint, LifeSegment};
use crate::traversal::traverse;

/// Which slice of follow-up counts as time at risk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RiskSemantics {
    Incidence,
    PostOnset,
}

impl fmt::Display for RiskSemantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RiskSemantics::Incidence => "incidence",
            RiskSemantics::PostOnset => "post-onset",
        })
    }
}

impl FromStr for RiskSemantics {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "incidence" => Ok(RiskSemantics::Incidence),
            "post-onset" => Ok(RiskSemantics::PostOnset),
            other => Err(Error::InvalidInput {
                reason: format!("unknown risk semantics {other:?}, expected \"incidence\" or \"post-onset\""),
            }),
        }
    }
}

/// One subject's follow-up.
///
/// Only primitive facts are stored; points on the life line (entry, exit,
/// onset) are derived, so the geometric identities between them hold by
/// construction instead of by tolerance checks. `entry_duration` is the
/// disease duration already accumulated at entry: positive for subjects who
/// enter diseased (their onset precedes the study and needs no timestamp),
/// zero otherwise. `onset_time` is set only when onset happens under
/// observation.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectRecord {
    pub id: String,
    pub birth_time: f64,
    pub entry_time: f64,
    pub entry_duration: f64,
    pub exit_time: f64,
    pub onset_time: Option<f64>,
    pub event_at_exit: bool,
}

impl SubjectRecord {
    pub fn validate(&self) -> Result<()> {
        let rule = |reason: String| Error::InvalidRecord {
            id: self.id.clone(),
            rule: reason,
        };
        for (name, value) in [
            ("birth_time", self.birth_time),
            ("entry_time", self.entry_time),
            ("entry_duration", self.entry_duration),
            ("exit_time", self.exit_time),
        ] {
            if !value.is_finite() {
                return Err(rule(format!("{name} must be finite, got {value}")));
            }
        }
        if self.entry_duration < 0.0 {
            return Err(rule(format!(
                "entry_duration must be non-negative, got {}",
                self.entry_duration
            )));
        }
        if self.exit_time < self.entry_time {
            return Err(rule(format!(
                "exit_time {} precedes entry_time {}",
                self.exit_time, self.entry_time
            )));
        }
        if self.birth_time > self.entry_time {
            return Err(rule(format!(
                "birth_time {} after entry_time {} (negative age at entry)",
                self.birth_time, self.entry_time
            )));
        }
        if let Some(onset) = self.onset_time {
            if !onset.is_finite() {
                return Err(rule(format!("onset_time must be finite, got {onset}")));
            }
            if onset < self.entry_time || onset > self.exit_time {
                return Err(rule(format!(
                    "onset_time {} outside follow-up [{}, {}]",
                    onset, self.entry_time, self.exit_time
                )));
            }
        }
        Ok(())
    }

    pub fn entry_age(&self) -> f64 {
        self.entry_time - self.birth_time
    }

    pub fn follow_up(&self) -> f64 {
        self.exit_time - self.entry_time
    }

    pub fn entry(&self) -> LexisPoint {
        LexisPoint::new(self.entry_time, self.entry_age(), self.entry_duration)
    }

    /// True when the subject carries the disease at some point of follow-up.
    pub fn ever_diseased(&self) -> bool {
        self.onset_time.is_some() || self.entry_duration > 0.0
    }

    /// Time from entry to onset; `None` when onset is not under observation.
    fn pre_onset_span(&self) -> Option<f64> {
        self.onset_time.map(|onset| onset - self.entry_time)
    }

    /// Time spent diseased during follow-up. Defined as follow-up minus the
    /// pre-onset span so the two pieces partition follow-up exactly.
    fn diseased_span(&self) -> f64 {
        match self.pre_onset_span() {
            Some(pre) => self.follow_up() - pre,
            None if self.entry_duration > 0.0 => self.follow_up(),
            None => 0.0,
        }
    }

    /// Point at which the subject leaves observation.
    pub fn exit(&self) -> LexisPoint {
        LexisPoint::new(
            self.exit_time,
            self.entry_age() + self.follow_up(),
            self.entry_duration + self.diseased_span(),
        )
    }

    /// The onset point (the kink of the life line), when observed.
    pub fn onset(&self) -> Option<LexisPoint> {
        self.onset_time.map(|onset| {
            LexisPoint::new(
                onset,
                self.entry_age() + (onset - self.entry_time),
                self.entry_duration,
            )
        })
    }
}

/// The at-risk piece of a subject's life line under the given semantics, or
/// `None` when the subject contributes no such time. Zero-length windows
/// (onset at entry, exit at onset, zero follow-up) yield `None` as well.
pub fn risk_segments(subject: &SubjectRecord, semantics: RiskSemantics) -> Result<Option<LifeSegment>> {
    subject.validate()?;
    let built = match semantics {
        RiskSemantics::Incidence => {
            if subject.entry_duration > 0.0 {
                // already diseased at entry: never at risk of onset here
                None
            } else {
                let span = subject.pre_onset_span().unwrap_or_else(|| subject.follow_up());
                positive(span).map(|span| (subject.entry(), span, Direction::DiseaseFree))
            }
        }
        RiskSemantics::PostOnset => {
            if !subject.ever_diseased() {
                None
            } else {
                let start = subject.onset().unwrap_or_else(|| subject.entry());
                positive(subject.diseased_span()).map(|span| (start, span, Direction::Diseased))
            }
        }
    };
    match built {
        None => Ok(None),
        Some((start, span, direction)) => LifeSegment::new(start, span, direction)
            .map(Some)
            .map_err(|e| e.for_subject(&subject.id)),
    }
}

fn positive(span: f64) -> Option<f64> {
    (span > 0.0).then_some(span)
}

/// Person-time per cell. Values are strictly positive; untouched cells are
/// simply absent.
#[derive(Debug, Clone, PartialEq)]
pub struct ExposureTable {
    grid: GridSpec,
    semantics: RiskSemantics,
    cells: BTreeMap<VoxelIndex, f64>,
}

/// Event counts per cell. Counts are at least 1; untouched cells are absent.
#[derive(Debug, Clone, PartialEq)]
pub struct EventTable {
    grid: GridSpec,
    semantics: RiskSemantics,
    cells: BTreeMap<VoxelIndex, u64>,
}

/// One rate table entry: the rate together with its numerator and
/// denominator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateCell {
    pub rate: f64,
    pub events: u64,
    pub person_time: f64,
}

/// Events per person-time for every cell holding exposure.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    grid: GridSpec,
    semantics: RiskSemantics,
    cells: BTreeMap<VoxelIndex, RateCell>,
}

macro_rules! table_common {
    ($table:ty, $value:ty) => {
        impl $table {
            pub fn grid(&self) -> &GridSpec {
                &self.grid
            }

            pub fn semantics(&self) -> RiskSemantics {
                self.semantics
            }

            pub fn cells(&self) -> &BTreeMap<VoxelIndex, $value> {
                &self.cells
            }

            pub fn len(&self) -> usize {
                self.cells.len()
            }

            pub fn is_empty(&self) -> bool {
                self.cells.is_empty()
            }
        }
    };
}

table_common!(ExposureTable, f64);
table_common!(EventTable, u64);
table_common!(RateTable, RateCell);

impl ExposureTable {
    pub(crate) fn from_parts(
        grid: GridSpec,
        semantics: RiskSemantics,
        cells: BTreeMap<VoxelIndex, f64>,
    ) -> Self {
        ExposureTable { grid, semantics, cells }
    }

    pub fn person_time(&self, voxel: VoxelIndex) -> f64 {
        self.cells.get(&voxel).copied().unwrap_or(0.0)
    }

    pub fn total_person_time(&self) -> f64 {
        self.cells.values().sum()
    }
}

impl EventTable {
    pub(crate) fn from_parts(
        grid: GridSpec,
        semantics: RiskSemantics,
        cells: BTreeMap<VoxelIndex, u64>,
    ) -> Self {
        EventTable { grid, semantics, cells }
    }

    pub fn count(&self, voxel: VoxelIndex) -> u64 {
        self.cells.get(&voxel).copied().unwrap_or(0)
    }

    pub fn total_events(&self) -> u64 {
        self.cells.values().sum()
    }
}

impl RateTable {
    pub(crate) fn from_parts(
        grid: GridSpec,
        semantics: RiskSemantics,
        cells: BTreeMap<VoxelIndex, RateCell>,
    ) -> Self {
        RateTable { grid, semantics, cells }
    }

    pub fn get(&self, voxel: VoxelIndex) -> Option<RateCell> {
        self.cells.get(&voxel).copied()
    }
}

/// Sums every subject's at-risk time into per-cell person-time.
///
/// Records are validated up front; the first invalid one aborts the run with
/// its id and the violated rule. Subjects are folded in input order, so the
/// result is reproducible down to the last bit.
pub fn accumulate(
    subjects: &[SubjectRecord],
    grid: &GridSpec,
    semantics: RiskSemantics,
) -> Result<ExposureTable> {
    let mut cells: BTreeMap<VoxelIndex, f64> = BTreeMap::new();
    for subject in subjects {
        let Some(segment) = risk_segments(subject, semantics)? else {
            continue;
        };
        let pieces = traverse(&segment, grid).map_err(|e| e.for_subject(&subject.id))?;
        for &(voxel, length) in pieces.cells() {
            *cells.entry(voxel).or_insert(0.0) += length;
        }
    }
    Ok(ExposureTable::from_parts(grid.clone(), semantics, cells))
}

/// Counts events per cell: onsets at the onset point (incidence) or exits
/// with `event_at_exit` at the exit point (post-onset). Censored exits and
/// exits of never-diseased subjects count nowhere.
pub fn bin_events(
    subjects: &[SubjectRecord],
    grid: &GridSpec,
    semantics: RiskSemantics,
) -> Result<EventTable> {
    let mut cells: BTreeMap<VoxelIndex, u64> = BTreeMap::new();
    for subject in subjects {
        subject.validate()?;
        let point = match semantics {
            RiskSemantics::Incidence => subject.onset(),
            RiskSemantics::PostOnset => {
                (subject.event_at_exit && subject.ever_diseased()).then(|| subject.exit())
            }
        };
        let Some(point) = point else { continue };
        let voxel = grid
            .index_of(point.t, point.a, point.d)
            .map_err(|e| e.for_subject(&subject.id))?;
        *cells.entry(voxel).or_insert(0) += 1;
    }
    Ok(EventTable::from_parts(grid.clone(), semantics, cells))
}

/// Divides events by person-time cell by cell.
///
/// Exposure and events must come from the same grid and the same semantics.
/// Every cell with exposure appears in the result (rate 0 when no events);
/// events in a cell without exposure indicate broken input data and abort
/// with the full list of offending cells.
pub fn rates(exposure: &ExposureTable, events: &EventTable) -> Result<RateTable> {
    if exposure.grid != events.grid {
        return Err(Error::TableMismatch {
            what: "grids",
            left: describe_grid(&exposure.grid),
            right: describe_grid(&events.grid),
        });
    }
    if exposure.semantics != events.semantics {
        return Err(Error::TableMismatch {
            what: "risk semantics",
            left: exposure.semantics.to_string(),
            right: events.semantics.to_string(),
        });
    }

    let orphans: Vec<VoxelIndex> = events
        .cells
        .keys()
        .filter(|v| !exposure.cells.contains_key(v))
        .copied()
        .collect();
    if !orphans.is_empty() {
        return Err(Error::EventsWithoutExposure { voxels: orphans });
    }

    let cells = exposure
        .cells
        .iter()
        .map(|(&voxel, &person_time)| {
            let count = events.count(voxel);
            let cell = RateCell {
                rate: count as f64 / person_time,
                events: count,
                person_time,
            };
            (voxel, cell)
        })
        .collect();
    Ok(RateTable::from_parts(
        exposure.grid.clone(),
        exposure.semantics,
        cells,
    ))
}

fn describe_grid(grid: &GridSpec) -> String {
    let [ot, oa, od] = grid.origin();
    format!(
        "t_r={} dim={} origin={},{},{}",
        grid.t_r(),
        grid.dim(),
        ot,
        oa,
        od
    )
}
