//! CSV input and output.
//!
//! Two file families:
//!
//! - **cohort files**: one row per subject, header-addressed columns
//!   `id, birth_time, entry_time, entry_age, entry_duration, exit_time,
//!   onset_time, event_at_exit`. `entry_age` is redundant (entry_time minus
//!   birth_time) and may be omitted; when present it must agree within
//!   [`ENTRY_AGE_TOLERANCE`]. An empty `onset_time` means no observed onset;
//!   `event_at_exit` is 0 or 1.
//! - **table files**: one row per non-empty cell, columns `i, j, k, value`
//!   (no `k` on two-dimensional grids; rate tables append `events` and
//!   `person_time`). The first line is a `#` comment carrying the table
//!   kind, grid and risk semantics, so downstream stages can check
//!   compatibility without a sidecar file.
//!
//! Floats are written with 17 significant digits in table files and in
//! shortest round-trip notation in cohort files; both forms parse back to
//! bit-identical values, so a write/read cycle anywhere in a pipeline
//! changes nothing downstream. Rows are emitted in index order, making
//! equal tables serialize to equal bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::exposure::{EventTable, ExposureTable, RateCell, RateTable, RiskSemantics, SubjectRecord};
use crate::grid::{GridDim, GridSpec, VoxelIndex};

/// Permitted disagreement between a stated `entry_age` and
/// `entry_time - birth_time`.
pub const ENTRY_AGE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Deserialize)]
struct CohortRow {
    id: String,
    birth_time: f64,
    entry_time: f64,
    #[serde(default)]
    entry_age: Option<f64>,
    entry_duration: f64,
    exit_time: f64,
    onset_time: Option<f64>,
    event_at_exit: u8,
}

/// Reads and validates a cohort file. The first broken row aborts with its
/// line number (parse problems) or subject id (rule violations).
pub fn read_cohort(path: &Path) -> Result<Vec<SubjectRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .from_path(path)
        .map_err(|e| csv_error(path, 1, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, 1, e))?.clone();

    let mut subjects = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, 0, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let row: CohortRow = record.deserialize(Some(&headers)).map_err(|e| Error::Parse {
            path: path.to_owned(),
            line,
            reason: trim_reason(&e),
        })?;
        subjects.push(subject_from_row(row, path, line)?);
    }
    Ok(subjects)
}

fn subject_from_row(row: CohortRow, path: &Path, line: u64) -> Result<SubjectRecord> {
    let event_at_exit = match row.event_at_exit {
        0 => false,
        1 => true,
        other => {
            return Err(Error::Parse {
                path: path.to_owned(),
                line,
                reason: format!("event_at_exit must be 0 or 1, got {other}"),
            })
        }
    };
    let subject = SubjectRecord {
        id: row.id,
        birth_time: row.birth_time,
        entry_time: row.entry_time,
        entry_duration: row.entry_duration,
        exit_time: row.exit_time,
        onset_time: row.onset_time,
        event_at_exit,
    };
    subject.validate()?;
    if let Some(stated) = row.entry_age {
        let derived = subject.entry_age();
        if !((stated - derived).abs() <= ENTRY_AGE_TOLERANCE) {
            return Err(Error::InvalidRecord {
                id: subject.id,
                rule: format!(
                    "entry_age {stated} disagrees with entry_time - birth_time = {derived}"
                ),
            });
        }
    }
    Ok(subject)
}

/// Writes a cohort file with the full column set; `entry_age` is emitted
/// from its definition.
pub fn write_cohort(subjects: &[SubjectRecord], path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, 0, e))?;
    writer
        .write_record([
            "id",
            "birth_time",
            "entry_time",
            "entry_age",
            "entry_duration",
            "exit_time",
            "onset_time",
            "event_at_exit",
        ])
        .map_err(|e| csv_error(path, 0, e))?;
    for subject in subjects {
        subject.validate()?;
        writer
            .write_record([
                subject.id.as_str(),
                &subject.birth_time.to_string(),
                &subject.entry_time.to_string(),
                &subject.entry_age().to_string(),
                &subject.entry_duration.to_string(),
                &subject.exit_time.to_string(),
                &subject.onset_time.map(|o| o.to_string()).unwrap_or_default(),
                if subject.event_at_exit { "1" } else { "0" },
            ])
            .map_err(|e| csv_error(path, 0, e))?;
    }
    writer.flush().map_err(|e| io_error(path, e))
}

fn csv_error(path: &Path, fallback_line: u64, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => io_error(path, io),
            _ => unreachable!(),
        }
    } else {
        let line = e.position().map_or(fallback_line, |p| p.line());
        Error::Parse {
            path: path.to_owned(),
            line,
            reason: trim_reason(&e),
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.to_owned(),
        source: e,
    }
}

/// csv's error messages embed the position; the surrounding Parse variant
/// already reports it.
fn trim_reason(e: &impl std::fmt::Display) -> String {
    e.to_string().replace('\n', " ")
}

const KIND_EXPOSURE: &str = "exposure";
const KIND_EVENTS: &str = "events";
const KIND_RATES: &str = "rates";

struct TableMeta {
    kind: String,
    grid: GridSpec,
    semantics: RiskSemantics,
}

fn meta_line(kind: &str, grid: &GridSpec, semantics: RiskSemantics) -> String {
    let [ot, oa, od] = grid.origin();
    format!(
        "# kind={kind} t_r={} dim={} origin={ot},{oa},{od} semantics={semantics}",
        grid.t_r(),
        grid.dim()
    )
}

fn parse_meta_line(path: &Path, line: &str) -> Result<TableMeta> {
    let schema = |reason: String| Error::Schema {
        path: path.to_owned(),
        reason,
    };
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| schema("first line must be a # metadata comment".to_owned()))?;
    let mut kind = None;
    let mut t_r = None;
    let mut dim = None;
    let mut origin = None;
    let mut semantics = None;
    for token in body.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| schema(format!("malformed metadata token {token:?}")))?;
        match key {
            "kind" => kind = Some(value.to_owned()),
            "t_r" => {
                t_r = Some(value.parse::<f64>().map_err(|_| {
                    schema(format!("unreadable t_r in metadata: {value:?}"))
                })?)
            }
            "dim" => {
                dim = Some(value.parse::<u8>().map_err(|_| {
                    schema(format!("unreadable dim in metadata: {value:?}"))
                })?)
            }
            "origin" => {
                let parts: Vec<&str> = value.split(',').collect();
                if parts.len() != 3 {
                    return Err(schema(format!("origin must have 3 components: {value:?}")));
                }
                let mut o = [0.0; 3];
                for (slot, part) in o.iter_mut().zip(&parts) {
                    *slot = part.parse::<f64>().map_err(|_| {
                        schema(format!("unreadable origin component {part:?}"))
                    })?;
                }
                origin = Some(o);
            }
            "semantics" => semantics = Some(value.parse::<RiskSemantics>()?),
            _ => {} // unknown keys are tolerated for forward compatibility
        }
    }
    let kind = kind.ok_or_else(|| schema("metadata missing kind".to_owned()))?;
    let t_r = t_r.ok_or_else(|| schema("metadata missing t_r".to_owned()))?;
    let dim = dim.ok_or_else(|| schema("metadata missing dim".to_owned()))?;
    let origin = origin.ok_or_else(|| schema("metadata missing origin".to_owned()))?;
    let semantics = semantics.ok_or_else(|| schema("metadata missing semantics".to_owned()))?;
    let grid = GridSpec::with_origin(t_r, GridDim::try_from(dim)?, origin)?;
    Ok(TableMeta {
        kind,
        grid,
        semantics,
    })
}

fn header_for(kind: &str, dim: GridDim) -> String {
    let mut h = String::from("i,j");
    if dim.duration_active() {
        h.push_str(",k");
    }
    h.push_str(",value");
    if kind == KIND_RATES {
        h.push_str(",events,person_time");
    }
    h
}

/// 17 significant digits: enough to reproduce any f64 exactly on re-parse.
fn fmt_value(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_table_file<V>(
    path: &Path,
    kind: &str,
    grid: &GridSpec,
    semantics: RiskSemantics,
    cells: &BTreeMap<VoxelIndex, V>,
    mut fmt_row: impl FnMut(&mut String, &V),
) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| io_error(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let mut buf = String::new();
    buf.push_str(&meta_line(kind, grid, semantics));
    buf.push('\n');
    buf.push_str(&header_for(kind, grid.dim()));
    buf.push('\n');
    for (voxel, value) in cells {
        match grid.dim() {
            GridDim::Two => {
                let _ = write!(buf, "{},{}", voxel.i, voxel.j);
            }
            GridDim::Three => {
                let _ = write!(buf, "{},{},{}", voxel.i, voxel.j, voxel.k);
            }
        }
        buf.push(',');
        fmt_row(&mut buf, value);
        buf.push('\n');
    }
    out.write_all(buf.as_bytes()).map_err(|e| io_error(path, e))?;
    out.flush().map_err(|e| io_error(path, e))
}

pub fn write_exposure_table(table: &ExposureTable, path: &Path) -> Result<()> {
    write_table_file(
        path,
        KIND_EXPOSURE,
        table.grid(),
        table.semantics(),
        table.cells(),
        |buf, v| buf.push_str(&fmt_value(*v)),
    )
}

pub fn write_event_table(table: &EventTable, path: &Path) -> Result<()> {
    write_table_file(
        path,
        KIND_EVENTS,
        table.grid(),
        table.semantics(),
        table.cells(),
        |buf, v| {
            let _ = write!(buf, "{v}");
        },
    )
}

pub fn write_rate_table(table: &RateTable, path: &Path) -> Result<()> {
    write_table_file(
        path,
        KIND_RATES,
        table.grid(),
        table.semantics(),
        table.cells(),
        |buf, cell: &RateCell| {
            let _ = write!(
                buf,
                "{},{},{}",
                fmt_value(cell.rate),
                cell.events,
                fmt_value(cell.person_time)
            );
        },
    )
}

struct TableFile {
    meta: TableMeta,
    rows: Vec<(VoxelIndex, Vec<String>)>,
}

fn read_table_file(path: &Path, expected_kind: &str, value_fields: usize) -> Result<TableFile> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let mut lines = text.lines().enumerate();

    let (_, meta_src) = lines.next().ok_or_else(|| Error::Schema {
        path: path.to_owned(),
        reason: "empty file".to_owned(),
    })?;
    let meta = parse_meta_line(path, meta_src)?;
    if meta.kind != expected_kind {
        return Err(Error::Schema {
            path: path.to_owned(),
            reason: format!("expected kind={expected_kind}, found kind={}", meta.kind),
        });
    }

    let (_, header) = lines.next().ok_or_else(|| Error::Schema {
        path: path.to_owned(),
        reason: "missing column header".to_owned(),
    })?;
    let expected_header = header_for(expected_kind, meta.grid.dim());
    if header != expected_header {
        return Err(Error::Schema {
            path: path.to_owned(),
            reason: format!(
                "column header {header:?} does not match {expected_header:?} for dim={}",
                meta.grid.dim()
            ),
        });
    }

    let index_fields = if meta.grid.dim().duration_active() { 3 } else { 2 };
    let mut rows = Vec::new();
    let mut last: Option<VoxelIndex> = None;
    for (zero_based, row) in lines {
        let line = zero_based as u64 + 1;
        if row.is_empty() {
            continue; // trailing newline
        }
        let parse = |reason: String| Error::Parse {
            path: path.to_owned(),
            line,
            reason,
        };
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != index_fields + value_fields {
            return Err(parse(format!(
                "expected {} fields, found {}",
                index_fields + value_fields,
                fields.len()
            )));
        }
        let mut index = [0u64; 3];
        for (slot, field) in index.iter_mut().zip(&fields[..index_fields]) {
            *slot = field
                .parse::<u64>()
                .map_err(|_| parse(format!("unreadable cell index {field:?}")))?;
        }
        let voxel = VoxelIndex::new(index[0], index[1], if index_fields == 3 { index[2] } else { 0 });
        if last.is_some_and(|prev| voxel <= prev) {
            return Err(parse(format!("row for cell {voxel} out of order or duplicated")));
        }
        last = Some(voxel);
        rows.push((
            voxel,
            fields[index_fields..].iter().map(|s| s.to_string()).collect(),
        ));
    }
    Ok(TableFile { meta, rows })
}

fn parse_f64(path: &Path, line_hint: &VoxelIndex, field: &str, what: &str) -> Result<f64> {
    field.parse::<f64>().map_err(|_| Error::Schema {
        path: path.to_owned(),
        reason: format!("unreadable {what} {field:?} in row for cell {line_hint}"),
    })
}

pub fn read_exposure_table(path: &Path) -> Result<ExposureTable> {
    let file = read_table_file(path, KIND_EXPOSURE, 1)?;
    let mut cells = BTreeMap::new();
    for (voxel, fields) in &file.rows {
        let value = parse_f64(path, voxel, &fields[0], "person-time")?;
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::Schema {
                path: path.to_owned(),
                reason: format!("person-time must be positive and finite, cell {voxel} has {value}"),
            });
        }
        cells.insert(*voxel, value);
    }
    Ok(ExposureTable::from_parts(file.meta.grid, file.meta.semantics, cells))
}

pub fn read_event_table(path: &Path) -> Result<EventTable> {
    let file = read_table_file(path, KIND_EVENTS, 1)?;
    let mut cells = BTreeMap::new();
    for (voxel, fields) in &file.rows {
        let count = fields[0].parse::<u64>().map_err(|_| Error::Schema {
            path: path.to_owned(),
            reason: format!("unreadable event count {:?} in row for cell {voxel}", fields[0]),
        })?;
        if count == 0 {
            return Err(Error::Schema {
                path: path.to_owned(),
                reason: format!("cell {voxel} stored with zero events; empty cells must be absent"),
            });
        }
        cells.insert(*voxel, count);
    }
    Ok(EventTable::from_parts(file.meta.grid, file.meta.semantics, cells))
}

pub fn read_rate_table(path: &Path) -> Result<RateTable> {
    let file = read_table_file(path, KIND_RATES, 3)?;
    let mut cells = BTreeMap::new();
    for (voxel, fields) in &file.rows {
        let rate = parse_f64(path, voxel, &fields[0], "rate")?;
        let events = fields[1].parse::<u64>().map_err(|_| Error::Schema {
            path: path.to_owned(),
            reason: format!("unreadable event count {:?} in row for cell {voxel}", fields[1]),
        })?;
        let person_time = parse_f64(path, voxel, &fields[2], "person-time")?;
        if !person_time.is_finite() || person_time <= 0.0 {
            return Err(Error::Schema {
                path: path.to_owned(),
                reason: format!("person-time must be positive and finite, cell {voxel} has {person_time}"),
            });
        }
        if rate != events as f64 / person_time {
            return Err(Error::Schema {
                path: path.to_owned(),
                reason: format!("rate {rate} is not events/person_time for cell {voxel}"),
            });
        }
        cells.insert(
            *voxel,
            RateCell {
                rate,
                events,
                person_time,
            },
        );
    }
    Ok(RateTable::from_parts(file.meta.grid, file.meta.semantics, cells))
}
