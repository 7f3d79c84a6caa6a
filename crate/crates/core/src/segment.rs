//! Life lines through the (time, age, duration) space.
//!
//! A person's record is a polyline: before disease onset it advances along
//! (1, 1, 0) (time and age run, duration stands still), from onset on along
//! (1, 1, 1). Both pieces are straight, so everything downstream works on one
//! straight segment at a time.

use std::fmt;

use crate::error::{ensure_finite, Error, Result};

/// A point with calendar time `t`, age `a` and disease duration `d`, all in
/// the same time unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LexisPoint {
    pub t: f64,
    pub a: f64,
    pub d: f64,
}

impl LexisPoint {
    pub fn new(t: f64, a: f64, d: f64) -> Self {
        LexisPoint { t, a, d }
    }
}

impl fmt::Display for LexisPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.t, self.a, self.d)
    }
}

/// Direction of a life-line piece.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// (1, 1, 0): duration frozen, the piece before onset.
    DiseaseFree,
    /// (1, 1, 1): duration advancing with time.
    Diseased,
}

impl Direction {
    pub fn duration_rate(self) -> f64 {
        match self {
            Direction::DiseaseFree => 0.0,
            Direction::Diseased => 1.0,
        }
    }
}

/// One straight piece of a life line.
///
/// Only the start point, the elapsed time `delta_t` and the direction are
/// stored; the end point is derived. Building segments from these parts (and
/// never from two free-floating endpoints) guarantees that time and age
/// advance by exactly the same amount, with no tolerance checks needed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifeSegment {
    start: LexisPoint,
    delta_t: f64,
    direction: Direction,
}

impl LifeSegment {
    pub fn new(start: LexisPoint, delta_t: f64, direction: Direction) -> Result<Self> {
        ensure_finite("segment start t", start.t)?;
        ensure_finite("segment start a", start.a)?;
        ensure_finite("segment start d", start.d)?;
        ensure_finite("segment delta_t", delta_t)?;
        if delta_t <= 0.0 {
            return Err(Error::InvalidInput {
                reason: format!("segment delta_t must be positive, got {delta_t}"),
            });
        }
        let seg = LifeSegment {
            start,
            delta_t,
            direction,
        };
        let end = seg.end();
        ensure_finite("segment end t", end.t)?;
        ensure_finite("segment end a", end.a)?;
        ensure_finite("segment end d", end.d)?;
        Ok(seg)
    }

    pub fn start(&self) -> LexisPoint {
        self.start
    }

    pub fn end(&self) -> LexisPoint {
        LexisPoint {
            t: self.start.t + self.delta_t,
            a: self.start.a + self.delta_t,
            d: self.start.d + self.direction.duration_rate() * self.delta_t,
        }
    }

    pub fn delta_t(&self) -> f64 {
        self.delta_t
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// Point at parameter `alpha` in [0, 1] along the segment.
    pub fn point_at(&self, alpha: f64) -> LexisPoint {
        LexisPoint {
            t: self.start.t + alpha * self.delta_t,
            a: self.start.a + alpha * self.delta_t,
            d: self.start.d + alpha * self.direction.duration_rate() * self.delta_t,
        }
    }
}
