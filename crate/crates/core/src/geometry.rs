//! Pitch coordinates, the time grid, and the frame / trajectory value types
//! shared by every stage of the pipeline.
//!
//! Coordinates are metres on a 120 × 80 pitch. Times are seconds relative to
//! the start of a half; halves never share a time axis.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pitch length in metres.
pub const PITCH_LENGTH: f64 = 120.0;
/// Pitch width in metres.
pub const PITCH_WIDTH: f64 = 80.0;

/// How far a percentage coordinate may stray outside `[0, 1]` before it is
/// rejected instead of clamped.
pub const PERCENT_TOLERANCE: f64 = 0.05;

/// Tolerance used when deciding whether a time sits on a grid point or
/// coincides with a recorded trajectory time.
pub const TIME_EPS: f64 = 1e-9;

/// A 2-D point or displacement in pitch metres.
///
/// Positions produced by the pipeline are clamped to the pitch; intermediate
/// arithmetic (displacements, shifted copies in tests) is unconstrained.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ZERO: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn distance(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn is_on_pitch(self) -> bool {
        (0.0..=PITCH_LENGTH).contains(&self.x) && (0.0..=PITCH_WIDTH).contains(&self.y)
    }

    /// Clamps both coordinates into the pitch rectangle.
    pub fn clamp_to_pitch(self) -> Point {
        Point::new(self.x.clamp(0.0, PITCH_LENGTH), self.y.clamp(0.0, PITCH_WIDTH))
    }

    /// Rotates the point half a turn about the centre spot. Applying it twice
    /// is the identity.
    pub fn flip(self) -> Point {
        Point::new(PITCH_LENGTH - self.x, PITCH_WIDTH - self.y)
    }

    pub fn lerp(self, other: Point, frac: f64) -> Point {
        self + (other - self) * frac
    }

    pub fn axis(self, axis: usize) -> f64 {
        match axis {
            0 => self.x,
            _ => self.y,
        }
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Point {
    fn add_assign(&mut self, rhs: Point) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

impl Div<f64> for Point {
    type Output = Point;
    fn div(self, rhs: f64) -> Point {
        Point::new(self.x / rhs, self.y / rhs)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Converts a unit-square (percentage) coordinate to pitch metres.
///
/// Components up to [`PERCENT_TOLERANCE`] outside `[0, 1]` are clamped onto the
/// pitch; anything further out is a malformed-input error that names `frame`.
pub fn scale_percent_coords(x: f64, y: f64, frame: &str) -> Result<Point> {
    let lo = -PERCENT_TOLERANCE;
    let hi = 1.0 + PERCENT_TOLERANCE;
    for v in [x, y] {
        if !v.is_finite() || v < lo || v > hi {
            return Err(Error::Malformed(format!(
                "frame {frame}: percentage coordinate ({x}, {y}) outside [{lo}, {hi}]"
            )));
        }
    }
    Ok(Point::new(x.clamp(0.0, 1.0) * PITCH_LENGTH, y.clamp(0.0, 1.0) * PITCH_WIDTH))
}

/// Returns the grid indices `(k_lo, k_hi)` bracketing `t` on a grid of spacing
/// `step`. Both are equal when `t` is on the grid (within [`TIME_EPS`]).
pub fn nearest_grid_times(t: f64, step: f64) -> (i64, i64) {
    debug_assert!(step > 0.0);
    let r = t / step;
    let nearest = r.round();
    if (r - nearest).abs() * step <= TIME_EPS {
        let k = nearest as i64;
        return (k, k);
    }
    let lo = r.floor() as i64;
    (lo, lo + 1)
}

/// Whether `t` sits on the grid of spacing `step`.
pub fn on_grid(t: f64, step: f64) -> bool {
    let (lo, hi) = nearest_grid_times(t, step);
    lo == hi
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Team {
    Home,
    Away,
}

impl Team {
    pub const BOTH: [Team; 2] = [Team::Home, Team::Away];

    pub fn other(self) -> Team {
        match self {
            Team::Home => Team::Away,
            Team::Away => Team::Home,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Team::Home => 0,
            Team::Away => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Team::Home => "home",
            Team::Away => "away",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlayerTag {
    pub team: Team,
    pub is_goalkeeper: bool,
}

impl PlayerTag {
    pub const fn outfield(team: Team) -> Self {
        PlayerTag { team, is_goalkeeper: false }
    }

    pub const fn keeper(team: Team) -> Self {
        PlayerTag { team, is_goalkeeper: true }
    }
}

/// One identity-free player sighting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sighting {
    pub tag: PlayerTag,
    pub pos: Point,
}

/// Maximum visible outfielders per team in one frame.
pub const MAX_OUTFIELDERS: usize = 10;

/// A timestamped, partially observed snapshot: the ball plus whichever players
/// were visible, labelled by team and keeper flag only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationFrame {
    pub time: f64,
    pub ball: Point,
    pub visible: Vec<Sighting>,
}

impl ObservationFrame {
    pub fn outfielders(&self, team: Team) -> impl Iterator<Item = Point> + '_ {
        self.visible
            .iter()
            .filter(move |s| s.tag == PlayerTag::outfield(team))
            .map(|s| s.pos)
    }

    pub fn keeper(&self, team: Team) -> Option<Point> {
        self.visible
            .iter()
            .find(|s| s.tag == PlayerTag::keeper(team))
            .map(|s| s.pos)
    }

    pub fn visible_outfield_count(&self) -> usize {
        self.visible.iter().filter(|s| !s.tag.is_goalkeeper).count()
    }

    /// Checks the per-team visibility caps.
    pub fn validate(&self) -> Result<()> {
        for team in Team::BOTH {
            let outfield = self.outfielders(team).count();
            let keepers = self
                .visible
                .iter()
                .filter(|s| s.tag == PlayerTag::keeper(team))
                .count();
            if outfield > MAX_OUTFIELDERS || keepers > 1 {
                return Err(Error::Malformed(format!(
                    "frame at t={:.2}: {} team shows {outfield} outfielders and {keepers} keepers",
                    self.time,
                    team.name()
                )));
            }
        }
        Ok(())
    }
}

/// One point of a trajectory. `observed` is false for synthetic seeds placed
/// during initialisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub pos: Point,
    pub time: f64,
    pub observed: bool,
}

/// Time-ordered points believed to belong to a single player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub tag: PlayerTag,
    points: Vec<TrackPoint>,
}

impl Trajectory {
    pub fn new(tag: PlayerTag) -> Self {
        Trajectory { tag, points: Vec::new() }
    }

    /// Builds a trajectory of observed points, rejecting non-increasing times.
    pub fn from_points(tag: PlayerTag, points: impl IntoIterator<Item = (Point, f64)>) -> Result<Self> {
        let mut traj = Trajectory::new(tag);
        for (pos, time) in points {
            traj.push(pos, time, true)?;
        }
        Ok(traj)
    }

    pub fn push(&mut self, pos: Point, time: f64, observed: bool) -> Result<()> {
        if let Some(last) = self.points.last() {
            if time <= last.time {
                return Err(Error::Invariant(format!(
                    "trajectory times must increase: {time} after {}",
                    last.time
                )));
            }
        }
        self.points.push(TrackPoint { pos, time, observed });
        Ok(())
    }

    pub fn points(&self) -> &[TrackPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> Option<&TrackPoint> {
        self.points.first()
    }

    pub fn last(&self) -> Option<&TrackPoint> {
        self.points.last()
    }

    /// Index of the point recorded at `t`, if any.
    pub fn point_at(&self, t: f64) -> Option<&TrackPoint> {
        let idx = self.points.partition_point(|p| p.time < t - TIME_EPS);
        self.points.get(idx).filter(|p| (p.time - t).abs() <= TIME_EPS)
    }

    /// Index `i` such that `points[i].time <= t < points[i + 1].time`, or
    /// `None` when `t` lies outside the recorded span.
    pub fn bracket(&self, t: f64) -> Option<usize> {
        let first = self.points.first()?;
        let last = self.points.last()?;
        if t < first.time || t > last.time {
            return None;
        }
        let idx = self.points.partition_point(|p| p.time <= t);
        Some(idx.saturating_sub(1))
    }

    /// Piecewise-linear position at `t`, held constant outside the recorded
    /// span.
    pub fn linear_at(&self, t: f64) -> Option<Point> {
        let first = self.points.first()?;
        let last = self.points.last()?;
        if t <= first.time {
            return Some(first.pos);
        }
        if t >= last.time {
            return Some(last.pos);
        }
        let i = self.points.partition_point(|p| p.time <= t) - 1;
        let (a, b) = (self.points[i], self.points[i + 1]);
        Some(a.pos.lerp(b.pos, (t - a.time) / (b.time - a.time)))
    }

    /// Seconds from `t` to the closest observed point, looking both ways.
    pub fn seconds_to_observation(&self, t: f64) -> Option<f64> {
        let idx = self.points.partition_point(|p| p.time < t);
        let forward = self.points[idx..].iter().find(|p| p.observed).map(|p| p.time - t);
        let backward = self.points[..idx].iter().rev().find(|p| p.observed).map(|p| t - p.time);
        match (forward, backward) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Observed,
    Estimated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnrichedPlayer {
    pub tag: PlayerTag,
    pub pos: Point,
    pub provenance: Provenance,
}

/// Full 22-player estimated snapshot at an arbitrary query time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrichedFrame {
    pub time: f64,
    pub ball: Point,
    pub players: Vec<EnrichedPlayer>,
}

impl EnrichedFrame {
    pub fn team(&self, team: Team) -> impl Iterator<Item = &EnrichedPlayer> {
        self.players.iter().filter(move |p| p.tag.team == team)
    }

    /// Checks the 11-per-team contract and that every position is on the pitch.
    pub fn validate(&self) -> Result<()> {
        for team in Team::BOTH {
            let n = self.team(team).count();
            let keepers = self.team(team).filter(|p| p.tag.is_goalkeeper).count();
            if n != 11 || keepers != 1 {
                return Err(Error::Invariant(format!(
                    "enriched frame at t={:.2} has {n} {} players ({keepers} keepers)",
                    self.time,
                    team.name()
                )));
            }
        }
        if let Some(p) = self.players.iter().find(|p| !p.pos.is_on_pitch()) {
            return Err(Error::Invariant(format!(
                "enriched frame at t={:.2} has off-pitch position ({}, {})",
                self.time, p.pos.x, p.pos.y
            )));
        }
        Ok(())
    }
}
