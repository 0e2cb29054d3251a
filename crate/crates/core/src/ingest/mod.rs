//! Readers and writers for ground-truth tracking data, event logs, discrete
//! broadcast-style frames and the enriched output format.

mod json;
mod metrica;
mod statsbomb;

use serde::{Deserialize, Serialize};

pub use json::{
    read_discrete, read_enriched, read_errors, write_discrete, write_enriched, write_errors,
};
pub use metrica::{
    attach_events, read_events_csv, read_tracking_csv, write_events_csv, write_tracking_csv, RawEvent,
};
pub use statsbomb::{orient_fixed_axis, read_360_frames, Statsbomb360, DEFAULT_AXIS_THRESHOLD};

use crate::error::{Error, Result};
use crate::geometry::{ObservationFrame, PlayerTag, Point, Team};

/// A roster entry for one half of ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerInfo {
    pub name: String,
    pub tag: PlayerTag,
}

/// A player position in a ground-truth frame. `id` indexes the half's roster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthPlayer {
    pub id: usize,
    pub pos: Point,
}

/// A native-rate ground-truth frame with every on-pitch player.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthFrame {
    pub time: f64,
    pub ball: Point,
    pub players: Vec<TruthPlayer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub kind: String,
    pub ball: Option<Point>,
    pub attacking_team: Team,
}

/// One half of full ground-truth tracking.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchHalf {
    pub half_id: u8,
    /// Absolute source-clock time of the half start; frame times are relative
    /// to it.
    pub time_offset: f64,
    pub roster: Vec<PlayerInfo>,
    pub frames: Vec<TruthFrame>,
    pub events: Vec<Event>,
    /// Source rows skipped because the ball position was missing.
    pub dropped_rows: usize,
    pub home_defends_low_x: bool,
}

impl MatchHalf {
    pub fn tag(&self, id: usize) -> PlayerTag {
        self.roster[id].tag
    }

    /// `(first, last)` native frame times.
    pub fn span(&self) -> Option<(f64, f64)> {
        Some((self.frames.first()?.time, self.frames.last()?.time))
    }

    /// Index of the native frame nearest `t`; ties go to the earlier frame.
    pub fn nearest_frame_index(&self, t: f64) -> Option<usize> {
        if self.frames.is_empty() {
            return None;
        }
        let idx = self.frames.partition_point(|f| f.time < t);
        if idx == 0 {
            return Some(0);
        }
        if idx == self.frames.len() {
            return Some(idx - 1);
        }
        let before = t - self.frames[idx - 1].time;
        let after = self.frames[idx].time - t;
        Some(if after < before { idx } else { idx - 1 })
    }

    /// Whether `team` defends the low-x goal in this half.
    pub fn defends_low_x(&self, team: Team) -> bool {
        (team == Team::Home) == self.home_defends_low_x
    }

    /// Flags the keeper of each team: the player whose mean distance from the
    /// halfway line is largest. Also derives which end each team defends.
    pub(crate) fn assign_goalkeepers(&mut self) {
        let n = self.roster.len();
        let mut sum_dev = vec![0.0; n];
        let mut sum_x = vec![0.0; n];
        let mut count = vec![0usize; n];
        for f in &self.frames {
            for p in &f.players {
                sum_dev[p.id] += (p.pos.x - crate::geometry::PITCH_LENGTH / 2.0).abs();
                sum_x[p.id] += p.pos.x;
                count[p.id] += 1;
            }
        }
        let mut home_keeper_x = None;
        for team in Team::BOTH {
            let best = (0..n)
                .filter(|&i| self.roster[i].tag.team == team && count[i] > 0)
                .max_by(|&a, &b| {
                    let ma = sum_dev[a] / count[a] as f64;
                    let mb = sum_dev[b] / count[b] as f64;
                    ma.total_cmp(&mb).then(b.cmp(&a))
                });
            for i in 0..n {
                if self.roster[i].tag.team == team {
                    self.roster[i].tag.is_goalkeeper = Some(i) == best;
                }
            }
            if let (Team::Home, Some(k)) = (team, best) {
                home_keeper_x = Some(sum_x[k] / count[k] as f64);
            }
        }
        self.home_defends_low_x = home_keeper_x.is_none_or(|x| x < crate::geometry::PITCH_LENGTH / 2.0);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Simulated,
    Broadcast360,
}

/// Partially observed, identity-free frames for one half.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMatchRecord {
    pub half_id: u8,
    pub source: Source,
    pub home_defends_low_x: bool,
    pub frames: Vec<ObservationFrame>,
}

impl DiscreteMatchRecord {
    pub fn defends_low_x(&self, team: Team) -> bool {
        (team == Team::Home) == self.home_defends_low_x
    }

    /// Checks time ordering and per-frame visibility caps.
    pub fn validate(&self) -> Result<()> {
        for w in self.frames.windows(2) {
            if w[1].time <= w[0].time {
                return Err(Error::Malformed(format!(
                    "half {}: frame times not increasing ({} then {})",
                    self.half_id, w[0].time, w[1].time
                )));
            }
        }
        self.frames.iter().try_for_each(ObservationFrame::validate)
    }
}

/// A 360 frame excluded from the discrete record, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisErrorRecord {
    pub frame_index: usize,
    pub reason: String,
    pub ball_event: Option<Point>,
    pub ball_frame: Option<Point>,
    pub disagreement: Option<f64>,
}
