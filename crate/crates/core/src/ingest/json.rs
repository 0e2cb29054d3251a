//! JSON file formats: enriched output, discrete records and axis-error logs.
//!
//! Every number is written in plain decimal with at least two fractional
//! digits, using the shortest representation that parses back to the same
//! `f64`, so the files round-trip losslessly.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

use super::{AxisErrorRecord, DiscreteMatchRecord, Source};
use crate::error::{Error, Result};
use crate::geometry::{
    EnrichedFrame, EnrichedPlayer, ObservationFrame, PlayerTag, Point, Provenance, Sighting, Team,
};

/// Formats `v` with at least two fractional digits and no exponent.
pub(crate) fn fixed_decimal(v: f64) -> String {
    let mut s = format!("{v}");
    match s.find('.') {
        None => s.push_str(".00"),
        Some(dot) => {
            for _ in (s.len() - dot - 1)..2 {
                s.push('0');
            }
        }
    }
    s
}

fn ser_fixed<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if !v.is_finite() {
        return Err(serde::ser::Error::custom(format!("non-finite number {v}")));
    }
    RawValue::from_string(fixed_decimal(*v))
        .map_err(serde::ser::Error::custom)?
        .serialize(s)
}

fn ser_fixed_opt<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => ser_fixed(v, s),
        None => s.serialize_none(),
    }
}

#[derive(Serialize, Deserialize)]
struct XY {
    #[serde(serialize_with = "ser_fixed")]
    x: f64,
    #[serde(serialize_with = "ser_fixed")]
    y: f64,
}

impl From<Point> for XY {
    fn from(p: Point) -> Self {
        XY { x: p.x, y: p.y }
    }
}

impl From<XY> for Point {
    fn from(p: XY) -> Self {
        Point::new(p.x, p.y)
    }
}

#[derive(Serialize, Deserialize)]
struct PlayerOut {
    team: Team,
    keeper: bool,
    #[serde(serialize_with = "ser_fixed")]
    x: f64,
    #[serde(serialize_with = "ser_fixed")]
    y: f64,
    visible: bool,
}

#[derive(Serialize, Deserialize)]
struct FrameOut {
    #[serde(serialize_with = "ser_fixed")]
    time_s: f64,
    ball: XY,
    players: Vec<PlayerOut>,
}

#[derive(Serialize, Deserialize)]
struct SightingOut {
    team: Team,
    keeper: bool,
    #[serde(serialize_with = "ser_fixed")]
    x: f64,
    #[serde(serialize_with = "ser_fixed")]
    y: f64,
}

#[derive(Serialize, Deserialize)]
struct ObservationOut {
    #[serde(serialize_with = "ser_fixed")]
    time_s: f64,
    ball: XY,
    players: Vec<SightingOut>,
}

#[derive(Serialize, Deserialize)]
struct RecordOut {
    half_id: u8,
    source: Source,
    home_defends_low_x: bool,
    frames: Vec<ObservationOut>,
}

#[derive(Serialize, Deserialize)]
struct AxisErrorOut {
    frame_index: usize,
    reason: String,
    ball_event: Option<XY>,
    ball_frame: Option<XY>,
    #[serde(serialize_with = "ser_fixed_opt")]
    disagreement: Option<f64>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, value).map_err(|e| Error::json(path, e))?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::json(path, e))
}

/// Writes enriched frames. Each player carries a `visible` flag that is true
/// exactly for observed positions.
pub fn write_enriched(frames: &[EnrichedFrame], path: &Path) -> Result<()> {
    if frames.is_empty() {
        return Err(Error::Invariant("no enriched frames to write".into()));
    }
    if frames.windows(2).any(|w| w[1].time <= w[0].time) {
        return Err(Error::Invariant("enriched frames must be time-sorted".into()));
    }
    let out: Vec<FrameOut> = frames
        .iter()
        .map(|f| FrameOut {
            time_s: f.time,
            ball: f.ball.into(),
            players: f
                .players
                .iter()
                .map(|p| PlayerOut {
                    team: p.tag.team,
                    keeper: p.tag.is_goalkeeper,
                    x: p.pos.x,
                    y: p.pos.y,
                    visible: p.provenance == Provenance::Observed,
                })
                .collect(),
        })
        .collect();
    write_json(path, &out)
}

pub fn read_enriched(path: &Path) -> Result<Vec<EnrichedFrame>> {
    let raw: Vec<FrameOut> = read_json(path)?;
    Ok(raw
        .into_iter()
        .map(|f| EnrichedFrame {
            time: f.time_s,
            ball: f.ball.into(),
            players: f
                .players
                .into_iter()
                .map(|p| EnrichedPlayer {
                    tag: PlayerTag { team: p.team, is_goalkeeper: p.keeper },
                    pos: Point::new(p.x, p.y),
                    provenance: if p.visible { Provenance::Observed } else { Provenance::Estimated },
                })
                .collect(),
        })
        .collect())
}

pub fn write_discrete(records: &[DiscreteMatchRecord], path: &Path) -> Result<()> {
    let out: Vec<RecordOut> = records
        .iter()
        .map(|r| RecordOut {
            half_id: r.half_id,
            source: r.source,
            home_defends_low_x: r.home_defends_low_x,
            frames: r
                .frames
                .iter()
                .map(|f| ObservationOut {
                    time_s: f.time,
                    ball: f.ball.into(),
                    players: f
                        .visible
                        .iter()
                        .map(|s| SightingOut {
                            team: s.tag.team,
                            keeper: s.tag.is_goalkeeper,
                            x: s.pos.x,
                            y: s.pos.y,
                        })
                        .collect(),
                })
                .collect(),
        })
        .collect();
    write_json(path, &out)
}

pub fn read_discrete(path: &Path) -> Result<Vec<DiscreteMatchRecord>> {
    let raw: Vec<RecordOut> = read_json(path)?;
    let records: Vec<DiscreteMatchRecord> = raw
        .into_iter()
        .map(|r| DiscreteMatchRecord {
            half_id: r.half_id,
            source: r.source,
            home_defends_low_x: r.home_defends_low_x,
            frames: r
                .frames
                .into_iter()
                .map(|f| ObservationFrame {
                    time: f.time_s,
                    ball: f.ball.into(),
                    visible: f
                        .players
                        .into_iter()
                        .map(|p| Sighting {
                            tag: PlayerTag { team: p.team, is_goalkeeper: p.keeper },
                            pos: Point::new(p.x, p.y),
                        })
                        .collect(),
                })
                .collect(),
        })
        .collect();
    for r in &records {
        r.validate()?;
    }
    Ok(records)
}

pub fn write_errors(errors: &[AxisErrorRecord], path: &Path) -> Result<()> {
    let out: Vec<AxisErrorOut> = errors
        .iter()
        .map(|e| AxisErrorOut {
            frame_index: e.frame_index,
            reason: e.reason.clone(),
            ball_event: e.ball_event.map(Into::into),
            ball_frame: e.ball_frame.map(Into::into),
            disagreement: e.disagreement,
        })
        .collect();
    write_json(path, &out)
}

pub fn read_errors(path: &Path) -> Result<Vec<AxisErrorRecord>> {
    let raw: Vec<AxisErrorOut> = read_json(path)?;
    Ok(raw
        .into_iter()
        .map(|e| AxisErrorRecord {
            frame_index: e.frame_index,
            reason: e.reason,
            ball_event: e.ball_event.map(Into::into),
            ball_frame: e.ball_frame.map(Into::into),
            disagreement: e.disagreement,
        })
        .collect())
}
