//! Broadcast "360" freeze frames plus their linked event log.
//!
//! Event locations are given from the acting team's perspective and the
//! freeze-frame axes are not fixed, so each frame is re-oriented onto a fixed
//! axis (home attacks +x in odd periods) by choosing whichever of the identity
//! or the half-turn flip brings its ball closest to the linked event's ball.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde_json::Value;

use super::{AxisErrorRecord, DiscreteMatchRecord, Source};
use crate::error::{Error, Result};
use crate::geometry::{ObservationFrame, PlayerTag, Point, Sighting, Team};

/// Default ball-disagreement threshold in metres.
pub const DEFAULT_AXIS_THRESHOLD: f64 = 5.0;

/// Largest timestamp gap for matching a frame to an event without an id.
const TIMESTAMP_MATCH_WINDOW: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Statsbomb360 {
    pub halves: Vec<DiscreteMatchRecord>,
    pub errors: Vec<AxisErrorRecord>,
}

#[derive(Debug, Clone)]
struct EventInfo {
    period: u8,
    time: f64,
    team: String,
    location: Option<Point>,
}

fn read_array(path: &Path) -> Result<Vec<Value>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let v: Value = serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::json(path, e))?;
    match v {
        Value::Array(items) => Ok(items),
        _ => Err(Error::Malformed(format!("{}: expected a JSON array", path.display()))),
    }
}

/// Parses `HH:MM:SS.sss` (or plain seconds).
fn parse_timestamp(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => {
            let mut total = 0.0;
            for part in s.split(':') {
                total = total * 60.0 + part.trim().parse::<f64>().ok()?;
            }
            Some(total)
        }
        _ => None,
    }
}

fn parse_location(v: Option<&Value>) -> Option<Point> {
    let arr = v?.as_array()?;
    Some(Point::new(arr.first()?.as_f64()?, arr.get(1)?.as_f64()?))
}

fn team_name(v: Option<&Value>) -> Option<String> {
    match v? {
        Value::String(s) => Some(s.clone()),
        Value::Object(o) => o.get("name").and_then(Value::as_str).map(str::to_string),
        _ => None,
    }
}

/// Whether `team` attacks towards +x on the fixed axis in `period`.
fn attacks_high_x(team: Team, period: u8) -> bool {
    (team == Team::Home) == (period % 2 == 1)
}

/// Chooses the orientation of a frame ball that best agrees with the event
/// ball (already on the fixed axis). Returns `(flip, disagreement)`; ties keep
/// the identity.
pub fn orient_fixed_axis(frame_ball: Point, event_ball_fixed: Point) -> (bool, f64) {
    let keep = frame_ball.distance(event_ball_fixed);
    let flipped = frame_ball.flip().distance(event_ball_fixed);
    if flipped < keep {
        (true, flipped)
    } else {
        (false, keep)
    }
}

/// Reads 360 freeze frames and their event log into per-period discrete
/// records on a fixed axis.
///
/// `home_team` names the home side; when `None` the team of the first event is
/// taken as home. Frames whose ball disagrees with the linked event by more
/// than `axis_threshold` metres under both orientations, orphan frames, frames
/// breaking visibility caps and frames repeating a timestamp are excluded, and
/// each appears in exactly one [`AxisErrorRecord`].
pub fn read_360_frames(
    frames_path: &Path,
    events_path: &Path,
    home_team: Option<&str>,
    axis_threshold: f64,
) -> Result<Statsbomb360> {
    let events_raw = read_array(events_path)?;
    let frames_raw = read_array(frames_path)?;

    let mut events: HashMap<String, EventInfo> = HashMap::new();
    let mut by_period: BTreeMap<u8, Vec<(f64, String)>> = BTreeMap::new();
    let mut first_team = None;
    for (i, ev) in events_raw.iter().enumerate() {
        let Some(id) = ev.get("id").and_then(Value::as_str) else {
            return Err(Error::Malformed(format!("{}: event {i} has no id", events_path.display())));
        };
        let time = ev.get("timestamp").and_then(parse_timestamp).ok_or_else(|| {
            Error::Malformed(format!("{}: event {id} has no timestamp", events_path.display()))
        })?;
        let team = team_name(ev.get("team")).ok_or_else(|| {
            Error::Malformed(format!("{}: event {id} has no team", events_path.display()))
        })?;
        let period = ev.get("period").and_then(Value::as_u64).unwrap_or(1) as u8;
        first_team.get_or_insert_with(|| team.clone());
        by_period.entry(period).or_default().push((time, id.to_string()));
        events.insert(
            id.to_string(),
            EventInfo { period, time, team, location: parse_location(ev.get("location")) },
        );
    }
    for list in by_period.values_mut() {
        list.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let home_name = home_team.map(str::to_string).or(first_team);
    let side = |name: &str| {
        if Some(name) == home_name.as_deref() {
            Team::Home
        } else {
            Team::Away
        }
    };

    let mut errors = Vec::new();
    let mut kept: Vec<(u8, f64, usize, ObservationFrame)> = Vec::new();
    let reject = |errors: &mut Vec<AxisErrorRecord>, idx: usize, reason: &str| {
        errors.push(AxisErrorRecord {
            frame_index: idx,
            reason: reason.to_string(),
            ball_event: None,
            ball_frame: None,
            disagreement: None,
        });
    };

    for (idx, fr) in frames_raw.iter().enumerate() {
        let linked = fr
            .get("event_uuid")
            .or_else(|| fr.get("id"))
            .and_then(Value::as_str)
            .and_then(|id| events.get(id))
            .or_else(|| {
                let t = fr.get("timestamp").and_then(parse_timestamp)?;
                let period = fr.get("period").and_then(Value::as_u64).unwrap_or(1) as u8;
                let list = by_period.get(&period)?;
                let best = list.iter().min_by(|a, b| (a.0 - t).abs().total_cmp(&(b.0 - t).abs()))?;
                ((best.0 - t).abs() <= TIMESTAMP_MATCH_WINDOW).then(|| &events[&best.1])
            });
        let Some(event) = linked else {
            reject(&mut errors, idx, "orphan frame");
            continue;
        };
        let Some(event_loc) = event.location else {
            reject(&mut errors, idx, "linked event has no location");
            continue;
        };
        let Some(entries) = fr.get("freeze_frame").and_then(Value::as_array) else {
            reject(&mut errors, idx, "missing freeze_frame");
            continue;
        };
        let event_team = side(&event.team);
        let event_ball =
            if attacks_high_x(event_team, event.period) { event_loc } else { event_loc.flip() };

        let mut sightings = Vec::with_capacity(entries.len());
        let mut actor = None;
        let mut malformed = false;
        for e in entries {
            let Some(loc) = parse_location(e.get("location")) else {
                malformed = true;
                break;
            };
            let flag = |k: &str| e.get(k).and_then(Value::as_bool).unwrap_or(false);
            let team = if flag("teammate") { event_team } else { event_team.other() };
            if flag("actor") {
                actor = Some(loc);
            }
            sightings.push(Sighting { tag: PlayerTag { team, is_goalkeeper: flag("keeper") }, pos: loc });
        }
        if malformed {
            reject(&mut errors, idx, "freeze_frame entry without location");
            continue;
        }

        // Without an actor the frame shares the event's perspective.
        let frame_ball = actor.unwrap_or(event_loc);
        let (flip, disagreement) = orient_fixed_axis(frame_ball, event_ball);
        let oriented_ball = if flip { frame_ball.flip() } else { frame_ball };
        if disagreement > axis_threshold {
            errors.push(AxisErrorRecord {
                frame_index: idx,
                reason: "ball disagreement".into(),
                ball_event: Some(event_ball),
                ball_frame: Some(oriented_ball),
                disagreement: Some(disagreement),
            });
            continue;
        }
        for s in &mut sightings {
            let p = if flip { s.pos.flip() } else { s.pos };
            s.pos = p.clamp_to_pitch();
        }
        let frame = ObservationFrame { time: event.time, ball: event_ball.clamp_to_pitch(), visible: sightings };
        if frame.validate().is_err() {
            reject(&mut errors, idx, "visibility caps exceeded");
            continue;
        }
        kept.push((event.period, event.time, idx, frame));
    }

    kept.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut halves: Vec<DiscreteMatchRecord> = Vec::new();
    for (period, time, idx, frame) in kept {
        if halves.last().is_none_or(|h| h.half_id != period) {
            halves.push(DiscreteMatchRecord {
                half_id: period,
                source: Source::Broadcast360,
                home_defends_low_x: attacks_high_x(Team::Home, period),
                frames: Vec::new(),
            });
        }
        let half = halves.last_mut().expect("pushed above");
        if half.frames.last().is_some_and(|f| time <= f.time) {
            reject(&mut errors, idx, "duplicate timestamp");
            continue;
        }
        half.frames.push(frame);
    }
    errors.sort_by_key(|e| e.frame_index);
    Ok(Statsbomb360 { halves, errors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn write(dir: &Path, name: &str, v: &Value) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
        p
    }

    fn events() -> Value {
        json!([
            {"id": "e1", "timestamp": "00:00:01.000", "period": 1, "team": {"id": 1, "name": "Reds"}, "location": [90.0, 40.0]},
            {"id": "e2", "timestamp": "00:00:03.500", "period": 1, "team": {"id": 2, "name": "Blues"}, "location": [30.0, 20.0]},
            {"id": "e3", "timestamp": "00:00:05.000", "period": 1, "team": {"id": 2, "name": "Blues"}, "location": [30.0, 20.0]},
            {"id": "e4", "timestamp": "00:00:02.000", "period": 2, "team": {"id": 1, "name": "Reds"}, "location": [100.0, 40.0]}
        ])
    }

    #[test]
    fn orients_and_excludes() {
        let dir = tempfile::tempdir().unwrap();
        let ev = write(dir.path(), "events.json", &events());
        let frames = json!([
            // Home event, actor agrees with the event ball unflipped.
            {"event_uuid": "e1", "visible_area": [], "freeze_frame": [
                {"location": [90.5, 40.0], "teammate": true, "actor": true, "keeper": false},
                {"location": [110.0, 40.0], "teammate": false, "actor": false, "keeper": true}
            ]},
            // Away event in period 1: the away side attacks -x, so the event
            // ball at x=30 from their goal is x=90 on the fixed axis.
            {"event_uuid": "e2", "freeze_frame": [
                {"location": [30.0, 20.0], "teammate": true, "actor": true, "keeper": false}
            ]},
            // Actor nowhere near the event ball under either orientation.
            {"event_uuid": "e3", "freeze_frame": [
                {"location": [60.0, 70.0], "teammate": true, "actor": true, "keeper": false}
            ]},
            {"event_uuid": "missing", "freeze_frame": []},
            {"event_uuid": "e4", "freeze_frame": [
                {"location": [100.0, 40.0], "teammate": true, "actor": true, "keeper": false}
            ]}
        ]);
        let fr = write(dir.path(), "frames.json", &frames);
        let out = read_360_frames(&fr, &ev, None, DEFAULT_AXIS_THRESHOLD).unwrap();

        assert_eq!(out.errors.len(), 2);
        assert_eq!(out.errors[0].frame_index, 2);
        assert_eq!(out.errors[0].reason, "ball disagreement");
        assert!(out.errors[0].disagreement.unwrap() > DEFAULT_AXIS_THRESHOLD);
        assert_eq!(out.errors[1].reason, "orphan frame");

        assert_eq!(out.halves.len(), 2);
        let h1 = &out.halves[0];
        assert_eq!(h1.frames.len(), 2);
        assert_eq!(h1.frames[0].keeper(Team::Away), Some(Point::new(110.0, 40.0)));
        let f2 = &h1.frames[1];
        assert_eq!(f2.time, 3.5);
        assert_eq!(f2.ball, Point::new(90.0, 60.0));
        assert_eq!(f2.outfielders(Team::Away).next(), Some(Point::new(90.0, 60.0)));

        // Period 2: home attacks -x, event at x=100 → x=20 on the fixed axis.
        let h2 = &out.halves[1];
        assert!(!h2.home_defends_low_x);
        assert_eq!(h2.frames[0].ball, Point::new(20.0, 40.0));
    }

    #[test]
    fn explicit_home_team_swaps_sides() {
        let dir = tempfile::tempdir().unwrap();
        let ev = write(dir.path(), "events.json", &events());
        let frames = json!([{"event_uuid": "e1", "freeze_frame": [
            {"location": [90.0, 40.0], "teammate": true, "actor": true, "keeper": false}
        ]}]);
        let fr = write(dir.path(), "frames.json", &frames);
        let out = read_360_frames(&fr, &ev, Some("Blues"), DEFAULT_AXIS_THRESHOLD).unwrap();
        let f = &out.halves[0].frames[0];
        assert_eq!(f.ball, Point::new(30.0, 40.0));
        assert_eq!(f.outfielders(Team::Away).count(), 1);
    }

    #[test]
    fn duplicate_timestamps_are_reported_once() {
        let dir = tempfile::tempdir().unwrap();
        let ev = write(dir.path(), "events.json", &events());
        let ff = json!([{"location": [90.0, 40.0], "teammate": true, "actor": true, "keeper": false}]);
        let frames = json!([
            {"event_uuid": "e1", "freeze_frame": ff},
            {"event_uuid": "e1", "freeze_frame": ff}
        ]);
        let fr = write(dir.path(), "frames.json", &frames);
        let out = read_360_frames(&fr, &ev, None, DEFAULT_AXIS_THRESHOLD).unwrap();
        assert_eq!(out.halves[0].frames.len(), 1);
        assert_eq!(out.errors.len(), 1);
        assert_eq!(out.errors[0].frame_index, 1);
    }

    #[test]
    fn timestamp_fallback_matching() {
        let dir = tempfile::tempdir().unwrap();
        let ev = write(dir.path(), "events.json", &events());
        let frames = json!([
            {"timestamp": "00:00:01.500", "period": 1, "freeze_frame": [
                {"location": [90.0, 40.0], "teammate": true, "actor": true, "keeper": false}]},
            {"timestamp": "00:00:30.000", "period": 1, "freeze_frame": []}
        ]);
        let fr = write(dir.path(), "frames.json", &frames);
        let out = read_360_frames(&fr, &ev, None, DEFAULT_AXIS_THRESHOLD).unwrap();
        assert_eq!(out.halves[0].frames.len(), 1);
        assert_eq!(out.errors.len(), 1);
        assert_eq!(out.errors[0].reason, "orphan frame");
    }

    #[test]
    fn orientation_picks_flip_for_defending_perspective() {
        let (flip, d) = orient_fixed_axis(Point::new(30.0, 40.0), Point::new(90.0, 40.0));
        assert!(flip);
        assert_eq!(d, 0.0);
        let (flip, _) = orient_fixed_axis(Point::new(60.0, 40.0), Point::new(60.0, 40.0));
        assert!(!flip);
    }
}
