//! Wide-format tracking CSV (one file per team, percentage coordinates) and
//! the matching event CSV.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use csv::StringRecord;
use log::{info, warn};

use super::{Event, MatchHalf, PlayerInfo, TruthFrame, TruthPlayer};
use crate::error::{Error, Result};
use crate::geometry::{scale_percent_coords, PlayerTag, Point, Team, PITCH_LENGTH, PITCH_WIDTH};

/// Share of dropped rows above which the reader warns.
const DROP_WARN_FRACTION: f64 = 0.05;

struct TeamFile {
    /// (player name, x column, y column)
    players: Vec<(String, usize, usize)>,
    ball: Option<(usize, usize)>,
    period_col: usize,
    frame_col: usize,
    time_col: usize,
    rows: Vec<StringRecord>,
}

fn read_team_file(path: &Path) -> Result<TeamFile> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let mut header: Option<StringRecord> = None;
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        if header.is_none() {
            if rec.iter().any(|c| c.trim() == "Period") {
                header = Some(rec);
            }
            continue;
        }
        rows.push(rec);
    }
    let header = header.ok_or_else(|| {
        Error::Malformed(format!("{}: no header row with a `Period` column", path.display()))
    })?;
    let find = |name: &str| header.iter().position(|c| c.trim() == name);
    let period_col = find("Period");
    let frame_col = find("Frame");
    let time_col = find("Time [s]");
    let (Some(period_col), Some(frame_col), Some(time_col)) = (period_col, frame_col, time_col) else {
        return Err(Error::Malformed(format!(
            "{}: header must name Period, Frame and Time [s] columns",
            path.display()
        )));
    };
    let mut players = Vec::new();
    let mut ball = None;
    let cells: Vec<&str> = header.iter().map(str::trim).collect();
    let mut i = 0;
    while i < cells.len() {
        let name = cells[i];
        let is_meta = i == period_col || i == frame_col || i == time_col;
        if !is_meta && !name.is_empty() {
            let paired = cells.get(i + 1).is_some_and(|c| c.is_empty());
            if !paired {
                return Err(Error::Malformed(format!(
                    "{}: column `{name}` is not followed by an unnamed y column",
                    path.display()
                )));
            }
            if name == "Ball" {
                ball = Some((i, i + 1));
            } else {
                players.push((name.to_string(), i, i + 1));
            }
            i += 2;
            continue;
        }
        i += 1;
    }
    if players.is_empty() {
        return Err(Error::Malformed(format!("{}: header declares no player columns", path.display())));
    }
    Ok(TeamFile { players, ball, period_col, frame_col, time_col, rows })
}

fn cell_f64(rec: &StringRecord, col: usize) -> Option<f64> {
    let s = rec.get(col)?.trim();
    if s.is_empty() {
        return None;
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn cell_pair(rec: &StringRecord, cols: (usize, usize), label: &str) -> Result<Option<Point>> {
    match (cell_f64(rec, cols.0), cell_f64(rec, cols.1)) {
        (Some(x), Some(y)) => scale_percent_coords(x, y, label).map(Some),
        _ => Ok(None),
    }
}

fn round_micro(t: f64) -> f64 {
    (t * 1e6).round() / 1e6
}

/// Reads a pair of per-team wide tracking CSVs and splits them into halves.
///
/// Rows without a ball position are skipped and counted; players with no data
/// in a half are left out of that half's roster. Frame times are made relative
/// to the half start, taken as one native frame before the half's first row.
pub fn read_tracking_csv(home_path: &Path, away_path: &Path) -> Result<Vec<MatchHalf>> {
    let home = read_team_file(home_path)?;
    let away = read_team_file(away_path)?;
    if home.rows.len() != away.rows.len() {
        return Err(Error::Malformed(format!(
            "{} has {} rows but {} has {}",
            home_path.display(),
            home.rows.len(),
            away_path.display(),
            away.rows.len()
        )));
    }

    // Global roster in column order: home players then away players.
    let mut names = Vec::new();
    for (team, file) in [(Team::Home, &home), (Team::Away, &away)] {
        for (name, _, _) in &file.players {
            names.push((team, format!("{}_{}", team.name(), name)));
        }
    }

    let mut by_period: BTreeMap<u8, (Vec<(f64, Point, Vec<TruthPlayer>)>, usize)> = BTreeMap::new();
    for (row_idx, (hr, ar)) in home.rows.iter().zip(&away.rows).enumerate() {
        let period = cell_f64(hr, home.period_col)
            .ok_or_else(|| Error::Malformed(format!("{}: row {row_idx} has no period", home_path.display())))?
            as u8;
        let frame_no = hr.get(home.frame_col).unwrap_or("").trim();
        if frame_no != ar.get(away.frame_col).unwrap_or("").trim() {
            return Err(Error::Malformed(format!(
                "row {row_idx}: home frame `{frame_no}` does not match away frame"
            )));
        }
        let time = cell_f64(hr, home.time_col)
            .ok_or_else(|| Error::Malformed(format!("{}: row {row_idx} has no time", home_path.display())))?;
        let label = format!("{frame_no} (period {period})");
        let entry = by_period.entry(period).or_default();

        let ball = match (home.ball, away.ball) {
            (Some(c), _) if cell_pair(hr, c, &label)?.is_some() => cell_pair(hr, c, &label)?,
            (_, Some(c)) => cell_pair(ar, c, &label)?,
            _ => None,
        };
        let Some(ball) = ball else {
            entry.1 += 1;
            continue;
        };
        let mut players = Vec::with_capacity(22);
        let mut id = 0;
        for (file, rec) in [(&home, hr), (&away, ar)] {
            for &(_, xc, yc) in &file.players {
                if let Some(pos) = cell_pair(rec, (xc, yc), &label)? {
                    players.push(TruthPlayer { id, pos });
                }
                id += 1;
            }
        }
        entry.0.push((time, ball, players));
    }

    let mut halves = Vec::new();
    for (period, (rows, dropped)) in by_period {
        if rows.is_empty() {
            continue;
        }
        let dt = if rows.len() >= 2 { rows[1].0 - rows[0].0 } else { 0.0 };
        let offset = round_micro((rows[0].0 - dt).max(0.0));

        // Keep only players with data this half, re-indexed densely.
        let mut present = vec![false; names.len()];
        for (_, _, ps) in &rows {
            for p in ps {
                present[p.id] = true;
            }
        }
        let mut remap = vec![usize::MAX; names.len()];
        let mut roster = Vec::new();
        for (i, (team, name)) in names.iter().enumerate() {
            if present[i] {
                remap[i] = roster.len();
                roster.push(PlayerInfo { name: name.clone(), tag: PlayerTag::outfield(*team) });
            }
        }
        let total = rows.len() + dropped;
        let frames: Vec<TruthFrame> = rows
            .into_iter()
            .map(|(t, ball, ps)| TruthFrame {
                time: round_micro(t - offset),
                ball,
                players: ps.into_iter().map(|p| TruthPlayer { id: remap[p.id], pos: p.pos }).collect(),
            })
            .collect();
        if dropped as f64 > DROP_WARN_FRACTION * total as f64 {
            warn!("period {period}: {dropped} of {total} rows dropped for missing ball position");
        }
        let mut half = MatchHalf {
            half_id: period,
            time_offset: offset,
            roster,
            frames,
            events: Vec::new(),
            dropped_rows: dropped,
            home_defends_low_x: true,
        };
        for w in half.frames.windows(2) {
            if w[1].time <= w[0].time {
                return Err(Error::Malformed(format!(
                    "period {period}: frame times not increasing at t={}",
                    w[1].time
                )));
            }
        }
        half.assign_goalkeepers();
        info!(
            "period {period}: {} frames, {} players, {dropped} rows dropped",
            half.frames.len(),
            half.roster.len()
        );
        halves.push(half);
    }
    Ok(halves)
}

/// An event row with its source-clock time and period.
#[derive(Debug, Clone, PartialEq)]
pub struct RawEvent {
    pub period: u8,
    pub time: f64,
    pub kind: String,
    pub team: Team,
    pub ball: Option<Point>,
}

/// Reads an event CSV with `Team`, `Type`, `Period`, `Start Time [s]` and
/// optional `Start X` / `Start Y` (percentage) columns.
pub fn read_events_csv(path: &Path) -> Result<Vec<RawEvent>> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (Some(team_c), Some(type_c), Some(period_c), Some(time_c)) =
        (col("Team"), col("Type"), col("Period"), col("Start Time [s]"))
    else {
        return Err(Error::Malformed(format!(
            "{}: event header needs Team, Type, Period and Start Time [s]",
            path.display()
        )));
    };
    let (x_c, y_c) = (col("Start X"), col("Start Y"));
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let team = match rec.get(team_c).map(|s| s.trim().to_ascii_lowercase()) {
            Some(s) if s == "home" => Team::Home,
            Some(s) if s == "away" => Team::Away,
            other => {
                return Err(Error::Malformed(format!("{}: event {i} has team {other:?}", path.display())))
            }
        };
        let period = cell_f64(&rec, period_c)
            .ok_or_else(|| Error::Malformed(format!("{}: event {i} has no period", path.display())))?
            as u8;
        let time = cell_f64(&rec, time_c)
            .ok_or_else(|| Error::Malformed(format!("{}: event {i} has no time", path.display())))?;
        let ball = match (x_c, y_c) {
            (Some(xc), Some(yc)) => cell_pair(&rec, (xc, yc), &format!("event {i}"))?,
            _ => None,
        };
        out.push(RawEvent {
            period,
            time,
            kind: rec.get(type_c).unwrap_or("").trim().to_string(),
            team,
            ball,
        });
    }
    Ok(out)
}

/// Writes the events of every half in the layout [`read_events_csv`] reads,
/// on the match clock.
pub fn write_events_csv(halves: &[MatchHalf], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(["Team", "Type", "Period", "Start Time [s]", "Start X", "Start Y"])
        .map_err(|e| Error::csv(path, e))?;
    for half in halves {
        for e in &half.events {
            let (x, y) = match e.ball {
                Some(b) => ((b.x / PITCH_LENGTH).to_string(), (b.y / PITCH_WIDTH).to_string()),
                None => (String::new(), String::new()),
            };
            let team = if e.attacking_team == Team::Home { "Home" } else { "Away" };
            let time = round_micro(e.time + half.time_offset).to_string();
            w.write_record([team, e.kind.as_str(), &half.half_id.to_string(), &time, &x, &y])
                .map_err(|e| Error::csv(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Moves events onto their half's relative clock, keeping those inside the
/// half's frame span.
pub fn attach_events(halves: &mut [MatchHalf], events: &[RawEvent]) {
    for half in halves.iter_mut() {
        let Some((start, end)) = half.span() else { continue };
        half.events = events
            .iter()
            .filter(|e| e.period == half.half_id)
            .map(|e| Event {
                time: round_micro(e.time - half.time_offset),
                kind: e.kind.clone(),
                ball: e.ball,
                attacking_team: e.team,
            })
            .filter(|e| e.time >= start - 1.0 && e.time <= end + 1.0)
            .collect();
        half.events.sort_by(|a, b| a.time.total_cmp(&b.time));
    }
}

/// Writes halves back out as a pair of per-team wide CSVs.
pub fn write_tracking_csv(halves: &[MatchHalf], home_path: &Path, away_path: &Path) -> Result<()> {
    for team in Team::BOTH {
        let path = if team == Team::Home { home_path } else { away_path };
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        write_team(&mut w, halves, team).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

fn write_team(w: &mut impl Write, halves: &[MatchHalf], team: Team) -> std::io::Result<()> {
    // Union of player names across halves, stable by first appearance.
    let mut names: Vec<String> = Vec::new();
    for half in halves {
        for p in half.roster.iter().filter(|p| p.tag.team == team) {
            if !names.contains(&p.name) {
                names.push(p.name.clone());
            }
        }
    }
    let prefix = format!("{}_", team.name());
    let short: Vec<&str> = names.iter().map(|n| n.strip_prefix(&prefix).unwrap_or(n)).collect();
    let label = if team == Team::Home { "Home" } else { "Away" };
    write!(w, ",,")?;
    for _ in &short {
        write!(w, ",{label},")?;
    }
    writeln!(w, ",,")?;
    write!(w, ",,")?;
    for (i, _) in short.iter().enumerate() {
        write!(w, ",{},", i + 1)?;
    }
    writeln!(w, ",,")?;
    write!(w, "Period,Frame,Time [s]")?;
    for s in &short {
        write!(w, ",{s},")?;
    }
    writeln!(w, ",Ball,")?;

    let mut frame_no = 0usize;
    for half in halves {
        let col_of: Vec<Option<usize>> = half
            .roster
            .iter()
            .map(|p| if p.tag.team == team { names.iter().position(|n| *n == p.name) } else { None })
            .collect();
        let mut cells = vec![None; names.len()];
        for f in &half.frames {
            frame_no += 1;
            cells.iter_mut().for_each(|c| *c = None);
            for p in &f.players {
                if let Some(c) = col_of[p.id] {
                    cells[c] = Some(p.pos);
                }
            }
            write!(w, "{},{},{}", half.half_id, frame_no, round_micro(f.time + half.time_offset))?;
            for c in &cells {
                match c {
                    Some(p) => write!(w, ",{},{}", p.x / PITCH_LENGTH, p.y / PITCH_WIDTH)?,
                    None => write!(w, ",NaN,NaN")?,
                }
            }
            writeln!(w, ",{},{}", f.ball.x / PITCH_LENGTH, f.ball.y / PITCH_WIDTH)?;
        }
    }
    Ok(())
}
