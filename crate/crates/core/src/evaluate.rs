//! Error analysis of enriched halves against ground truth.
//!
//! Estimates are matched to true positions team by team with a minimum-total
//! distance assignment, so only the set of positions matters, not identities.
//! Goalkeepers are left out.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::assign::{solve_assignment, CostMatrix, HalfTracks};
use crate::broadcast::{ground_truth_at, LabelledRecord};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{EnrichedFrame, PlayerTag, Point, Provenance, Team, PITCH_LENGTH, PITCH_WIDTH, TIME_EPS};
use crate::ingest::MatchHalf;
use crate::pipeline::{EnrichedHalf, Estimate};

pub const DEFAULT_PERCENTILES: [f64; 4] = [25.0, 50.0, 75.0, 95.0];
pub const MIN_PERCENTILE_FRAMES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    InPhase,
    OutOfPhase,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlayerError {
    pub team: Team,
    pub truth: Point,
    pub estimate: Point,
    pub error: f64,
    pub provenance: Provenance,
    pub age: Option<f64>,
    /// Out-of-phase only: the trajectory has a sighting at the preceding
    /// sampled frame.
    pub prev_frame_observed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameError {
    pub time: f64,
    pub phase: Phase,
    pub players: Vec<PlayerError>,
    pub total_squared_error: f64,
}

/// Minimum-total-distance bijection between estimates and truths. Returns,
/// for each estimate, the index of its truth and the distance.
pub fn match_and_score(estimates: &[Point], truths: &[Point]) -> Result<Vec<(usize, f64)>> {
    if estimates.len() != truths.len() {
        return Err(Error::Invariant(format!(
            "{} estimates cannot be matched to {} true positions",
            estimates.len(),
            truths.len()
        )));
    }
    let cost = CostMatrix::new(truths.len(), estimates.len(), |i, j| truths[i].distance(estimates[j]));
    let assignment = solve_assignment(&cost)?;
    Ok(assignment.into_iter().enumerate().map(|(j, i)| (i, cost.get(i, j))).collect())
}

fn score_frame(
    enriched: &EnrichedHalf,
    truth: &MatchHalf,
    t: f64,
    phase: Phase,
    prev_frame: Option<f64>,
) -> Result<FrameError> {
    let native = ground_truth_at(truth, t)?;
    let mut players = Vec::with_capacity(20);
    for team in Team::BOTH {
        let trajs = &enriched.tracks.team(team).outfield;
        let ests: Vec<Estimate> = trajs.iter().map(|tr| enriched.estimate(tr, t)).collect::<Result<_>>()?;
        let truths: Vec<Point> = native
            .players
            .iter()
            .filter(|p| {
                let tag = truth.tag(p.id);
                tag.team == team && !tag.is_goalkeeper
            })
            .map(|p| p.pos)
            .collect();
        let positions: Vec<Point> = ests.iter().map(|e| e.pos).collect();
        for (j, (i, err)) in match_and_score(&positions, &truths)?.into_iter().enumerate() {
            let prev = prev_frame.is_some_and(|tp| trajs[j].point_at(tp).is_some_and(|p| p.observed));
            players.push(PlayerError {
                team,
                truth: truths[i],
                estimate: ests[j].pos,
                error: err,
                provenance: ests[j].provenance,
                age: ests[j].age,
                prev_frame_observed: prev,
            });
        }
    }
    let total_squared_error = players.iter().map(|p| p.error * p.error).sum();
    Ok(FrameError { time: t, phase, players, total_squared_error })
}

/// Frame-level errors of one half.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HalfEvaluation {
    pub half_id: u8,
    pub in_phase: Vec<FrameError>,
    pub out_of_phase: Vec<FrameError>,
    /// Indices into `in_phase` of the frames nearest each event.
    pub event_frames: Vec<usize>,
}

/// Scores every sampled frame time and every midpoint between consecutive
/// sampled frames.
pub fn evaluate_half(enriched: &EnrichedHalf, truth: &MatchHalf, exec: Execution) -> Result<HalfEvaluation> {
    let times = &enriched.tracks.frame_times;
    let in_phase: Vec<FrameError> = exec
        .map(times, |&t| score_frame(enriched, truth, t, Phase::InPhase, None))
        .into_iter()
        .collect::<Result<_>>()?;
    let out_of_phase: Vec<FrameError> = exec
        .map_range(times.len().saturating_sub(1), |i| {
            let t = 0.5 * (times[i] + times[i + 1]);
            score_frame(enriched, truth, t, Phase::OutOfPhase, Some(times[i]))
        })
        .into_iter()
        .collect::<Result<_>>()?;

    let mut event_frames = Vec::new();
    if let (Some(&first), Some(&last)) = (times.first(), times.last()) {
        let slack = if times.len() > 1 { 0.5 * (times[1] - times[0]) } else { 0.0 };
        for ev in &truth.events {
            if ev.time < first - slack - TIME_EPS || ev.time > last + slack + TIME_EPS {
                continue;
            }
            let idx = times.partition_point(|&t| t < ev.time);
            let nearest = match idx {
                0 => 0,
                i if i == times.len() => i - 1,
                i if times[i] - ev.time < ev.time - times[i - 1] => i,
                i => i - 1,
            };
            event_frames.push(nearest);
        }
    }
    event_frames.sort_unstable();
    event_frames.dedup();
    Ok(HalfEvaluation { half_id: enriched.tracks.half_id, in_phase, out_of_phase, event_frames })
}

/// Counts identity switches: consecutive sightings in one trajectory that
/// belong to different players according to the labelled record.
pub fn identity_switches(tracks: &HalfTracks, labelled: &LabelledRecord) -> Result<usize> {
    let frames = &labelled.record.frames;
    let mut switches = 0;
    for team in Team::BOTH {
        let tt = tracks.team(team);
        if tt.links.len() != frames.len() {
            return Err(Error::Invariant(format!(
                "{} linked frames against {} labelled frames",
                tt.links.len(),
                frames.len()
            )));
        }
        let mut owner: Vec<Option<usize>> = vec![None; tt.outfield.len()];
        for ((frame, labels), links) in frames.iter().zip(&labelled.labels).zip(&tt.links) {
            let ids = frame
                .visible
                .iter()
                .zip(labels)
                .filter(|(s, _)| s.tag == PlayerTag::outfield(team))
                .map(|(_, &id)| id);
            for (id, &traj) in ids.zip(links) {
                if owner[traj].is_some_and(|prev| prev != id) {
                    switches += 1;
                }
                owner[traj] = Some(id);
            }
        }
    }
    Ok(switches)
}

/// Type-7 (linear) sample quantile of sorted data, `p` in [0, 1].
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (h - lo as f64)
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn median(v: &[f64]) -> Option<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    (!s.is_empty()).then(|| quantile_sorted(&s, 0.5))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorStats {
    pub mean_all_in_phase: Option<f64>,
    pub mean_offcam_in_phase: Option<f64>,
    pub median_offcam_in_phase: Option<f64>,
    pub mean_all_out_of_phase: Option<f64>,
    pub mean_prev_frame_observed: Option<f64>,
    pub mean_offcam_event_frames: Option<f64>,
    pub frames: usize,
    pub out_of_phase_frames: usize,
    /// Off-camera outfield estimates at sampled frame times.
    pub predictions: usize,
    pub prev_frame_observed_count: usize,
    pub event_frames: usize,
}

impl ErrorStats {
    pub fn from_halves(halves: &[&HalfEvaluation]) -> ErrorStats {
        let mut all_in = Vec::new();
        let mut off_in = Vec::new();
        let mut all_out = Vec::new();
        let mut prev = Vec::new();
        let mut off_event = Vec::new();
        for h in halves {
            for f in &h.in_phase {
                for p in &f.players {
                    all_in.push(p.error);
                    if p.provenance == Provenance::Estimated {
                        off_in.push(p.error);
                    }
                }
            }
            for f in &h.out_of_phase {
                for p in &f.players {
                    all_out.push(p.error);
                    if p.prev_frame_observed {
                        prev.push(p.error);
                    }
                }
            }
            for &i in &h.event_frames {
                off_event.extend(
                    h.in_phase[i].players.iter().filter(|p| p.provenance == Provenance::Estimated).map(|p| p.error),
                );
            }
        }
        ErrorStats {
            mean_all_in_phase: mean(&all_in),
            mean_offcam_in_phase: mean(&off_in),
            median_offcam_in_phase: median(&off_in),
            mean_all_out_of_phase: mean(&all_out),
            mean_prev_frame_observed: mean(&prev),
            mean_offcam_event_frames: mean(&off_event),
            frames: halves.iter().map(|h| h.in_phase.len()).sum(),
            out_of_phase_frames: halves.iter().map(|h| h.out_of_phase.len()).sum(),
            predictions: off_in.len(),
            prev_frame_observed_count: prev.len(),
            event_frames: halves.iter().map(|h| h.event_frames.len()).sum(),
        }
    }
}

/// Error distribution for one occlusion-age bucket.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveBucket {
    pub bucket_s: u32,
    pub mean_m: f64,
    pub p12_5: f64,
    pub p87_5: f64,
    pub p2_5: f64,
    pub p97_5: f64,
    pub n: usize,
}

/// Error against seconds to the nearest sighting, sampled-frame queries only.
pub fn occlusion_curve(halves: &[&HalfEvaluation]) -> Vec<CurveBucket> {
    let mut buckets: Vec<Vec<f64>> = Vec::new();
    for h in halves {
        for p in h.in_phase.iter().flat_map(|f| &f.players) {
            let Some(age) = p.age else { continue };
            let b = age.round() as usize;
            if buckets.len() <= b {
                buckets.resize_with(b + 1, Vec::new);
            }
            buckets[b].push(p.error);
        }
    }
    buckets
        .into_iter()
        .enumerate()
        .filter(|(_, v)| !v.is_empty())
        .map(|(b, mut v)| {
            v.sort_by(f64::total_cmp);
            CurveBucket {
                bucket_s: b as u32,
                mean_m: mean(&v).expect("non-empty"),
                p12_5: quantile_sorted(&v, 0.125),
                p87_5: quantile_sorted(&v, 0.875),
                p2_5: quantile_sorted(&v, 0.025),
                p97_5: quantile_sorted(&v, 0.975),
                n: v.len(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HalfStats {
    pub half_id: u8,
    #[serde(flatten)]
    pub stats: ErrorStats,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub pooled: ErrorStats,
    pub per_half: Vec<HalfStats>,
    pub curve: Vec<CurveBucket>,
}

impl ErrorReport {
    pub fn from_halves(halves: &[HalfEvaluation]) -> ErrorReport {
        let refs: Vec<&HalfEvaluation> = halves.iter().collect();
        ErrorReport {
            pooled: ErrorStats::from_halves(&refs),
            per_half: halves
                .iter()
                .map(|h| HalfStats { half_id: h.half_id, stats: ErrorStats::from_halves(&[h]) })
                .collect(),
            curve: occlusion_curve(&refs),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises") + "\n"
    }

    /// Human-readable summary table.
    pub fn to_table(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.3}"));
        let mut cols = vec![("pooled".to_string(), &self.pooled)];
        cols.extend(self.per_half.iter().map(|h| (format!("half {}", h.half_id), &h.stats)));
        let mut out = String::new();
        let _ = write!(out, "{:<34}", "statistic (m)");
        for (name, _) in &cols {
            let _ = write!(out, "{name:>12}");
        }
        out.push('\n');
        let rows: [(&str, fn(&ErrorStats) -> Option<f64>); 6] = [
            ("mean error, all, in phase", |s| s.mean_all_in_phase),
            ("mean error, off camera", |s| s.mean_offcam_in_phase),
            ("median error, off camera", |s| s.median_offcam_in_phase),
            ("mean error, all, out of phase", |s| s.mean_all_out_of_phase),
            ("mean error, seen previous frame", |s| s.mean_prev_frame_observed),
            ("mean error, off camera, events", |s| s.mean_offcam_event_frames),
        ];
        for (label, get) in rows {
            let _ = write!(out, "{label:<34}");
            for (_, s) in &cols {
                let _ = write!(out, "{:>12}", fmt(get(s)));
            }
            out.push('\n');
        }
        let counts: [(&str, fn(&ErrorStats) -> usize); 3] =
            [("frames", |s| s.frames), ("predictions", |s| s.predictions), ("event frames", |s| s.event_frames)];
        for (label, get) in counts {
            let _ = write!(out, "{label:<34}");
            for (_, s) in &cols {
                let _ = write!(out, "{:>12}", get(s));
            }
            out.push('\n');
        }
        out
    }
}

pub fn write_curve_csv(curve: &[CurveBucket], path: &Path) -> Result<()> {
    let mut out = String::from("bucket_s,mean_m,p12.5,p87.5,p2.5,p97.5,n\n");
    for b in curve {
        let _ = writeln!(
            out,
            "{},{:.4},{:.4},{:.4},{:.4},{:.4},{}",
            b.bucket_s, b.mean_m, b.p12_5, b.p87_5, b.p2_5, b.p97_5, b.n
        );
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// For each percentile, the earliest frame whose total squared error is
/// closest to that percentile of all frames' totals.
pub fn percentile_frames(frames: &[FrameError], percentiles: &[f64]) -> Result<Vec<usize>> {
    if frames.len() < MIN_PERCENTILE_FRAMES {
        return Err(Error::Invariant(format!(
            "percentile frames need at least {MIN_PERCENTILE_FRAMES} frames, got {}",
            frames.len()
        )));
    }
    let mut sorted: Vec<f64> = frames.iter().map(|f| f.total_squared_error).collect();
    sorted.sort_by(f64::total_cmp);
    Ok(percentiles
        .iter()
        .map(|&p| {
            let target = quantile_sorted(&sorted, p / 100.0);
            let mut best = 0;
            for (i, f) in frames.iter().enumerate() {
                if (f.total_squared_error - target).abs() < (frames[best].total_squared_error - target).abs() {
                    best = i;
                }
            }
            best
        })
        .collect())
}

const SVG_SCALE: f64 = 8.0;
const SVG_MARGIN: f64 = 4.0;
pub const DISC_RADIUS: f64 = 1.2;

/// Draws a frame on a 120 × 80 pitch. `labels[i]`, when present, is printed
/// on player `i`'s disc.
pub fn render_pitch_svg(frame: &EnrichedFrame, labels: &[Option<String>]) -> String {
    let w = (PITCH_LENGTH + 2.0 * SVG_MARGIN) * SVG_SCALE;
    let h = (PITCH_WIDTH + 2.0 * SVG_MARGIN) * SVG_SCALE;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="{:.1} {:.1} {:.1} {:.1}">"#,
        -SVG_MARGIN,
        -SVG_MARGIN,
        PITCH_LENGTH + 2.0 * SVG_MARGIN,
        PITCH_WIDTH + 2.0 * SVG_MARGIN
    );
    let _ = writeln!(s, r##"<rect x="{0:.1}" y="{0:.1}" width="{1:.1}" height="{2:.1}" fill="#3a7d44"/>"##,
        -SVG_MARGIN, PITCH_LENGTH + 2.0 * SVG_MARGIN, PITCH_WIDTH + 2.0 * SVG_MARGIN);
    let line = r##"fill="none" stroke="#ffffff" stroke-width="0.3""##;
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{PITCH_LENGTH}" height="{PITCH_WIDTH}" {line}/>"#);
    let _ = writeln!(s, r#"<line x1="60" y1="0" x2="60" y2="{PITCH_WIDTH}" {line}/>"#);
    let _ = writeln!(s, r#"<circle cx="60" cy="40" r="9.15" {line}/>"#);
    let _ = writeln!(s, r#"<rect x="0" y="19.84" width="16.5" height="40.32" {line}/>"#);
    let _ = writeln!(s, r#"<rect x="103.5" y="19.84" width="16.5" height="40.32" {line}/>"#);
    let _ = writeln!(s, r##"<text x="1" y="-1" font-size="2.5" fill="#ffffff">t = {:.2} s</text>"##, frame.time);
    for (i, p) in frame.players.iter().enumerate() {
        let fill = match (p.tag.team, p.tag.is_goalkeeper) {
            (Team::Home, false) => "#d62728",
            (Team::Home, true) => "#ff9896",
            (Team::Away, false) => "#1f77b4",
            (Team::Away, true) => "#aec7e8",
        };
        let stroke = match p.provenance {
            Provenance::Observed => r##"stroke="#000000" stroke-width="0.25""##,
            Provenance::Estimated => r##"stroke="#ffffff" stroke-width="0.25" stroke-dasharray="0.6 0.4""##,
        };
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="{DISC_RADIUS}" fill="{fill}" {stroke}/>"#,
            p.pos.x, p.pos.y
        );
        if let Some(Some(label)) = labels.get(i) {
            let _ = writeln!(
                s,
                r##"<text x="{:.2}" y="{:.2}" font-size="1.4" text-anchor="middle" fill="#ffffff">{label}</text>"##,
                p.pos.x,
                p.pos.y + 0.5
            );
        }
    }
    let _ = writeln!(
        s,
        r##"<circle cx="{:.2}" cy="{:.2}" r="0.7" fill="#ffffff" stroke="#000000" stroke-width="0.2"/>"##,
        frame.ball.x, frame.ball.y
    );
    s.push_str("</svg>\n");
    s
}

pub fn write_pitch_svg(frame: &EnrichedFrame, labels: &[Option<String>], path: &Path) -> Result<()> {
    fs::write(path, render_pitch_svg(frame, labels)).map_err(|e| Error::io(path, e))
}

/// Occlusion-age labels for a frame: for each player the number of sampled
/// frames to the nearest sighting, blank when seen at that instant.
pub fn occlusion_labels(enriched: &EnrichedHalf, t: f64, sample_period: f64) -> Vec<Option<String>> {
    Team::BOTH
        .iter()
        .flat_map(|&team| {
            let tt = enriched.tracks.team(team);
            std::iter::once(&tt.keeper).chain(&tt.outfield).collect::<Vec<_>>()
        })
        .map(|tr| match tr.seconds_to_observation(t) {
            Some(a) if a > TIME_EPS => Some(format!("{}", (a / sample_period).round() as i64)),
            Some(_) => None,
            None => Some("?".into()),
        })
        .collect()
}
