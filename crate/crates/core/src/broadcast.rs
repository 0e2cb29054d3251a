//! Degrades full ground-truth tracking into broadcast-like discrete frames:
//! periodic sampling, a visibility disc around the ball, and trimmed ends.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{ObservationFrame, Sighting, Team};
use crate::ingest::{DiscreteMatchRecord, MatchHalf, Source, TruthFrame};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegradeConfig {
    /// Seconds between sampled frames.
    pub sample_period: f64,
    /// Players within this many metres of the ball (inclusive) are visible.
    pub visibility_radius: f64,
    /// Sampled frames dropped at each end of the half.
    pub trim_frames: usize,
}

impl Default for DegradeConfig {
    fn default() -> Self {
        DegradeConfig { sample_period: 1.0, visibility_radius: 30.0, trim_frames: 30 }
    }
}

impl DegradeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_period > 0.0 && self.sample_period.is_finite()) {
            return Err(Error::Config(format!("sample_period must be > 0, got {}", self.sample_period)));
        }
        if !(self.visibility_radius > 0.0) {
            return Err(Error::Config(format!(
                "visibility_radius must be > 0, got {}",
                self.visibility_radius
            )));
        }
        Ok(())
    }
}

/// A degraded half together with the identity of every visible entry, kept
/// only as an evaluation oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelledRecord {
    pub record: DiscreteMatchRecord,
    /// `labels[f][j]` is the roster id behind `record.frames[f].visible[j]`.
    pub labels: Vec<Vec<usize>>,
}

/// Summary counts of a degraded half.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DegradeStats {
    pub frames: usize,
    pub visible_outfielders: usize,
    /// Outfield positions not recorded, summed over sampled frames.
    pub hidden_outfielders: usize,
}

impl DegradeStats {
    pub fn mean_visible(&self) -> f64 {
        self.visible_outfielders as f64 / self.frames as f64
    }

    pub fn merge(self, other: DegradeStats) -> DegradeStats {
        DegradeStats {
            frames: self.frames + other.frames,
            visible_outfielders: self.visible_outfielders + other.visible_outfielders,
            hidden_outfielders: self.hidden_outfielders + other.hidden_outfielders,
        }
    }
}

/// Returns the native frame nearest `t` (ties to the earlier frame). `t` must
/// lie between the half start and the last native frame.
pub fn ground_truth_at(half: &MatchHalf, t: f64) -> Result<&TruthFrame> {
    let end = half.frames.last().map_or(0.0, |f| f.time);
    if half.frames.is_empty() || !(0.0..=end).contains(&t) {
        return Err(Error::OutOfRange { t, start: 0.0, end });
    }
    let idx = half.nearest_frame_index(t).expect("non-empty");
    Ok(&half.frames[idx])
}

/// Grid indices of the sampled frames kept after trimming.
fn sample_indices(half: &MatchHalf, cfg: &DegradeConfig) -> Result<std::ops::RangeInclusive<i64>> {
    cfg.validate()?;
    let (_, last) = half
        .span()
        .ok_or_else(|| Error::HalfTooShort(format!("half {} has no frames", half.half_id)))?;
    let k_max = (last / cfg.sample_period + 1e-9).floor() as i64;
    let trim = cfg.trim_frames as i64;
    if k_max < 2 * trim {
        return Err(Error::HalfTooShort(format!(
            "half {} spans {last:.2} s, shorter than 2 × {} frames × {} s",
            half.half_id, cfg.trim_frames, cfg.sample_period
        )));
    }
    Ok(trim..=k_max - trim)
}

/// Degrades a half, keeping the identity of each visible entry alongside.
pub fn degrade_labelled(half: &MatchHalf, cfg: &DegradeConfig, exec: Execution) -> Result<LabelledRecord> {
    let ks: Vec<i64> = sample_indices(half, cfg)?.collect();
    let frames: Vec<(ObservationFrame, Vec<usize>)> = exec.map(&ks, |&k| {
        let t = k as f64 * cfg.sample_period;
        let native = &half.frames[half.nearest_frame_index(t).expect("non-empty")];
        let mut visible = Vec::new();
        let mut labels = Vec::new();
        for p in &native.players {
            if p.pos.distance(native.ball) <= cfg.visibility_radius {
                visible.push(Sighting { tag: half.tag(p.id), pos: p.pos });
                labels.push(p.id);
            }
        }
        (ObservationFrame { time: t, ball: native.ball, visible }, labels)
    });
    let (frames, labels) = frames.into_iter().unzip();
    Ok(LabelledRecord {
        record: DiscreteMatchRecord {
            half_id: half.half_id,
            source: Source::Simulated,
            home_defends_low_x: half.home_defends_low_x,
            frames,
        },
        labels,
    })
}

/// Samples a half every `sample_period` seconds, keeps only players within
/// `visibility_radius` of the ball in the nearest native frame, drops
/// `trim_frames` sampled frames at each end and erases identities.
pub fn degrade(half: &MatchHalf, cfg: &DegradeConfig, exec: Execution) -> Result<DiscreteMatchRecord> {
    degrade_labelled(half, cfg, exec).map(|l| l.record)
}

/// Visible and hidden outfielder counts of a degraded half against its truth.
pub fn degrade_stats(half: &MatchHalf, record: &DiscreteMatchRecord) -> DegradeStats {
    let mut stats = DegradeStats { frames: record.frames.len(), ..Default::default() };
    for f in &record.frames {
        let native = &half.frames[half.nearest_frame_index(f.time).expect("non-empty")];
        let truth_outfield = native.players.iter().filter(|p| !half.tag(p.id).is_goalkeeper).count();
        let seen = Team::BOTH.iter().map(|&t| f.outfielders(t).count()).sum::<usize>();
        stats.visible_outfielders += seen;
        stats.hidden_outfielders += truth_outfield.saturating_sub(seen);
    }
    stats
}
