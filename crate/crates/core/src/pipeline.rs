//! End-to-end orchestration: training material from ground truth, and
//! enriched halves that answer "where was everyone at time t".

use log::info;

use crate::assign::{build_trajectories, AssignConfig, HalfTracks};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::forecast::{ForecastModel, GridSeries, ModelOrders, TrainingHalf};
use crate::geometry::{
    EnrichedFrame, EnrichedPlayer, Point, Provenance, Team, Trajectory, TIME_EPS,
};
use crate::ingest::{DiscreteMatchRecord, MatchHalf};
use crate::interpolate::{compute_velocity_field, ContinuousPath, VelocityField, DEFAULT_ALPHA};

/// A player missing from consecutive native frames for longer than this
/// starts a new training trajectory.
const TRAINING_GAP: f64 = 1.0;

/// Outfield ground-truth paths of a half, split wherever a player is absent
/// for more than a second.
pub fn truth_trajectories(half: &MatchHalf) -> Vec<Trajectory> {
    let mut open: Vec<Option<Trajectory>> = vec![None; half.roster.len()];
    let mut done = Vec::new();
    for f in &half.frames {
        for p in &f.players {
            let tag = half.tag(p.id);
            if tag.is_goalkeeper {
                continue;
            }
            let slot = &mut open[p.id];
            if let Some(tr) = slot {
                if f.time - tr.last().expect("non-empty").time > TRAINING_GAP {
                    done.push(slot.take().expect("checked"));
                }
            }
            let tr = slot.get_or_insert_with(|| Trajectory::new(tag));
            // Times are strictly increasing frame to frame.
            let _ = tr.push(p.pos, f.time, true);
        }
    }
    done.extend(open.into_iter().flatten());
    done
}

/// Ball path of a ground-truth half on the forecaster grid.
pub fn truth_ball(half: &MatchHalf, grid_step: f64) -> GridSeries {
    let samples: Vec<(Point, f64)> = half.frames.iter().map(|f| (f.ball, f.time)).collect();
    GridSeries::from_samples(&samples, grid_step)
}

pub fn training_half(half: &MatchHalf, grid_step: f64) -> TrainingHalf {
    TrainingHalf { trajectories: truth_trajectories(half), ball: truth_ball(half, grid_step) }
}

/// Fits one forecast model on every outfield trajectory of the given halves.
pub fn train(halves: &[MatchHalf], orders: ModelOrders, grid_step: f64, exec: Execution) -> Result<ForecastModel> {
    let material = exec.map(halves, |h| training_half(h, grid_step));
    ForecastModel::fit(&material, orders, grid_step, exec)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnrichConfig {
    pub assign: AssignConfig,
    pub alpha: f64,
}

impl Default for EnrichConfig {
    fn default() -> Self {
        EnrichConfig { assign: AssignConfig::default(), alpha: DEFAULT_ALPHA }
    }
}

/// Estimated position of one trajectory at a query time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub pos: Point,
    pub provenance: Provenance,
    /// Seconds to the nearest sighting in this trajectory, either direction.
    pub age: Option<f64>,
}

/// Assigned trajectories of one half with everything needed to evaluate
/// them in continuous time.
#[derive(Debug, Clone)]
pub struct EnrichedHalf {
    pub tracks: HalfTracks,
    pub field: VelocityField,
    pub model: ForecastModel,
}

impl EnrichedHalf {
    pub fn build(record: &DiscreteMatchRecord, model: &ForecastModel, cfg: &EnrichConfig, exec: Execution) -> Result<Self> {
        let tracks = build_trajectories(record, model, &cfg.assign, exec)?;
        let field = compute_velocity_field(tracks.outfield(), model.grid_step, cfg.alpha)?;
        Ok(EnrichedHalf { tracks, field, model: model.clone() })
    }

    pub fn path<'a>(&'a self, traj: &'a Trajectory) -> ContinuousPath<'a> {
        ContinuousPath { traj, field: &self.field, model: &self.model, ball: &self.tracks.ball }
    }

    pub fn estimate(&self, traj: &Trajectory, t: f64) -> Result<Estimate> {
        let pos = self.path(traj).position_at(t)?;
        let observed = traj.point_at(t).is_some_and(|p| p.observed);
        Ok(Estimate {
            pos,
            provenance: if observed { Provenance::Observed } else { Provenance::Estimated },
            age: traj.seconds_to_observation(t),
        })
    }

    /// Estimates for a team's ten outfield trajectories.
    pub fn outfield_estimates(&self, team: Team, t: f64) -> Result<Vec<Estimate>> {
        self.tracks.team(team).outfield.iter().map(|tr| self.estimate(tr, t)).collect()
    }

    /// Ball position at `t` from the sampled frames.
    pub fn ball_at(&self, t: f64) -> Point {
        self.tracks.ball.at(t)
    }

    /// First and last sampled frame times.
    pub fn span(&self) -> (f64, f64) {
        let times = &self.tracks.frame_times;
        (times[0], times[times.len() - 1])
    }

    /// All 22 players at `t`: per team the keeper, then ten outfielders.
    pub fn frame_at(&self, t: f64) -> Result<EnrichedFrame> {
        let mut players = Vec::with_capacity(22);
        for team in Team::BOTH {
            let tt = self.tracks.team(team);
            for tr in std::iter::once(&tt.keeper).chain(&tt.outfield) {
                let e = self.estimate(tr, t)?;
                players.push(EnrichedPlayer { tag: tr.tag, pos: e.pos, provenance: e.provenance });
            }
        }
        Ok(EnrichedFrame { time: t, ball: self.ball_at(t), players })
    }

    /// Snapshots every `step` seconds across the sampled span.
    pub fn frames_every(&self, step: f64, exec: Execution) -> Result<Vec<EnrichedFrame>> {
        if !(step > 0.0) {
            return Err(Error::Config(format!("output step must be > 0, got {step}")));
        }
        let (t0, t1) = self.span();
        let n = ((t1 - t0) / step + TIME_EPS).floor() as usize + 1;
        exec.map_range(n, |i| self.frame_at(t0 + i as f64 * step)).into_iter().collect()
    }
}

/// Builds every half of a record set.
pub fn enrich(
    records: &[DiscreteMatchRecord],
    model: &ForecastModel,
    cfg: &EnrichConfig,
    exec: Execution,
) -> Result<Vec<EnrichedHalf>> {
    let halves = exec.map(records, |r| EnrichedHalf::build(r, model, cfg, exec));
    let halves: Vec<EnrichedHalf> = halves.into_iter().collect::<Result<_>>()?;
    for h in &halves {
        info!(
            "half {}: {} frames assigned, {} velocity samples",
            h.tracks.half_id,
            h.tracks.frame_times.len(),
            h.field.v.len()
        );
    }
    Ok(halves)
}
