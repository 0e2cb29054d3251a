//! Frame-by-frame linking of anonymous sightings to player trajectories by
//! maximum-likelihood linear assignment.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::forecast::{Forecast, ForecastModel, GridSeries};
use crate::geometry::{ObservationFrame, PlayerTag, Point, Team, Trajectory, MAX_OUTFIELDERS, PITCH_LENGTH};
use crate::ingest::DiscreteMatchRecord;

pub const DEFAULT_LOG_DENSITY_FLOOR: f64 = -50.0;

/// Log density of the isotropic bivariate normal `forecast` at `pos`, floored.
pub fn log_likelihood(forecast: &Forecast, pos: Point, floor: f64) -> f64 {
    let var = forecast.std * forecast.std;
    let ll = -(2.0 * std::f64::consts::PI * var).ln() - (pos - forecast.mean).norm_sq() / (2.0 * var);
    if ll.is_nan() {
        floor
    } else {
        ll.max(floor)
    }
}

/// Dense row-major cost matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CostMatrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        CostMatrix::new(rows.len(), cols, |i, j| rows[i][j])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// Sum of `cost[assignment[j]][j]` over columns.
    pub fn total(&self, assignment: &[usize]) -> f64 {
        assignment.iter().enumerate().map(|(j, &i)| self.get(i, j)).sum()
    }
}

/// Minimum-cost injective map from columns to rows (`cols <= rows`).
///
/// Shortest augmenting paths with dual potentials, O(cols² · rows).
pub fn solve_assignment(cost: &CostMatrix) -> Result<Vec<usize>> {
    if cost.cols > cost.rows {
        return Err(Error::Invariant(format!(
            "{} positions cannot be assigned to {} trajectories",
            cost.cols, cost.rows
        )));
    }
    if let Some(v) = cost.data.iter().find(|v| !v.is_finite()) {
        return Err(Error::Invariant(format!("non-finite assignment cost {v}")));
    }
    // Columns are the agents to place and rows the slots, 1-based below.
    let n = cost.cols;
    let m = cost.rows;
    let a = |agent: usize, slot: usize| cost.get(slot - 1, agent - 1);
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for agent in 1..=n {
        owner[0] = agent;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = a(i0, j) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![usize::MAX; n];
    for slot in 1..=m {
        if owner[slot] != 0 {
            out[owner[slot] - 1] = slot - 1;
        }
    }
    debug_assert!(out.iter().all(|&r| r != usize::MAX));
    Ok(out)
}

const LINE_SLOTS: usize = 10;
const LINE_Y_MIN: f64 = 10.0;
const LINE_Y_MAX: f64 = 70.0;
const LINE_EXCLUSION: f64 = 5.0;
const FALLBACK_LINE_DEPTH: f64 = 25.0;
const KEEPER_SEED_DEPTH: f64 = 6.0;

fn own_goal_x(defends_low_x: bool) -> f64 {
    if defends_low_x {
        0.0
    } else {
        PITCH_LENGTH
    }
}

/// Seeds a team's outfield trajectories from the first frame of a half.
///
/// Visible outfielders seed one trajectory each; the rest are placed on the
/// defensive line at the deepest visible teammate's x (25 m from goal when
/// nobody is visible), in the free y slots farthest from visible teammates.
pub fn initialize(frame: &ObservationFrame, team: Team, defends_low_x: bool) -> Result<Vec<Trajectory>> {
    let visible: Vec<Point> = frame.outfielders(team).collect();
    if visible.len() > MAX_OUTFIELDERS {
        return Err(Error::Malformed(format!("{} visible outfielders", visible.len())));
    }
    let tag = PlayerTag::outfield(team);
    let mut trajs = Vec::with_capacity(MAX_OUTFIELDERS);
    for &p in &visible {
        let mut t = Trajectory::new(tag);
        t.push(p, frame.time, true)?;
        trajs.push(t);
    }
    let needed = MAX_OUTFIELDERS - visible.len();
    if needed == 0 {
        return Ok(trajs);
    }
    let goal = own_goal_x(defends_low_x);
    let line_x = visible
        .iter()
        .map(|p| p.x)
        .min_by(|a, b| (a - goal).abs().total_cmp(&(b - goal).abs()))
        .unwrap_or(if defends_low_x { goal + FALLBACK_LINE_DEPTH } else { goal - FALLBACK_LINE_DEPTH });

    let gap = |y: f64| visible.iter().map(|p| (p.y - y).abs()).fold(f64::INFINITY, f64::min);
    let mut slots: Vec<(bool, f64, f64)> = (0..LINE_SLOTS)
        .map(|i| {
            let y = LINE_Y_MIN + (LINE_Y_MAX - LINE_Y_MIN) * i as f64 / (LINE_SLOTS - 1) as f64;
            let g = gap(y);
            (g <= LINE_EXCLUSION, g, y)
        })
        .collect();
    // Free slots first, then widest gap, then lower y.
    slots.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.total_cmp(&a.1)).then(a.2.total_cmp(&b.2)));
    let mut ys: Vec<f64> = slots.iter().take(needed).map(|s| s.2).collect();
    ys.sort_by(f64::total_cmp);
    for y in ys {
        let mut t = Trajectory::new(tag);
        t.push(Point::new(line_x, y), frame.time, false)?;
        trajs.push(t);
    }
    Ok(trajs)
}

fn initialize_keeper(frame: &ObservationFrame, team: Team, defends_low_x: bool) -> Result<Trajectory> {
    let mut t = Trajectory::new(PlayerTag::keeper(team));
    match frame.keeper(team) {
        Some(p) => t.push(p, frame.time, true)?,
        None => {
            let goal = own_goal_x(defends_low_x);
            let x = if defends_low_x { goal + KEEPER_SEED_DEPTH } else { goal - KEEPER_SEED_DEPTH };
            t.push(Point::new(x, 40.0), frame.time, false)?
        }
    }
    Ok(t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssignConfig {
    pub log_density_floor: f64,
}

impl Default for AssignConfig {
    fn default() -> Self {
        AssignConfig { log_density_floor: DEFAULT_LOG_DENSITY_FLOOR }
    }
}

/// Trajectories built for one team over a half.
#[derive(Debug, Clone, PartialEq)]
pub struct TeamTracks {
    pub team: Team,
    pub outfield: Vec<Trajectory>,
    pub keeper: Trajectory,
    /// `links[f][j]` is the trajectory that received the `j`-th visible
    /// outfielder of this team in frame `f`.
    pub links: Vec<Vec<usize>>,
}

/// Both teams' trajectories for one half plus the ball path they were built
/// against.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfTracks {
    pub half_id: u8,
    pub home_defends_low_x: bool,
    pub frame_times: Vec<f64>,
    pub ball: GridSeries,
    pub teams: [TeamTracks; 2],
}

impl HalfTracks {
    pub fn team(&self, team: Team) -> &TeamTracks {
        &self.teams[team.index()]
    }

    pub fn outfield(&self) -> impl Iterator<Item = &Trajectory> {
        self.teams.iter().flat_map(|t| t.outfield.iter())
    }
}

/// Ball path of a discrete record on the forecaster's grid.
pub fn record_ball(record: &DiscreteMatchRecord, grid_step: f64) -> GridSeries {
    let samples: Vec<(Point, f64)> = record.frames.iter().map(|f| (f.ball, f.time)).collect();
    GridSeries::from_samples(&samples, grid_step)
}

fn build_team(
    record: &DiscreteMatchRecord,
    model: &ForecastModel,
    ball: &GridSeries,
    team: Team,
    cfg: &AssignConfig,
) -> Result<TeamTracks> {
    let first = &record.frames[0];
    let defends_low = record.defends_low_x(team);
    let mut outfield = initialize(first, team, defends_low)?;
    let mut keeper = initialize_keeper(first, team, defends_low)?;
    let mut links = Vec::with_capacity(record.frames.len());
    links.push((0..first.outfielders(team).count()).collect());

    for frame in &record.frames[1..] {
        let visible: Vec<Point> = frame.outfielders(team).collect();
        let forecasts = outfield
            .iter()
            .map(|tr| model.forecast(tr, ball, frame.time))
            .collect::<Result<Vec<_>>>()?;
        let cost = CostMatrix::new(outfield.len(), visible.len(), |i, j| {
            -log_likelihood(&forecasts[i], visible[j], cfg.log_density_floor)
        });
        let assignment = solve_assignment(&cost)?;
        for (j, &i) in assignment.iter().enumerate() {
            outfield[i].push(visible[j], frame.time, true)?;
        }
        links.push(assignment);
        if let Some(p) = frame.keeper(team) {
            keeper.push(p, frame.time, true)?;
        }
    }
    Ok(TeamTracks { team, outfield, keeper, links })
}

/// Runs initialisation and the per-frame assignment loop for both teams.
pub fn build_trajectories(
    record: &DiscreteMatchRecord,
    model: &ForecastModel,
    cfg: &AssignConfig,
    exec: Execution,
) -> Result<HalfTracks> {
    if record.frames.is_empty() {
        return Err(Error::Invariant(format!("half {} has no frames", record.half_id)));
    }
    let ball = record_ball(record, model.grid_step);
    let (home, away) = exec.join(
        || build_team(record, model, &ball, Team::Home, cfg),
        || build_team(record, model, &ball, Team::Away, cfg),
    );
    Ok(HalfTracks {
        half_id: record.half_id,
        home_defends_low_x: record.home_defends_low_x,
        frame_times: record.frames.iter().map(|f| f.time).collect(),
        ball,
        teams: [home?, away?],
    })
}
