//! Oracles and generators shared by the integration and acceptance tests.
#![allow(dead_code)]

use proptest::prelude::*;
use track_enrich::assign::CostMatrix;
use track_enrich::forecast::{ForecastModel, GridSeries, MODEL_FORMAT_VERSION};
use track_enrich::geometry::{ObservationFrame, Sighting};
use track_enrich::ingest::{DiscreteMatchRecord, Source};
use track_enrich::interpolate::VelocityField;
use track_enrich::{PlayerTag, Point, Team, Trajectory};

/// Minimum of `CostMatrix::total` over every injection of columns into
/// rows, so the comparison with the solver is exact.
pub fn brute_force_min(cost: &CostMatrix) -> f64 {
    fn go(cost: &CostMatrix, chosen: &mut Vec<usize>, used: &mut [bool], best: &mut f64) {
        if chosen.len() == cost.cols() {
            *best = best.min(cost.total(chosen));
            return;
        }
        for r in 0..cost.rows() {
            if !used[r] {
                used[r] = true;
                chosen.push(r);
                go(cost, chosen, used, best);
                chosen.pop();
                used[r] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    go(cost, &mut Vec::new(), &mut vec![false; cost.rows()], &mut best);
    best
}

/// Rectangular cost matrices with at least as many rows as columns.
pub fn arb_cost_matrix(max_dim: usize) -> impl Strategy<Value = CostMatrix> {
    (1..=max_dim)
        .prop_flat_map(move |rows| (Just(rows), 0..=rows))
        .prop_flat_map(|(rows, cols)| {
            let cells = prop_oneof![
                3 => -20.0..20.0f64,
                1 => (-3i32..4).prop_map(f64::from),
            ];
            (Just(rows), Just(cols), prop::collection::vec(cells, rows * cols))
        })
        .prop_map(|(rows, cols, data)| CostMatrix::new(rows, cols, |r, c| data[r * cols + c]))
}

/// One forecasting scenario: a model, an on-grid trajectory shorter than the
/// residual window, a ball path covering the horizon and a horizon length.
#[derive(Debug, Clone)]
pub struct ArmaxCase {
    pub model: ForecastModel,
    pub traj: Trajectory,
    pub ball: GridSeries,
    pub n: usize,
}

fn coeffs(max_len: usize, bound: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-bound..bound, 0..=max_len)
}

pub fn arb_armax_case() -> impl Strategy<Value = ArmaxCase> {
    (
        coeffs(2, 0.6),
        coeffs(1, 0.6),
        coeffs(2, 0.4),
        -0.2..0.2f64,
        prop::sample::select(vec![0.5, 1.0, 2.0]),
        -6i64..6,
        (20.0..100.0f64, 15.0..65.0f64),
        prop::collection::vec((-2.5..2.5f64, -2.5..2.5f64), 0..25),
        2usize..12,
    )
        .prop_flat_map(|(ar, ma, exog, intercept, step, k0, start, steps, n)| {
            let ball_len = steps.len() + n + 10;
            let ball = prop::collection::vec((0.0..120.0f64, 0.0..80.0f64), ball_len);
            (Just((ar, ma, exog, intercept, step, k0, start, steps, n)), ball)
        })
        .prop_map(|((ar, ma, exog, intercept, step, k0, start, steps, n), ball)| {
            let model = ForecastModel {
                format_version: MODEL_FORMAT_VERSION,
                grid_step: step,
                ar,
                ma,
                exog,
                intercept,
                resid_std: 1.0,
                one_step_std: 1.5,
                training_steps: 0,
            };
            let mut pos = Point::new(start.0, start.1);
            let mut pts = vec![(pos, k0 as f64 * step)];
            for (i, (dx, dy)) in steps.into_iter().enumerate() {
                pos += Point::new(dx, dy);
                pts.push((pos, (k0 + i as i64 + 1) as f64 * step));
            }
            let traj = Trajectory::from_points(PlayerTag::outfield(Team::Home), pts).unwrap();
            let ball = GridSeries {
                start_k: k0 - 4,
                step,
                values: ball.into_iter().map(|(x, y)| Point::new(x, y)).collect(),
            };
            ArmaxCase { model, traj, ball, n }
        })
}

/// Mean path for horizons `0..=n` written straight from the difference
/// equation on absolute step indices. Steps before the first recorded
/// displacement contribute zero, and residuals are zero until enough
/// history exists for every autoregressive lag.
pub fn armax_oracle(model: &ForecastModel, traj: &Trajectory, ball: &GridSeries, n: usize) -> Vec<Point> {
    let pts = traj.points();
    let m = pts.len() - 1;
    let h = model.grid_step;
    let t0 = pts[0].time;
    let time = |i: i64| t0 + i as f64 * h;
    let p = model.ar.len() as i64;
    let mut out = vec![Point::ZERO; n + 1];
    for axis in 0..2 {
        let b = |i: i64| ball.at(time(i)).axis(axis) - ball.at(time(i - 1)).axis(axis);
        let mut d = vec![0.0; m + n + 1];
        let mut e = vec![0.0; m + n + 1];
        for i in 1..=m {
            d[i] = pts[i].pos.axis(axis) - pts[i - 1].pos.axis(axis);
        }
        let lagged = |v: &[f64], i: i64| if i >= 1 { v[i as usize] } else { 0.0 };
        let predict = |d: &[f64], e: &[f64], i: i64| {
            let mut y = model.intercept;
            for (j, a) in model.ar.iter().enumerate() {
                y += a * lagged(d, i - 1 - j as i64);
            }
            for (j, c) in model.ma.iter().enumerate() {
                y += c * lagged(e, i - 1 - j as i64);
            }
            for (l, g) in model.exog.iter().enumerate() {
                y += g * b(i - l as i64);
            }
            y
        };
        for i in (p + 1)..=(m as i64) {
            e[i as usize] = d[i as usize] - predict(&d, &e, i);
        }
        let mut x = pts[m].pos.axis(axis);
        for s in 1..=n {
            let i = (m + s) as i64;
            d[i as usize] = predict(&d, &e, i);
            x += d[i as usize];
            if axis == 0 {
                out[s].x = x;
            } else {
                out[s].y = x;
            }
        }
        if axis == 0 {
            out[0].x = pts[m].pos.x;
        } else {
            out[0].y = pts[m].pos.y;
        }
    }
    out
}

/// Mirrors a trajectory in time: point at `t` moves to `-t`.
pub fn reverse_trajectory(traj: &Trajectory) -> Trajectory {
    Trajectory::from_points(traj.tag, traj.points().iter().rev().map(|p| (p.pos, -p.time))).unwrap()
}

pub fn reverse_series(s: &GridSeries) -> GridSeries {
    GridSeries {
        start_k: -(s.start_k + s.len() as i64 - 1),
        step: s.step,
        values: s.values.iter().rev().copied().collect(),
    }
}

pub fn arb_field() -> impl Strategy<Value = VelocityField> {
    (
        -5i64..5,
        prop::sample::select(vec![0.5, 1.0, 2.0]),
        prop::collection::vec((-4.0..4.0f64, -4.0..4.0f64), 0..60),
        0.0..=1.0f64,
    )
        .prop_map(|(k, step, v, a)| {
            VelocityField::new(k, step, v.into_iter().map(|(x, y)| Point::new(x, y)).collect(), a).unwrap()
        })
}

/// Trajectories with irregular gaps, not necessarily on any grid.
pub fn arb_trajectory() -> impl Strategy<Value = Trajectory> {
    (
        -10.0..10.0f64,
        prop::collection::vec((0.0..120.0f64, 0.0..80.0f64, 0.1..8.0f64, any::<bool>()), 2..20),
    )
        .prop_map(|(t0, pts)| {
            let mut t = t0;
            let mut tr = Trajectory::new(PlayerTag::outfield(Team::Away));
            for (x, y, gap, observed) in pts {
                tr.push(Point::new(x, y), t, observed).unwrap();
                t += gap;
            }
            tr
        })
}

fn arb_sightings(team: Team) -> impl Strategy<Value = Vec<Sighting>> {
    (prop::collection::vec((0.0..120.0f64, 0.0..80.0f64), 0..=10), prop::option::of((0.0..120.0f64, 0.0..80.0f64)))
        .prop_map(move |(outfield, keeper)| {
            let mut v: Vec<Sighting> = outfield
                .into_iter()
                .map(|(x, y)| Sighting { tag: PlayerTag::outfield(team), pos: Point::new(x, y) })
                .collect();
            if let Some((x, y)) = keeper {
                v.push(Sighting { tag: PlayerTag::keeper(team), pos: Point::new(x, y) });
            }
            v
        })
}

/// Identity-free records with arbitrary per-frame visibility on a 1 s grid.
pub fn arb_record() -> impl Strategy<Value = DiscreteMatchRecord> {
    (
        1u8..=2,
        any::<bool>(),
        prop::sample::select(vec![Source::Simulated, Source::Broadcast360]),
        0i64..100,
        prop::collection::vec(((0.0..120.0f64, 0.0..80.0f64), arb_sightings(Team::Home), arb_sightings(Team::Away)), 1..25),
    )
        .prop_map(|(half_id, home_low, source, k0, frames)| DiscreteMatchRecord {
            half_id,
            source,
            home_defends_low_x: home_low,
            frames: frames
                .into_iter()
                .enumerate()
                .map(|(i, ((bx, by), home, away))| ObservationFrame {
                    time: (k0 + i as i64) as f64,
                    ball: Point::new(bx, by),
                    visible: home.into_iter().chain(away).collect(),
                })
                .collect(),
        })
}

/// Training material whose per-axis displacements follow
/// `d_k = phi * d_{k-1} + e_k` with unit-variance noise and no ball influence.
pub fn ar1_training(phi: f64, steps: usize, seed: u64) -> track_enrich::forecast::TrainingHalf {
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut pos = Point::new(60.0, 40.0);
    let mut d = Point::ZERO;
    let mut pts = vec![(pos, 0.0)];
    for k in 1..=steps {
        d = d * phi + Point::new(noise.sample(&mut rng), noise.sample(&mut rng));
        pos += d;
        pts.push((pos, k as f64));
    }
    let traj = Trajectory::from_points(PlayerTag::outfield(Team::Home), pts).unwrap();
    let ball = GridSeries { start_k: 0, step: 1.0, values: vec![Point::new(60.0, 40.0)] };
    track_enrich::forecast::TrainingHalf { trajectories: vec![traj], ball }
}
