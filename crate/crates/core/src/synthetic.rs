//! Seeded synthetic matches with the same shape as real tracking data.
//!
//! The ball alternates between passes (straight flights to a random target),
//! short dribbles and occasional dead-ball pauses. Each team keeps a 4-4-2
//! block that slides with the ball; players chase their slot plus a slowly
//! wandering personal offset, the nearest outfielder closes down a ball within
//! reach, and teammates keep a few metres apart. Events arrive as a Poisson
//! process. Nothing here is calibrated to a real match; it exists so the
//! pipeline can be exercised end to end without licensed data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};

use crate::geometry::{PlayerTag, Point, Team, PITCH_LENGTH, PITCH_WIDTH};
use crate::ingest::{Event, MatchHalf, PlayerInfo, TruthFrame, TruthPlayer};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub seed: u64,
    /// Native frame rate.
    pub fps: f64,
    /// Seconds per half.
    pub half_duration: f64,
    /// Mean events per second.
    pub event_rate: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig { seed: 7, fps: 25.0, half_duration: 2700.0, event_rate: 0.35 }
    }
}

/// Formation slots for a team defending x = 0, keeper first.
const SLOTS: [(f64, f64); 11] = [
    (5.0, 40.0),
    (26.0, 12.0),
    (24.0, 31.0),
    (24.0, 49.0),
    (26.0, 68.0),
    (40.0, 14.0),
    (38.0, 32.0),
    (38.0, 48.0),
    (40.0, 66.0),
    (52.0, 33.0),
    (52.0, 47.0),
];

const MAX_SPEED: f64 = 7.5;
/// Only an outfielder this close to the ball closes it down.
const PRESS_RADIUS: f64 = 15.0;
const OFFSET_REVERSION: f64 = 0.2;
const OFFSET_VOLATILITY: f64 = 1.5;
/// Teammates closer than this push their targets apart.
const SPACING: f64 = 6.0;
/// Outfield slots never sit deeper than this from either goal line.
const MIN_DEPTH: f64 = 4.0;

struct Ball {
    pos: Point,
    target: Option<(Point, f64)>,
    hold: f64,
    drift: Point,
    /// Remaining dead-ball time.
    dead: f64,
}

/// Chance per second that play stops after a dribble.
const DEAD_BALL_RATE: f64 = 0.01;

impl Ball {
    fn step(&mut self, dt: f64, rng: &mut ChaCha8Rng, noise: &Normal<f64>, hold_time: &Exp<f64>) {
        match self.target {
            Some((target, speed)) => {
                let gap = target - self.pos;
                let reach = speed * dt;
                if gap.norm() <= reach {
                    self.pos = target;
                    self.target = None;
                    self.hold = hold_time.sample(rng);
                    self.drift = Point::ZERO;
                } else {
                    self.pos += gap * (reach / gap.norm());
                }
            }
            None if self.dead > 0.0 => self.dead -= dt,
            None => {
                let kick = Point::new(noise.sample(rng), noise.sample(rng));
                self.drift = self.drift * (1.0 - 0.8 * dt) + kick * (2.5 * dt.sqrt());
                self.pos = (self.pos + self.drift * dt).clamp_to_pitch();
                self.hold -= dt;
                if rng.random_bool((DEAD_BALL_RATE * dt).min(1.0)) {
                    self.dead = rng.random_range(5.0..25.0);
                    self.drift = Point::ZERO;
                } else if self.hold <= 0.0 {
                    let angle = rng.random_range(0.0..std::f64::consts::TAU);
                    let dist = rng.random_range(8.0..30.0);
                    let raw = self.pos + Point::new(angle.cos(), angle.sin()) * dist;
                    let target = Point::new(raw.x.clamp(2.0, PITCH_LENGTH - 2.0), raw.y.clamp(2.0, PITCH_WIDTH - 2.0));
                    self.target = Some((target, rng.random_range(10.0..20.0)));
                }
            }
        }
    }
}

fn slot_target(slot: (f64, f64), defends_low_x: bool, ball: Point) -> Point {
    let base_x = if defends_low_x { slot.0 } else { PITCH_LENGTH - slot.0 };
    let x = (base_x + 0.45 * (ball.x - PITCH_LENGTH / 2.0)).clamp(MIN_DEPTH, PITCH_LENGTH - MIN_DEPTH);
    let y = 40.0 + 0.6 * (slot.1 - 40.0) + 0.4 * (ball.y - 40.0);
    Point::new(x, y).clamp_to_pitch()
}

fn keeper_target(defends_low_x: bool, ball: Point) -> Point {
    let goal = if defends_low_x { 0.0 } else { PITCH_LENGTH };
    let depth = 3.0 + 0.06 * (ball.x - goal).abs();
    let x = if defends_low_x { goal + depth } else { goal - depth };
    Point::new(x, 40.0 + 0.25 * (ball.y - 40.0))
}

/// Generates one half. Roster ids 0..11 are the home team (keeper first),
/// 11..22 the away team.
pub fn synthetic_half(cfg: &SyntheticConfig, half_id: u8) -> MatchHalf {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ half_id as u64);
    let noise = Normal::new(0.0, 1.0).expect("valid normal");
    let hold_time = Exp::new(1.0 / 3.0).expect("valid rate");
    let home_defends_low_x = half_id % 2 == 1;
    let dt = 1.0 / cfg.fps;
    let n_frames = (cfg.half_duration * cfg.fps).round() as usize;

    let mut roster = Vec::with_capacity(22);
    for team in Team::BOTH {
        for (i, _) in SLOTS.iter().enumerate() {
            let tag = if i == 0 { PlayerTag::keeper(team) } else { PlayerTag::outfield(team) };
            let number = i + 1 + team.index() * 11;
            roster.push(PlayerInfo { name: format!("{}_Player{number}", team.name()), tag });
        }
    }
    let defends = |id: usize| (id < 11) == home_defends_low_x;

    let mut ball = Ball { pos: Point::new(60.0, 40.0), target: None, hold: 1.0, drift: Point::ZERO, dead: 0.0 };
    let targets = |ball: Point| -> Vec<Point> {
        (0..22)
            .map(|id| {
                let slot = id % 11;
                if slot == 0 {
                    keeper_target(defends(id), ball)
                } else {
                    slot_target(SLOTS[slot], defends(id), ball)
                }
            })
            .collect()
    };
    let mut pos = targets(ball.pos);
    let mut vel = vec![Point::ZERO; 22];
    let mut offset = vec![Point::ZERO; 22];

    let mut frames = Vec::with_capacity(n_frames);
    for f in 1..=n_frames {
        ball.step(dt, &mut rng, &noise, &hold_time);
        let mut goal = targets(ball.pos);
        for team in 0..2 {
            let mut by_dist: Vec<usize> = (team * 11 + 1..team * 11 + 11).collect();
            by_dist.sort_by(|&a, &b| pos[a].distance(ball.pos).total_cmp(&pos[b].distance(ball.pos)));
            if pos[by_dist[0]].distance(ball.pos) < PRESS_RADIUS {
                goal[by_dist[0]] = goal[by_dist[0]].lerp(ball.pos, 0.8);
            }
        }
        for id in 0..22 {
            if id % 11 == 0 {
                continue;
            }
            let team = id / 11;
            for mate in team * 11 + 1..team * 11 + 11 {
                let gap = pos[id] - pos[mate];
                let d = gap.norm();
                if mate != id && d < SPACING && d > 0.0 {
                    goal[id] += gap * ((SPACING - d) / d);
                }
            }
        }
        for id in 0..22 {
            let kick = Point::new(noise.sample(&mut rng), noise.sample(&mut rng));
            if id % 11 != 0 {
                offset[id] = offset[id] * (1.0 - OFFSET_REVERSION * dt) + kick * (OFFSET_VOLATILITY * dt.sqrt());
            }
            let desired = goal[id] + offset[id];
            let mut want = desired - pos[id];
            if want.norm() > MAX_SPEED {
                want = want * (MAX_SPEED / want.norm());
            }
            vel[id] = vel[id].lerp(want, (3.0 * dt).min(1.0));
            pos[id] = (pos[id] + vel[id] * dt).clamp_to_pitch();
        }
        frames.push(TruthFrame {
            time: (f as f64 * dt * 1e6).round() / 1e6,
            ball: ball.pos,
            players: pos.iter().enumerate().map(|(id, &p)| TruthPlayer { id, pos: p }).collect(),
        });
    }

    let mut events = Vec::new();
    if cfg.event_rate > 0.0 {
        let gap = Exp::new(cfg.event_rate).expect("positive rate");
        let end = frames.last().map_or(0.0, |f| f.time);
        let mut t = gap.sample(&mut rng);
        while t < end {
            let idx = ((t * cfg.fps).round() as usize).clamp(1, frames.len()) - 1;
            let frame = &frames[idx];
            let nearest = frame
                .players
                .iter()
                .min_by(|a, b| a.pos.distance(frame.ball).total_cmp(&b.pos.distance(frame.ball)))
                .expect("22 players");
            events.push(Event {
                time: frame.time,
                kind: "PASS".into(),
                ball: Some(frame.ball),
                attacking_team: roster[nearest.id].tag.team,
            });
            t += gap.sample(&mut rng);
        }
        events.dedup_by(|a, b| a.time == b.time);
    }

    MatchHalf {
        half_id,
        time_offset: (half_id as f64 - 1.0) * cfg.half_duration,
        roster,
        frames,
        events,
        dropped_rows: 0,
        home_defends_low_x,
    }
}

/// Two halves with ends swapped at the break.
pub fn synthetic_match(cfg: &SyntheticConfig) -> Vec<MatchHalf> {
    vec![synthetic_half(cfg, 1), synthetic_half(cfg, 2)]
}
